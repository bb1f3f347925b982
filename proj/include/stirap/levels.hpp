#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stirap/angular.hpp"

namespace stirap {

enum class Coupling { LS, JK };
enum class Parity { Even, Odd };

struct Shell {
  int n = 0;
  int l = 0;
  int occupancy = 1;
  auto operator<=>(const Shell&) const = default;
};

struct ParentTerm {
  HalfInt L_p;
  HalfInt S_p;
  HalfInt J_p;
  auto operator<=>(const ParentTerm&) const = default;
};

/// Quantum numbers of one fine-structure level.
///
/// JK levels: `core` holds the shells of the ionic core, `parent` its term, and
/// (n, l) the outer electron; L_E = l, S_E = 1/2. LS levels: `core` holds the full
/// configuration, (n, l) the open subshell, and L_E / S_E the term's L and S.
struct QuantumNumbers {
  Coupling scheme = Coupling::LS;
  std::vector<Shell> core;
  int n = 0;
  int l = 0;
  HalfInt L_E;
  HalfInt S_E;
  HalfInt K;
  HalfInt J;
  std::optional<ParentTerm> parent;
  Parity parity = Parity::Even;

  bool operator==(const QuantumNumbers&) const = default;
};

/// Accepts the canonical form (`5s2.5p4.(3P2).6d 2[0]1/2`, `5s2.5p5 2P*3/2`) and
/// typeset variants: blanks instead of dots, `^`, `_{...}`, `\ `, `$`, `^{\circ}`
/// or a degree sign for odd parity. Throws ParseError naming the bad token.
QuantumNumbers parse_term(std::string_view text);

/// Canonical label; parse_term(format_term(q)) == q.
std::string format_term(const QuantumNumbers& q);

/// format_term(parse_term(text)).
std::string normalize_term(std::string_view text);

struct Level {
  std::size_t id = 0;
  std::string label;  // canonical form
  std::string source_label;  // as written in the table
  double energy_ev = 0.0;
  QuantumNumbers qn;
  HalfInt m;
};

struct LevelRow {
  std::string label;
  double energy_ev = 0.0;
  int line = 0;
};

class LevelSet {
 public:
  LevelSet() = default;
  /// Expands each row into its 2J+1 m-sublevels, sorts by (energy, label, m)
  /// and assigns dense ids. Throws InputError on duplicates or negative energies.
  static LevelSet from_rows(const std::vector<LevelRow>& rows, std::string provenance = {});

  const std::vector<Level>& levels() const { return levels_; }
  std::size_t size() const { return levels_.size(); }
  bool empty() const { return levels_.empty(); }
  const Level& operator[](std::size_t i) const { return levels_[i]; }
  auto begin() const { return levels_.begin(); }
  auto end() const { return levels_.end(); }

  /// SHA-256 of the source file (or a caller-supplied tag).
  const std::string& provenance() const { return provenance_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  /// Id of the level with this label (any accepted spelling) and projection.
  std::optional<std::size_t> find(std::string_view label, HalfInt m) const;
  /// Throws InputError if absent.
  std::size_t index_of(std::string_view label, HalfInt m) const;

  /// Keeps the given ids (in their current order) and renumbers densely.
  LevelSet subset(const std::vector<std::size_t>& ids) const;

  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

 private:
  std::vector<Level> levels_;
  std::string provenance_;
  std::vector<std::string> warnings_;
};

/// CSV with columns `label` and `energy_eV` (any order, '#' comments) or a JSON
/// array of {"label", "energy_eV"} objects. Parse failures carry file:line.
LevelSet load_levels(const std::filesystem::path& path);
LevelSet parse_level_table(std::string_view text, const std::string& source_name = "<table>");

/// Levels with projection m only.
LevelSet select_subspace(const LevelSet& ls, HalfInt m);

}  // namespace stirap
