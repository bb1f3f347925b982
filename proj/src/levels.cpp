#include "stirap/levels.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "stirap/error.hpp"
#include "stirap/io.hpp"

namespace stirap {
namespace {

constexpr std::string_view kOrbitals = "spdfghiklmnoqrtuv";
constexpr std::string_view kTerms = "SPDFGHIKLMNOQRTUV";

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
}

// Reduces typeset variants to bare characters: odd-parity markers become '*',
// LaTeX grouping and math-mode punctuation disappear.
std::string flatten(std::string_view text) {
  std::string s(text);
  for (std::string_view odd : {"^{\\circ}", "^\\circ", "{\\circ}", "\\circ", "\xC2\xB0", "^o"}) replace_all(s, odd, "*");
  for (std::string_view gap : {"\\ ", "\\,", "\\;", "~"}) replace_all(s, gap, " ");
  std::string out;
  for (char c : s)
    if (c != '$' && c != '{' && c != '}' && c != '^' && c != '_') out.push_back(c);
  return out;
}

bool is_sep(char c) { return c == ' ' || c == '.' || c == '\t'; }

struct Term {
  int multiplicity = 0;
  int L = -1;         // LS terms
  HalfInt K;          // K terms
  bool is_k = false;
  bool odd = false;
  HalfInt J;
  bool parenthesized = false;
  std::string token;
};

struct Item {
  bool is_shell = false;
  Shell shell;
  Term term;
};

class TermParser {
 public:
  explicit TermParser(std::string_view original) : original_(original), s_(flatten(original)) {}

  std::vector<Item> items() {
    std::vector<Item> out;
    while (true) {
      while (pos_ < s_.size() && is_sep(s_[pos_])) ++pos_;
      if (pos_ >= s_.size()) break;
      out.push_back(item());
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& what, const std::string& token) const {
    throw ParseError("term '" + std::string(original_) + "': " + what + " at '" + token + "'");
  }

 private:
  std::string token_at(std::size_t start) const {
    std::size_t end = start;
    while (end < s_.size() && !is_sep(s_[end])) ++end;
    return s_.substr(start, end - start);
  }

  Item item() {
    const std::size_t start = pos_;
    if (s_[pos_] == '(') {
      const auto close = s_.find(')', pos_);
      if (close == std::string::npos) fail("unclosed parenthesis", token_at(start));
      std::string inner = s_.substr(pos_ + 1, close - pos_ - 1);
      inner.erase(std::remove_if(inner.begin(), inner.end(), [](char c) { return is_sep(c); }), inner.end());
      pos_ = close + 1;
      Item it;
      it.term = term(inner, s_.substr(start, close + 1 - start));
      it.term.parenthesized = true;
      return it;
    }
    if (!std::isdigit(static_cast<unsigned char>(s_[pos_]))) fail("unexpected character", token_at(start));
    std::size_t p = pos_;
    while (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) ++p;
    if (p < s_.size() && kOrbitals.find(s_[p]) != std::string_view::npos) return shell(start, p);
    const std::string tok = token_at(start);
    pos_ = start + tok.size();
    Item it;
    it.term = term(tok, tok);
    return it;
  }

  Item shell(std::size_t start, std::size_t letter) {
    Item it;
    it.is_shell = true;
    it.shell.n = std::stoi(s_.substr(start, letter - start));
    it.shell.l = static_cast<int>(kOrbitals.find(s_[letter]));
    if (it.shell.n <= it.shell.l) fail("orbital not allowed for this n", token_at(start));
    std::size_t p = letter + 1;
    std::size_t q = p;
    while (q < s_.size() && std::isdigit(static_cast<unsigned char>(s_[q]))) ++q;
    const bool next_shell = q < s_.size() && kOrbitals.find(s_[q]) != std::string_view::npos;
    const int capacity = 2 * (2 * it.shell.l + 1);
    if (q > p && next_shell) {
      // Digits run into the next shell ("5s25p6"): keep the longest valid
      // occupancy that leaves at least one digit for the next principal number.
      std::size_t take = 0;
      for (std::size_t k = 1; k < q - p; ++k)
        if (std::stoi(s_.substr(p, k)) <= capacity) take = k;
      q = p + take;
    }
    if (q > p) {
      it.shell.occupancy = std::stoi(s_.substr(p, q - p));
      if (it.shell.occupancy < 1 || it.shell.occupancy > capacity) fail("occupancy out of range", token_at(start));
    }
    pos_ = q;
    return it;
  }

  Term term(const std::string& body, const std::string& token) {
    Term t;
    t.token = token;
    std::size_t p = 0;
    while (p < body.size() && std::isdigit(static_cast<unsigned char>(body[p]))) ++p;
    if (p == 0) fail("missing multiplicity", token);
    t.multiplicity = std::stoi(body.substr(0, p));
    if (t.multiplicity < 1) fail("multiplicity must be positive", token);
    if (p >= body.size()) fail("truncated term", token);
    if (body[p] == '[') {
      const auto close = body.find(']', p);
      if (close == std::string::npos) fail("malformed bracket", token);
      t.is_k = true;
      t.K = half(body.substr(p + 1, close - p - 1), token);
      p = close + 1;
    } else {
      const auto L = kTerms.find(body[p]);
      if (L == std::string_view::npos) fail("unknown term letter", token);
      t.L = static_cast<int>(L);
      ++p;
    }
    if (p < body.size() && body[p] == '*') {
      t.odd = true;
      ++p;
    }
    if (p >= body.size()) fail("missing J", token);
    t.J = half(body.substr(p), token);
    if (t.J.twice() < 0) fail("negative J", token);
    return t;
  }

  HalfInt half(const std::string& text, const std::string& token) const {
    if (text.empty() || text.find_first_not_of("0123456789/") != std::string::npos)
      fail("expected a half-integer", token);
    try {
      return HalfInt::parse(text);
    } catch (const InputError&) {
      fail("not a half-integer", token);
    }
  }

  std::string_view original_;
  std::string s_;
  std::size_t pos_ = 0;
};

HalfInt spin_of(int multiplicity) { return HalfInt::from_twice(multiplicity - 1); }

}  // namespace

QuantumNumbers parse_term(std::string_view text) {
  TermParser parser(text);
  const std::vector<Item> items = parser.items();
  if (items.empty()) parser.fail("empty term", std::string(text));

  QuantumNumbers q;
  int parity_sum = 0;
  const auto k_it = std::find_if(items.begin(), items.end(), [](const Item& i) { return !i.is_shell && i.term.is_k; });

  if (k_it != items.end()) {
    q.scheme = Coupling::JK;
    const Term& kt = k_it->term;
    if (k_it != items.end() - 1) parser.fail("K term must be last", kt.token);
    if (items.size() < 3 || !items[items.size() - 2].is_shell) parser.fail("JK term needs an outer electron", kt.token);
    const Item& paren = items[items.size() - 3];
    if (paren.is_shell || !paren.term.parenthesized || paren.term.is_k)
      parser.fail("JK term needs a parenthesized parent term", kt.token);
    for (std::size_t i = 0; i + 3 < items.size(); ++i) {
      if (!items[i].is_shell) parser.fail("unexpected term in core configuration", items[i].term.token);
      q.core.push_back(items[i].shell);
    }
    const Shell outer = items[items.size() - 2].shell;
    if (outer.occupancy != 1) parser.fail("outer electron occupancy must be 1", kt.token);
    const Term& pt = paren.term;
    q.parent = ParentTerm{HalfInt::integer(pt.L), spin_of(pt.multiplicity), pt.J};
    if (!triangle_ok(q.parent->L_p, q.parent->S_p, q.parent->J_p)) parser.fail("inconsistent parent triad", pt.token);
    q.n = outer.n;
    q.l = outer.l;
    q.L_E = HalfInt::integer(outer.l);
    q.S_E = spin_of(kt.multiplicity);
    q.K = kt.K;
    q.J = kt.J;
    if (!triangle_ok(q.parent->J_p, q.L_E, q.K)) parser.fail("inconsistent (J_p, l, K) triad", kt.token);
    if (!triangle_ok(q.K, q.S_E, q.J)) parser.fail("inconsistent (K, s, J) triad", kt.token);
    parity_sum = outer.l;
  } else {
    q.scheme = Coupling::LS;
    const Item& last = items.back();
    if (last.is_shell) parser.fail("missing term symbol", std::string(text));
    for (std::size_t i = 0; i + 1 < items.size(); ++i) {
      if (!items[i].is_shell) parser.fail("unexpected term before the final term", items[i].term.token);
      q.core.push_back(items[i].shell);
    }
    if (q.core.empty()) parser.fail("missing configuration", last.term.token);
    const Term& t = last.term;
    q.L_E = HalfInt::integer(t.L);
    q.S_E = spin_of(t.multiplicity);
    q.J = t.J;
    if (!triangle_ok(q.L_E, q.S_E, q.J)) parser.fail("inconsistent (L, S, J) triad", t.token);
    Shell open = q.core.back();
    for (auto it = q.core.rbegin(); it != q.core.rend(); ++it) {
      if (it->occupancy < 2 * (2 * it->l + 1)) {
        open = *it;
        break;
      }
    }
    q.n = open.n;
    q.l = open.l;
  }
  for (const Shell& s : q.core) parity_sum += s.occupancy * s.l;
  q.parity = parity_sum % 2 ? Parity::Odd : Parity::Even;
  if (items.back().term.odd && q.parity == Parity::Even)
    parser.fail("odd-parity marker on an even configuration", items.back().term.token);
  return q;
}

std::string format_term(const QuantumNumbers& q) {
  std::ostringstream out;
  auto shell = [&](const Shell& s) {
    out << s.n << kOrbitals[s.l];
    if (s.occupancy != 1) out << s.occupancy;
  };
  for (std::size_t i = 0; i < q.core.size(); ++i) {
    if (i) out << '.';
    shell(q.core[i]);
  }
  const char* odd = q.parity == Parity::Odd ? "*" : "";
  if (q.scheme == Coupling::JK) {
    const ParentTerm& p = q.parent.value();
    if (!q.core.empty()) out << '.';
    out << '(' << p.S_p.twice() + 1 << kTerms[p.L_p.twice() / 2] << p.J_p.str() << ").";
    shell(Shell{q.n, q.l, 1});
    out << ' ' << q.S_E.twice() + 1 << '[' << q.K.str() << ']' << odd << q.J.str();
  } else {
    out << ' ' << q.S_E.twice() + 1 << kTerms[q.L_E.twice() / 2] << odd << q.J.str();
  }
  return out.str();
}

std::string normalize_term(std::string_view text) { return format_term(parse_term(text)); }

LevelSet LevelSet::from_rows(const std::vector<LevelRow>& rows, std::string provenance) {
  LevelSet set;
  set.provenance_ = std::move(provenance);
  std::vector<std::string> errors;
  std::map<std::string, int> seen;
  for (const LevelRow& row : rows) {
    const std::string where = "line " + std::to_string(row.line) + ": ";
    QuantumNumbers qn;
    try {
      qn = parse_term(row.label);
    } catch (const ParseError& e) {
      errors.push_back(where + e.what());
      continue;
    }
    if (!(row.energy_ev >= 0.0)) {
      errors.push_back(where + "negative energy for '" + row.label + "'");
      continue;
    }
    const std::string label = format_term(qn);
    if (auto [it, fresh] = seen.emplace(label, row.line); !fresh) {
      errors.push_back(where + "duplicate level '" + label + "' (first on line " + std::to_string(it->second) + ")");
      continue;
    }
    for (int tm = -qn.J.twice(); tm <= qn.J.twice(); tm += 2)
      set.levels_.push_back(Level{0, label, row.label, row.energy_ev, qn, HalfInt::from_twice(tm)});
  }
  if (!errors.empty()) {
    std::string msg;
    for (const auto& e : errors) msg += (msg.empty() ? "" : "\n") + e;
    throw ParseError(msg);
  }
  std::stable_sort(set.levels_.begin(), set.levels_.end(), [](const Level& a, const Level& b) {
    return std::tie(a.energy_ev, a.label, a.m) < std::tie(b.energy_ev, b.label, b.m);
  });
  for (std::size_t i = 0; i < set.levels_.size(); ++i) set.levels_[i].id = i;
  return set;
}

std::optional<std::size_t> LevelSet::find(std::string_view label, HalfInt m) const {
  std::string canonical;
  try {
    canonical = normalize_term(label);
  } catch (const ParseError&) {
    canonical = std::string(label);
  }
  for (const Level& l : levels_)
    if (l.m == m && l.label == canonical) return l.id;
  return std::nullopt;
}

std::size_t LevelSet::index_of(std::string_view label, HalfInt m) const {
  if (auto id = find(label, m)) return *id;
  throw InputError("no level '" + std::string(label) + "' with m=" + m.str());
}

LevelSet LevelSet::subset(const std::vector<std::size_t>& ids) const {
  LevelSet out;
  out.provenance_ = provenance_;
  out.warnings_ = warnings_;
  for (std::size_t id : ids) {
    Level l = levels_.at(id);
    l.id = out.levels_.size();
    out.levels_.push_back(std::move(l));
  }
  return out;
}

LevelSet parse_level_table(std::string_view text, const std::string& source_name) {
  const std::string provenance = io::sha256_hex(text);
  const auto first = text.find_first_not_of(" \t\r\n");
  std::vector<LevelRow> rows;

  if (first != std::string_view::npos && text[first] == '[') {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source_name + ": " + e.what());
    }
    if (!doc.is_array()) throw ParseError(source_name + ": expected a JSON array");
    int index = 0;
    for (const auto& entry : doc) {
      ++index;
      if (!entry.is_object() || !entry.contains("label") || !entry.contains("energy_eV"))
        throw InputError(source_name + ": entry " + std::to_string(index) + " needs 'label' and 'energy_eV'");
      try {
        rows.push_back({entry.at("label").get<std::string>(), entry.at("energy_eV").get<double>(), index});
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(source_name + ": entry " + std::to_string(index) + ": " + e.what());
      }
    }
  } else {
    const io::CsvTable table = io::parse_csv(text);
    if (table.header.empty()) {
      LevelSet empty = LevelSet::from_rows({}, provenance);
      empty.add_warning(source_name + ": empty level table");
      return empty;
    }
    const int label_col = table.column("label");
    const int energy_col = table.column("energy_eV");
    if (label_col < 0) throw InputError(source_name + ": missing required column 'label'");
    if (energy_col < 0) throw InputError(source_name + ": missing required column 'energy_eV'");
    std::vector<std::string> errors;
    for (const auto& row : table.rows) {
      const std::size_t need = static_cast<std::size_t>(std::max(label_col, energy_col));
      if (row.fields.size() <= need) {
        errors.push_back(source_name + ":" + std::to_string(row.line) + ": too few columns");
        continue;
      }
      std::size_t used = 0;
      double energy = 0.0;
      try {
        energy = std::stod(row.fields[energy_col], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != row.fields[energy_col].size()) {
        errors.push_back(source_name + ":" + std::to_string(row.line) + ": bad energy '" + row.fields[energy_col] + "'");
        continue;
      }
      rows.push_back({row.fields[label_col], energy, row.line});
    }
    if (!errors.empty()) {
      std::string msg;
      for (const auto& e : errors) msg += (msg.empty() ? "" : "\n") + e;
      throw ParseError(msg);
    }
  }

  try {
    LevelSet set = LevelSet::from_rows(rows, provenance);
    if (set.empty()) set.add_warning(source_name + ": empty level table");
    return set;
  } catch (const ParseError& e) {
    // from_rows reports "line N: ..."; prefix the source so messages read file:line.
    std::string msg;
    std::istringstream lines(e.what());
    for (std::string line; std::getline(lines, line);) {
      if (line.rfind("line ", 0) == 0) line = source_name + ":" + line.substr(5);
      msg += (msg.empty() ? "" : "\n") + line;
    }
    throw ParseError(msg);
  }
}

LevelSet load_levels(const std::filesystem::path& path) {
  return parse_level_table(io::read_file(path), path.string());
}

LevelSet select_subspace(const LevelSet& ls, HalfInt m) {
  std::vector<std::size_t> ids;
  for (const Level& l : ls)
    if (l.m == m) ids.push_back(l.id);
  return ls.subset(ids);
}

}  // namespace stirap
