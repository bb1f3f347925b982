#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stirap/levels.hpp"

namespace stirap {

/// ∫ R_{n,l}(r) r R_{n2,l2}(r) r² dr for hydrogenic radials of charge Z (a.u.).
double radial_integral(int n, int l, int n2, int l2, double Z);

/// <n2 l2 || r Y_1 || n l>, the one-electron reduced element.
double reduced_rY(int n, int l, int n2, int l2, double Z);

/// <bra || r Y_1 || ket> between JK levels sharing core, parent and S_E; 0 otherwise.
/// The outer electron is recoupled through both 6j steps; the coupling order is
/// ((l, J_p) K, s) J.
double jk_jk_reduced(const QuantumNumbers& bra, const QuantumNumbers& ket, double Z);

/// <excited || r Y_1 || ground> for an LS ground term and a JK level whose
/// configuration differs by one electron; the core recoupling is neglected.
double ls_jk_reduced(const QuantumNumbers& ground, const QuantumNumbers& excited, double Z);

/// Reduced element used by the matrix builder for any pair of levels.
double reduced_element(const QuantumNumbers& bra, const QuantumNumbers& ket, double Z);

struct DipoleOverride {
  std::string label_i;
  std::string label_j;
  double mu_au = 0.0;
};

/// CSV `label_i,label_j,mu_au`.
std::vector<DipoleOverride> load_dipole_overrides(const std::filesystem::path& path);

class DipoleTable {
 public:
  DipoleTable(LevelSet basis, Eigen::MatrixXd matrix);

  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const LevelSet& basis() const { return basis_; }
  std::size_t size() const { return basis_.size(); }
  double operator()(std::size_t i, std::size_t j) const { return matrix_(i, j); }

  /// Spectral decomposition matrix = V diag(w) V^T, computed once at construction.
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }

  std::size_t nonzero_count() const;

  struct Entry {
    std::size_t i = 0;
    std::size_t j = 0;
    double mu_au = 0.0;
  };
  /// Upper-triangle entries sorted by decreasing |mu|.
  std::vector<Entry> largest(std::size_t count) const;

  /// Upper-triangle nonzero entries with labels and projections.
  void export_csv(const std::filesystem::path& path) const;

 private:
  LevelSet basis_;
  Eigen::MatrixXd matrix_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
};

/// μ_ij = (−1)^{J_i−m_i} 3j(J_i 1 J_j; −m_i 0 m_j) <i||rY||j> for z polarization,
/// with i the higher-lying level of the pair; the matrix is filled symmetrically.
/// Overrides replace the element between every pair of sublevels with the named
/// labels and equal m.
DipoleTable build_dipole_matrix(const LevelSet& ls, double Z = 2.0,
                                const std::vector<DipoleOverride>& overrides = {});

/// Ids reachable from `seeds` through nonzero couplings, in increasing order.
std::vector<std::size_t> connected_levels(const DipoleTable& dip, const std::vector<std::size_t>& seeds);

}  // namespace stirap
