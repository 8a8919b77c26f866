#pragma once

#include <span>
#include <string>
#include <vector>

#include "mmf/common.hpp"

namespace mmf {

/// Dense symmetric matrix, row-major, both triangles stored. Symmetry is
/// validated on entry (|a_ij - a_ji| <= tol * max(1, |a_ij|)) and preserved
/// by construction everywhere else.
class SymMatrix {
 public:
  SymMatrix() = default;

  /// Validating constructor. `values` is row-major m*m. With `symmetrize`
  /// the matrix is replaced by (A + A^T) / 2 before validation.
  static SymMatrix from_values(int dim, std::vector<double> values,
                               double sym_tol = kDefaultSymTol,
                               bool symmetrize = false,
                               std::vector<std::string> labels = {});

  /// Trusted path for matrices symmetric by construction.
  static SymMatrix unchecked(int dim, std::vector<double> values,
                             std::vector<std::string> labels = {});

  static SymMatrix zero(int dim);

  int dim() const { return dim_; }

  double operator()(int i, int j) const { return values_[static_cast<std::size_t>(i) * dim_ + j]; }
  double& at(int i, int j) { return values_[static_cast<std::size_t>(i) * dim_ + j]; }

  const double* row(int i) const { return values_.data() + static_cast<std::size_t>(i) * dim_; }
  double* row(int i) { return values_.data() + static_cast<std::size_t>(i) * dim_; }

  std::span<const double> values() const { return values_; }

  const std::vector<std::string>& labels() const { return labels_; }
  void set_labels(std::vector<std::string> labels);

  double frob_norm_sq() const;
  double frob_norm() const;

  /// Largest relative symmetry defect, for diagnostics.
  double symmetry_defect() const;

 private:
  int dim_ = 0;
  std::vector<double> values_;
  std::vector<std::string> labels_;
};

/// Sum of squared entries C[i][j] with i != j and not both i, j in `core`;
/// the squared Frobenius distance from C to its core-diagonal truncation.
double off_core_diag_sqnorm(const SymMatrix& c, std::span<const int> core);

}  // namespace mmf
