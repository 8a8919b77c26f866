#pragma once

#include <array>
#include <span>
#include <vector>

#include "mmf/common.hpp"
#include "mmf/random.hpp"
#include "mmf/sym_matrix.hpp"

namespace mmf {

/// Fixed-capacity square matrix for rotation blocks (order <= kMaxRotationOrder).
/// Lives on the stack; cheap to copy in candidate scans.
class SmallMatrix {
 public:
  SmallMatrix() = default;
  explicit SmallMatrix(int order);

  static SmallMatrix identity(int order);

  int order() const { return order_; }

  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * order_ + j]; }
  double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * order_ + j]; }

  SmallMatrix transposed() const;

  /// max |M^T M - I| entrywise.
  double orthogonality_defect() const;

  /// Row-major copy of the active block.
  std::vector<double> to_rows() const;
  static SmallMatrix from_rows(int order, std::span<const double> rows);

 private:
  int order_ = 0;
  std::array<double, kMaxRotationOrder * kMaxRotationOrder> a_{};
};

SmallMatrix operator*(const SmallMatrix& lhs, const SmallMatrix& rhs);

/// A B A^T for square blocks of equal order.
SmallMatrix conjugate(const SmallMatrix& a, const SmallMatrix& b);

/// Orthogonal rotation equal to the identity outside a k-tuple of coordinates.
/// Indices are 0-based and validated to be distinct; the block must be
/// orthogonal within `orth_tol`.
class KPointRotation {
 public:
  KPointRotation() = default;  // empty placeholder, order 0
  KPointRotation(std::vector<int> tuple, SmallMatrix block,
                 double orth_tol = kDefaultOrthTol);

  const std::vector<int>& tuple() const { return tuple_; }
  const SmallMatrix& block() const { return block_; }
  int order() const { return block_.order(); }

  KPointRotation inverse() const;

 private:
  std::vector<int> tuple_;
  SmallMatrix block_;
};

/// Q C Q^T where Q embeds rot's block at the tuple coordinates. Rows and
/// columns outside the tuple are copied bit-for-bit; the result is symmetric
/// by construction.
SymMatrix apply_rotation(const SymMatrix& c, const KPointRotation& rot);

/// In-place variant used by the factorization drivers (single writer).
void apply_rotation_inplace(SymMatrix& c, const KPointRotation& rot);

struct EigenDecomposition {
  std::vector<double> values;  // descending
  SmallMatrix vectors;         // rows are eigenvectors, sign-normalized
  int sweeps = 0;
};

/// Cyclic-Jacobi eigendecomposition for small symmetric blocks
/// (order <= kMaxRotationOrder). Eigenvalues descend; each eigenvector's
/// largest-magnitude entry is nonnegative (ties broken at the lowest index).
EigenDecomposition sym_eig_small(const SmallMatrix& a, double sym_tol = kDefaultSymTol);

/// Same Jacobi iteration without the order cap, for full matrices at desk
/// scale. Rows of `vectors` are eigenvectors; same ordering and sign rules.
struct DenseEigenDecomposition {
  std::vector<double> values;
  std::vector<double> vectors;  // row-major n x n
  int sweeps = 0;
};
DenseEigenDecomposition sym_eig_dense(const SymMatrix& a);

/// Haar-distributed random orthogonal matrix: QR of a standard-Gaussian
/// matrix with the sign fix Q <- Q * diag(sign(diag(R))), zeros treated as +.
SmallMatrix sample_orthogonal(int order, Rng& rng);

std::vector<SmallMatrix> sample_dictionary(int order, int count, Rng& rng);

}  // namespace mmf
