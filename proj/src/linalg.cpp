#include "mmf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace mmf {

SmallMatrix::SmallMatrix(int order) : order_(order) {
  if (order < 0 || order > kMaxRotationOrder)
    throw InvalidInputError("block order " + std::to_string(order) + " outside [0, " +
                            std::to_string(kMaxRotationOrder) + "]");
}

SmallMatrix SmallMatrix::identity(int order) {
  SmallMatrix m(order);
  for (int i = 0; i < order; ++i) m(i, i) = 1.0;
  return m;
}

SmallMatrix SmallMatrix::transposed() const {
  SmallMatrix t(order_);
  for (int i = 0; i < order_; ++i)
    for (int j = 0; j < order_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double SmallMatrix::orthogonality_defect() const {
  double worst = 0.0;
  for (int i = 0; i < order_; ++i)
    for (int j = 0; j < order_; ++j) {
      double dot = 0.0;
      for (int r = 0; r < order_; ++r) dot += (*this)(r, i) * (*this)(r, j);
      worst = std::max(worst, std::abs(dot - (i == j ? 1.0 : 0.0)));
    }
  return worst;
}

std::vector<double> SmallMatrix::to_rows() const {
  std::vector<double> out(static_cast<std::size_t>(order_) * order_);
  for (int i = 0; i < order_; ++i)
    for (int j = 0; j < order_; ++j) out[static_cast<std::size_t>(i) * order_ + j] = (*this)(i, j);
  return out;
}

SmallMatrix SmallMatrix::from_rows(int order, std::span<const double> rows) {
  if (rows.size() != static_cast<std::size_t>(order) * order)
    throw InvalidInputError("rotation block has wrong element count for order " +
                            std::to_string(order));
  SmallMatrix m(order);
  for (int i = 0; i < order; ++i)
    for (int j = 0; j < order; ++j) m(i, j) = rows[static_cast<std::size_t>(i) * order + j];
  return m;
}

SmallMatrix operator*(const SmallMatrix& lhs, const SmallMatrix& rhs) {
  const int n = lhs.order();
  SmallMatrix out(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      double lik = lhs(i, k);
      if (lik == 0.0) continue;
      for (int j = 0; j < n; ++j) out(i, j) += lik * rhs(k, j);
    }
  return out;
}

SmallMatrix conjugate(const SmallMatrix& a, const SmallMatrix& b) {
  return a * b * a.transposed();
}

KPointRotation::KPointRotation(std::vector<int> tuple, SmallMatrix block, double orth_tol)
    : tuple_(std::move(tuple)), block_(block) {
  const int k = block_.order();
  if (k < 1 || static_cast<int>(tuple_.size()) != k)
    throw InvalidInputError("rotation tuple size does not match block order");
  for (std::size_t i = 0; i < tuple_.size(); ++i) {
    if (tuple_[i] < 0) throw InvalidInputError("rotation tuple index is negative");
    for (std::size_t j = i + 1; j < tuple_.size(); ++j)
      if (tuple_[i] == tuple_[j])
        throw InvalidInputError("rotation tuple repeats index " + std::to_string(tuple_[i]));
  }
  double defect = block_.orthogonality_defect();
  if (defect > orth_tol)
    throw InvalidInputError("rotation block is not orthogonal (defect " + format_double(defect) +
                            " > " + format_double(orth_tol) + ")");
}

KPointRotation KPointRotation::inverse() const {
  return KPointRotation(tuple_, block_.transposed());
}

void apply_rotation_inplace(SymMatrix& c, const KPointRotation& rot) {
  const int m = c.dim();
  const int k = rot.order();
  const auto& t = rot.tuple();
  const SmallMatrix& o = rot.block();
  for (int idx : t)
    if (idx >= m)
      throw InvalidInputError("rotation index " + std::to_string(idx) +
                              " out of range for dimension " + std::to_string(m));

  // New tuple rows: R = O * C[t, :].
  std::vector<double> new_rows(static_cast<std::size_t>(k) * m, 0.0);
  for (int a = 0; a < k; ++a) {
    double* out = new_rows.data() + static_cast<std::size_t>(a) * m;
    for (int b = 0; b < k; ++b) {
      double w = o(a, b);
      if (w == 0.0) continue;
      const double* src = c.row(t[b]);
      for (int j = 0; j < m; ++j) out[j] += w * src[j];
    }
  }
  // Tuple x tuple block: (O C_tt) O^T, symmetrized against round-off.
  SmallMatrix block(k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      double sum = 0.0;
      const double* ra = new_rows.data() + static_cast<std::size_t>(a) * m;
      for (int r = 0; r < k; ++r) sum += ra[t[r]] * o(b, r);
      block(a, b) = sum;
    }
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b) {
      double avg = 0.5 * (block(a, b) + block(b, a));
      block(a, b) = avg;
      block(b, a) = avg;
    }

  for (int a = 0; a < k; ++a) {
    double* dst = c.row(t[a]);
    std::memcpy(dst, new_rows.data() + static_cast<std::size_t>(a) * m,
                sizeof(double) * static_cast<std::size_t>(m));
    for (int b = 0; b < k; ++b) dst[t[b]] = block(a, b);
  }
  // Mirror the tuple columns.
  for (int a = 0; a < k; ++a) {
    const double* src = c.row(t[a]);
    for (int j = 0; j < m; ++j) c.at(j, t[a]) = src[j];
  }
}

SymMatrix apply_rotation(const SymMatrix& c, const KPointRotation& rot) {
  SymMatrix out = c;
  apply_rotation_inplace(out, rot);
  return out;
}

namespace {

// One cyclic-Jacobi pass over `a` (n x n, row-major), accumulating the
// rotations into `v` so that rows of v are eigenvectors of the original
// matrix. Returns the updated off-diagonal squared norm.
double jacobi_sweep(double* a, double* v, int n) {
  auto at = [&](double* p, int i, int j) -> double& { return p[static_cast<std::size_t>(i) * n + j]; };
  for (int p = 0; p < n - 1; ++p) {
    for (int q = p + 1; q < n; ++q) {
      double apq = at(a, p, q);
      if (apq == 0.0) continue;
      double app = at(a, p, p), aqq = at(a, q, q);
      // Annihilates a_pq under A <- G A G^T with G = [c s; -s c] at (p, q).
      double theta = 0.5 * (app - aqq) / apq;
      double t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
      if (theta < 0.0) t = -t;
      double cs = 1.0 / std::sqrt(1.0 + t * t);
      double sn = t * cs;
      // G has [c s; -s c] at (p, q); apply A <- G A G^T, V <- G V.
      for (int j = 0; j < n; ++j) {
        double ap = at(a, p, j), aq = at(a, q, j);
        at(a, p, j) = cs * ap + sn * aq;
        at(a, q, j) = -sn * ap + cs * aq;
      }
      for (int i = 0; i < n; ++i) {
        double ap = at(a, i, p), aq = at(a, i, q);
        at(a, i, p) = cs * ap + sn * aq;
        at(a, i, q) = -sn * ap + cs * aq;
      }
      at(a, p, q) = 0.0;
      at(a, q, p) = 0.0;
      for (int j = 0; j < n; ++j) {
        double vp = at(v, p, j), vq = at(v, q, j);
        at(v, p, j) = cs * vp + sn * vq;
        at(v, q, j) = -sn * vp + cs * vq;
      }
    }
  }
  double off = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) off += 2.0 * at(a, i, j) * at(a, i, j);
  return off;
}

// Core driver shared by the small-block and dense entry points. `a` is
// clobbered; `v` receives the eigenvector rows; `d` the sorted eigenvalues.
int jacobi_eigensystem(double* a, double* v, double* d, int n) {
  constexpr int kMaxSweeps = 64;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) v[static_cast<std::size_t>(i) * n + j] = (i == j) ? 1.0 : 0.0;

  double frob = 0.0;
  for (int i = 0; i < n * n; ++i) frob += a[i] * a[i];
  double tol = 1e-14 * std::sqrt(frob);
  if (tol == 0.0) tol = 1e-300;

  int sweeps = 0;
  if (n > 1) {
    for (;;) {
      double off = jacobi_sweep(a, v, n);
      ++sweeps;
      if (std::sqrt(off) <= tol) break;
      if (sweeps >= kMaxSweeps)
        throw NumericalError("Jacobi eigensolver failed to converge after " +
                             std::to_string(sweeps) + " sweeps");
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    return a[static_cast<std::size_t>(x) * n + x] > a[static_cast<std::size_t>(y) * n + y];
  });

  std::vector<double> sorted_v(static_cast<std::size_t>(n) * n);
  for (int r = 0; r < n; ++r) {
    d[r] = a[static_cast<std::size_t>(order[r]) * n + order[r]];
    const double* src = v + static_cast<std::size_t>(order[r]) * n;
    double* dst = sorted_v.data() + static_cast<std::size_t>(r) * n;
    // Sign rule: largest-magnitude entry nonnegative, ties at lowest index.
    int anchor = 0;
    for (int j = 1; j < n; ++j)
      if (std::abs(src[j]) > std::abs(src[anchor])) anchor = j;
    double sign = src[anchor] < 0.0 ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) dst[j] = sign * src[j];
  }
  std::memcpy(v, sorted_v.data(), sizeof(double) * sorted_v.size());
  return sweeps;
}

void require_symmetric_block(const SmallMatrix& a, double tol) {
  for (int i = 0; i < a.order(); ++i)
    for (int j = i + 1; j < a.order(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > tol * std::max(1.0, std::abs(a(i, j))))
        throw InvalidInputError("eigensolver input block is not symmetric at (" +
                                std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
}

}  // namespace

EigenDecomposition sym_eig_small(const SmallMatrix& a, double sym_tol) {
  const int n = a.order();
  if (n < 1 || n > kMaxRotationOrder)
    throw InvalidInputError("eigensolver block order " + std::to_string(n) + " outside [1, " +
                            std::to_string(kMaxRotationOrder) + "]");
  require_symmetric_block(a, sym_tol);

  std::array<double, kMaxRotationOrder * kMaxRotationOrder> work{};
  std::array<double, kMaxRotationOrder * kMaxRotationOrder> vecs{};
  std::array<double, kMaxRotationOrder> vals{};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) work[static_cast<std::size_t>(i) * n + j] = 0.5 * (a(i, j) + a(j, i));

  EigenDecomposition out;
  out.sweeps = jacobi_eigensystem(work.data(), vecs.data(), vals.data(), n);
  out.values.assign(vals.begin(), vals.begin() + n);
  out.vectors = SmallMatrix::from_rows(n, std::span<const double>(vecs.data(), static_cast<std::size_t>(n) * n));
  return out;
}

DenseEigenDecomposition sym_eig_dense(const SymMatrix& a) {
  const int n = a.dim();
  std::vector<double> work(a.values().begin(), a.values().end());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double avg = 0.5 * (work[static_cast<std::size_t>(i) * n + j] + work[static_cast<std::size_t>(j) * n + i]);
      work[static_cast<std::size_t>(i) * n + j] = avg;
      work[static_cast<std::size_t>(j) * n + i] = avg;
    }
  DenseEigenDecomposition out;
  out.values.resize(n);
  out.vectors.resize(static_cast<std::size_t>(n) * n);
  out.sweeps = jacobi_eigensystem(work.data(), out.vectors.data(), out.values.data(), n);
  return out;
}

SmallMatrix sample_orthogonal(int order, Rng& rng) {
  if (order < 2) throw InvalidInputError("orthogonal sample order must be at least 2");
  if (order > kMaxRotationOrder)
    throw InvalidInputError("orthogonal sample order exceeds " + std::to_string(kMaxRotationOrder));
  const int n = order;
  std::array<double, kMaxRotationOrder * kMaxRotationOrder> a{};
  for (int i = 0; i < n * n; ++i) a[i] = rng.gaussian();

  SmallMatrix q = SmallMatrix::identity(n);
  std::array<double, kMaxRotationOrder> h{};
  for (int j = 0; j < n; ++j) {
    double norm_sq = 0.0;
    for (int i = j; i < n; ++i) norm_sq += a[static_cast<std::size_t>(i) * n + j] * a[static_cast<std::size_t>(i) * n + j];
    double norm = std::sqrt(norm_sq);
    if (norm == 0.0) continue;
    double ajj = a[static_cast<std::size_t>(j) * n + j];
    double alpha = ajj > 0.0 ? -norm : norm;
    h.fill(0.0);
    h[j] = ajj - alpha;
    for (int i = j + 1; i < n; ++i) h[i] = a[static_cast<std::size_t>(i) * n + j];
    double hh = 0.0;
    for (int i = j; i < n; ++i) hh += h[i] * h[i];
    if (hh == 0.0) continue;
    // A <- H A on the trailing columns.
    for (int c = j; c < n; ++c) {
      double w = 0.0;
      for (int i = j; i < n; ++i) w += h[i] * a[static_cast<std::size_t>(i) * n + c];
      w *= 2.0 / hh;
      for (int i = j; i < n; ++i) a[static_cast<std::size_t>(i) * n + c] -= w * h[i];
    }
    // Q <- Q H (columns j.. of Q combine).
    for (int r = 0; r < n; ++r) {
      double w = 0.0;
      for (int i = j; i < n; ++i) w += q(r, i) * h[i];
      w *= 2.0 / hh;
      for (int i = j; i < n; ++i) q(r, i) -= w * h[i];
    }
  }
  for (int j = 0; j < n; ++j) {
    double rjj = a[static_cast<std::size_t>(j) * n + j];
    if (rjj < 0.0)
      for (int i = 0; i < n; ++i) q(i, j) = -q(i, j);
  }
  return q;
}

std::vector<SmallMatrix> sample_dictionary(int order, int count, Rng& rng) {
  std::vector<SmallMatrix> dict;
  dict.reserve(count);
  for (int i = 0; i < count; ++i) dict.push_back(sample_orthogonal(order, rng));
  return dict;
}

}  // namespace mmf
