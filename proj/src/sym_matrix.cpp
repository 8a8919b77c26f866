#include "mmf/sym_matrix.hpp"

#include <cmath>
#include <utility>

namespace mmf {

SymMatrix SymMatrix::from_values(int dim, std::vector<double> values, double sym_tol,
                                 bool symmetrize, std::vector<std::string> labels) {
  if (dim < 1) throw InvalidInputError("matrix dimension must be at least 1");
  if (values.size() != static_cast<std::size_t>(dim) * dim)
    throw InvalidInputError("matrix value buffer has wrong size for dimension " + std::to_string(dim));
  if (symmetrize) {
    for (int i = 0; i < dim; ++i)
      for (int j = i + 1; j < dim; ++j) {
        double avg = 0.5 * (values[static_cast<std::size_t>(i) * dim + j] +
                            values[static_cast<std::size_t>(j) * dim + i]);
        values[static_cast<std::size_t>(i) * dim + j] = avg;
        values[static_cast<std::size_t>(j) * dim + i] = avg;
      }
  } else {
    for (int i = 0; i < dim; ++i)
      for (int j = i + 1; j < dim; ++j) {
        double a = values[static_cast<std::size_t>(i) * dim + j];
        double b = values[static_cast<std::size_t>(j) * dim + i];
        if (std::abs(a - b) > sym_tol * std::max(1.0, std::abs(a)))
          throw InvalidInputError("matrix is not symmetric at entry (" + std::to_string(j + 1) +
                                  "," + std::to_string(i + 1) + "): " + format_double(b) +
                                  " vs (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                                  ") = " + format_double(a) + "; pass --symmetrize to average");
      }
  }
  if (!labels.empty() && labels.size() != static_cast<std::size_t>(dim))
    throw InvalidInputError("label count does not match matrix dimension");
  SymMatrix m;
  m.dim_ = dim;
  m.values_ = std::move(values);
  m.labels_ = std::move(labels);
  return m;
}

SymMatrix SymMatrix::unchecked(int dim, std::vector<double> values,
                               std::vector<std::string> labels) {
  SymMatrix m;
  m.dim_ = dim;
  m.values_ = std::move(values);
  m.labels_ = std::move(labels);
  return m;
}

SymMatrix SymMatrix::zero(int dim) {
  return unchecked(dim, std::vector<double>(static_cast<std::size_t>(dim) * dim, 0.0));
}

void SymMatrix::set_labels(std::vector<std::string> labels) {
  if (!labels.empty() && labels.size() != static_cast<std::size_t>(dim_))
    throw InvalidInputError("label count does not match matrix dimension");
  labels_ = std::move(labels);
}

double SymMatrix::frob_norm_sq() const {
  double sum = 0.0;
  for (double v : values_) sum += v * v;
  return sum;
}

double SymMatrix::frob_norm() const { return std::sqrt(frob_norm_sq()); }

double SymMatrix::symmetry_defect() const {
  double worst = 0.0;
  for (int i = 0; i < dim_; ++i)
    for (int j = i + 1; j < dim_; ++j) {
      double a = (*this)(i, j), b = (*this)(j, i);
      worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(a)));
    }
  return worst;
}

double off_core_diag_sqnorm(const SymMatrix& c, std::span<const int> core) {
  const int m = c.dim();
  std::vector<char> in_core(m, 0);
  for (int idx : core) {
    if (idx < 0 || idx >= m)
      throw InvalidInputError("core index " + std::to_string(idx) + " out of range for dimension " +
                              std::to_string(m));
    in_core[idx] = 1;
  }
  double sum = 0.0;
  for (int i = 0; i < m; ++i) {
    const double* ri = c.row(i);
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      if (in_core[i] && in_core[j]) continue;
      sum += ri[j] * ri[j];
    }
  }
  return sum;
}

}  // namespace mmf
