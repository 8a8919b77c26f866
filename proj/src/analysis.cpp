#include "mmf/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mmf {

namespace {

std::vector<std::string> labels_or_indices(const SymMatrix& c) {
  if (!c.labels().empty()) return c.labels();
  std::vector<std::string> out;
  out.reserve(c.dim());
  for (int i = 0; i < c.dim(); ++i) out.push_back(std::to_string(i));
  return out;
}

}  // namespace

ScoreVector mmf_scores(const SymMatrix& c, const MmfGraph& graph) {
  ScoreVector out;
  out.values = residual_row_norms(c, graph);
  out.labels = labels_or_indices(c);
  out.kind = ScoreKind::kMmf;
  return out;
}

ScoreVector leverage_scores(const SymMatrix& c, int rank) {
  const int m = c.dim();
  if (rank < 1 || rank > m)
    throw InvalidInputError("leverage rank " + std::to_string(rank) + " outside [1, " +
                            std::to_string(m) + "]");
  DenseEigenDecomposition eig = sym_eig_dense(c);
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::max(eig.values[a], 0.0) > std::max(eig.values[b], 0.0);
  });
  ScoreVector out;
  out.values.assign(m, 0.0);
  for (int r = 0; r < rank; ++r) {
    const double* vec = eig.vectors.data() + static_cast<std::size_t>(order[r]) * m;
    for (int i = 0; i < m; ++i) out.values[i] += vec[i] * vec[i];
  }
  out.labels = labels_or_indices(c);
  out.kind = ScoreKind::kLeverage;
  return out;
}

std::vector<int> select_features(const ScoreVector& scores, double fraction, SelectMode mode,
                                 Rng& rng) {
  const int m = static_cast<int>(scores.values.size());
  if (m == 0) throw InvalidInputError("cannot select from an empty score vector");
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw InvalidInputError("selection fraction must be in (0, 1]");
  for (double v : scores.values)
    if (!std::isfinite(v) || v < 0.0)
      throw InvalidInputError("scores must be finite and nonnegative");

  const int count = std::min<int>(m, static_cast<int>(std::ceil(fraction * m)));
  std::vector<int> picked;
  picked.reserve(count);

  if (mode == SelectMode::kTop) {
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      if (scores.values[a] != scores.values[b]) return scores.values[a] > scores.values[b];
      return a < b;
    });
    picked.assign(order.begin(), order.begin() + count);
  } else {
    std::vector<double> weight = scores.values;
    double total = std::accumulate(weight.begin(), weight.end(), 0.0);
    if (total == 0.0) {
      weight.assign(m, 1.0);
      total = m;
    }
    std::vector<char> taken(m, 0);
    for (int draw = 0; draw < count; ++draw) {
      double target = rng.uniform() * total;
      double acc = 0.0;
      int chosen = -1;
      for (int i = 0; i < m; ++i) {
        if (taken[i]) continue;
        acc += weight[i];
        if (target < acc) {
          chosen = i;
          break;
        }
      }
      if (chosen < 0) {  // round-off fell past the last live weight
        for (int i = m - 1; i >= 0; --i)
          if (!taken[i]) {
            chosen = i;
            break;
          }
      }
      taken[chosen] = 1;
      total -= weight[chosen];
      picked.push_back(chosen);
    }
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

}  // namespace mmf
