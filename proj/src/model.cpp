#include "mmf/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mmf {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kExhaustive: return "exhaustive";
    case Variant::kEigen: return "eigen";
    case Variant::kCorrelationGreedy: return "greedy";
  }
  return "unknown";
}

Variant variant_from_name(const std::string& name) {
  if (name == "exhaustive") return Variant::kExhaustive;
  if (name == "eigen") return Variant::kEigen;
  if (name == "greedy" || name == "correlation-greedy") return Variant::kCorrelationGreedy;
  throw InvalidInputError("unknown variant '" + name +
                          "' (expected exhaustive, eigen or greedy)");
}

int MmfConfig::resolved_levels(int m) const {
  return levels < 0 ? m - k + 1 : levels;
}

void MmfConfig::validate(int m) const {
  if (k < 2 || k > kMaxRotationOrder)
    throw InvalidInputError("order k must be in [2, " + std::to_string(kMaxRotationOrder) + "]");
  if (k > m)
    throw InvalidInputError("order k = " + std::to_string(k) + " exceeds matrix dimension " +
                            std::to_string(m));
  int resolved = resolved_levels(m);
  if (resolved < 1 || resolved > m - k + 1)
    throw InvalidInputError("level count " + std::to_string(resolved) + " outside [1, " +
                            std::to_string(m - k + 1) + "]");
  if (!(init_fraction > 0.0 && init_fraction <= 1.0))
    throw InvalidInputError("init fraction must be in (0, 1]");
  if (dict_size < 0) throw InvalidInputError("dictionary size must be nonnegative");
}

void validate_graph(const MmfGraph& graph) {
  const int m = graph.m;
  const int k = graph.k;
  if (m < 1) throw InvalidInputError("graph dimension must be positive");
  if (k < 2 || k > kMaxRotationOrder) throw InvalidInputError("graph order out of range");
  const int depth = graph.depth();
  if (depth > m - k + 1)
    throw InvalidInputError("graph has " + std::to_string(depth) + " levels, more than " +
                            std::to_string(m - k + 1));

  std::vector<char> active(m, 1);
  int active_count = m;
  for (int l = 0; l < depth; ++l) {
    const LevelRecord& rec = graph.levels[l];
    if (static_cast<int>(rec.tuple.size()) != k)
      throw InvalidInputError("level " + std::to_string(l + 1) + " tuple size != k");
    for (int idx : rec.tuple) {
      if (idx < 0 || idx >= m)
        throw InvalidInputError("level " + std::to_string(l + 1) + " index out of range");
      if (!active[idx])
        throw InvalidInputError("level " + std::to_string(l + 1) + " uses retired index " +
                                std::to_string(idx));
    }
    if (rec.wavelet != rec.tuple.back())
      throw InvalidInputError("level " + std::to_string(l + 1) +
                              " wavelet is not the last tuple element");
    if (rec.rotation.tuple() != rec.tuple)
      throw InvalidInputError("level " + std::to_string(l + 1) +
                              " rotation tuple does not match level tuple");
    if (!(rec.level_error >= 0.0))
      throw InvalidInputError("level " + std::to_string(l + 1) + " has negative error");
    active[rec.wavelet] = 0;
    --active_count;
  }
  if (static_cast<int>(graph.core_set.size()) != active_count)
    throw InvalidInputError("core set size " + std::to_string(graph.core_set.size()) +
                            " does not equal " + std::to_string(active_count));
  std::vector<int> expected;
  expected.reserve(active_count);
  for (int i = 0; i < m; ++i)
    if (active[i]) expected.push_back(i);
  std::vector<int> sorted_core = graph.core_set;
  std::sort(sorted_core.begin(), sorted_core.end());
  if (sorted_core != expected)
    throw InvalidInputError("core set does not equal the surviving active set");
}

std::vector<int> active_set_at(const MmfGraph& graph, int level) {
  std::vector<char> active(graph.m, 1);
  for (int l = 0; l < level; ++l) active[graph.levels[l].wavelet] = 0;
  std::vector<int> out;
  out.reserve(graph.m - level);
  for (int i = 0; i < graph.m; ++i)
    if (active[i]) out.push_back(i);
  return out;
}

SymMatrix compress(const SymMatrix& c, const MmfGraph& graph) {
  if (c.dim() != graph.m)
    throw InvalidInputError("matrix dimension " + std::to_string(c.dim()) +
                            " does not match graph dimension " + std::to_string(graph.m));
  SymMatrix work = c;
  for (const LevelRecord& rec : graph.levels) apply_rotation_inplace(work, rec.rotation);
  return work;
}

ReplayResult replay_graph(const SymMatrix& c, const MmfGraph& graph) {
  if (c.dim() != graph.m)
    throw InvalidInputError("matrix dimension does not match graph dimension");
  ReplayResult out;
  out.compression = c;
  std::vector<char> active(graph.m, 1);
  for (const LevelRecord& rec : graph.levels) {
    // 2 * sum of squared wavelet-row entries against the remaining active set
    // after this level's rotation.
    apply_rotation_inplace(out.compression, rec.rotation);
    active[rec.wavelet] = 0;
    const double* row = out.compression.row(rec.wavelet);
    double err = 0.0;
    for (int j = 0; j < graph.m; ++j)
      if (active[j] && j != rec.wavelet) err += row[j] * row[j];
    out.level_errors.push_back(2.0 * err);
  }
  return out;
}

SymMatrix reconstruct(const MmfGraph& graph, const SymMatrix& c_final) {
  if (c_final.dim() != graph.m)
    throw InvalidInputError("final compression dimension does not match graph");
  // R: keep the diagonal and the core x core block, zero the rest.
  const int m = graph.m;
  std::vector<char> in_core(m, 0);
  for (int idx : graph.core_set) in_core[idx] = 1;
  SymMatrix r = c_final;
  for (int i = 0; i < m; ++i) {
    double* row = r.row(i);
    for (int j = 0; j < m; ++j)
      if (i != j && !(in_core[i] && in_core[j])) row[j] = 0.0;
  }
  for (auto it = graph.levels.rbegin(); it != graph.levels.rend(); ++it)
    apply_rotation_inplace(r, it->rotation.inverse());
  return r;
}

ErrorReport factorization_error(const SymMatrix& c, const MmfGraph& graph) {
  if (c.dim() != graph.m)
    throw InvalidInputError("matrix dimension does not match graph dimension");
  SymMatrix c_final = compress(c, graph);
  SymMatrix rec = reconstruct(graph, c_final);
  double sq = 0.0;
  for (int i = 0; i < c.dim(); ++i) {
    const double* a = c.row(i);
    const double* b = rec.row(i);
    for (int j = 0; j < c.dim(); ++j) {
      double d = a[j] - b[j];
      sq += d * d;
    }
  }
  ErrorReport report;
  report.frob_error = std::sqrt(sq);
  report.per_level.reserve(graph.levels.size());
  for (const LevelRecord& rec_l : graph.levels) report.per_level.push_back(rec_l.level_error);
  report.off_core_sqnorm = off_core_diag_sqnorm(c_final, graph.core_set);
  return report;
}

std::vector<double> residual_row_norms(const SymMatrix& c, const MmfGraph& graph) {
  SymMatrix rec = reconstruct(graph, compress(c, graph));
  std::vector<double> norms(c.dim(), 0.0);
  for (int i = 0; i < c.dim(); ++i) {
    const double* a = c.row(i);
    const double* b = rec.row(i);
    double sq = 0.0;
    for (int j = 0; j < c.dim(); ++j) {
      double d = a[j] - b[j];
      sq += d * d;
    }
    norms[i] = std::sqrt(sq);
  }
  return norms;
}

MmfGraph relabel_graph(const MmfGraph& graph, std::span<const int> mapping) {
  if (mapping.size() != static_cast<std::size_t>(graph.m))
    throw InvalidInputError("relabel mapping size does not match graph dimension");
  MmfGraph out;
  out.m = graph.m;
  out.k = graph.k;
  out.levels.reserve(graph.levels.size());
  for (const LevelRecord& rec : graph.levels) {
    LevelRecord mapped;
    mapped.tuple.reserve(rec.tuple.size());
    for (int idx : rec.tuple) mapped.tuple.push_back(mapping[idx]);
    mapped.wavelet = mapping[rec.wavelet];
    mapped.rotation = KPointRotation(mapped.tuple, rec.rotation.block());
    mapped.level_error = rec.level_error;
    out.levels.push_back(std::move(mapped));
  }
  out.core_set.reserve(graph.core_set.size());
  for (int idx : graph.core_set) out.core_set.push_back(mapping[idx]);
  std::sort(out.core_set.begin(), out.core_set.end());
  return out;
}

}  // namespace mmf
