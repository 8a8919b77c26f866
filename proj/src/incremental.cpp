#include "mmf/incremental.hpp"

#include <algorithm>
#include <cmath>

namespace mmf {

namespace {

std::vector<int> set_difference_sorted(std::span<const int> a, std::span<const int> b) {
  std::vector<int> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::size_t combination_count_capped(int n, int k, std::size_t cap) {
  long double v = 1.0L;
  for (int i = 1; i <= k; ++i) {
    v = v * static_cast<long double>(n - k + i) / static_cast<long double>(i);
    if (v > static_cast<long double>(cap)) return cap + 1;
  }
  return static_cast<std::size_t>(v + 0.5L);
}

/// C bordered by w = [u^T, v]: one extra row/column, symmetric by construction.
SymMatrix bordered(const SymMatrix& c, std::span<const double> w) {
  const int m = c.dim();
  if (w.size() != static_cast<std::size_t>(m) + 1)
    throw InvalidInputError("new row has " + std::to_string(w.size()) + " entries, expected " +
                            std::to_string(m + 1));
  std::vector<double> values(static_cast<std::size_t>(m + 1) * (m + 1));
  for (int i = 0; i < m; ++i) {
    const double* src = c.row(i);
    double* dst = values.data() + static_cast<std::size_t>(i) * (m + 1);
    std::copy(src, src + m, dst);
    dst[m] = w[i];
  }
  double* last = values.data() + static_cast<std::size_t>(m) * (m + 1);
  std::copy(w.begin(), w.end(), last);
  std::vector<std::string> labels = c.labels();
  if (!labels.empty()) labels.push_back(std::to_string(m));
  return SymMatrix::unchecked(m + 1, std::move(values), std::move(labels));
}

RotationMode mode_for(const MmfConfig& config) {
  return config.variant == Variant::kEigen ? RotationMode::kEigen : RotationMode::kBoth;
}

}  // namespace

std::vector<CandidateTuple> generate_tuples(std::span<const int> t_hat,
                                            std::span<const int> insert_set,
                                            std::span<const int> stale) {
  if (insert_set.size() < stale.size())
    throw InvalidInputError("insert set smaller than the stale slots it must fill (" +
                            std::to_string(insert_set.size()) + " < " +
                            std::to_string(stale.size()) + ")");
  const int k = static_cast<int>(t_hat.size());
  std::vector<int> vacant;  // positions in t_hat that must be refilled
  for (int i = 0; i < k; ++i)
    if (std::find(stale.begin(), stale.end(), t_hat[i]) != stale.end()) vacant.push_back(i);
  if (vacant.size() != stale.size())
    throw InvalidInputError("stale set contains indices not in the old tuple");

  std::vector<int> pool(insert_set.begin(), insert_set.end());
  std::sort(pool.begin(), pool.end());
  const int s = static_cast<int>(vacant.size());
  const int p = static_cast<int>(pool.size());

  std::vector<CandidateTuple> out;
  // Combinations of the insert set, lexicographic, assigned ascending to the
  // vacant positions in order.
  std::vector<int> pick(s);
  for (int i = 0; i < s; ++i) pick[i] = i;
  for (;;) {
    std::vector<int> base(t_hat.begin(), t_hat.end());
    std::vector<char> used(p, 0);
    for (int i = 0; i < s; ++i) {
      base[vacant[i]] = pool[pick[i]];
      used[pick[i]] = 1;
    }
    out.push_back({base, s == 0 ? TupleProvenance::kOldGraph : TupleProvenance::kSwapIn});
    for (int u = 0; u < p; ++u) {
      if (used[u]) continue;
      for (int pos = 0; pos < k; ++pos) {
        if (std::find(vacant.begin(), vacant.end(), pos) != vacant.end()) continue;
        std::vector<int> swapped = base;
        swapped[pos] = pool[u];
        out.push_back({std::move(swapped), TupleProvenance::kSwapIn});
      }
    }
    if (s == 0) break;
    int i = s - 1;
    while (i >= 0 && pick[i] == p - s + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int j = i + 1; j < s; ++j) pick[j] = pick[j - 1] + 1;
  }
  return out;
}

CheckInsertResult check_insert(const SymMatrix& a, std::span<const int> active,
                               std::span<const int> t_hat, int s_hat,
                               std::span<const int> insert_set, const MmfConfig& config,
                               Rng& rng) {
  std::vector<int> stale;
  for (int idx : t_hat)
    if (std::find(active.begin(), active.end(), idx) == active.end()) stale.push_back(idx);

  std::vector<CandidateTuple> candidates = generate_tuples(t_hat, insert_set, stale);

  // The old wavelet's slot keeps the retirement role: whatever index a
  // candidate carries at that position is the one that retires, with the
  // rotation free to park its best direction there. So the wavelet index
  // only ever moves to a swapped-in element, and the insert set stays
  // single-element along the nominal path.
  int wavelet_pos = static_cast<int>(t_hat.size()) - 1;
  for (std::size_t i = 0; i < t_hat.size(); ++i)
    if (t_hat[i] == s_hat) wavelet_pos = static_cast<int>(i);

  const RotationMode mode = mode_for(config);
  std::vector<SmallMatrix> dictionary;
  if (mode != RotationMode::kEigen && config.dict_size > 0)
    dictionary = sample_dictionary(config.k, config.dict_size, rng);

  LevelChoice best;
  bool have = false;
  for (const CandidateTuple& cand : candidates) {
    LevelChoice choice = best_rotation_for_slot(a, active, cand.indices, wavelet_pos, mode,
                                                dictionary, config.sym_tol);
    if (!have || choice_better(choice, best)) {
      best = std::move(choice);
      have = true;
    }
  }
  if (!have) throw InvalidInputError("no insertion candidates to evaluate");

  // Insert-set update, mirroring the set difference of the two active sets:
  // a chosen wavelet from the insert set is consumed; the old wavelet joins
  // the insert set unless it is re-retired here or was already knocked out
  // at an earlier level. A knocked-out scaling index is simply absent from
  // the new active set and surfaces as stale in later tuples.
  std::vector<int> next(insert_set.begin(), insert_set.end());
  auto it = std::find(next.begin(), next.end(), best.wavelet);
  if (it != next.end()) next.erase(it);
  if (best.wavelet != s_hat &&
      std::find(active.begin(), active.end(), s_hat) != active.end())
    next.push_back(s_hat);
  std::sort(next.begin(), next.end());
  return {std::move(best), std::move(next)};
}

InsertResult insert_row(const SymMatrix& c, std::span<const double> w, const MmfGraph& graph,
                        const MmfConfig& config, Rng& rng) {
  validate_graph(graph);
  if (c.dim() != graph.m)
    throw InvalidInputError("matrix dimension does not match graph dimension");
  const int m = c.dim();
  const int k = graph.k;

  InsertResult result;
  result.compression = bordered(c, w);

  std::vector<int> active_new(m + 1);
  for (int i = 0; i <= m; ++i) active_new[i] = i;
  std::vector<int> active_old(m);
  for (int i = 0; i < m; ++i) active_old[i] = i;
  std::vector<int> insert_set{m};

  MmfGraph out;
  out.m = m + 1;
  out.k = k;

  for (const LevelRecord& old_level : graph.levels) {
    ++result.stats.levels_checked;
    if (insert_set.size() == 1) ++result.stats.nominal_levels;
    if (config.check_bookkeeping) {
      if (active_new.size() != active_old.size() + 1 ||
          insert_set != set_difference_sorted(active_new, active_old)) {
        ++result.stats.bookkeeping_violations;
        throw std::logic_error("insertion bookkeeping out of sync at level " +
                               std::to_string(result.stats.levels_checked));
      }
    }

    CheckInsertResult step = check_insert(result.compression, active_new, old_level.tuple,
                                          old_level.wavelet, insert_set, config, rng);

    LevelRecord rec;
    rec.tuple = step.choice.tuple;
    rec.wavelet = step.choice.wavelet;
    rec.rotation = KPointRotation(step.choice.tuple, step.choice.block, config.orth_tol);
    rec.level_error = step.choice.error;
    apply_rotation_inplace(result.compression, rec.rotation);
    out.levels.push_back(std::move(rec));

    active_new.erase(std::find(active_new.begin(), active_new.end(), step.choice.wavelet));
    active_old.erase(std::find(active_old.begin(), active_old.end(), old_level.wavelet));
    insert_set = std::move(step.insert_next);

    if (config.check_bookkeeping &&
        insert_set != set_difference_sorted(active_new, active_old)) {
      ++result.stats.bookkeeping_violations;
      throw std::logic_error("insert-set update rule diverged from the set difference at level " +
                             std::to_string(result.stats.levels_checked));
    }
  }

  // Appended level over whatever is still active.
  const int remaining = static_cast<int>(active_new.size());
  const RotationMode mode = mode_for(config);
  std::vector<SmallMatrix> dictionary;
  if (mode != RotationMode::kEigen && config.dict_size > 0)
    dictionary = sample_dictionary(k, config.dict_size, rng);
  LevelChoice last;
  if (combination_count_capped(remaining, k, config.final_level_budget) <=
      config.final_level_budget) {
    last = exhaustive_level(result.compression, active_new, k, mode, dictionary, config.sym_tol);
  } else {
    MmfConfig greedy = config;
    last = correlation_level(result.compression, active_new, greedy, dictionary, rng);
  }
  LevelRecord rec;
  rec.tuple = last.tuple;
  rec.wavelet = last.wavelet;
  rec.rotation = KPointRotation(last.tuple, last.block, config.orth_tol);
  rec.level_error = last.error;
  apply_rotation_inplace(result.compression, rec.rotation);
  out.levels.push_back(std::move(rec));
  active_new.erase(std::find(active_new.begin(), active_new.end(), last.wavelet));

  out.core_set = active_new;
  validate_graph(out);
  result.graph = std::move(out);
  return result;
}

InsertResult insert_row(const SymMatrix& c, std::span<const double> w, const MmfGraph& graph,
                        const MmfConfig& config) {
  Rng rng(config.seed);
  return insert_row(c, w, graph, config, rng);
}

namespace {

SymMatrix submatrix(const SymMatrix& c, std::span<const int> rows) {
  const int n = static_cast<int>(rows.size());
  std::vector<double> values(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    const double* src = c.row(rows[i]);
    for (int j = 0; j < n; ++j) values[static_cast<std::size_t>(i) * n + j] = src[rows[j]];
  }
  return SymMatrix::unchecked(n, std::move(values));
}

SymMatrix permute_to_original(const SymMatrix& work, std::span<const int> order) {
  const int n = work.dim();
  std::vector<double> values(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      values[static_cast<std::size_t>(order[i]) * n + order[j]] = work(i, j);
  return SymMatrix::unchecked(n, std::move(values));
}

}  // namespace

InsertResult incremental_mmf(const SymMatrix& c, const MmfConfig& config) {
  const int m = c.dim();
  config.validate(m);
  const int k = config.k;
  int init = static_cast<int>(std::lround(config.init_fraction * m));
  init = std::clamp(init, k, m);

  std::vector<int> order(m);
  for (int i = 0; i < m; ++i) order[i] = i;
  if (config.shuffle_insert_order) {
    Rng shuffle_rng(config.seed ^ 0xd1b54a32d192ed03ULL);
    for (int i = init; i < m - 1; ++i) {
      int j = i + static_cast<int>(shuffle_rng.below(static_cast<std::uint64_t>(m - i)));
      std::swap(order[i], order[j]);
    }
  }

  MmfConfig init_config = config;
  init_config.levels = init - k + 1;
  std::span<const int> init_rows(order.data(), init);
  BatchResult seed = batch_mmf(submatrix(c, init_rows), init_config);

  InsertResult result;
  result.graph = std::move(seed.graph);
  result.compression = std::move(seed.compression);

  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  for (int j = init; j < m; ++j) {
    std::span<const int> prefix(order.data(), j);
    SymMatrix base = submatrix(c, prefix);
    std::vector<double> w(j + 1);
    const double* new_row = c.row(order[j]);
    for (int i = 0; i < j; ++i) w[i] = new_row[order[i]];
    w[j] = new_row[order[j]];

    InsertResult step = insert_row(base, w, result.graph, config, rng);
    result.graph = std::move(step.graph);
    result.compression = std::move(step.compression);
    result.stats.levels_checked += step.stats.levels_checked;
    result.stats.nominal_levels += step.stats.nominal_levels;
    result.stats.bookkeeping_violations += step.stats.bookkeeping_violations;
  }

  if (config.shuffle_insert_order) {
    result.graph = relabel_graph(result.graph, order);
    result.compression = permute_to_original(result.compression, order);
  }

  // The streaming construction always reaches full depth; a shallower
  // requested factorization is the prefix of it.
  const int requested = config.resolved_levels(m);
  if (requested < result.graph.depth()) {
    result.graph.levels.resize(requested);
    result.graph.core_set = active_set_at(result.graph, requested);
    result.compression = compress(c, result.graph);
    validate_graph(result.graph);
  }
  return result;
}

}  // namespace mmf
