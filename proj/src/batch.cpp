#include "mmf/batch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace mmf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_tuple_in_active(std::span<const int> active, std::span<const int> tuple) {
  for (std::size_t i = 0; i < tuple.size(); ++i) {
    for (std::size_t j = i + 1; j < tuple.size(); ++j)
      if (tuple[i] == tuple[j])
        throw InvalidInputError("tuple repeats index " + std::to_string(tuple[i]));
    if (std::find(active.begin(), active.end(), tuple[i]) == active.end())
      throw InvalidInputError("tuple index " + std::to_string(tuple[i]) +
                              " is not in the active set");
  }
}

// M = C[t,t]; G = B B^T with B the tuple rows against active \ t. The
// excluded tuple columns are skipped during accumulation rather than
// subtracted afterwards, so an empty B gives exact zeros.
void gather_blocks(const SymMatrix& c, std::span<const int> active, std::span<const int> tuple,
                   SmallMatrix& m_block, SmallMatrix& g_block) {
  const int k = static_cast<int>(tuple.size());
  const double* rows[kMaxRotationOrder];
  for (int a = 0; a < k; ++a) rows[a] = c.row(tuple[a]);
  for (int a = 0; a < k; ++a)
    for (int b = a; b < k; ++b) {
      g_block(a, b) = 0.0;
      m_block(a, b) = rows[a][tuple[b]];
      m_block(b, a) = m_block(a, b);
    }
  double col[kMaxRotationOrder];
  for (int j : active) {
    bool in_tuple = false;
    for (int a = 0; a < k; ++a)
      if (tuple[a] == j) {
        in_tuple = true;
        break;
      }
    if (in_tuple) continue;
    for (int a = 0; a < k; ++a) col[a] = rows[a][j];
    for (int a = 0; a < k; ++a)
      for (int b = a; b < k; ++b) g_block(a, b) += col[a] * col[b];
  }
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b) g_block(b, a) = g_block(a, b);
}

// Wavelet-row diagnostics for one rotation. gdiag[r] = (O G O^T)_rr.
void rotated_b_diag(const SmallMatrix& o, const SmallMatrix& g, double* gdiag) {
  const int k = o.order();
  for (int r = 0; r < k; ++r) {
    double acc = 0.0;
    for (int a = 0; a < k; ++a) {
      double ora = o(r, a);
      if (ora == 0.0) continue;
      double inner = 0.0;
      for (int b = 0; b < k; ++b) inner += g(a, b) * o(r, b);
      acc += ora * inner;
    }
    gdiag[r] = acc;
  }
}

struct TupleBest {
  double error = kInf;
  int wavelet_pos = -1;
  SmallMatrix rotation;
  bool valid = false;
};

// Scans rotation candidates for a fixed tuple: the eigenvector rotation
// first (unless dictionary-only), then the dictionary in sample order.
// With `tie_on_index`, equal errors prefer the smaller wavelet index;
// otherwise the earlier row wins (pinned-slot mode, where the retiring
// index does not depend on the row). Equal-error rotations keep the
// earlier candidate so the result is schedule-independent.
TupleBest scan_rotations(const SmallMatrix& m_block, const SmallMatrix& g_block,
                         std::span<const int> tuple, RotationMode mode,
                         std::span<const SmallMatrix> dictionary, double sym_tol,
                         bool tie_on_index = true,
                         std::span<const SmallMatrix> preferred = {}) {
  const int k = m_block.order();
  TupleBest best;
  double gdiag[kMaxRotationOrder];

  auto consider = [&](double err, int pos, const SmallMatrix& rot) {
    if (err < best.error ||
        (tie_on_index && err == best.error && best.valid &&
         tuple[pos] < tuple[best.wavelet_pos])) {
      best.error = err;
      best.wavelet_pos = pos;
      best.rotation = rot;
      best.valid = true;
    }
  };

  auto full_scan = [&](const SmallMatrix& o) {
    rotated_b_diag(o, g_block, gdiag);
    SmallMatrix t_block;
    bool have_t = false;
    for (int r = 0; r < k; ++r) {
      double base = 2.0 * gdiag[r];
      if (base > best.error) continue;  // first term only adds error
      if (!have_t) {
        t_block = conjugate(o, m_block);
        have_t = true;
      }
      double off = 0.0;
      for (int i = 0; i < k; ++i)
        if (i != r) off += t_block(r, i) * t_block(r, i);
      consider(base + 2.0 * off, r, o);
    }
  };

  // Carried-over rotations win ties against everything evaluated later.
  for (const SmallMatrix& o : preferred) full_scan(o);
  if (mode != RotationMode::kDictionary) {
    EigenDecomposition eig = sym_eig_small(m_block, sym_tol);
    rotated_b_diag(eig.vectors, g_block, gdiag);
    for (int r = 0; r < k; ++r) consider(2.0 * gdiag[r], r, eig.vectors);
  }
  if (mode != RotationMode::kEigen)
    for (const SmallMatrix& o : dictionary) full_scan(o);
  return best;
}

LevelChoice canonicalize(std::span<const int> tuple, const TupleBest& best) {
  if (!best.valid) throw InvalidInputError("no rotation candidate could be evaluated");
  const int k = static_cast<int>(tuple.size());
  const int pos = best.wavelet_pos;
  LevelChoice choice;
  choice.tuple.reserve(k);
  for (int i = 0; i < k; ++i)
    if (i != pos) choice.tuple.push_back(tuple[i]);
  choice.tuple.push_back(tuple[pos]);
  choice.wavelet = tuple[pos];
  // Sum-of-squares value; shave round-off that dips microscopically negative.
  choice.error = std::max(0.0, best.error);
  // Conjugating tuple order and block by the same permutation leaves the
  // embedded rotation unchanged.
  SmallMatrix block(k);
  auto old_pos = [&](int i) { return i == k - 1 ? pos : (i < pos ? i : i + 1); };
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) block(i, j) = best.rotation(old_pos(i), old_pos(j));
  choice.block = block;
  return choice;
}

std::vector<int> sorted_copy(std::span<const int> v) {
  std::vector<int> out(v.begin(), v.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

bool choice_better(const LevelChoice& a, const LevelChoice& b) {
  if (a.error != b.error) return a.error < b.error;
  std::vector<int> sa = sorted_copy(a.tuple);
  std::vector<int> sb = sorted_copy(b.tuple);
  if (sa != sb) return sa < sb;
  return a.wavelet < b.wavelet;
}

double level_error(const SymMatrix& c, std::span<const int> active, const SmallMatrix& o,
                   std::span<const int> tuple_wavelet_last, double orth_tol) {
  const int k = static_cast<int>(tuple_wavelet_last.size());
  if (o.order() != k) throw InvalidInputError("rotation order does not match tuple size");
  require_tuple_in_active(active, tuple_wavelet_last);
  double defect = o.orthogonality_defect();
  if (defect > orth_tol)
    throw InvalidInputError("rotation block is not orthogonal (defect " + format_double(defect) +
                            ")");
  SmallMatrix m_block(k), g_block(k);
  gather_blocks(c, active, tuple_wavelet_last, m_block, g_block);
  double gdiag[kMaxRotationOrder];
  rotated_b_diag(o, g_block, gdiag);
  SmallMatrix t_block = conjugate(o, m_block);
  const int r = k - 1;
  double off = 0.0;
  for (int i = 0; i < k; ++i)
    if (i != r) off += t_block(r, i) * t_block(r, i);
  return 2.0 * off + 2.0 * gdiag[r];
}

LevelChoice best_rotation_for_tuple(const SymMatrix& c, std::span<const int> active,
                                    std::span<const int> tuple, RotationMode mode,
                                    std::span<const SmallMatrix> dictionary, double sym_tol) {
  const int k = static_cast<int>(tuple.size());
  if (k < 2 || k > kMaxRotationOrder) throw InvalidInputError("tuple size out of range");
  require_tuple_in_active(active, tuple);
  if (mode == RotationMode::kDictionary && dictionary.empty())
    throw InvalidInputError("dictionary mode requested with no rotation candidates");
  SmallMatrix m_block(k), g_block(k);
  gather_blocks(c, active, tuple, m_block, g_block);
  TupleBest best = scan_rotations(m_block, g_block, tuple, mode, dictionary, sym_tol);
  return canonicalize(tuple, best);
}

LevelChoice best_rotation_for_tuple(const SymMatrix& c, std::span<const int> active,
                                    std::span<const int> tuple, RotationMode mode, int dict_size,
                                    Rng& rng, double sym_tol) {
  std::vector<SmallMatrix> dict;
  if (mode != RotationMode::kEigen)
    dict = sample_dictionary(static_cast<int>(tuple.size()), dict_size, rng);
  return best_rotation_for_tuple(c, active, tuple, mode, dict, sym_tol);
}

namespace {

// Canonical record for a pinned retirement slot: the slot's index moves to
// the tuple tail, the winning rotation row moves to the bottom, and the
// block's columns follow the tuple reordering.
LevelChoice canonicalize_slot(std::span<const int> tuple, int wavelet_pos,
                              const TupleBest& best) {
  if (!best.valid) throw InvalidInputError("no rotation candidate could be evaluated");
  const int k = static_cast<int>(tuple.size());
  const int row = best.wavelet_pos;  // content that retires
  LevelChoice choice;
  choice.tuple.reserve(k);
  for (int i = 0; i < k; ++i)
    if (i != wavelet_pos) choice.tuple.push_back(tuple[i]);
  choice.tuple.push_back(tuple[wavelet_pos]);
  choice.wavelet = tuple[wavelet_pos];
  choice.error = std::max(0.0, best.error);
  SmallMatrix block(k);
  auto old_row = [&](int i) { return i == k - 1 ? row : (i < row ? i : i + 1); };
  auto old_col = [&](int j) { return j == k - 1 ? wavelet_pos : (j < wavelet_pos ? j : j + 1); };
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) block(i, j) = best.rotation(old_row(i), old_col(j));
  choice.block = block;
  return choice;
}

}  // namespace

LevelChoice best_rotation_for_slot(const SymMatrix& c, std::span<const int> active,
                                   std::span<const int> tuple, int wavelet_pos,
                                   RotationMode mode, std::span<const SmallMatrix> dictionary,
                                   double sym_tol, std::span<const SmallMatrix> preferred) {
  const int k = static_cast<int>(tuple.size());
  if (k < 2 || k > kMaxRotationOrder) throw InvalidInputError("tuple size out of range");
  if (wavelet_pos < 0 || wavelet_pos >= k)
    throw InvalidInputError("wavelet slot out of range for the tuple");
  require_tuple_in_active(active, tuple);
  if (mode == RotationMode::kDictionary && dictionary.empty() && preferred.empty())
    throw InvalidInputError("dictionary mode requested with no rotation candidates");
  SmallMatrix m_block(k), g_block(k);
  gather_blocks(c, active, tuple, m_block, g_block);
  TupleBest best = scan_rotations(m_block, g_block, tuple, mode, dictionary, sym_tol,
                                  /*tie_on_index=*/false, preferred);
  return canonicalize_slot(tuple, wavelet_pos, best);
}

namespace {

struct RawBest {
  double error = kInf;
  std::vector<int> tuple;  // ascending
  int wavelet_pos = -1;
  SmallMatrix rotation;
  bool valid = false;
};

// Strictly better under (error, tuple lex, wavelet index).
bool raw_better(const RawBest& a, const RawBest& b) {
  if (!a.valid) return false;
  if (!b.valid) return true;
  if (a.error != b.error) return a.error < b.error;
  if (a.tuple != b.tuple) return a.tuple < b.tuple;
  return a.tuple[a.wavelet_pos] < b.tuple[b.wavelet_pos];
}

void scan_combination_range(const SymMatrix& c, std::span<const int> active,
                            std::span<const int> combos, int k, RotationMode mode,
                            std::span<const SmallMatrix> dictionary, double sym_tol,
                            RawBest& out) {
  SmallMatrix m_block(k), g_block(k);
  std::vector<int> tuple(k);
  const std::size_t count = combos.size() / k;
  for (std::size_t t = 0; t < count; ++t) {
    for (int i = 0; i < k; ++i) tuple[i] = combos[t * k + i];
    gather_blocks(c, active, tuple, m_block, g_block);
    TupleBest best = scan_rotations(m_block, g_block, tuple, mode, dictionary, sym_tol);
    if (!best.valid) continue;
    RawBest cand;
    cand.error = best.error;
    cand.tuple = tuple;
    cand.wavelet_pos = best.wavelet_pos;
    cand.rotation = best.rotation;
    cand.valid = true;
    if (raw_better(cand, out)) out = std::move(cand);
  }
}

}  // namespace

LevelChoice exhaustive_level(const SymMatrix& c, std::span<const int> active, int k,
                             RotationMode mode, std::span<const SmallMatrix> dictionary,
                             double sym_tol) {
  const int n = static_cast<int>(active.size());
  if (n < k)
    throw InvalidInputError("active set of size " + std::to_string(n) +
                            " cannot host a " + std::to_string(k) + "-tuple");
  if (mode == RotationMode::kDictionary && dictionary.empty())
    throw InvalidInputError("dictionary mode requested with no rotation candidates");

  // Materialize the k-subsets in lexicographic order so both the serial and
  // the chunked parallel scan resolve ties identically.
  std::vector<int> combos;
  {
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    for (;;) {
      for (int i = 0; i < k; ++i) combos.push_back(active[idx[i]]);
      int i = k - 1;
      while (i >= 0 && idx[i] == n - k + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  const std::size_t count = combos.size() / k;

  auto finish = [](RawBest&& best) {
    if (!best.valid) throw InvalidInputError("no level candidate could be evaluated");
    TupleBest tb;
    tb.error = best.error;
    tb.wavelet_pos = best.wavelet_pos;
    tb.rotation = best.rotation;
    tb.valid = true;
    return canonicalize(best.tuple, tb);
  };

  int workers = worker_count();
  if (count < 1024 || workers == 1) {
    RawBest best;
    scan_combination_range(c, active, combos, k, mode, dictionary, sym_tol, best);
    return finish(std::move(best));
  }

  if (static_cast<std::size_t>(workers) > count) workers = static_cast<int>(count);
  std::vector<RawBest> results(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    std::size_t lo = w * chunk;
    std::size_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    threads.emplace_back([&, w, lo, hi] {
      std::span<const int> slice(combos.data() + lo * k, (hi - lo) * k);
      scan_combination_range(c, active, slice, k, mode, dictionary, sym_tol, results[w]);
    });
  }
  for (auto& t : threads) t.join();
  RawBest best;
  for (const RawBest& r : results)
    if (raw_better(r, best)) best = r;
  return finish(std::move(best));
}

LevelChoice exhaustive_level(const SymMatrix& c, std::span<const int> active, int k,
                             RotationMode mode, int dict_size, Rng& rng, double sym_tol) {
  std::vector<SmallMatrix> dict;
  if (mode != RotationMode::kEigen) dict = sample_dictionary(k, dict_size, rng);
  return exhaustive_level(c, active, k, mode, dict, sym_tol);
}

std::vector<int> correlation_tuple(const SymMatrix& c, std::span<const int> active, int s1,
                                   int k, bool signed_mode) {
  const int n = static_cast<int>(active.size());
  if (n < k) throw InvalidInputError("active set too small for a " + std::to_string(k) + "-tuple");
  if (std::find(active.begin(), active.end(), s1) == active.end())
    throw InvalidInputError("seed row " + std::to_string(s1) + " is not active");

  const double* rs = c.row(s1);
  double norm_s1 = 0.0;
  for (int i : active) norm_s1 += rs[i] * rs[i];
  norm_s1 = std::sqrt(norm_s1);

  struct Scored {
    double key;
    int index;
  };
  std::vector<Scored> scored;
  scored.reserve(n - 1);
  for (int j : active) {
    if (j == s1) continue;
    const double* rj = c.row(j);
    double dot = 0.0, norm_j = 0.0;
    for (int i : active) {
      dot += rs[i] * rj[i];
      norm_j += rj[i] * rj[i];
    }
    norm_j = std::sqrt(norm_j);
    double score = (norm_s1 == 0.0 || norm_j == 0.0) ? 0.0 : dot / (norm_s1 * norm_j);
    scored.push_back({signed_mode ? score : -std::abs(score), j});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.key != b.key) return a.key < b.key;
    return a.index < b.index;
  });
  std::vector<int> out;
  out.reserve(k);
  out.push_back(s1);
  for (int i = 0; i < k - 1; ++i) out.push_back(scored[i].index);
  std::sort(out.begin(), out.end());
  return out;
}

LevelChoice correlation_level(const SymMatrix& c, std::span<const int> active,
                              const MmfConfig& config,
                              std::span<const SmallMatrix> dictionary, Rng& rng) {
  const int n = static_cast<int>(active.size());
  std::vector<int> seeds;
  if (config.s1_samples > 0 && config.s1_samples < n) {
    // Partial Fisher-Yates for distinct sampled seed rows.
    std::vector<int> pool(active.begin(), active.end());
    for (int i = 0; i < config.s1_samples; ++i) {
      std::size_t j = i + rng.below(pool.size() - i);
      std::swap(pool[i], pool[j]);
      seeds.push_back(pool[i]);
    }
    std::sort(seeds.begin(), seeds.end());
  } else {
    seeds.assign(active.begin(), active.end());
  }

  LevelChoice best;
  best.error = kInf;
  bool have = false;
  for (int s1 : seeds) {
    std::vector<int> tuple =
        correlation_tuple(c, active, s1, config.k, config.signed_correlation);
    LevelChoice cand = best_rotation_for_tuple(c, active, tuple, RotationMode::kBoth,
                                               dictionary, config.sym_tol);
    if (!have || choice_better(cand, best)) {
      best = std::move(cand);
      have = true;
    }
  }
  if (!have) throw InvalidInputError("no correlation candidates were produced");
  return best;
}

BatchResult batch_mmf(const SymMatrix& c, const MmfConfig& config) {
  const int m = c.dim();
  config.validate(m);
  const int depth = config.resolved_levels(m);
  const int k = config.k;

  BatchResult result;
  result.graph.m = m;
  result.graph.k = k;
  result.compression = c;

  std::vector<int> active(m);
  for (int i = 0; i < m; ++i) active[i] = i;
  Rng rng(config.seed);

  const bool needs_dictionary = config.variant != Variant::kEigen;
  for (int level = 0; level < depth; ++level) {
    std::vector<SmallMatrix> dictionary;
    if (needs_dictionary && config.dict_size > 0)
      dictionary = sample_dictionary(k, config.dict_size, rng);

    LevelChoice choice;
    switch (config.variant) {
      case Variant::kExhaustive:
        choice = exhaustive_level(result.compression, active, k, RotationMode::kBoth,
                                  dictionary, config.sym_tol);
        break;
      case Variant::kEigen:
        choice = exhaustive_level(result.compression, active, k, RotationMode::kEigen,
                                  dictionary, config.sym_tol);
        break;
      case Variant::kCorrelationGreedy:
        choice = correlation_level(result.compression, active, config, dictionary, rng);
        break;
    }

    LevelRecord rec;
    rec.tuple = choice.tuple;
    rec.wavelet = choice.wavelet;
    rec.rotation = KPointRotation(choice.tuple, choice.block, config.orth_tol);
    rec.level_error = choice.error;
    apply_rotation_inplace(result.compression, rec.rotation);
    active.erase(std::find(active.begin(), active.end(), choice.wavelet));
    result.graph.levels.push_back(std::move(rec));
  }
  result.graph.core_set = active;
  validate_graph(result.graph);
  return result;
}

}  // namespace mmf
