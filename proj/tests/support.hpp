#pragma once

// Shared construction and oracle helpers for the test suites. The oracles
// here deliberately use dense, direct computations (full matrix products,
// explicit embeddings) so they stay independent of the library's own
// block-level shortcuts.

#include <cmath>
#include <vector>

#include "mmf/batch.hpp"
#include "mmf/incremental.hpp"
#include "mmf/linalg.hpp"
#include "mmf/model.hpp"
#include "mmf/random.hpp"
#include "mmf/sym_matrix.hpp"

namespace testsupport {

using namespace mmf;

inline SymMatrix random_symmetric(int m, Rng& rng, double scale = 1.0) {
  std::vector<double> values(static_cast<std::size_t>(m) * m);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) {
      double v = scale * rng.gaussian();
      values[static_cast<std::size_t>(i) * m + j] = v;
      values[static_cast<std::size_t>(j) * m + i] = v;
    }
  return SymMatrix::unchecked(m, std::move(values));
}

inline SymMatrix random_psd(int m, Rng& rng) {
  std::vector<double> a(static_cast<std::size_t>(m) * m);
  for (double& v : a) v = rng.gaussian();
  std::vector<double> values(static_cast<std::size_t>(m) * m, 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) {
      double sum = 0.0;
      for (int r = 0; r < m; ++r)
        sum += a[static_cast<std::size_t>(r) * m + i] * a[static_cast<std::size_t>(r) * m + j];
      values[static_cast<std::size_t>(i) * m + j] = sum;
      values[static_cast<std::size_t>(j) * m + i] = sum;
    }
  return SymMatrix::unchecked(m, std::move(values));
}

// Dense m x m embedding of a k-point rotation.
inline std::vector<double> embed_dense(const KPointRotation& rot, int m) {
  std::vector<double> q(static_cast<std::size_t>(m) * m, 0.0);
  for (int i = 0; i < m; ++i) q[static_cast<std::size_t>(i) * m + i] = 1.0;
  const auto& t = rot.tuple();
  for (int a = 0; a < rot.order(); ++a)
    for (int b = 0; b < rot.order(); ++b)
      q[static_cast<std::size_t>(t[a]) * m + t[b]] = rot.block()(a, b);
  return q;
}

inline std::vector<double> dense_mul(const std::vector<double>& a, const std::vector<double>& b,
                                     int m) {
  std::vector<double> c(static_cast<std::size_t>(m) * m, 0.0);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < m; ++k) {
      double v = a[static_cast<std::size_t>(i) * m + k];
      if (v == 0.0) continue;
      for (int j = 0; j < m; ++j)
        c[static_cast<std::size_t>(i) * m + j] += v * b[static_cast<std::size_t>(k) * m + j];
    }
  return c;
}

inline std::vector<double> dense_transpose(const std::vector<double>& a, int m) {
  std::vector<double> t(static_cast<std::size_t>(m) * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      t[static_cast<std::size_t>(j) * m + i] = a[static_cast<std::size_t>(i) * m + j];
  return t;
}

// Q C Q^T through full dense products.
inline std::vector<double> dense_conjugate(const std::vector<double>& q,
                                           const std::vector<double>& c, int m) {
  return dense_mul(dense_mul(q, c, m), dense_transpose(q, m), m);
}

// Random level structure on nested active sets: tuples drawn uniformly,
// Haar rotation blocks, last tuple element retired as the wavelet.
inline MmfGraph random_graph(int m, int k, int depth, Rng& rng) {
  MmfGraph graph;
  graph.m = m;
  graph.k = k;
  std::vector<int> active(m);
  for (int i = 0; i < m; ++i) active[i] = i;
  for (int l = 0; l < depth; ++l) {
    std::vector<int> pool = active;
    std::vector<int> tuple;
    for (int pick = 0; pick < k; ++pick) {
      std::size_t j = pick + rng.below(pool.size() - pick);
      std::swap(pool[pick], pool[j]);
      tuple.push_back(pool[pick]);
    }
    LevelRecord rec;
    rec.tuple = tuple;
    rec.wavelet = tuple.back();
    rec.rotation = KPointRotation(tuple, sample_orthogonal(k, rng));
    rec.level_error = 0.0;
    graph.levels.push_back(std::move(rec));
    active.erase(std::find(active.begin(), active.end(), tuple.back()));
  }
  graph.core_set = active;
  return graph;
}

struct Planted {
  SymMatrix matrix;   // Qbar^T R Qbar, exactly factorizable by `graph`
  MmfGraph graph;
  SymMatrix core;     // the core-diagonal R
};

inline Planted build_planted(int m, int k, int depth, Rng& rng) {
  Planted p;
  p.graph = random_graph(m, k, depth, rng);
  // Core-diagonal R: random diagonal everywhere plus a random symmetric
  // block on the surviving active set.
  std::vector<double> values(static_cast<std::size_t>(m) * m, 0.0);
  for (int i = 0; i < m; ++i)
    values[static_cast<std::size_t>(i) * m + i] = 1.0 + rng.uniform();
  for (std::size_t a = 0; a < p.graph.core_set.size(); ++a)
    for (std::size_t b = a + 1; b < p.graph.core_set.size(); ++b) {
      int i = p.graph.core_set[a], j = p.graph.core_set[b];
      double v = rng.gaussian();
      values[static_cast<std::size_t>(i) * m + j] = v;
      values[static_cast<std::size_t>(j) * m + i] = v;
    }
  p.core = SymMatrix::unchecked(m, std::move(values));
  p.matrix = reconstruct(p.graph, p.core);
  return p;
}

// Level error by brute force: embed the rotation, conjugate the full matrix,
// and sum the squared wavelet-row entries against the rest of the active set.
inline double level_error_dense(const SymMatrix& c, const std::vector<int>& active,
                                const KPointRotation& rot, int wavelet) {
  const int m = c.dim();
  std::vector<double> q = embed_dense(rot, m);
  std::vector<double> cvals(c.values().begin(), c.values().end());
  std::vector<double> rotated = dense_conjugate(q, cvals, m);
  double sum = 0.0;
  for (int j : active) {
    if (j == wavelet) continue;
    double v = rotated[static_cast<std::size_t>(wavelet) * m + j];
    sum += v * v;
  }
  return 2.0 * sum;
}

inline double rel_gap(double a, double b, double scale) {
  return std::abs(a - b) / std::max(scale, 1e-300);
}

// ---------------------------------------------------------------------------
// Independent enumerator for the k = 2 eigen-rotation variant. Everything is
// recomputed from scratch: closed-form Givens angles, eigenvalue ordering by
// the quadratic formula, errors by dense embedded conjugation, and the
// documented tie-break (error, sorted pair, wavelet index). The only thing it
// shares with the library is the published contract.

struct BrutePairChoice {
  int low = -1, high = -1;  // sorted pair
  int wavelet = -1;
  double error = 0.0;
  SmallMatrix rotation;  // rows: descending-eigenvalue eigenvectors
};

inline SmallMatrix closed_form_pair_rotation(double app, double aqq, double apq) {
  SmallMatrix o(2);
  double cs = 1.0, sn = 0.0;
  if (apq != 0.0) {
    double theta = 0.5 * (app - aqq) / apq;
    double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
    cs = 1.0 / std::sqrt(1.0 + t * t);
    sn = t * cs;
  }
  // Rows [cs sn; -sn cs] diagonalize [[app apq],[apq aqq]]; put the larger
  // eigenvalue's eigenvector first, matching the published ordering.
  double lam0 = cs * cs * app + 2.0 * cs * sn * apq + sn * sn * aqq;
  double lam1 = sn * sn * app - 2.0 * cs * sn * apq + cs * cs * aqq;
  if (lam0 >= lam1) {
    o(0, 0) = cs;
    o(0, 1) = sn;
    o(1, 0) = -sn;
    o(1, 1) = cs;
  } else {
    o(0, 0) = -sn;
    o(0, 1) = cs;
    o(1, 0) = cs;
    o(1, 1) = sn;
  }
  return o;
}

inline BrutePairChoice brute_force_pair_level(const SymMatrix& c,
                                              const std::vector<int>& active) {
  const int m = c.dim();
  BrutePairChoice best;
  bool have = false;
  for (std::size_t a = 0; a < active.size(); ++a) {
    for (std::size_t b = a + 1; b < active.size(); ++b) {
      int p = active[a], q = active[b];
      SmallMatrix o = closed_form_pair_rotation(c(p, p), c(q, q), c(p, q));
      KPointRotation rot({p, q}, o);
      // Eigen-rotation contract: the within-pair coupling is zero by
      // construction, so only the couplings to the rest of the active set
      // count. Computed through the dense embedded conjugation.
      std::vector<double> qdense = embed_dense(rot, m);
      std::vector<double> cvals(c.values().begin(), c.values().end());
      std::vector<double> rotated = dense_conjugate(qdense, cvals, m);
      for (int pos = 0; pos < 2; ++pos) {
        int wavelet = pos == 0 ? p : q;
        double err = 0.0;
        for (int j : active) {
          if (j == p || j == q) continue;
          double v = rotated[static_cast<std::size_t>(wavelet) * m + j];
          err += 2.0 * v * v;
        }
        bool better = false;
        if (!have) {
          better = true;
        } else if (err != best.error) {
          better = err < best.error;
        } else if (p != best.low || q != best.high) {
          better = std::pair(p, q) < std::pair(best.low, best.high);
        } else {
          better = wavelet < best.wavelet;
        }
        if (better) {
          best = {p, q, wavelet, err, o};
          have = true;
        }
      }
    }
  }
  return best;
}

struct BruteLevel {
  std::vector<int> pair;  // sorted
  int wavelet;
};

// Full greedy run of the independent enumerator; the compression is advanced
// by dense conjugation of the embedded rotation.
inline std::vector<BruteLevel> brute_force_pair_mmf(const SymMatrix& c, int depth) {
  const int m = c.dim();
  std::vector<double> work(c.values().begin(), c.values().end());
  std::vector<int> active(m);
  for (int i = 0; i < m; ++i) active[i] = i;
  std::vector<BruteLevel> out;
  for (int l = 0; l < depth; ++l) {
    SymMatrix current = SymMatrix::unchecked(m, work);
    BrutePairChoice choice = brute_force_pair_level(current, active);
    out.push_back({{choice.low, choice.high}, choice.wavelet});
    std::vector<double> q = embed_dense(KPointRotation({choice.low, choice.high}, choice.rotation), m);
    work = dense_conjugate(q, work, m);
    active.erase(std::find(active.begin(), active.end(), choice.wavelet));
  }
  return out;
}

}  // namespace testsupport
