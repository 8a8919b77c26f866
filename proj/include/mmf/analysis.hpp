#pragma once

#include <string>
#include <vector>

#include "mmf/model.hpp"
#include "mmf/random.hpp"
#include "mmf/sym_matrix.hpp"

namespace mmf {

enum class ScoreKind { kMmf, kLeverage };

struct ScoreVector {
  std::vector<double> values;
  std::vector<std::string> labels;
  ScoreKind kind = ScoreKind::kMmf;
};

/// Residual row norms ||(C - reconstruct(graph))_i||: how much of row i the
/// factorization cannot express through compositions of the other rows.
ScoreVector mmf_scores(const SymMatrix& c, const MmfGraph& graph);

/// Squared row norms of the top-r eigenvector matrix (marginal importance
/// baseline). Eigenvectors are ranked by eigenvalue with negative values
/// clipped to zero; the scores sum to r.
ScoreVector leverage_scores(const SymMatrix& c, int rank);

enum class SelectMode { kTop, kSample };

/// Picks ceil(fraction * m) indices: highest scores first (ties toward the
/// smaller index), or sampled without replacement proportionally to the
/// scores (uniform when all scores are zero).
std::vector<int> select_features(const ScoreVector& scores, double fraction, SelectMode mode,
                                 Rng& rng);

}  // namespace mmf
