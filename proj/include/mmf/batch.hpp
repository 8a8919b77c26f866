#pragma once

#include <span>
#include <vector>

#include "mmf/linalg.hpp"
#include "mmf/model.hpp"
#include "mmf/random.hpp"
#include "mmf/sym_matrix.hpp"

namespace mmf {

enum class RotationMode { kDictionary, kEigen, kBoth };

enum class TupleProvenance { kExhaustive, kCorrelation, kSwapIn, kOldGraph };

struct CandidateTuple {
  std::vector<int> indices;
  TupleProvenance provenance = TupleProvenance::kExhaustive;
};

/// A selected level before it is committed to the graph. The tuple is
/// canonical (wavelet last) and the block is aligned with it.
struct LevelChoice {
  std::vector<int> tuple;
  int wavelet = -1;
  SmallMatrix block;
  double error = 0.0;
};

/// Deterministic preference order: smaller error, then lexicographically
/// smaller sorted tuple, then smaller wavelet index.
bool choice_better(const LevelChoice& a, const LevelChoice& b);

/// Error contribution of retiring the last tuple element under rotation
/// block `o`: twice the squared off-diagonal wavelet row of o*C_tt*o^T plus
/// twice the wavelet diagonal of o*B*B^T*o^T, with B the tuple rows against
/// the rest of the active set.
double level_error(const SymMatrix& c, std::span<const int> active, const SmallMatrix& o,
                   std::span<const int> tuple_wavelet_last,
                   double orth_tol = kDefaultOrthTol);

/// Optimizes the rotation for one tuple: dictionary candidates, the
/// eigenvector rotation of C_tt, or both, each under every wavelet
/// assignment. For the eigenvector rotation the within-tuple term is zero by
/// construction, so wavelet selection reduces to the B-block diagonal.
LevelChoice best_rotation_for_tuple(const SymMatrix& c, std::span<const int> active,
                                    std::span<const int> tuple, RotationMode mode,
                                    std::span<const SmallMatrix> dictionary,
                                    double sym_tol = kDefaultSymTol);

LevelChoice best_rotation_for_tuple(const SymMatrix& c, std::span<const int> active,
                                    std::span<const int> tuple, RotationMode mode, int dict_size,
                                    Rng& rng, double sym_tol = kDefaultSymTol);

/// Rotation search with the retiring coordinate pinned to `wavelet_pos` in
/// the tuple. Candidate rotations are row-permuted so that any of their
/// directions can retire at that slot, which reaches the same error minima
/// as the free search while keeping the wavelet index fixed. This is the
/// slot-inheritance rule of the insertion pass: the old wavelet's position
/// keeps the retirement role. `preferred` rotations (typically the level's
/// previous block) are evaluated first and win ties, so unchanged structure
/// is carried over rather than resampled.
LevelChoice best_rotation_for_slot(const SymMatrix& c, std::span<const int> active,
                                   std::span<const int> tuple, int wavelet_pos,
                                   RotationMode mode, std::span<const SmallMatrix> dictionary,
                                   double sym_tol = kDefaultSymTol,
                                   std::span<const SmallMatrix> preferred = {});

/// Full scan over all k-subsets of the active set. `active` must be sorted.
LevelChoice exhaustive_level(const SymMatrix& c, std::span<const int> active, int k,
                             RotationMode mode, std::span<const SmallMatrix> dictionary,
                             double sym_tol = kDefaultSymTol);

LevelChoice exhaustive_level(const SymMatrix& c, std::span<const int> active, int k,
                             RotationMode mode, int dict_size, Rng& rng,
                             double sym_tol = kDefaultSymTol);

/// Picks the k-set around seed row s1 by normalized column inner products
/// restricted to active coordinates. Default keeps the k-1 largest absolute
/// correlations; signed mode keeps the k-1 smallest signed values. Zero-norm
/// columns score 0; ties break toward the smaller index. Returns a sorted set.
std::vector<int> correlation_tuple(const SymMatrix& c, std::span<const int> active, int s1,
                                   int k, bool signed_mode);

/// One correlation-greedy level: scans seed rows (all of them, or
/// `s1_samples` sampled ones), pairs each with its correlation tuple, and
/// optimizes rotations over dictionary plus eigenvector candidates.
LevelChoice correlation_level(const SymMatrix& c, std::span<const int> active,
                              const MmfConfig& config,
                              std::span<const SmallMatrix> dictionary, Rng& rng);

struct BatchResult {
  MmfGraph graph;
  SymMatrix compression;  // C^L
};

/// Greedy batch factorization with the configured variant.
BatchResult batch_mmf(const SymMatrix& c, const MmfConfig& config);

}  // namespace mmf
