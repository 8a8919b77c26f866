#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmf/linalg.hpp"
#include "mmf/sym_matrix.hpp"

namespace mmf {

enum class Variant { kExhaustive, kEigen, kCorrelationGreedy };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

/// Factorization parameters. `levels < 0` means the maximum depth m - k + 1.
struct MmfConfig {
  int k = 2;
  int levels = -1;
  Variant variant = Variant::kExhaustive;
  int dict_size = 50;
  std::uint64_t seed = 0;
  double init_fraction = 0.1;
  double sym_tol = kDefaultSymTol;
  double orth_tol = kDefaultOrthTol;
  // Correlation scoring direction: false picks the largest absolute
  // normalized inner products, true the smallest signed ones.
  bool signed_correlation = false;
  // 0 scans every seed row deterministically; otherwise that many sampled rows.
  int s1_samples = 0;
  // Appended-level tuple cap before falling back to correlation pairing.
  std::size_t final_level_budget = 20000;
  bool shuffle_insert_order = false;
  // Cross-checks the insertion bookkeeping at every level.
  bool check_bookkeeping = true;

  int resolved_levels(int m) const;
  void validate(int m) const;
};

/// One factorization level: k-tuple with the wavelet stored last, the
/// rotation block aligned with the tuple order, and the error contribution
/// recorded at selection time.
struct LevelRecord {
  std::vector<int> tuple;
  int wavelet = -1;
  KPointRotation rotation;
  double level_error = 0.0;
};

struct MmfGraph {
  int m = 0;
  int k = 0;
  std::vector<LevelRecord> levels;
  std::vector<int> core_set;  // sorted final active set

  int depth() const { return static_cast<int>(levels.size()); }
};

/// Checks nesting, membership and cardinality of the level structure
/// independently of any matrix. Throws InvalidInputError on violation.
void validate_graph(const MmfGraph& graph);

/// Active set after `level` levels (level 0 = all indices), sorted.
std::vector<int> active_set_at(const MmfGraph& graph, int level);

/// Replays the recorded rotations: C^L = Q^L ... Q^1 C Q^1^T ... Q^L^T.
SymMatrix compress(const SymMatrix& c, const MmfGraph& graph);

/// Applies per-level errors for a fixed level structure to a matrix, as if
/// the graph had been produced from it: returns the per-level error values
/// and the final compression. Used to evaluate a known structure on new data.
struct ReplayResult {
  std::vector<double> level_errors;
  SymMatrix compression;
};
ReplayResult replay_graph(const SymMatrix& c, const MmfGraph& graph);

/// Q^T R Q with R the core-diagonal truncation of the final compression.
SymMatrix reconstruct(const MmfGraph& graph, const SymMatrix& c_final);

struct ErrorReport {
  double frob_error = 0.0;           // ||C - reconstruct||_Frob
  std::vector<double> per_level;     // recorded level errors
  double off_core_sqnorm = 0.0;      // off-core-diagonal mass of C^L
};

/// Recomputes the factorization error by direct subtraction and returns the
/// recorded per-level decomposition alongside it.
ErrorReport factorization_error(const SymMatrix& c, const MmfGraph& graph);

/// Euclidean norm of each row of C - reconstruct(graph).
std::vector<double> residual_row_norms(const SymMatrix& c, const MmfGraph& graph);

/// Rewrites all graph indices through `mapping` (mapping[i] = new index of i).
MmfGraph relabel_graph(const MmfGraph& graph, std::span<const int> mapping);

}  // namespace mmf
