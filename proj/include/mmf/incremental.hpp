#pragma once

#include <span>
#include <vector>

#include "mmf/batch.hpp"
#include "mmf/model.hpp"

namespace mmf {

/// Candidate tuples for one level of a row insertion. `t_hat` is the old
/// level's tuple (order preserved), `insert_set` the indices active in the
/// new factorization but absent from the old one at this level, and `stale`
/// the t_hat members that are no longer active. Every stale slot is filled
/// with insert-set elements (mandatory substitutions); each filling is then
/// emitted as-is plus with every single extra swap of an unused insert-set
/// element for a surviving t_hat member. In the nominal single-insert case
/// this is the old tuple plus its k single swaps.
std::vector<CandidateTuple> generate_tuples(std::span<const int> t_hat,
                                            std::span<const int> insert_set,
                                            std::span<const int> stale);

struct InsertionStats {
  long levels_checked = 0;
  long nominal_levels = 0;  // levels entered with a single-element insert set
  long bookkeeping_violations = 0;
};

struct CheckInsertResult {
  LevelChoice choice;
  std::vector<int> insert_next;
};

/// One level of the insertion pass: re-optimizes the old level's choice on
/// the extended compression over the generated candidates and updates the
/// insert set. When the chosen wavelet is an old scaling index the insert
/// set grows and the retired index is handled as stale by later levels.
CheckInsertResult check_insert(const SymMatrix& a, std::span<const int> active,
                               std::span<const int> t_hat, int s_hat,
                               std::span<const int> insert_set, const MmfConfig& config,
                               Rng& rng);

struct InsertResult {
  MmfGraph graph;
  SymMatrix compression;
  InsertionStats stats;
};

/// Extends an L-level factorization of C to an (L+1)-level factorization of
/// the (m+1)-dimensional matrix bordered by `w` (the new column stacked with
/// its diagonal entry). Old levels are revisited in order; one new level is
/// appended by exhaustive search over the remaining active set, falling back
/// to correlation pairing past `config.final_level_budget` tuples.
InsertResult insert_row(const SymMatrix& c, std::span<const double> w, const MmfGraph& graph,
                        const MmfConfig& config, Rng& rng);

InsertResult insert_row(const SymMatrix& c, std::span<const double> w, const MmfGraph& graph,
                        const MmfConfig& config);

/// Batch-factorizes a leading block of round(init_fraction * m) rows (at
/// least k), then streams the remaining rows in one at a time.
InsertResult incremental_mmf(const SymMatrix& c, const MmfConfig& config);

}  // namespace mmf
