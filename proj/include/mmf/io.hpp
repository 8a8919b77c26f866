#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mmf/analysis.hpp"
#include "mmf/model.hpp"
#include "mmf/sym_matrix.hpp"

namespace mmf {

enum class MatrixFormat { kCsvDense, kMatrixMarketSymmetric };

MatrixFormat matrix_format_from_name(const std::string& name);

struct LoadOptions {
  double sym_tol = kDefaultSymTol;
  bool symmetrize = false;
};

SymMatrix load_matrix(std::istream& in, MatrixFormat format, const LoadOptions& opts = {});
SymMatrix load_matrix_file(const std::string& path, MatrixFormat format,
                           const LoadOptions& opts = {});

void save_matrix(std::ostream& out, const SymMatrix& c, MatrixFormat format);
void save_matrix_file(const std::string& path, const SymMatrix& c, MatrixFormat format);

/// Sample covariance (1/(n-1)) X^T X of an n x d observation table, with
/// optional column centering. Column headers become labels.
SymMatrix covariance_from_data(std::istream& in, bool center);
SymMatrix covariance_from_data_file(const std::string& path, bool center);

enum class SyntheticKind { kHierarchicalBlock, kRandomPsd, kDiagonal };

SyntheticKind synthetic_kind_from_name(const std::string& name);

struct SyntheticParams {
  int depth = 3;          // hierarchical-block recursion depth
  double base = 0.5;      // within-block correlation base, in (0, 1)
  double diag_boost = 1.0;
};

/// Deterministic test matrices: nested-block covariances (block value decays
/// with the separation depth of a recursive two-way partition), Gram
/// matrices of Gaussian data, or random positive diagonals.
SymMatrix generate_synthetic(SyntheticKind kind, int m, const SyntheticParams& params,
                             std::uint64_t seed);

struct GraphMeta {
  std::string variant;
  std::uint64_t seed = 0;
  double init_fraction = 0.0;
  double frob_error = 0.0;
};

/// Canonical JSON for a graph: sorted keys, shortest round-trip floats,
/// 0-based indices, rotation blocks row-major. Serialize-parse-serialize is
/// byte-identical.
std::string graph_to_json(const MmfGraph& graph, const GraphMeta& meta,
                          const std::vector<std::string>& labels = {});

struct GraphDocument {
  MmfGraph graph;
  GraphMeta meta;
  std::vector<std::string> labels;
};

GraphDocument graph_from_json(const std::string& text);
GraphDocument load_graph_file(const std::string& path);
void save_graph_file(const std::string& path, const MmfGraph& graph, const GraphMeta& meta,
                     const std::vector<std::string>& labels = {});

/// Graphviz rendering: one rank per level, boxed tuple nodes, wavelet nodes
/// double-bordered with no outgoing edges, core nodes on the final rank.
std::string graph_to_dot(const MmfGraph& graph, const std::vector<std::string>& labels = {});

std::string scores_to_csv(const ScoreVector& scores);
ScoreVector scores_from_csv(std::istream& in);

}  // namespace mmf
