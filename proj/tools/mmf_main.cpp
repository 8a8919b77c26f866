#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "mmf/analysis.hpp"
#include "mmf/batch.hpp"
#include "mmf/common.hpp"
#include "mmf/incremental.hpp"
#include "mmf/io.hpp"
#include "mmf/model.hpp"

namespace {

using namespace mmf;

struct MatrixInput {
  std::string path = "-";
  std::string format = "csv";
  bool symmetrize = false;
};

SymMatrix read_matrix(const MatrixInput& in, double sym_tol = kDefaultSymTol) {
  LoadOptions opts;
  opts.sym_tol = sym_tol;
  opts.symmetrize = in.symmetrize;
  MatrixFormat fmt = matrix_format_from_name(in.format);
  if (in.path == "-") return load_matrix(std::cin, fmt, opts);
  return load_matrix_file(in.path, fmt, opts);
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) throw InvalidInputError("cannot write file '" + path + "'");
  out << content;
}

void add_matrix_flags(CLI::App* cmd, MatrixInput& in) {
  cmd->add_option("--input", in.path, "matrix file, or - for stdin")->capture_default_str();
  cmd->add_option("--format", in.format, "csv or matrix-market")->capture_default_str();
  cmd->add_flag("--symmetrize", in.symmetrize, "average away small asymmetries");
}

struct LevelsOption {
  std::string text = "max";
  int resolve() const {
    if (text == "max") return -1;
    int v = std::stoi(text);
    if (v < 1) throw InvalidInputError("--levels must be a positive integer or 'max'");
    return v;
  }
};

void add_config_flags(CLI::App* cmd, MmfConfig& config, LevelsOption& levels,
                      std::string& variant) {
  cmd->add_option("--order", config.k, "rotation order k")->capture_default_str();
  cmd->add_option("--levels", levels.text, "level count, or 'max'")->capture_default_str();
  cmd->add_option("--variant", variant, "exhaustive, eigen or greedy")->capture_default_str();
  cmd->add_option("--dict-size", config.dict_size, "rotations sampled per level")
      ->capture_default_str();
  cmd->add_option("--seed", config.seed, "random seed")->capture_default_str();
  cmd->add_flag("--signed-correlation", config.signed_correlation,
                "pick smallest signed correlations instead of largest absolute");
  cmd->add_option("--s1-samples", config.s1_samples,
                  "sampled seed rows per greedy level (0 = scan all)")
      ->capture_default_str();
}

GraphMeta make_meta(const MmfConfig& config, double frob_error, bool incremental) {
  GraphMeta meta;
  meta.variant = variant_name(config.variant);
  meta.seed = config.seed;
  meta.init_fraction = incremental ? config.init_fraction : 0.0;
  meta.frob_error = frob_error;
  return meta;
}

std::vector<double> read_row_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open file '" + path + "'");
  std::vector<double> values;
  std::string token;
  std::string line;
  while (std::getline(in, line)) {
    for (char& c : line)
      if (c == ',') c = ' ';
    std::istringstream row(line);
    while (row >> token) {
      try {
        std::size_t used = 0;
        double v = std::stod(token, &used);
        if (used != token.size() || !std::isfinite(v)) throw std::invalid_argument(token);
        values.push_back(v);
      } catch (const std::exception&) {
        throw InvalidInputError(path + ": cannot parse '" + token + "' as a number");
      }
    }
  }
  if (values.empty()) throw InvalidInputError(path + ": row file is empty");
  return values;
}

int run(int argc, char** argv) {
  CLI::App app{"multiresolution matrix factorization toolkit"};
  app.require_subcommand(1);

  // factor
  auto* factor = app.add_subcommand("factor", "batch factorization");
  MatrixInput factor_in;
  MmfConfig factor_cfg;
  LevelsOption factor_levels;
  std::string factor_variant = "exhaustive";
  std::string factor_out;
  add_matrix_flags(factor, factor_in);
  add_config_flags(factor, factor_cfg, factor_levels, factor_variant);
  factor->add_option("--output", factor_out, "graph JSON destination (default stdout)");

  // incremental
  auto* incr = app.add_subcommand("incremental", "streaming factorization");
  MatrixInput incr_in;
  MmfConfig incr_cfg;
  LevelsOption incr_levels;
  std::string incr_variant = "exhaustive";
  std::string incr_out;
  std::string insert_order = "natural";
  add_matrix_flags(incr, incr_in);
  add_config_flags(incr, incr_cfg, incr_levels, incr_variant);
  incr->add_option("--init-frac", incr_cfg.init_fraction, "warm-start fraction of rows")
      ->capture_default_str();
  incr->add_option("--insert-order", insert_order, "natural or shuffle")->capture_default_str();
  incr->add_option("--output", incr_out, "graph JSON destination (default stdout)");

  // insert
  auto* insert = app.add_subcommand("insert", "extend a saved graph by one row");
  MatrixInput insert_in;
  std::string insert_graph, insert_row_path, insert_out, insert_variant;
  MmfConfig insert_cfg;
  bool insert_has_seed = false;
  add_matrix_flags(insert, insert_in);
  insert->add_option("--graph", insert_graph, "existing graph JSON")->required();
  insert->add_option("--row", insert_row_path, "file with the m+1 entries of the new row")
      ->required();
  insert->add_option("--variant", insert_variant, "rotation search mode (default: graph meta)");
  insert->add_option("--dict-size", insert_cfg.dict_size)->capture_default_str();
  insert
      ->add_option_function<std::uint64_t>(
          "--seed",
          [&](std::uint64_t s) {
            insert_cfg.seed = s;
            insert_has_seed = true;
          },
          "random seed (default: graph meta)");
  insert->add_option("--output", insert_out, "graph JSON destination (default stdout)");

  // scores
  auto* scores = app.add_subcommand("scores", "residual row-norm importance scores");
  MatrixInput scores_in;
  std::string scores_graph, scores_out;
  add_matrix_flags(scores, scores_in);
  scores->add_option("--graph", scores_graph, "graph JSON")->required();
  scores->add_option("--output", scores_out, "CSV destination (default stdout)");

  // leverage
  auto* leverage = app.add_subcommand("leverage", "statistical leverage scores");
  MatrixInput lev_in;
  int lev_rank = 0;
  std::string lev_out;
  add_matrix_flags(leverage, lev_in);
  leverage->add_option("--rank", lev_rank, "eigenvector count (default ceil(0.1 m))");
  leverage->add_option("--output", lev_out, "CSV destination (default stdout)");

  // select
  auto* select = app.add_subcommand("select", "pick indices by score");
  std::string select_scores, select_mode = "top", select_out;
  double select_fraction = 0.1;
  std::uint64_t select_seed = 0;
  select->add_option("--scores", select_scores, "score CSV")->required();
  select->add_option("--fraction", select_fraction, "fraction of indices to keep")
      ->capture_default_str();
  select->add_option("--mode", select_mode, "top or sample")->capture_default_str();
  select->add_option("--seed", select_seed, "seed for sample mode")->capture_default_str();
  select->add_option("--output", select_out, "destination (default stdout)");

  // export-dot
  auto* exportdot = app.add_subcommand("export-dot", "Graphviz rendering of a graph");
  std::string dot_graph, dot_out;
  exportdot->add_option("--graph", dot_graph, "graph JSON")->required();
  exportdot->add_option("--output", dot_out, "dot destination (default stdout)");

  // compare
  auto* compare = app.add_subcommand("compare", "batch variants vs incremental");
  MatrixInput cmp_in;
  MmfConfig cmp_cfg;
  LevelsOption cmp_levels;
  std::string cmp_out;
  add_matrix_flags(compare, cmp_in);
  compare->add_option("--order", cmp_cfg.k, "rotation order k")->capture_default_str();
  compare->add_option("--levels", cmp_levels.text, "level count, or 'max'")->capture_default_str();
  compare->add_option("--dict-size", cmp_cfg.dict_size)->capture_default_str();
  compare->add_option("--seed", cmp_cfg.seed)->capture_default_str();
  compare->add_option("--init-frac", cmp_cfg.init_fraction)->capture_default_str();
  compare->add_option("--output", cmp_out, "CSV destination (default stdout)");

  // gen
  auto* gen = app.add_subcommand("gen", "synthetic symmetric matrices");
  std::string gen_kind = "hierarchical-block", gen_format = "csv", gen_out;
  int gen_size = 16;
  std::uint64_t gen_seed = 0;
  SyntheticParams gen_params;
  gen->add_option("--kind", gen_kind, "hierarchical-block, random-psd or diagonal")
      ->capture_default_str();
  gen->add_option("--size", gen_size, "dimension m")->capture_default_str();
  gen->add_option("--seed", gen_seed, "random seed")->capture_default_str();
  gen->add_option("--depth", gen_params.depth, "partition depth")->capture_default_str();
  gen->add_option("--base", gen_params.base, "block decay base in (0,1)")->capture_default_str();
  gen->add_option("--diag-boost", gen_params.diag_boost, "added to the diagonal")
      ->capture_default_str();
  gen->add_option("--format", gen_format, "csv or matrix-market")->capture_default_str();
  gen->add_option("--output", gen_out, "destination (default stdout)");

  // cov
  auto* cov = app.add_subcommand("cov", "sample covariance of an observation table");
  std::string cov_data, cov_out, cov_format = "csv";
  bool cov_no_center = false;
  cov->add_option("--data", cov_data, "CSV of n x d observations")->required();
  cov->add_flag("--no-center", cov_no_center, "skip column centering");
  cov->add_option("--format", cov_format, "csv or matrix-market")->capture_default_str();
  cov->add_option("--output", cov_out, "destination (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*factor) {
    SymMatrix c = read_matrix(factor_in);
    factor_cfg.levels = factor_levels.resolve();
    factor_cfg.variant = variant_from_name(factor_variant);
    BatchResult result = batch_mmf(c, factor_cfg);
    ErrorReport report = factorization_error(c, result.graph);
    write_output(factor_out, graph_to_json(result.graph,
                                           make_meta(factor_cfg, report.frob_error, false),
                                           c.labels()));
  } else if (*incr) {
    SymMatrix c = read_matrix(incr_in);
    incr_cfg.levels = incr_levels.resolve();
    incr_cfg.variant = variant_from_name(incr_variant);
    if (insert_order == "shuffle")
      incr_cfg.shuffle_insert_order = true;
    else if (insert_order != "natural")
      throw InvalidInputError("--insert-order must be natural or shuffle");
    InsertResult result = incremental_mmf(c, incr_cfg);
    ErrorReport report = factorization_error(c, result.graph);
    write_output(incr_out, graph_to_json(result.graph,
                                         make_meta(incr_cfg, report.frob_error, true),
                                         c.labels()));
  } else if (*insert) {
    SymMatrix c = read_matrix(insert_in);
    GraphDocument doc = load_graph_file(insert_graph);
    insert_cfg.k = doc.graph.k;
    insert_cfg.variant =
        variant_from_name(insert_variant.empty() ? doc.meta.variant : insert_variant);
    if (!insert_has_seed) insert_cfg.seed = doc.meta.seed;
    std::vector<double> w = read_row_file(insert_row_path);
    InsertResult result = insert_row(c, w, doc.graph, insert_cfg);
    ErrorReport report;
    {
      // Rebuild the extended base to report the error of the new graph.
      std::vector<double> values(static_cast<std::size_t>(c.dim() + 1) * (c.dim() + 1));
      for (int i = 0; i < c.dim(); ++i) {
        for (int j = 0; j < c.dim(); ++j)
          values[static_cast<std::size_t>(i) * (c.dim() + 1) + j] = c(i, j);
        values[static_cast<std::size_t>(i) * (c.dim() + 1) + c.dim()] = w[i];
      }
      for (int j = 0; j <= c.dim(); ++j)
        values[static_cast<std::size_t>(c.dim()) * (c.dim() + 1) + j] = w[j];
      SymMatrix base = SymMatrix::unchecked(c.dim() + 1, std::move(values));
      report = factorization_error(base, result.graph);
    }
    GraphMeta meta = doc.meta;
    meta.variant = variant_name(insert_cfg.variant);
    meta.seed = insert_cfg.seed;
    meta.frob_error = report.frob_error;
    std::vector<std::string> labels = doc.labels;
    if (!labels.empty()) labels.push_back(std::to_string(c.dim()));
    write_output(insert_out, graph_to_json(result.graph, meta, labels));
  } else if (*scores) {
    SymMatrix c = read_matrix(scores_in);
    GraphDocument doc = load_graph_file(scores_graph);
    if (!doc.labels.empty() && c.labels().empty()) c.set_labels(doc.labels);
    ScoreVector sv = mmf_scores(c, doc.graph);
    write_output(scores_out, scores_to_csv(sv));
  } else if (*leverage) {
    SymMatrix c = read_matrix(lev_in);
    int rank = lev_rank > 0 ? lev_rank : static_cast<int>(std::ceil(0.1 * c.dim()));
    ScoreVector sv = leverage_scores(c, rank);
    write_output(lev_out, scores_to_csv(sv));
  } else if (*select) {
    std::ifstream in(select_scores);
    if (!in) throw InvalidInputError("cannot open file '" + select_scores + "'");
    ScoreVector sv = scores_from_csv(in);
    SelectMode mode;
    if (select_mode == "top")
      mode = SelectMode::kTop;
    else if (select_mode == "sample")
      mode = SelectMode::kSample;
    else
      throw InvalidInputError("--mode must be top or sample");
    Rng rng(select_seed);
    std::vector<int> picked = select_features(sv, select_fraction, mode, rng);
    std::ostringstream out;
    for (int idx : picked) out << idx << "\n";
    write_output(select_out, out.str());
  } else if (*exportdot) {
    GraphDocument doc = load_graph_file(dot_graph);
    write_output(dot_out, graph_to_dot(doc.graph, doc.labels));
  } else if (*compare) {
    SymMatrix c = read_matrix(cmp_in);
    cmp_cfg.levels = cmp_levels.resolve();
    std::ostringstream out;
    out << "method,frob_error,sum_level_errors,identity_rel_gap,seconds\n";
    const double scale = std::max(c.frob_norm_sq(), 1e-300);
    auto emit = [&](const std::string& name, const MmfGraph& graph, double seconds) {
      ErrorReport report = factorization_error(c, graph);
      double sum = 0.0;
      for (double e : report.per_level) sum += e;
      double sq = report.frob_error * report.frob_error;
      double gap = std::max(std::abs(sq - sum), std::abs(sq - report.off_core_sqnorm)) / scale;
      out << name << "," << format_double(report.frob_error) << "," << format_double(sum) << ","
          << format_double(gap) << "," << format_double(seconds) << "\n";
    };
    using clk = std::chrono::steady_clock;
    for (Variant variant : {Variant::kExhaustive, Variant::kEigen, Variant::kCorrelationGreedy}) {
      MmfConfig cfg = cmp_cfg;
      cfg.variant = variant;
      auto t0 = clk::now();
      BatchResult r = batch_mmf(c, cfg);
      double secs = std::chrono::duration<double>(clk::now() - t0).count();
      emit(variant_name(variant), r.graph, secs);
    }
    {
      MmfConfig cfg = cmp_cfg;
      cfg.variant = Variant::kExhaustive;
      auto t0 = clk::now();
      InsertResult r = incremental_mmf(c, cfg);
      double secs = std::chrono::duration<double>(clk::now() - t0).count();
      emit("incremental", r.graph, secs);
    }
    write_output(cmp_out, out.str());
  } else if (*gen) {
    SymMatrix c = generate_synthetic(synthetic_kind_from_name(gen_kind), gen_size, gen_params,
                                     gen_seed);
    std::ostringstream out;
    save_matrix(out, c, matrix_format_from_name(gen_format));
    write_output(gen_out, out.str());
  } else if (*cov) {
    SymMatrix c = covariance_from_data_file(cov_data, !cov_no_center);
    std::ostringstream out;
    save_matrix(out, c, matrix_format_from_name(cov_format));
    write_output(cov_out, out.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const mmf::InvalidInputError& e) {
    std::cerr << "data error: " << e.what() << std::endl;
    return 2;
  } catch (const mmf::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << std::endl;
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << std::endl;
    return 3;
  }
}
