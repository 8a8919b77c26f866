// Acceptance suite: runs every top-level criterion at its pinned tolerance
// and prints one pass/fail line per criterion. Exit code 0 only if all pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "mmf/analysis.hpp"
#include "mmf/batch.hpp"
#include "mmf/incremental.hpp"
#include "mmf/io.hpp"
#include "mmf/model.hpp"
#include "support.hpp"

using namespace mmf;
using namespace testsupport;
using clock_type = std::chrono::steady_clock;

namespace {

struct CriterionResult {
  bool pass = true;
  std::string detail;
};

double elapsed_seconds(clock_type::time_point start) {
  return std::chrono::duration<double>(clock_type::now() - start).count();
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(3);
  out << v;
  return out.str();
}

double identity_gap(const SymMatrix& c, const MmfGraph& graph) {
  ErrorReport report = factorization_error(c, graph);
  double sum = 0.0;
  for (double e : report.per_level) sum += e;
  double sq = report.frob_error * report.frob_error;
  double scale = std::max(c.frob_norm_sq(), 1e-300);
  return std::max(std::abs(sq - sum), std::abs(sq - report.off_core_sqnorm)) / scale;
}

SymMatrix corpus_matrix(int kind, int m, std::uint64_t seed) {
  switch (kind % 4) {
    case 0: {
      Rng rng(seed);
      return random_symmetric(m, rng);
    }
    case 1: {
      Rng rng(seed);
      return random_psd(m, rng);
    }
    case 2: {
      SyntheticParams params;
      params.depth = 3;
      return generate_synthetic(SyntheticKind::kHierarchicalBlock, m, params, seed);
    }
    default:
      return generate_synthetic(SyntheticKind::kDiagonal, m, {}, seed);
  }
}

// Criterion-4 corpus, shared with criterion 10.
struct FidelityCase {
  std::string name;
  SymMatrix matrix;
};

std::vector<FidelityCase> fidelity_corpus() {
  std::vector<FidelityCase> corpus;
  struct Hier {
    int m, depth;
    double base;
    std::uint64_t seed;
  };
  for (const Hier& h : std::initializer_list<Hier>{{30, 3, 0.3, 11},
                                                   {36, 3, 0.5, 12},
                                                   {42, 4, 0.3, 13},
                                                   {48, 4, 0.5, 14},
                                                   {54, 3, 0.3, 15},
                                                   {60, 4, 0.5, 16}}) {
    SyntheticParams params;
    params.depth = h.depth;
    params.base = h.base;
    corpus.push_back({"hier m=" + std::to_string(h.m) + " depth=" + std::to_string(h.depth) +
                          " base=" + fmt(h.base),
                      generate_synthetic(SyntheticKind::kHierarchicalBlock, h.m, params, h.seed)});
  }
  for (int m : {34, 46, 58})
    corpus.push_back({"random-psd m=" + std::to_string(m),
                      generate_synthetic(SyntheticKind::kRandomPsd, m, {}, 90 + m)});
  return corpus;
}

InsertionStats g_insertion_stats;  // aggregated by criterion 4, judged by criterion 10
long g_insertion_runs = 0;

// ---------------------------------------------------------------------------

CriterionResult criterion_error_identity() {
  auto start = clock_type::now();
  const int sizes[] = {6, 8, 10, 12, 14, 18, 24, 32, 40};
  CriterionResult result;
  int cases = 0;
  double worst = 0.0;
  for (int s = 0; s < 9; ++s) {
    for (int kind = 0; kind < 4; ++kind) {
      const int m = sizes[s];
      const int k = m <= 12 ? 4 : (m <= 24 ? 3 : 2);
      SymMatrix c = corpus_matrix(kind, m, 1000 + 10 * s + kind);
      for (int method = 0; method < 4; ++method) {
        MmfConfig config;
        config.k = k;
        config.seed = 17 + method;
        config.dict_size = 30;
        MmfGraph graph;
        if (method < 3) {
          config.variant = method == 0   ? Variant::kExhaustive
                           : method == 1 ? Variant::kEigen
                                         : Variant::kCorrelationGreedy;
          graph = batch_mmf(c, config).graph;
        } else {
          config.variant = Variant::kExhaustive;
          config.init_fraction = 0.25;
          graph = incremental_mmf(c, config).graph;
        }
        double gap = identity_gap(c, graph);
        worst = std::max(worst, gap);
        ++cases;
        if (gap > 1e-8) {
          result.pass = false;
          result.detail += " violation at m=" + std::to_string(m) + " kind=" +
                           std::to_string(kind) + " method=" + std::to_string(method);
        }
      }
    }
  }
  double secs = elapsed_seconds(start);
  if (secs > 120.0) result.pass = false;
  result.detail = std::to_string(cases) + " factorizations, worst rel gap " + fmt(worst) + ", " +
                  fmt(secs) + "s" + result.detail;
  return result;
}

CriterionResult criterion_exactness() {
  CriterionResult result;
  std::vector<double> vals(49, 0.0);
  for (int i = 0; i < 7; ++i) vals[i * 7 + i] = 1.0 + 0.5 * i;
  SymMatrix diag = SymMatrix::unchecked(7, vals);
  for (Variant variant : {Variant::kExhaustive, Variant::kEigen, Variant::kCorrelationGreedy}) {
    MmfConfig config;
    config.k = 3;
    config.variant = variant;
    config.dict_size = 20;
    double err = factorization_error(diag, batch_mmf(diag, config).graph).frob_error;
    if (err != 0.0) {
      result.pass = false;
      result.detail += " diagonal error " + fmt(err) + " under " + variant_name(variant);
    }
  }
  Rng rng(2);
  SymMatrix square = random_symmetric(4, rng);
  MmfConfig config;
  config.k = 4;
  config.levels = 1;
  config.variant = Variant::kEigen;
  double err = factorization_error(square, batch_mmf(square, config).graph).frob_error;
  if (err > 1e-8 * square.frob_norm()) {
    result.pass = false;
    result.detail += " m=k single level error " + fmt(err);
  }
  if (result.detail.empty())
    result.detail = "diagonal exact for all variants; m=k eigen level exact";
  return result;
}

CriterionResult criterion_pair_oracle() {
  CriterionResult result;
  int checked_levels = 0;
  for (int seed = 0; seed < 50; ++seed) {
    const int m = 4 + seed % 4;  // 4..7
    Rng rng(4000 + seed);
    SymMatrix c = random_symmetric(m, rng);
    MmfConfig config;
    config.k = 2;
    config.variant = Variant::kEigen;
    config.seed = seed;
    BatchResult run = batch_mmf(c, config);
    std::vector<BruteLevel> oracle = brute_force_pair_mmf(c, run.graph.depth());
    for (int l = 0; l < run.graph.depth(); ++l) {
      std::vector<int> got = run.graph.levels[l].tuple;
      std::sort(got.begin(), got.end());
      ++checked_levels;
      if (got != oracle[l].pair || run.graph.levels[l].wavelet != oracle[l].wavelet) {
        result.pass = false;
        result.detail += " mismatch seed=" + std::to_string(seed) + " level=" +
                         std::to_string(l + 1);
      }
    }
  }
  if (result.pass)
    result.detail = "50 seeded runs, " + std::to_string(checked_levels) +
                    " levels of (tuple, wavelet) choices match the independent enumerator";
  return result;
}

CriterionResult criterion_incremental_fidelity() {
  auto start = clock_type::now();
  CriterionResult result;
  g_insertion_stats = {};
  g_insertion_runs = 0;
  int cases = 0, failed = 0;
  double worst_ratio = 0.0;
  std::string lines;
  for (const FidelityCase& fc : fidelity_corpus()) {
    MmfConfig config;
    config.k = 3;
    config.variant = Variant::kExhaustive;
    config.dict_size = 50;
    config.seed = 7;
    double e_batch = factorization_error(fc.matrix, batch_mmf(fc.matrix, config).graph).frob_error;
    double bound = 0.05 * fc.matrix.frob_norm();
    for (double init : {0.1, 0.3, 0.5}) {
      MmfConfig ic = config;
      ic.init_fraction = init;
      InsertResult incr = incremental_mmf(fc.matrix, ic);
      g_insertion_stats.levels_checked += incr.stats.levels_checked;
      g_insertion_stats.nominal_levels += incr.stats.nominal_levels;
      g_insertion_stats.bookkeeping_violations += incr.stats.bookkeeping_violations;
      ++g_insertion_runs;
      double e_incr = factorization_error(fc.matrix, incr.graph).frob_error;
      double gap = e_incr - e_batch;
      double ratio = gap / bound;
      worst_ratio = std::max(worst_ratio, ratio);
      ++cases;
      if (gap > bound) {
        ++failed;
        result.pass = false;
        lines += "\n    over bound: " + fc.name + " init=" + fmt(init) + " gap=" + fmt(gap) +
                 " bound=" + fmt(bound) + " (" + fmt(ratio) + "x)";
      }
    }
  }
  double secs = elapsed_seconds(start);
  if (secs > 600.0) result.pass = false;
  result.detail = std::to_string(cases - failed) + "/" + std::to_string(cases) +
                  " cases within 0.05*norm, worst " + fmt(worst_ratio) + "x bound, " + fmt(secs) +
                  "s" + lines;
  return result;
}

CriterionResult criterion_incremental_speed() {
  CriterionResult result;
  SyntheticParams params;
  params.depth = 4;
  SymMatrix c = generate_synthetic(SyntheticKind::kHierarchicalBlock, 60, params, 21);
  MmfConfig config;
  config.k = 3;
  config.variant = Variant::kExhaustive;
  config.dict_size = 50;
  config.seed = 5;

  auto t0 = clock_type::now();
  BatchResult batch = batch_mmf(c, config);
  double batch_secs = elapsed_seconds(t0);

  config.init_fraction = 0.1;
  auto t1 = clock_type::now();
  InsertResult incr = incremental_mmf(c, config);
  double incr_secs = elapsed_seconds(t1);
  (void)batch;
  (void)incr;

  double ratio = incr_secs / batch_secs;
  result.pass = ratio <= 0.5;
  result.detail = "m=60 k=3: batch " + fmt(batch_secs) + "s, incremental " + fmt(incr_secs) +
                  "s, ratio " + fmt(ratio) + " (speed-up " + fmt(1.0 / ratio) + "x)";
  return result;
}

CriterionResult criterion_candidate_dominance() {
  CriterionResult result;
  int levels = 0;
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(5000 + seed);
    SymMatrix work = random_symmetric(9, rng);
    std::vector<int> active(9);
    for (int i = 0; i < 9; ++i) active[i] = i;
    Rng dict_rng(seed);
    for (int level = 0; level < 4; ++level) {
      std::vector<SmallMatrix> dict = sample_dictionary(3, 20, dict_rng);
      LevelChoice both = exhaustive_level(work, active, 3, RotationMode::kBoth, dict);
      LevelChoice eigen = exhaustive_level(work, active, 3, RotationMode::kEigen, {});
      std::vector<int> first{active[0], active[1], active[2]};
      LevelChoice single =
          best_rotation_for_tuple(work, active, first, RotationMode::kEigen, {});
      ++levels;
      if (!(both.error <= eigen.error && eigen.error <= single.error)) {
        result.pass = false;
        result.detail += " violated at seed=" + std::to_string(seed) + " level=" +
                         std::to_string(level + 1);
      }
      apply_rotation_inplace(work, KPointRotation(both.tuple, both.block));
      active.erase(std::find(active.begin(), active.end(), both.wavelet));
    }
  }
  if (result.pass)
    result.detail = "both <= eigen <= single-candidate held on " + std::to_string(levels) +
                    " levels across 20 instances";
  return result;
}

CriterionResult criterion_score_sanity() {
  CriterionResult result;
  int hits = 0;
  for (int seed = 0; seed < 50; ++seed) {
    Rng rng(3000 + seed);
    Planted p = build_planted(12, 3, 9, rng);
    int target = static_cast<int>(rng.below(12));
    SymMatrix noisy = p.matrix;
    double scale = 0.05 * p.matrix.frob_norm();
    for (int j = 0; j < 12; ++j) {
      double bump = scale * rng.gaussian();
      noisy.at(target, j) += bump;
      if (j != target) noisy.at(j, target) += bump;
    }
    ScoreVector sv = mmf_scores(noisy, p.graph);
    int argmax = static_cast<int>(
        std::max_element(sv.values.begin(), sv.values.end()) - sv.values.begin());
    if (argmax == target) ++hits;
  }
  if (hits != 50) result.pass = false;

  Rng rng(77);
  Planted clean = build_planted(10, 2, 6, rng);
  double max_score = 0.0;
  for (double v : mmf_scores(clean.matrix, clean.graph).values) max_score = std::max(max_score, v);
  if (max_score > 1e-8 * clean.matrix.frob_norm()) result.pass = false;
  result.detail = "spiked-row argmax correct on " + std::to_string(hits) +
                  "/50 seeds; exact factorization max score " + fmt(max_score);
  return result;
}

CriterionResult criterion_leverage_sum() {
  CriterionResult result;
  double worst = 0.0;
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(6000 + seed);
    const int m = 8 + seed % 5;
    SymMatrix c = random_psd(m, rng);
    const int r = 1 + seed % m;
    ScoreVector sv = leverage_scores(c, r);
    double sum = 0.0;
    for (double v : sv.values) sum += v;
    worst = std::max(worst, std::abs(sum - r));
  }
  result.pass = worst <= 1e-8;
  result.detail = "20 matrices, worst |sum - r| = " + fmt(worst);
  return result;
}

std::string run_command(const std::string& cmd, int* exit_code) {
  FILE* pipe = popen((cmd + " 2>/dev/null").c_str(), "r");
  if (!pipe) {
    *exit_code = -1;
    return "";
  }
  std::string out;
  char buffer[4096];
  std::size_t n;
  while ((n = fread(buffer, 1, sizeof(buffer), pipe)) > 0) out.append(buffer, n);
  int status = pclose(pipe);
  *exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

CriterionResult criterion_round_trips() {
  CriterionResult result;

  // Graph JSON byte identity.
  Rng rng(31);
  SymMatrix c = random_symmetric(8, rng);
  MmfConfig config;
  config.k = 3;
  config.variant = Variant::kExhaustive;
  config.dict_size = 15;
  config.seed = 9;
  BatchResult run = batch_mmf(c, config);
  GraphMeta meta;
  meta.variant = "exhaustive";
  meta.seed = 9;
  meta.frob_error = factorization_error(c, run.graph).frob_error;
  std::string text = graph_to_json(run.graph, meta);
  GraphDocument doc = graph_from_json(text);
  if (graph_to_json(doc.graph, doc.meta, doc.labels) != text) {
    result.pass = false;
    result.detail += " JSON round trip not byte-identical;";
  }

  // Matrix format load-save-load.
  double worst = 0.0;
  for (MatrixFormat fmt_kind : {MatrixFormat::kCsvDense, MatrixFormat::kMatrixMarketSymmetric}) {
    std::ostringstream out;
    save_matrix(out, c, fmt_kind);
    std::istringstream in(out.str());
    SymMatrix c2 = load_matrix(in, fmt_kind);
    std::ostringstream out2;
    save_matrix(out2, c2, fmt_kind);
    std::istringstream in2(out2.str());
    SymMatrix c3 = load_matrix(in2, fmt_kind);
    for (int i = 0; i < c.dim(); ++i)
      for (int j = 0; j < c.dim(); ++j) worst = std::max(worst, std::abs(c3(i, j) - c(i, j)));
  }
  if (worst > 1e-12) {
    result.pass = false;
    result.detail += " matrix round trip drift " + fmt(worst) + ";";
  }

  // CLI determinism.
  const char* cli = std::getenv("MMF_CLI");
  if (!cli) {
    result.pass = false;
    result.detail += " MMF_CLI unset, cannot check CLI determinism;";
  } else {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / ("mmf_acc_" + std::to_string(getpid()));
    fs::create_directories(dir);
    fs::path mat = dir / "m.csv";
    int code = 0;
    std::string cli_s(cli);
    run_command(cli_s + " gen --kind hierarchical-block --size 16 --depth 3 --seed 5 --output " +
                    mat.string(),
                &code);
    std::string factor_cmd =
        cli_s + " factor --input " + mat.string() + " --order 3 --dict-size 20 --seed 11";
    int c1 = 0, c2 = 0;
    std::string out1 = run_command(factor_cmd, &c1);
    std::string out2 = run_command(factor_cmd, &c2);
    std::string gen_cmd = cli_s + " gen --kind random-psd --size 10 --seed 3";
    int g1 = 0, g2 = 0;
    std::string genout1 = run_command(gen_cmd, &g1);
    std::string genout2 = run_command(gen_cmd, &g2);
    if (c1 != 0 || c2 != 0 || out1.empty() || out1 != out2 || g1 != 0 || genout1 != genout2) {
      result.pass = false;
      result.detail += " CLI outputs differ between identical runs;";
    }
    fs::remove_all(dir);
  }
  if (result.detail.empty())
    result.detail = "JSON byte-identical; formats exact; CLI byte-deterministic";
  return result;
}

CriterionResult criterion_bookkeeping() {
  CriterionResult result;
  if (g_insertion_runs == 0 || g_insertion_stats.levels_checked == 0) {
    result.pass = false;
    result.detail = "no insertion runs recorded (criterion 4 must run first)";
    return result;
  }
  result.pass = g_insertion_stats.bookkeeping_violations == 0;
  double nominal = static_cast<double>(g_insertion_stats.nominal_levels) /
                   static_cast<double>(g_insertion_stats.levels_checked);
  result.detail = std::to_string(g_insertion_stats.levels_checked) +
                  " instrumented levels across " + std::to_string(g_insertion_runs) +
                  " runs, " + std::to_string(g_insertion_stats.bookkeeping_violations) +
                  " violations, nominal |z|=1 fraction " + fmt(nominal);
  return result;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);

  struct Entry {
    int id;
    const char* name;
    CriterionResult (*fn)();
  };
  const Entry entries[] = {
      {1, "error-identity master check", criterion_error_identity},
      {2, "exactness boundaries", criterion_exactness},
      {3, "pair-enumerator oracle equivalence", criterion_pair_oracle},
      {4, "incremental fidelity vs exhaustive batch", criterion_incremental_fidelity},
      {5, "incremental speed", criterion_incremental_speed},
      {6, "candidate dominance", criterion_candidate_dominance},
      {7, "score sanity", criterion_score_sanity},
      {8, "leverage sum identity", criterion_leverage_sum},
      {9, "format round trips and CLI determinism", criterion_round_trips},
      {10, "insertion bookkeeping", criterion_bookkeeping},
  };

  bool all_pass = true;
  for (const Entry& entry : entries) {
    // Criterion 10 judges the instrumentation gathered by criterion 4.
    if (only != 0 && entry.id != only && !(entry.id == 4 && only == 10)) continue;
    CriterionResult result = entry.fn();
    if (only != 0 && entry.id != only) continue;
    std::cout << (result.pass ? "[PASS]" : "[FAIL]") << " criterion " << entry.id << " ("
              << entry.name << "): " << result.detail << std::endl;
    if (!result.pass) all_pass = false;
  }
  return all_pass ? 0 : 1;
}
