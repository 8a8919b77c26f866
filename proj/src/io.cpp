#include "mmf/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mmf/random.hpp"

namespace mmf {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return cells;
}

bool parse_double(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end && std::isfinite(out);
}

double parse_double_or_throw(const std::string& cell, const std::string& where) {
  double v;
  if (!parse_double(cell, v))
    throw InvalidInputError("cannot parse '" + cell + "' as a finite number at " + where);
  return v;
}

std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (!t.empty()) lines.push_back(t);
  }
  return lines;
}

std::ifstream open_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open file '" + path + "'");
  return in;
}

struct Table {
  std::vector<std::string> header;  // empty when no header row was present
  std::vector<std::vector<double>> rows;
};

Table read_csv_table(std::istream& in) {
  Table table;
  std::vector<std::string> lines = read_lines(in);
  if (lines.empty()) throw InvalidInputError("CSV input is empty");
  std::size_t columns = 0;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    std::vector<std::string> cells = split_csv_line(lines[r]);
    if (r == 0) {
      columns = cells.size();
      bool all_numeric = true;
      double v;
      for (const std::string& c : cells)
        if (!parse_double(c, v)) {
          all_numeric = false;
          break;
        }
      if (!all_numeric) {
        table.header = cells;
        continue;
      }
    }
    if (cells.size() != columns)
      throw InvalidInputError("CSV row " + std::to_string(r + 1) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(columns));
    std::vector<double> row;
    row.reserve(columns);
    for (std::size_t c = 0; c < cells.size(); ++c)
      row.push_back(parse_double_or_throw(
          cells[c], "row " + std::to_string(r + 1) + ", column " + std::to_string(c + 1)));
    table.rows.push_back(std::move(row));
  }
  if (table.rows.empty()) throw InvalidInputError("CSV input has a header but no data rows");
  return table;
}

SymMatrix load_csv_matrix(std::istream& in, const LoadOptions& opts) {
  Table table = read_csv_table(in);
  const std::size_t m = table.rows.size();
  if (table.rows[0].size() != m)
    throw InvalidInputError("matrix CSV is not square: " + std::to_string(m) + " rows by " +
                            std::to_string(table.rows[0].size()) + " columns");
  std::vector<double> values;
  values.reserve(m * m);
  for (const auto& row : table.rows) values.insert(values.end(), row.begin(), row.end());
  return SymMatrix::from_values(static_cast<int>(m), std::move(values), opts.sym_tol,
                                opts.symmetrize, table.header);
}

SymMatrix load_matrix_market(std::istream& in, const LoadOptions& opts) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInputError("matrix-market input is empty");
  std::istringstream header(line);
  std::string banner, object, fmt, field, symmetry;
  header >> banner >> object >> fmt >> field >> symmetry;
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
  };
  if (banner != "%%MatrixMarket" || lower(object) != "matrix" || lower(fmt) != "coordinate")
    throw InvalidInputError("expected a '%%MatrixMarket matrix coordinate' header, got '" + line +
                            "'");
  std::string f = lower(field), sym = lower(symmetry);
  if (f != "real" && f != "integer")
    throw InvalidInputError("unsupported matrix-market field '" + field + "'");
  if (sym != "symmetric")
    throw InvalidInputError("matrix-market symmetry must be 'symmetric', got '" + symmetry + "'");

  long rows = -1, cols = -1, nnz = -1;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '%') continue;
    std::istringstream sz(t);
    if (!(sz >> rows >> cols >> nnz))
      throw InvalidInputError("cannot parse matrix-market size line '" + t + "'");
    break;
  }
  if (rows < 1 || rows != cols)
    throw InvalidInputError("matrix-market size must be square and positive");
  const int m = static_cast<int>(rows);

  std::vector<double> values(static_cast<std::size_t>(m) * m, 0.0);
  std::vector<char> seen(static_cast<std::size_t>(m) * m, 0);
  long count = 0;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '%') continue;
    std::istringstream entry(t);
    long i, j;
    double v;
    if (!(entry >> i >> j >> v))
      throw InvalidInputError("cannot parse matrix-market entry '" + t + "'");
    if (!std::isfinite(v))
      throw InvalidInputError("non-finite matrix-market entry at (" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
    if (i < 1 || i > m || j < 1 || j > m)
      throw InvalidInputError("matrix-market entry (" + std::to_string(i) + "," +
                              std::to_string(j) + ") out of range");
    if (j > i)
      throw InvalidInputError("matrix-market entry (" + std::to_string(i) + "," +
                              std::to_string(j) +
                              ") lies above the diagonal; symmetric files store the lower triangle");
    std::size_t pos = static_cast<std::size_t>(i - 1) * m + (j - 1);
    if (seen[pos])
      throw InvalidInputError("duplicate matrix-market entry (" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
    seen[pos] = 1;
    values[pos] = v;
    values[static_cast<std::size_t>(j - 1) * m + (i - 1)] = v;
    ++count;
  }
  if (count != nnz)
    throw InvalidInputError("matrix-market file declares " + std::to_string(nnz) +
                            " entries but contains " + std::to_string(count));
  return SymMatrix::from_values(m, std::move(values), opts.sym_tol, opts.symmetrize);
}

}  // namespace

MatrixFormat matrix_format_from_name(const std::string& name) {
  if (name == "csv" || name == "csv-dense") return MatrixFormat::kCsvDense;
  if (name == "mm" || name == "matrix-market" || name == "matrix-market-symmetric")
    return MatrixFormat::kMatrixMarketSymmetric;
  throw InvalidInputError("unknown matrix format '" + name + "' (expected csv or matrix-market)");
}

SymMatrix load_matrix(std::istream& in, MatrixFormat format, const LoadOptions& opts) {
  return format == MatrixFormat::kCsvDense ? load_csv_matrix(in, opts)
                                           : load_matrix_market(in, opts);
}

SymMatrix load_matrix_file(const std::string& path, MatrixFormat format, const LoadOptions& opts) {
  std::ifstream in = open_file(path);
  try {
    return load_matrix(in, format, opts);
  } catch (const InvalidInputError& e) {
    throw InvalidInputError(path + ": " + e.what());
  }
}

void save_matrix(std::ostream& out, const SymMatrix& c, MatrixFormat format) {
  const int m = c.dim();
  if (format == MatrixFormat::kCsvDense) {
    if (!c.labels().empty()) {
      for (int j = 0; j < m; ++j) out << (j ? "," : "") << c.labels()[j];
      out << "\n";
    }
    for (int i = 0; i < m; ++i) {
      const double* row = c.row(i);
      for (int j = 0; j < m; ++j) out << (j ? "," : "") << format_double(row[j]);
      out << "\n";
    }
  } else {
    long nnz = 0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j <= i; ++j)
        if (c(i, j) != 0.0) ++nnz;
    out << "%%MatrixMarket matrix coordinate real symmetric\n";
    out << m << " " << m << " " << nnz << "\n";
    for (int i = 0; i < m; ++i)
      for (int j = 0; j <= i; ++j)
        if (c(i, j) != 0.0)
          out << (i + 1) << " " << (j + 1) << " " << format_double(c(i, j)) << "\n";
  }
}

void save_matrix_file(const std::string& path, const SymMatrix& c, MatrixFormat format) {
  std::ofstream out(path);
  if (!out) throw InvalidInputError("cannot write file '" + path + "'");
  save_matrix(out, c, format);
}

SymMatrix covariance_from_data(std::istream& in, bool center) {
  Table table = read_csv_table(in);
  const std::size_t n = table.rows.size();
  const std::size_t d = table.rows[0].size();
  if (n < 2)
    throw InvalidInputError("covariance needs at least 2 observation rows, got " +
                            std::to_string(n));
  std::vector<double> data;
  data.reserve(n * d);
  for (const auto& row : table.rows) data.insert(data.end(), row.begin(), row.end());
  if (center) {
    for (std::size_t c = 0; c < d; ++c) {
      double mean = 0.0;
      for (std::size_t r = 0; r < n; ++r) mean += data[r * d + c];
      mean /= static_cast<double>(n);
      for (std::size_t r = 0; r < n; ++r) data[r * d + c] -= mean;
    }
  }
  std::vector<double> values(d * d, 0.0);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      double sum = 0.0;
      for (std::size_t r = 0; r < n; ++r) sum += data[r * d + a] * data[r * d + b];
      sum /= static_cast<double>(n - 1);
      values[a * d + b] = sum;
      values[b * d + a] = sum;
    }
  return SymMatrix::unchecked(static_cast<int>(d), std::move(values), table.header);
}

SymMatrix covariance_from_data_file(const std::string& path, bool center) {
  std::ifstream in = open_file(path);
  try {
    return covariance_from_data(in, center);
  } catch (const InvalidInputError& e) {
    throw InvalidInputError(path + ": " + e.what());
  }
}

SyntheticKind synthetic_kind_from_name(const std::string& name) {
  if (name == "hierarchical-block") return SyntheticKind::kHierarchicalBlock;
  if (name == "random-psd") return SyntheticKind::kRandomPsd;
  if (name == "diagonal") return SyntheticKind::kDiagonal;
  throw InvalidInputError("unknown synthetic kind '" + name +
                          "' (expected hierarchical-block, random-psd or diagonal)");
}

namespace {

// Levels of recursive bisection before i and j part ways; 0 on the diagonal,
// 1 when they share the deepest block.
int block_distance(int i, int j, int m, int depth) {
  if (i == j) return 0;
  int lo = 0, hi = m;
  for (int split = 1; split <= depth; ++split) {
    if (hi - lo < 2) break;
    int mid = lo + (hi - lo + 1) / 2;
    bool i_left = i < mid, j_left = j < mid;
    if (i_left != j_left) return depth - split + 2;
    if (i_left)
      hi = mid;
    else
      lo = mid;
  }
  return 1;
}

}  // namespace

SymMatrix generate_synthetic(SyntheticKind kind, int m, const SyntheticParams& params,
                             std::uint64_t seed) {
  if (m < 2) throw InvalidInputError("synthetic matrix size must be at least 2");
  Rng rng(seed);
  std::vector<double> values(static_cast<std::size_t>(m) * m, 0.0);
  switch (kind) {
    case SyntheticKind::kHierarchicalBlock: {
      if (!(params.base > 0.0 && params.base < 1.0))
        throw InvalidInputError("hierarchical-block base must be in (0, 1)");
      if (params.depth < 0) throw InvalidInputError("hierarchical-block depth must be >= 0");
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          int dist = block_distance(i, j, m, params.depth);
          double v = std::pow(params.base, dist);
          if (i == j) v += params.diag_boost;
          values[static_cast<std::size_t>(i) * m + j] = v;
        }
      break;
    }
    case SyntheticKind::kRandomPsd: {
      std::vector<double> a(static_cast<std::size_t>(m) * m);
      for (double& v : a) v = rng.gaussian();
      for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j) {
          double sum = 0.0;
          for (int r = 0; r < m; ++r)
            sum += a[static_cast<std::size_t>(r) * m + i] * a[static_cast<std::size_t>(r) * m + j];
          values[static_cast<std::size_t>(i) * m + j] = sum;
          values[static_cast<std::size_t>(j) * m + i] = sum;
        }
      break;
    }
    case SyntheticKind::kDiagonal: {
      for (int i = 0; i < m; ++i)
        values[static_cast<std::size_t>(i) * m + i] = 0.5 + rng.uniform();
      break;
    }
  }
  return SymMatrix::unchecked(m, std::move(values));
}

std::string graph_to_json(const MmfGraph& graph, const GraphMeta& meta,
                          const std::vector<std::string>& labels) {
  json doc;
  doc["schema_version"] = "1";
  doc["m"] = graph.m;
  doc["k"] = graph.k;
  doc["L"] = graph.depth();
  json levels = json::array();
  for (int l = 0; l < graph.depth(); ++l) {
    const LevelRecord& rec = graph.levels[l];
    json level;
    level["level"] = l + 1;
    level["tuple"] = rec.tuple;
    level["wavelet"] = rec.wavelet;
    level["rotation"] = rec.rotation.block().to_rows();
    level["error"] = rec.level_error;
    levels.push_back(std::move(level));
  }
  doc["levels"] = std::move(levels);
  doc["core_set"] = graph.core_set;
  if (!labels.empty()) doc["labels"] = labels;
  json m;
  m["variant"] = meta.variant;
  m["seed"] = meta.seed;
  m["init_fraction"] = meta.init_fraction;
  m["frob_error"] = meta.frob_error;
  doc["meta"] = std::move(m);
  return doc.dump() + "\n";
}

GraphDocument graph_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidInputError(std::string("graph JSON parse failure: ") + e.what());
  }
  try {
    GraphDocument out;
    if (doc.at("schema_version").get<std::string>() != "1")
      throw InvalidInputError("unsupported graph schema_version");
    out.graph.m = doc.at("m").get<int>();
    out.graph.k = doc.at("k").get<int>();
    const int depth = doc.at("L").get<int>();
    const json& levels = doc.at("levels");
    if (static_cast<int>(levels.size()) != depth)
      throw InvalidInputError("graph declares L=" + std::to_string(depth) + " but has " +
                              std::to_string(levels.size()) + " levels");
    for (const json& level : levels) {
      LevelRecord rec;
      rec.tuple = level.at("tuple").get<std::vector<int>>();
      rec.wavelet = level.at("wavelet").get<int>();
      rec.level_error = level.at("error").get<double>();
      std::vector<double> rows = level.at("rotation").get<std::vector<double>>();
      rec.rotation =
          KPointRotation(rec.tuple, SmallMatrix::from_rows(out.graph.k, rows));
      out.graph.levels.push_back(std::move(rec));
    }
    out.graph.core_set = doc.at("core_set").get<std::vector<int>>();
    if (doc.contains("labels")) out.labels = doc.at("labels").get<std::vector<std::string>>();
    const json& meta = doc.at("meta");
    out.meta.variant = meta.at("variant").get<std::string>();
    out.meta.seed = meta.at("seed").get<std::uint64_t>();
    out.meta.init_fraction = meta.at("init_fraction").get<double>();
    out.meta.frob_error = meta.at("frob_error").get<double>();
    validate_graph(out.graph);
    return out;
  } catch (const json::exception& e) {
    throw InvalidInputError(std::string("graph JSON is malformed: ") + e.what());
  }
}

GraphDocument load_graph_file(const std::string& path) {
  std::ifstream in = open_file(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return graph_from_json(buffer.str());
  } catch (const InvalidInputError& e) {
    throw InvalidInputError(path + ": " + e.what());
  }
}

void save_graph_file(const std::string& path, const MmfGraph& graph, const GraphMeta& meta,
                     const std::vector<std::string>& labels) {
  std::ofstream out(path);
  if (!out) throw InvalidInputError("cannot write file '" + path + "'");
  out << graph_to_json(graph, meta, labels);
}

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string graph_to_dot(const MmfGraph& graph, const std::vector<std::string>& labels) {
  auto label_of = [&](int idx) {
    return idx < static_cast<int>(labels.size()) ? dot_escape(labels[idx]) : std::to_string(idx);
  };
  std::ostringstream out;
  out << "digraph mmf {\n  rankdir=TB;\n  node [shape=box];\n";
  for (int l = 0; l < graph.depth(); ++l) {
    const LevelRecord& rec = graph.levels[l];
    out << "  { rank=same;";
    for (int idx : rec.tuple) {
      out << " l" << (l + 1) << "_i" << idx << " [label=\"" << label_of(idx) << "\"";
      if (idx == rec.wavelet) out << ", peripheries=2";
      out << "];";
    }
    out << " }\n";
  }
  if (!graph.core_set.empty()) {
    out << "  { rank=same;";
    for (int idx : graph.core_set)
      out << " core_" << idx << " [label=\"" << label_of(idx) << "\", shape=ellipse];";
    out << " }\n";
  }
  // Scaling indices flow to the next level they participate in, or to the
  // core; wavelet nodes terminate.
  for (int l = 0; l < graph.depth(); ++l) {
    const LevelRecord& rec = graph.levels[l];
    for (int idx : rec.tuple) {
      if (idx == rec.wavelet) continue;
      int next = -1;
      for (int l2 = l + 1; l2 < graph.depth() && next < 0; ++l2)
        if (std::find(graph.levels[l2].tuple.begin(), graph.levels[l2].tuple.end(), idx) !=
            graph.levels[l2].tuple.end())
          next = l2;
      if (next >= 0)
        out << "  l" << (l + 1) << "_i" << idx << " -> l" << (next + 1) << "_i" << idx << ";\n";
      else
        out << "  l" << (l + 1) << "_i" << idx << " -> core_" << idx << ";\n";
    }
  }
  out << "}\n";
  return out.str();
}

std::string scores_to_csv(const ScoreVector& scores) {
  std::ostringstream out;
  out << "label,score\n";
  for (std::size_t i = 0; i < scores.values.size(); ++i)
    out << scores.labels[i] << "," << format_double(scores.values[i]) << "\n";
  return out.str();
}

ScoreVector scores_from_csv(std::istream& in) {
  std::vector<std::string> lines = read_lines(in);
  ScoreVector out;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    if (r == 0 && lines[r] == "label,score") continue;
    std::size_t sep = lines[r].rfind(',');
    if (sep == std::string::npos)
      throw InvalidInputError("score row " + std::to_string(r + 1) + " has no comma separator");
    out.labels.push_back(trim(lines[r].substr(0, sep)));
    out.values.push_back(
        parse_double_or_throw(trim(lines[r].substr(sep + 1)), "score row " + std::to_string(r + 1)));
  }
  if (out.values.empty()) throw InvalidInputError("score file contains no rows");
  return out;
}

}  // namespace mmf
