#include "agst/dataset.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <string_view>
#include <unordered_map>

namespace agst {
namespace fs = std::filesystem;

DatasetError::DatasetError(const fs::path& file, std::size_t line, const std::string& what)
    : Error(file.string() + ":" + std::to_string(line) + ": " + what), file_(file), line_(line) {}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::ifstream open_or_throw(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw DatasetError(file, 0, "cannot open file");
  return in;
}

bool skippable(std::string_view line) {
  line = trim(line);
  return line.empty() || line.front() == '#';
}

struct Meta {
  std::size_t n = 0, f = 0, c = 0;
};

Meta read_meta(const fs::path& file) {
  auto in = open_or_throw(file);
  std::optional<std::size_t> n, f, c;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DatasetError(file, lineno, "expected key=value");
    const auto key = trim(std::string_view(line).substr(0, eq));
    const auto value = parse_number<std::size_t>(std::string_view(line).substr(eq + 1));
    if (!value) throw DatasetError(file, lineno, "non-integer value for '" + std::string(key) + "'");
    if (key == "n") n = value;
    else if (key == "f") f = value;
    else if (key == "c") c = value;
    else throw DatasetError(file, lineno, "unknown key '" + std::string(key) + "'");
  }
  if (!n || !f || !c) throw DatasetError(file, lineno, "meta must define n, f and c");
  return {*n, *f, *c};
}

std::vector<std::pair<NodeId, NodeId>> read_edges(const fs::path& file, std::size_t n) {
  auto in = open_or_throw(file);
  std::vector<std::pair<NodeId, NodeId>> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    const auto fields = split(trim(line), '\t');
    if (fields.size() != 2) throw DatasetError(file, lineno, "expected src<TAB>dst");
    const auto a = parse_number<std::uint64_t>(fields[0]);
    const auto b = parse_number<std::uint64_t>(fields[1]);
    if (!a || !b) throw DatasetError(file, lineno, "non-integer node id");
    if (*a >= n || *b >= n)
      throw DatasetError(file, lineno,
                         "node id out of range (n=" + std::to_string(n) + "): " +
                             std::to_string(*a) + " " + std::to_string(*b));
    pairs.emplace_back(static_cast<NodeId>(*a), static_cast<NodeId>(*b));
  }
  return pairs;
}

CsrMatrix read_features(const fs::path& file, std::size_t n, std::size_t f) {
  auto in = open_or_throw(file);
  CsrMatrix x;
  x.rows = n;
  x.cols = f;
  x.offsets.reserve(n + 1);
  x.offsets.push_back(0);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (x.offsets.size() == n + 1) throw DatasetError(file, lineno, "more than n=" + std::to_string(n) + " feature rows");
    const auto fields = split(trim(line), ',');
    if (fields.size() != f)
      throw DatasetError(file, lineno,
                         "expected " + std::to_string(f) + " values, got " + std::to_string(fields.size()));
    for (std::size_t j = 0; j < f; ++j) {
      const auto v = parse_number<double>(fields[j]);
      if (!v || !std::isfinite(*v))
        throw DatasetError(file, lineno, "non-numeric feature in column " + std::to_string(j) + ": '" +
                                             std::string(trim(fields[j])) + "'");
      if (*v != 0.0) {
        x.indices.push_back(static_cast<std::uint32_t>(j));
        x.values.push_back(*v);
      }
    }
    x.offsets.push_back(x.indices.size());
  }
  if (x.offsets.size() != n + 1)
    throw DatasetError(file, lineno, "expected " + std::to_string(n) + " feature rows, got " +
                                         std::to_string(x.offsets.size() - 1));
  return x;
}

std::vector<int> read_labels(const fs::path& file, std::size_t n, std::size_t c) {
  std::vector<int> labels(n, kUnknownLabel);
  if (!fs::exists(file)) throw DatasetError(file, 0, "missing file");
  auto in = open_or_throw(file);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    const auto fields = split(trim(line), '\t');
    if (fields.size() != 2) throw DatasetError(file, lineno, "expected node<TAB>class");
    const auto node = parse_number<std::uint64_t>(fields[0]);
    const auto cls = parse_number<std::uint64_t>(fields[1]);
    if (!node || !cls) throw DatasetError(file, lineno, "non-integer node or class");
    if (*node >= n) throw DatasetError(file, lineno, "node id out of range (n=" + std::to_string(n) + ")");
    if (*cls >= c)
      throw DatasetError(file, lineno, "label " + std::to_string(*cls) + " >= class count " + std::to_string(c));
    labels[*node] = static_cast<int>(*cls);
  }
  return labels;
}

void append_double(std::string& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace

void DatasetBundle::validate() const {
  const std::size_t n = graph.num_nodes();
  if (features.rows != n) throw Error("feature row count does not match node count");
  if (labels.size() != n) throw Error("label vector length does not match node count");
  for (int y : labels)
    if (y != kUnknownLabel && (y < 0 || static_cast<std::size_t>(y) >= num_classes))
      throw Error("label outside [0, c)");
}

void l2_normalize_rows(CsrMatrix& features) {
  for (std::size_t i = 0; i < features.rows; ++i) {
    double ss = 0.0;
    for (std::size_t e = features.offsets[i]; e < features.offsets[i + 1]; ++e)
      ss += features.values[e] * features.values[e];
    if (ss == 0.0) continue;
    const double inv = 1.0 / std::sqrt(ss);
    for (std::size_t e = features.offsets[i]; e < features.offsets[i + 1]; ++e) features.values[e] *= inv;
  }
}

DatasetBundle load_dataset(const fs::path& path, DatasetFormat format, const LoadOptions& options) {
  if (format != DatasetFormat::Directory) throw Error("unsupported dataset format");
  if (!fs::is_directory(path)) throw DatasetError(path, 0, "dataset directory not found");
  const Meta meta = read_meta(path / "meta");
  const auto pairs = read_edges(path / "edges.tsv", meta.n);

  DatasetBundle bundle;
  std::size_t dropped = 0;
  bundle.graph = SparseGraph::from_pairs(meta.n, pairs, &dropped);
  if (dropped > 0)
    spdlog::info("{}: dropped {} duplicate edge entries (after symmetrization)", path.string(), dropped);
  bundle.features = read_features(path / "features.csv", meta.n, meta.f);
  if (options.l2_normalize_features) l2_normalize_rows(bundle.features);
  bundle.labels = read_labels(path / "labels.tsv", meta.n, meta.c);
  bundle.num_classes = meta.c;
  bundle.validate();
  return bundle;
}

void write_dataset(const DatasetBundle& bundle, const fs::path& dir) {
  fs::create_directories(dir);
  const auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw Error("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("meta");
    out << "n=" << bundle.num_nodes() << "\nf=" << bundle.num_features() << "\nc=" << bundle.num_classes
        << "\n";
  }
  {
    auto out = open("edges.tsv");
    for (const Edge& e : bundle.graph.edges()) out << e.u << '\t' << e.v << '\n';
  }
  {
    auto out = open("features.csv");
    const CsrMatrix& x = bundle.features;
    std::string row;
    std::vector<double> dense(x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
      std::fill(dense.begin(), dense.end(), 0.0);
      for (std::size_t e = x.offsets[i]; e < x.offsets[i + 1]; ++e) dense[x.indices[e]] = x.values[e];
      row.clear();
      for (std::size_t j = 0; j < x.cols; ++j) {
        if (j > 0) row.push_back(',');
        append_double(row, dense[j]);
      }
      row.push_back('\n');
      out << row;
    }
  }
  {
    auto out = open("labels.tsv");
    for (std::size_t i = 0; i < bundle.labels.size(); ++i)
      if (bundle.labels[i] != kUnknownLabel) out << i << '\t' << bundle.labels[i] << '\n';
  }
}

DatasetBundle convert_linqs(const fs::path& content, const fs::path& cites) {
  auto in = open_or_throw(content);
  std::unordered_map<std::string, NodeId> ids;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> class_names;
  std::size_t f = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split(trim(line), '\t');
    if (fields.size() < 3) throw DatasetError(content, lineno, "expected id, features, class");
    if (f == 0) f = fields.size() - 2;
    if (fields.size() - 2 != f) throw DatasetError(content, lineno, "inconsistent feature count");
    const std::string id(trim(fields.front()));
    if (!ids.emplace(id, static_cast<NodeId>(rows.size())).second)
      throw DatasetError(content, lineno, "duplicate paper id '" + id + "'");
    std::vector<double> row(f);
    for (std::size_t j = 0; j < f; ++j) {
      const auto v = parse_number<double>(fields[j + 1]);
      if (!v) throw DatasetError(content, lineno, "non-numeric feature");
      row[j] = *v;
    }
    rows.push_back(std::move(row));
    class_names.emplace_back(trim(fields.back()));
  }

  std::map<std::string, int> class_index;
  for (const auto& name : class_names) class_index.emplace(name, 0);
  int next = 0;
  for (auto& [name, idx] : class_index) idx = next++;

  auto cin = open_or_throw(cites);
  std::vector<std::pair<NodeId, NodeId>> pairs;
  std::size_t missing = 0;
  lineno = 0;
  while (std::getline(cin, line)) {
    ++lineno;
    if (skippable(line)) continue;
    auto fields = split(trim(line), '\t');
    if (fields.size() != 2) fields = split(trim(line), ' ');
    if (fields.size() != 2) throw DatasetError(cites, lineno, "expected two paper ids");
    const auto a = ids.find(std::string(trim(fields[0])));
    const auto b = ids.find(std::string(trim(fields[1])));
    if (a == ids.end() || b == ids.end()) {
      ++missing;
      continue;
    }
    pairs.emplace_back(a->second, b->second);
  }
  if (missing > 0) spdlog::warn("{}: dropped {} citations to unknown papers", cites.string(), missing);

  DatasetBundle bundle;
  const std::size_t n = rows.size();
  bundle.graph = SparseGraph::from_pairs(n, pairs);
  DenseMatrix x(n, f);
  for (std::size_t i = 0; i < n; ++i) std::copy(rows[i].begin(), rows[i].end(), x.row(i).begin());
  bundle.features = CsrMatrix::from_dense(x);
  bundle.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) bundle.labels[i] = class_index.at(class_names[i]);
  bundle.num_classes = class_index.size();
  bundle.validate();
  return bundle;
}

std::vector<NodeId> unlabeled_nodes(std::size_t n, const SplitSpec& split) {
  std::vector<bool> is_labeled(n, false);
  for (NodeId v : split.labeled) is_labeled[v] = true;
  std::vector<NodeId> out;
  out.reserve(n - split.labeled.size());
  for (std::size_t i = 0; i < n; ++i)
    if (!is_labeled[i]) out.push_back(static_cast<NodeId>(i));
  return out;
}

}  // namespace agst
