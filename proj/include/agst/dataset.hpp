#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "agst/graph.hpp"
#include "agst/matrix.hpp"

namespace agst {

/// Raised for malformed dataset files; the message carries file and line.
class DatasetError : public Error {
 public:
  DatasetError(const std::filesystem::path& file, std::size_t line, const std::string& what);
  const std::filesystem::path& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::filesystem::path file_;
  std::size_t line_;
};

inline constexpr int kUnknownLabel = -1;

struct DatasetBundle {
  SparseGraph graph;
  /// n x f features, kept in CSR form (bag-of-words features are mostly zero).
  CsrMatrix features;
  /// Class index in [0, c) or kUnknownLabel.
  std::vector<int> labels;
  std::size_t num_classes = 0;

  std::size_t num_nodes() const { return graph.num_nodes(); }
  std::size_t num_features() const { return features.cols; }

  /// Throws Error if any invariant is broken.
  void validate() const;
};

/// Dataset directory layout: `meta`, `edges.tsv`, `features.csv`, `labels.tsv`.
enum class DatasetFormat { Directory };

struct LoadOptions {
  bool l2_normalize_features = false;
};

DatasetBundle load_dataset(const std::filesystem::path& path,
                           DatasetFormat format = DatasetFormat::Directory,
                           const LoadOptions& options = {});
void write_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir);

/// Converts the LINQS release (`<name>.content` + `<name>.cites`) used by the
/// Cora and CiteSeer citation graphs. Paper ids are remapped to 0..n-1 in
/// file order and class names are numbered in sorted order. Citations whose
/// endpoints are missing from the content file are dropped.
DatasetBundle convert_linqs(const std::filesystem::path& content,
                            const std::filesystem::path& cites);

/// Divides each feature row by its L2 norm (zero rows are left as is).
void l2_normalize_rows(CsrMatrix& features);

// ---------------------------------------------------------------------------
// Splits

struct Balanced {
  std::size_t k = 5;
  std::size_t val_per_class = 30;
};
struct Imbalanced {
  double rate = 0.01;
  std::size_t test_size = 1000;
};
struct Standard20 {};

using SplitMode = std::variant<Balanced, Imbalanced, Standard20>;

struct SplitSpec {
  std::vector<NodeId> labeled;
  std::vector<NodeId> validation;
  std::vector<NodeId> test;
  /// Seed actually used; differs from the request when resampling was needed.
  std::uint64_t seed = 0;
};

/// Deterministic given (bundle, mode, seed). Sets are sorted by node id.
SplitSpec make_split(const DatasetBundle& bundle, const SplitMode& mode, std::uint64_t seed);

/// Node ids not in the labeled set, sorted.
std::vector<NodeId> unlabeled_nodes(std::size_t n, const SplitSpec& split);

}  // namespace agst
