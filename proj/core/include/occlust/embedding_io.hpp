#pragma once

#include "occlust/linalg.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace occlust::io {

using linalg::RealMatrix;

struct OccupationRecord {
  std::string soc_code;     // NN-NNNN.NN
  std::string title;
  std::string major_group;  // first two characters of soc_code
  std::string description;
  std::vector<double> embedding;
};

/// Immutable corpus of occupation embeddings sharing one dimension.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  EmbeddingSet(std::vector<OccupationRecord> records, bool normalized);

  const std::vector<OccupationRecord>& records() const noexcept { return records_; }
  int size() const noexcept { return static_cast<int>(records_.size()); }
  int dim() const noexcept { return dim_; }
  bool normalized() const noexcept { return normalized_; }

  /// n x m matrix with one embedding per row.
  RealMatrix matrix() const;

 private:
  std::vector<OccupationRecord> records_;
  int dim_ = 0;
  bool normalized_ = false;
};

struct GroundTruth {
  std::vector<int> labels;
  std::vector<std::string> class_names;

  int class_count() const noexcept { return static_cast<int>(class_names.size()); }
};

bool is_valid_soc_code(const std::string& code);

/// Reads the JSON Lines interchange format. Each line holds keys soc_code,
/// title, major_group, text and embedding. Errors name the offending line.
EmbeddingSet load_corpus(const std::filesystem::path& path);

/// Writes records in the interchange format with round-trip precision.
void write_corpus(const EmbeddingSet& set, const std::filesystem::path& path);

EmbeddingSet normalize_rows(const EmbeddingSet& set);

/// Distance matrix M over a normalized set.
RealMatrix distance_matrix(const EmbeddingSet& set);

/// Class index = position of the two-digit prefix among sorted distinct prefixes.
GroundTruth major_group_labels(const EmbeddingSet& set);

/// Header-less CSV, one matrix row per line.
void write_matrix_csv(const RealMatrix& m, const std::filesystem::path& path);

}  // namespace occlust::io
