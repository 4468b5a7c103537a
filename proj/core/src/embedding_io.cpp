#include "occlust/embedding_io.hpp"

#include "occlust/error.hpp"
#include "occlust/format.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>

namespace occlust::io {

namespace {

using nlohmann::json;

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

std::string require_string(const json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    fail(ErrorKind::load, at_line(line) + "missing or non-string field '" + key + "'");
  }
  return it->get<std::string>();
}

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

EmbeddingSet::EmbeddingSet(std::vector<OccupationRecord> records, bool normalized)
    : records_(std::move(records)), normalized_(normalized) {
  if (records_.empty()) return;
  dim_ = static_cast<int>(records_.front().embedding.size());
  if (dim_ < 1) fail(ErrorKind::validation, "embedding dimension must be at least 1");
  for (const auto& r : records_) {
    if (static_cast<int>(r.embedding.size()) != dim_) {
      fail(ErrorKind::validation, "record " + r.soc_code + " has embedding length " +
                                      std::to_string(r.embedding.size()) + ", expected " +
                                      std::to_string(dim_));
    }
  }
}

RealMatrix EmbeddingSet::matrix() const {
  RealMatrix x(size(), dim_);
  for (int i = 0; i < size(); ++i) {
    for (int j = 0; j < dim_; ++j) x(i, j) = records_[i].embedding[j];
  }
  return x;
}

bool is_valid_soc_code(const std::string& code) {
  // NN-NNNN.NN
  if (code.size() != 10) return false;
  for (std::size_t i = 0; i < code.size(); ++i) {
    const char c = code[i];
    if (i == 2) {
      if (c != '-') return false;
    } else if (i == 7) {
      if (c != '.') return false;
    } else if (std::isdigit(static_cast<unsigned char>(c)) == 0) {
      return false;
    }
  }
  return true;
}

EmbeddingSet load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::load, "cannot open corpus " + path.string());

  std::vector<OccupationRecord> records;
  std::size_t dim = 0;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (is_blank(text)) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      fail(ErrorKind::load, at_line(line_no) + "malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) fail(ErrorKind::load, at_line(line_no) + "record is not a JSON object");

    OccupationRecord rec;
    rec.soc_code = require_string(obj, "soc_code", line_no);
    rec.title = require_string(obj, "title", line_no);
    rec.major_group = require_string(obj, "major_group", line_no);
    rec.description = require_string(obj, "text", line_no);
    if (!is_valid_soc_code(rec.soc_code)) {
      fail(ErrorKind::load, at_line(line_no) + "SOC code '" + rec.soc_code + "' does not match NN-NNNN.NN");
    }
    if (rec.major_group != rec.soc_code.substr(0, 2)) {
      fail(ErrorKind::load, at_line(line_no) + "major_group '" + rec.major_group +
                                "' disagrees with SOC code " + rec.soc_code);
    }
    if (is_blank(rec.description)) {
      fail(ErrorKind::load, at_line(line_no) + "empty description for " + rec.soc_code);
    }

    const auto emb = obj.find("embedding");
    if (emb == obj.end() || !emb->is_array() || emb->empty()) {
      fail(ErrorKind::load, at_line(line_no) + "missing or empty embedding array");
    }
    rec.embedding.reserve(emb->size());
    for (const auto& v : *emb) {
      if (!v.is_number()) fail(ErrorKind::load, at_line(line_no) + "embedding holds a non-number");
      const double x = v.get<double>();
      if (!std::isfinite(x)) fail(ErrorKind::load, at_line(line_no) + "embedding holds a non-finite value");
      rec.embedding.push_back(x);
    }
    if (dim == 0) {
      dim = rec.embedding.size();
    } else if (rec.embedding.size() != dim) {
      fail(ErrorKind::load, at_line(line_no) + "embedding length " + std::to_string(rec.embedding.size()) +
                                " differs from corpus dimension " + std::to_string(dim));
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) fail(ErrorKind::load, "corpus " + path.string() + " holds no records");
  return EmbeddingSet(std::move(records), false);
}

void write_corpus(const EmbeddingSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  for (const auto& r : set.records()) {
    // Embedding numbers are written by hand to keep round-trip precision.
    json head = {{"soc_code", r.soc_code}, {"title", r.title}, {"major_group", r.major_group},
                 {"text", r.description}};
    std::string line = head.dump();
    line.pop_back();
    line += ",\"embedding\":[";
    for (std::size_t j = 0; j < r.embedding.size(); ++j) {
      if (j > 0) line += ',';
      line += format_real(r.embedding[j]);
    }
    line += "]}\n";
    out << line;
  }
  if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

EmbeddingSet normalize_rows(const EmbeddingSet& set) {
  std::vector<OccupationRecord> records = set.records();
  for (auto& r : records) {
    double sq = 0.0;
    for (double v : r.embedding) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm == 0.0) fail(ErrorKind::validation, "record " + r.soc_code + " has a zero embedding");
    for (double& v : r.embedding) v /= norm;
  }
  return EmbeddingSet(std::move(records), true);
}

RealMatrix distance_matrix(const EmbeddingSet& set) {
  if (!set.normalized()) {
    fail(ErrorKind::contract, "distance matrix requires a normalized embedding set");
  }
  return linalg::pairwise_distances(set.matrix());
}

GroundTruth major_group_labels(const EmbeddingSet& set) {
  std::map<std::string, int> index;
  for (const auto& r : set.records()) index.emplace(r.major_group, 0);
  GroundTruth truth;
  for (auto& [code, idx] : index) {
    idx = static_cast<int>(truth.class_names.size());
    truth.class_names.push_back(code);
  }
  truth.labels.reserve(set.records().size());
  for (const auto& r : set.records()) truth.labels.push_back(index.at(r.major_group));
  return truth;
}

void write_matrix_csv(const RealMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::string line;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) line += ',';
      line += format_real(m(i, j));
    }
    line += '\n';
    out << line;
  }
  if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

}  // namespace occlust::io
