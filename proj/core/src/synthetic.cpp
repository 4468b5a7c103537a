#include "occlust/synthetic.hpp"

#include "occlust/error.hpp"

#include <array>
#include <cstdio>
#include <random>

namespace occlust::synthetic {

namespace {

constexpr std::array<int, 23> kMajorGroups{11, 13, 15, 17, 19, 21, 23, 25, 27, 29, 31, 33,
                                           35, 37, 39, 41, 43, 45, 47, 49, 51, 53, 55};

}  // namespace

io::EmbeddingSet make_blob_corpus(const BlobSpec& spec) {
  if (spec.classes < 1 || spec.classes > static_cast<int>(kMajorGroups.size())) {
    fail(ErrorKind::parameter, "classes must lie in [1, 23]");
  }
  if (spec.dim < spec.classes) fail(ErrorKind::parameter, "dim must be at least the class count");
  if (spec.n < spec.classes || spec.n > 9999) fail(ErrorKind::parameter, "n must lie in [classes, 9999]");
  if (!(spec.sigma >= 0.0)) fail(ErrorKind::parameter, "sigma must be non-negative");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.sigma);
  std::vector<io::OccupationRecord> records;
  records.reserve(static_cast<std::size_t>(spec.n));
  for (int i = 0; i < spec.n; ++i) {
    const int c = i % spec.classes;
    io::OccupationRecord r;
    char code[32];
    std::snprintf(code, sizeof code, "%02d-%04d.00", kMajorGroups[c], i);
    r.soc_code = code;
    r.major_group = r.soc_code.substr(0, 2);
    r.title = "Synthetic occupation " + std::to_string(i);
    r.description = "Blob " + std::to_string(c) + " member " + std::to_string(i);
    r.embedding.resize(static_cast<std::size_t>(spec.dim));
    for (auto& v : r.embedding) v = noise(rng);
    r.embedding[static_cast<std::size_t>(c)] += spec.center_norm;
    records.push_back(std::move(r));
  }
  return io::EmbeddingSet(std::move(records), false);
}

}  // namespace occlust::synthetic
