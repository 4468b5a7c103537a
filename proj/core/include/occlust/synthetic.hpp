#pragma once

#include "occlust/embedding_io.hpp"

#include <cstdint>

namespace occlust::synthetic {

struct BlobSpec {
  int n = 1016;
  int dim = 64;
  int classes = 23;         // at most 23, one SOC major group each
  double center_norm = 20.0;
  double sigma = 1.0;
  std::uint64_t seed = 0;
};

/// Isotropic Gaussian blobs centred at center_norm * e_c, labelled with real
/// SOC major-group codes. Points are assigned to classes round-robin.
io::EmbeddingSet make_blob_corpus(const BlobSpec& spec);

}  // namespace occlust::synthetic
