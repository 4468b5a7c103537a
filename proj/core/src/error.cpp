#include "occlust/error.hpp"

namespace occlust {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::degeneracy: return "degeneracy";
    case ErrorKind::load: return "load";
    case ErrorKind::contract: return "contract";
    case ErrorKind::undefined_metric: return "undefined_metric";
    case ErrorKind::selection: return "selection";
    case ErrorKind::affinity: return "affinity";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::io: return "io";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

}  // namespace occlust
