#include "tdb/error.hpp"

namespace tdb {

std::string_view category_name(ErrorCategory c) noexcept {
    switch (c) {
    case ErrorCategory::shape: return "shape";
    case ErrorCategory::range: return "range";
    case ErrorCategory::numeric: return "numeric";
    case ErrorCategory::rank_collapse: return "rank_collapse";
    case ErrorCategory::io: return "io";
    case ErrorCategory::config: return "config";
    }
    return "unknown";
}

} // namespace tdb
