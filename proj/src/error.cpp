#include "peerfx/error.hpp"

namespace peerfx {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::NoWithinVariation: return "NoWithinVariation";
    case ErrorKind::DivisionDegenerate: return "DivisionDegenerate";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::EmptySelection: return "EmptySelection";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::DataError: return "DataError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace peerfx
