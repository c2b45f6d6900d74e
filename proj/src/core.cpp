#include "mvpose/core.hpp"

namespace mvpose {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::InvalidRotation: return "InvalidRotation";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidOrder: return "InvalidOrder";
    case ErrorCode::DegenerateBox: return "DegenerateBox";
    case ErrorCode::Underdetermined: return "Underdetermined";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::EmptyState: return "EmptyState";
    case ErrorCode::EmptyResults: return "EmptyResults";
    case ErrorCode::NotReady: return "NotReady";
    case ErrorCode::ProjectionOutOfImage: return "ProjectionOutOfImage";
    case ErrorCode::ConfigParse: return "ConfigParse";
    case ErrorCode::UnknownParameter: return "UnknownParameter";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace mvpose
