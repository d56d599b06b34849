#include "opstage/error.hpp"

namespace opstage {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidPixel: return "InvalidPixel";
    case ErrorKind::EmptyImage: return "EmptyImage";
    case ErrorKind::EmptyGlcm: return "EmptyGlcm";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::NumericError: return "NumericError";
    case ErrorKind::EmptyClass: return "EmptyClass";
    case ErrorKind::DegenerateLabels: return "DegenerateLabels";
    case ErrorKind::EmptyVote: return "EmptyVote";
    case ErrorKind::DegenerateSpec: return "DegenerateSpec";
    case ErrorKind::SplitError: return "SplitError";
    case ErrorKind::MissingClass: return "MissingClass";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace opstage
