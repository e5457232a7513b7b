#include "lexpsy/error.hpp"

namespace lexpsy {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::EmptyData: return "EmptyData";
    case ErrorKind::Numerical: return "NumericalFailure";
    case ErrorKind::Transport: return "TransportError";
    case ErrorKind::UnknownAdjective: return "UnknownAdjective";
    case ErrorKind::GenerationFailed: return "GenerationFailed";
    case ErrorKind::StoreCorrupt: return "StoreCorrupt";
    case ErrorKind::Unparseable: return "Unparseable";
    case ErrorKind::Shape: return "ShapeMismatch";
    case ErrorKind::DegenerateScale: return "DegenerateScale";
    case ErrorKind::ConstantColumn: return "ConstantColumn";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::MissingTerm: return "MissingTerm";
    case ErrorKind::KeyGap: return "KeyGap";
    case ErrorKind::Format: return "FormatError";
  }
  return "Error";
}

}  // namespace lexpsy
