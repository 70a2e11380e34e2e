#include "jigsaw/errors.hpp"

namespace jigsaw {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::BadInput: return "BadInput";
    case ErrorKind::MultipleFixedPoint: return "MultipleFixedPoint";
    case ErrorKind::RayNearCriticalValue: return "RayNearCriticalValue";
    case ErrorKind::TraceDiverged: return "TraceDiverged";
    case ErrorKind::CycleNotFound: return "CycleNotFound";
    case ErrorKind::LabelAmbiguity: return "LabelAmbiguity";
    case ErrorKind::PullbackBranchClash: return "PullbackBranchClash";
    case ErrorKind::OnBoundary: return "OnBoundary";
    case ErrorKind::CautionViolated: return "CautionViolated";
    case ErrorKind::OrbitHitsAlpha: return "OrbitHitsAlpha";
    case ErrorKind::NoVisitFound: return "NoVisitFound";
    case ErrorKind::InconclusiveAtBudget: return "InconclusiveAtBudget";
    case ErrorKind::BadLevel: return "BadLevel";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::EmptyInterior: return "EmptyInterior";
    case ErrorKind::InconclusiveAtDepth: return "InconclusiveAtDepth";
    case ErrorKind::ContainmentFails: return "ContainmentFails";
    case ErrorKind::CriticalInPiece: return "CriticalInPiece";
    case ErrorKind::CodingCollision: return "CodingCollision";
    case ErrorKind::BadRadii: return "BadRadii";
    case ErrorKind::ResolutionCap: return "ResolutionCap";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message, int detail)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      detail_(detail) {}

}  // namespace jigsaw
