#pragma once

#include <stdexcept>
#include <string>

namespace jigsaw {

enum class ErrorKind {
  BadInput,
  MultipleFixedPoint,
  RayNearCriticalValue,
  TraceDiverged,
  CycleNotFound,
  LabelAmbiguity,
  PullbackBranchClash,
  OnBoundary,
  CautionViolated,
  OrbitHitsAlpha,
  NoVisitFound,
  InconclusiveAtBudget,
  BadLevel,
  GridTooCoarse,
  EmptyInterior,
  InconclusiveAtDepth,
  ContainmentFails,
  CriticalInPiece,
  CodingCollision,
  BadRadii,
  ResolutionCap,
};

const char* to_string(ErrorKind kind);

// Every failure surfaced by the library carries a kind plus an optional
// integer detail (a depth, period or column index, depending on the kind).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, int detail = -1);
  ErrorKind kind() const { return kind_; }
  int detail() const { return detail_; }

 private:
  ErrorKind kind_;
  int detail_;
};

}  // namespace jigsaw
