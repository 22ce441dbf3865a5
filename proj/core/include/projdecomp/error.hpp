#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

namespace projdecomp {

enum class ErrorCode {
  NonHermitianInput,
  NotPositive,
  NotAProjection,
  DimensionMismatch,
  BadPartition,
  CriterionFailed,
  MajorizationFailure,
  BadTrace,
  ZeroB,
  BadIsometry,
  NotLocallyInvertible,
  BackendContractViolated,
  IndexOutOfRange,
  BadRange,
  AdjacencyViolated,
  EssentialNormTooSmall,
  BlockTooLarge,
  VerificationFailed,
  InequalityViolated,
  InternalBoundFailure,
  SumMismatch,
  DenominatorTooSmall,
  ModelMismatch,
  UnsupportedFamilyPair,
  RankMismatch,
  PartitionInvalid,
  HypothesisFailed,
  Overflow,
  ParseError,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, nlohmann::json detail = nullptr)
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const nlohmann::json& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  nlohmann::json detail_;
};

}  // namespace projdecomp
