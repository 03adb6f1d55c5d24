#pragma once

#include <stdexcept>
#include <string>

namespace lerw {

// Every failure mode surfaced by the library. Callers that care about a
// specific mode switch on code(); the message is for humans.
enum class Err {
  StoppingBudgetExceeded,
  NeverExits,
  NeverHits,
  NotInDomain,
  EmptyDomain,
  EmptyPath,
  NotAPath,
  EndpointMismatch,
  CoordinateOverflow,
  SingularSystem,
  DomainTooLarge,
  DeadEnd,
  PreconditionViolated,
  NoConditioningEvents,
  ZeroMeanX,
  BadRadii,
  BadDelta,
  NeverExitsBox,
  BetaOutOfRange,
  EmptySet,
  InsufficientLevels,
  UnknownExperiment,
  InvalidParams,
  IoFailure,
  SchemaMismatch,
};

const char* err_name(Err e);

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& msg)
      : std::runtime_error(std::string(err_name(code)) + ": " + msg),
        code_(code) {}

  Err code() const { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void raise(Err code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool cond, Err code, const std::string& msg) {
  if (!cond) raise(code, msg);
}

}  // namespace lerw
