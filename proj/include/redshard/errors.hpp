#pragma once

#include <stdexcept>
#include <string>

namespace redshard {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define REDSHARD_DEFINE_ERROR(Name)          \
  class Name : public Error {                \
   public:                                   \
    explicit Name(const std::string& what)   \
        : Error(#Name ": " + what) {}        \
  }

REDSHARD_DEFINE_ERROR(InvalidDistribution);
REDSHARD_DEFINE_ERROR(ZeroTailProbability);
REDSHARD_DEFINE_ERROR(UnsupportedAnalytic);
REDSHARD_DEFINE_ERROR(InvalidSpec);
REDSHARD_DEFINE_ERROR(EmptyWorkload);
REDSHARD_DEFINE_ERROR(IllegalDirective);
REDSHARD_DEFINE_ERROR(WrongWorkload);
REDSHARD_DEFINE_ERROR(EventCapExceeded);
REDSHARD_DEFINE_ERROR(SimulationStalled);
REDSHARD_DEFINE_ERROR(IncompleteTrace);
REDSHARD_DEFINE_ERROR(UnsupportedSetting);
REDSHARD_DEFINE_ERROR(DistMismatch);
REDSHARD_DEFINE_ERROR(MisalignedHistories);
REDSHARD_DEFINE_ERROR(PreconditionViolated);
REDSHARD_DEFINE_ERROR(ConfigError);

#undef REDSHARD_DEFINE_ERROR

}  // namespace redshard
