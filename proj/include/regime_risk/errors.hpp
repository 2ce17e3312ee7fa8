#pragma once

#include <stdexcept>
#include <string>

namespace regime_risk {

// Base of every error raised by the library. Callers that only care about
// "the input was rejected" can catch this; the subclasses name the reason.
class RiskError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

#define REGIME_RISK_DEFINE_ERROR(Name)                                        \
  class Name : public RiskError {                                             \
  public:                                                                     \
    explicit Name(const std::string& what) : RiskError(#Name ": " + what) {}  \
  }

REGIME_RISK_DEFINE_ERROR(DimensionError);
REGIME_RISK_DEFINE_ERROR(NotAGenerator);
REGIME_RISK_DEFINE_ERROR(NotStochastic);
REGIME_RISK_DEFINE_ERROR(BadDistribution);
REGIME_RISK_DEFINE_ERROR(TimeOrder);
REGIME_RISK_DEFINE_ERROR(NotMeanReverting);
REGIME_RISK_DEFINE_ERROR(TooFewPoints);
REGIME_RISK_DEFINE_ERROR(StateOutOfRange);
REGIME_RISK_DEFINE_ERROR(LengthMismatch);
REGIME_RISK_DEFINE_ERROR(NotSupported);
REGIME_RISK_DEFINE_ERROR(EmptySamples);
REGIME_RISK_DEFINE_ERROR(NonPositiveGamma);
REGIME_RISK_DEFINE_ERROR(InvalidParameter);
REGIME_RISK_DEFINE_ERROR(ParseError);
REGIME_RISK_DEFINE_ERROR(ConfigError);

#undef REGIME_RISK_DEFINE_ERROR

}  // namespace regime_risk
