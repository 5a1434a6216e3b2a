#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace driftlab {

/// Base class for all library errors. `code()` returns a stable machine
/// readable identifier (e.g. "ParseError", "PositivityLost") that the CLI
/// maps to exit codes and job reports.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define DRIFTLAB_DEFINE_ERROR(Name)                                  \
    class Name : public Error {                                      \
    public:                                                          \
        explicit Name(const std::string& what) : Error(#Name, what) {} \
    }

// Expression / configuration
DRIFTLAB_DEFINE_ERROR(ParseError);
DRIFTLAB_DEFINE_ERROR(ConfigError);

// Geometry
DRIFTLAB_DEFINE_ERROR(InvalidWarp);
DRIFTLAB_DEFINE_ERROR(DimensionConvention);
DRIFTLAB_DEFINE_ERROR(OutOfDomain);
DRIFTLAB_DEFINE_ERROR(GridTooCoarse);
DRIFTLAB_DEFINE_ERROR(HypothesisUnverified);

// Nonlinearity
DRIFTLAB_DEFINE_ERROR(DomainViolation);
DRIFTLAB_DEFINE_ERROR(NonPositiveSolution);
DRIFTLAB_DEFINE_ERROR(BoundViolated);
DRIFTLAB_DEFINE_ERROR(ParameterOrder);
DRIFTLAB_DEFINE_ERROR(UnknownPredicate);

// Cutoffs
DRIFTLAB_DEFINE_ERROR(BadWindow);

// Solver
DRIFTLAB_DEFINE_ERROR(PositivityLost);
DRIFTLAB_DEFINE_ERROR(BlowUp);
DRIFTLAB_DEFINE_ERROR(CFLFailure);
DRIFTLAB_DEFINE_ERROR(NoConvergence);

// Estimates
DRIFTLAB_DEFINE_ERROR(NeedFiniteM);
DRIFTLAB_DEFINE_ERROR(NotStationary);
DRIFTLAB_DEFINE_ERROR(TimeOrder);
DRIFTLAB_DEFINE_ERROR(NotSameRay);
DRIFTLAB_DEFINE_ERROR(MissingCalibration);
DRIFTLAB_DEFINE_ERROR(MixedKinds);
DRIFTLAB_DEFINE_ERROR(InsufficientData);

// Reporting
DRIFTLAB_DEFINE_ERROR(MissingJob);

#undef DRIFTLAB_DEFINE_ERROR

} // namespace driftlab
