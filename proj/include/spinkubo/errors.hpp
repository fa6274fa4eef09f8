#pragma once

#include <stdexcept>
#include <string>

namespace spinkubo {

// Numerical failures map to CLI exit code 3, config problems to exit code 2.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GapClosed : NumericalError {
    using NumericalError::NumericalError;
};

struct AliasingRisk : NumericalError {
    using NumericalError::NumericalError;
};

struct WindowTooSmall : NumericalError {
    using NumericalError::NumericalError;
};

struct OddnessViolated : NumericalError {
    using NumericalError::NumericalError;
};

struct TailNotControlled : NumericalError {
    using NumericalError::NumericalError;
};

struct LTooSmall : NumericalError {
    using NumericalError::NumericalError;
};

struct DecayTooSlow : NumericalError {
    using NumericalError::NumericalError;
};

struct SingularPlaquette : NumericalError {
    using NumericalError::NumericalError;
};

struct ConfigInvalid : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace spinkubo
