#pragma once

#include <stdexcept>
#include <string>

namespace rwre {

// Exit-code contract for the CLI: InvalidInput -> 1, RegimeMismatch -> 2,
// NumericalFault -> 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidInput : Error {
    using Error::Error;
};

struct WindowTooLarge : InvalidInput {
    using InvalidInput::InvalidInput;
};

struct TooLarge : InvalidInput {
    using InvalidInput::InvalidInput;
};

struct GridTooNarrow : InvalidInput {
    using InvalidInput::InvalidInput;
};

struct RegimeMismatch : Error {
    using Error::Error;
};

struct NoSlowdownRoot : RegimeMismatch {
    using RegimeMismatch::RegimeMismatch;
};

// A trap scan that found no trapping environment at any n.
struct AllZero : RegimeMismatch {
    using RegimeMismatch::RegimeMismatch;
};

struct NumericalFault : Error {
    using Error::Error;
};

// Product with a zero (1,1) entry; can only happen for fewer than L factors
// with a vanishing top-row entry, which ellipticity rules out.
struct UndefinedDelta : NumericalFault {
    using NumericalFault::NumericalFault;
};

// A bisection sign test that could not be settled within the replica budget.
struct Unresolved : NumericalFault {
    using NumericalFault::NumericalFault;
};

}  // namespace rwre
