#pragma once

#include <stdexcept>

namespace ibcal {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NegativeMass : Error { using Error::Error; };
struct NotNormalized : Error { using Error::Error; };
struct DegenerateAlphabet : Error { using Error::Error; };
struct OutOfRange : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct NonFinite : Error { using Error::Error; };
struct EmptyHistogram : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct MissingPValue : Error { using Error::Error; };
struct NotANull : Error { using Error::Error; };

// Malformed files, config documents, or CSV schemas.
struct SchemaError : Error { using Error::Error; };

}  // namespace ibcal
