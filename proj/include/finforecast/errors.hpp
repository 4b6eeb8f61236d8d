#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace finforecast {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// market_data
struct MissingColumn : Error {
    explicit MissingColumn(const std::string& column)
        : Error("missing column: " + column) {}
};
struct UnparseableRow : Error {
    UnparseableRow(std::size_t line, const std::string& detail)
        : Error("unparseable row at line " + std::to_string(line) + ": " + detail), line(line) {}
    std::size_t line;
};
struct InvariantViolation : Error {
    InvariantViolation(std::size_t line, const std::string& rule)
        : Error("invariant violation at line " + std::to_string(line) + ": " + rule), line(line) {}
    std::size_t line;
};
struct IncompatibleInterval : Error {
    using Error::Error;
};

// indicators
struct SeriesTooShort : Error {
    using Error::Error;
};
struct DegenerateVariance : Error {
    using Error::Error;
};

// pipeline
struct ConstantColumn : Error {
    using Error::Error;
};
struct ColumnMismatch : Error {
    using Error::Error;
};
struct EmptySplit : Error {
    using Error::Error;
};

// neural_core
struct ShapeMismatch : Error {
    using Error::Error;
};
struct NonFiniteActivation : Error {
    using Error::Error;
};
struct StaleCache : Error {
    using Error::Error;
};

// training
struct EmptyInput : Error {
    using Error::Error;
};
struct DivergenceDetected : Error {
    using Error::Error;
};

// evaluation
struct ZeroActual : Error {
    using Error::Error;
};
struct LengthMismatch : Error {
    using Error::Error;
};

// runner
struct ConfigError : Error {
    using Error::Error;
};
struct InconsistentDataset : Error {
    using Error::Error;
};

} // namespace finforecast
