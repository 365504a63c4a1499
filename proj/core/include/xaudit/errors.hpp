#pragma once

#include <stdexcept>
#include <string>

namespace xaudit {

// Base type for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A required column is missing or the schema is self-contradictory.
class SchemaError : public Error { public: using Error::Error; };

// No usable rows remain after filtering.
class EmptyDatasetError : public Error { public: using Error::Error; };

// A stratified split cannot give both sides at least one row per class.
class SplitError : public Error { public: using Error::Error; };

// One of the two sensitive-attribute groups is empty; disparity is undefined.
class GroupCoverageError : public Error { public: using Error::Error; };

// Invalid configuration value (non-positive counts, bad fractions, ...).
class ConfigError : public Error { public: using Error::Error; };

// Vector/matrix dimension mismatch.
class ShapeError : public Error { public: using Error::Error; };

// Training labels contain a single class.
class DegenerateLabelsError : public Error { public: using Error::Error; };

// Training loss became non-finite.
class DivergenceError : public Error { public: using Error::Error; };

// Operation defined only for a different model class.
class UnsupportedModelError : public Error { public: using Error::Error; };

// Inputs violate the experiment protocol (e.g. wrong trial count).
class ProtocolError : public Error { public: using Error::Error; };

// A p-value grid is missing cells required for aggregation.
class IncompleteGridError : public Error { public: using Error::Error; };

// Empty or malformed caller-provided data.
class InputError : public Error { public: using Error::Error; };

// Filesystem read/write failure.
class IoError : public Error { public: using Error::Error; };

} // namespace xaudit
