#pragma once

#include <stdexcept>
#include <string>

namespace advids {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input file does not match the declared column schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

// A cell or document could not be parsed.
class ParseError : public Error {
public:
    using Error::Error;
};

// A value is outside its legal domain (unknown category, bad label index).
class ValueError : public Error {
public:
    using Error::Error;
};

// Matrix/vector dimensions do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Invalid configuration value.
class ConfigError : public Error {
public:
    using Error::Error;
};

// An operation that needs data received none.
class EmptyInputError : public Error {
public:
    using Error::Error;
};

// Training input or model is degenerate (single class, zero weight vector).
class DegenerateError : public Error {
public:
    using Error::Error;
};

// Cross-validation fold is missing a class.
class FoldingError : public Error {
public:
    using Error::Error;
};

// A record refers to rows that do not exist in the given dataset.
class LineageError : public Error {
public:
    using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    using Error::Error;
};

// ROC curve is undefined for the given labels.
class CurveError : public Error {
public:
    using Error::Error;
};

// Filesystem failure, reported with the offending path.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace advids
