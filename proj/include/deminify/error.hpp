#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace deminify {

// Input/data problems (CLI exit code 2).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Model/shape/training problems (CLI exit code 3).
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SourceError : public DataError {
public:
    SourceError(const std::string& what, std::size_t offset)
        : DataError(what + " at byte " + std::to_string(offset)), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class LexError : public SourceError {
public:
    using SourceError::SourceError;
};

class ParseError : public SourceError {
public:
    using SourceError::SourceError;
};

class OccurrenceError : public DataError {
public:
    using DataError::DataError;
};

class UnknownNameError : public DataError {
public:
    using DataError::DataError;
};

class EmptyCorpus : public DataError {
public:
    using DataError::DataError;
};

class MapMismatch : public DataError {
public:
    using DataError::DataError;
};

class IoError : public DataError {
public:
    using DataError::DataError;
};

class ShapeError : public ModelError {
public:
    using ModelError::ModelError;
};

class NonFiniteGradient : public ModelError {
public:
    using ModelError::ModelError;
};

class ModelMismatch : public ModelError {
public:
    using ModelError::ModelError;
};

} // namespace deminify
