#pragma once

#include <stdexcept>
#include <string>

namespace codelens {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input is not valid UTF-8.
class EncodingError : public Error {
public:
    using Error::Error;
};

// Token id not present in the vocabulary.
class UnknownTokenError : public Error {
public:
    using Error::Error;
};

// Dataset / JSONL schema violations. Maps to CLI exit code 2.
class SchemaError : public Error {
public:
    using Error::Error;
};

enum class ProviderFault { network, auth, rate_limit, context_overflow, protocol };

// Scoring provider failures. Maps to CLI exit code 3.
class ProviderError : public Error {
public:
    ProviderError(ProviderFault fault, const std::string& msg, long position = -1,
                  double retry_after_s = 0.0)
        : Error(msg), fault(fault), position(position), retry_after_s(retry_after_s) {}

    ProviderFault fault;
    long position;        // failing token position, -1 if not positional
    double retry_after_s; // hint for rate_limit faults
};

// Tensor / layer shape mismatches; message names the offending layer.
class ShapeError : public Error {
public:
    using Error::Error;
};

// backward() called on a value with no recorded graph.
class MissingGraphError : public Error {
public:
    using Error::Error;
};

// Detector preconditions (empty input, missing alternatives, degenerate LRR).
class DetectorError : public Error {
public:
    using Error::Error;
};

// Attack module: language not supported or donor too short.
class UnsupportedLanguageError : public Error {
public:
    using Error::Error;
};

class InsufficientDonorError : public Error {
public:
    using Error::Error;
};

// Training loss became non-finite.
class DivergenceError : public Error {
public:
    using Error::Error;
};

// Experiment referenced a dataset or checkpoint that does not exist.
class MissingArtifactError : public Error {
public:
    using Error::Error;
};

} // namespace codelens
