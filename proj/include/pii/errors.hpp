// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pii {

/// Broad failure class; the CLI maps it onto its exit code.
enum class ErrorClass { Usage = 1, Data = 2, Endpoint = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
    ErrorClass error_class() const noexcept { return cls_; }

private:
    ErrorClass cls_;
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ErrorClass::Data, what) {}
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(ErrorClass::Usage, what) {}
};

class EndpointError : public Error {
public:
    explicit EndpointError(const std::string& what) : Error(ErrorClass::Endpoint, what) {}
};

/// Carries a list of individual problems (offending ids, lines, rows).
class MultiDataError : public DataError {
public:
    MultiDataError(const std::string& kind, std::vector<std::string> problems)
        : DataError(format(kind, problems)), problems_(std::move(problems)) {}
    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    static std::string format(const std::string& kind, const std::vector<std::string>& problems) {
        std::string msg = kind + " (" + std::to_string(problems.size()) + ")";
        constexpr std::size_t kShown = 10;
        for (std::size_t i = 0; i < problems.size() && i < kShown; ++i) {
            msg += i == 0 ? ": " : "; ";
            msg += problems[i];
        }
        if (problems.size() > kShown) msg += "; ...";
        return msg;
    }
    std::vector<std::string> problems_;
};

// conditioner
class RenderError : public DataError {
public:
    using DataError::DataError;
};

class UnbreakableToken : public RenderError {
public:
    UnbreakableToken(std::string token, int token_width_px, int max_width_px)
        : RenderError("token '" + token + "' is " + std::to_string(token_width_px) +
                      " px wide, limit is " + std::to_string(max_width_px) + " px"),
          token_(std::move(token)), token_width_px_(token_width_px), max_width_px_(max_width_px) {}
    const std::string& token() const noexcept { return token_; }
    int token_width_px() const noexcept { return token_width_px_; }
    int max_width_px() const noexcept { return max_width_px_; }

private:
    std::string token_;
    int token_width_px_;
    int max_width_px_;
};

// corpus
class MissingImage : public MultiDataError {
public:
    explicit MissingImage(std::vector<std::string> paths) : MultiDataError("missing images", std::move(paths)) {}
};

class MalformedRecord : public MultiDataError {
public:
    explicit MalformedRecord(std::vector<std::string> problems)
        : MultiDataError("malformed records", std::move(problems)) {}
};

class SampleTooLarge : public DataError {
public:
    using DataError::DataError;
};

class DuplicatePhrase : public DataError {
public:
    using DataError::DataError;
};

class UnknownCategory : public DataError {
public:
    using DataError::DataError;
};

// vlm-client
class ConfigConflict : public UsageError {
public:
    using UsageError::UsageError;
};

class ConfigMismatch : public DataError {
public:
    using DataError::DataError;
};

class EndpointUnreachable : public EndpointError {
public:
    using EndpointError::EndpointError;
};

class AuthRejected : public EndpointError {
public:
    using EndpointError::EndpointError;
};

// metrics
class MissingTranscript : public MultiDataError {
public:
    explicit MissingTranscript(std::vector<std::string> ids)
        : MultiDataError("missing transcripts", std::move(ids)) {}
};

// tensor-io
class BadMagic : public DataError {
public:
    using DataError::DataError;
};

class VersionUnsupported : public DataError {
public:
    using DataError::DataError;
};

class TruncatedFile : public DataError {
public:
    TruncatedFile(const std::string& what, std::uint64_t offset)
        : DataError(what + " (truncated at byte " + std::to_string(offset) + ")"), offset_(offset) {}
    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

class ShapeMismatch : public DataError {
public:
    using DataError::DataError;
};

class SchemaViolation : public MultiDataError {
public:
    explicit SchemaViolation(std::vector<std::string> problems)
        : MultiDataError("schema violation", std::move(problems)) {}
};

// diagnostics
class LayerOutOfRange : public DataError {
public:
    using DataError::DataError;
};

class DegenerateSpan : public DataError {
public:
    using DataError::DataError;
};

// report
class MissingBaseline : public DataError {
public:
    using DataError::DataError;
};

class IoError : public DataError {
public:
    using DataError::DataError;
};

}  // namespace pii
