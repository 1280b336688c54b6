#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace afec {

// Argument errors use std::invalid_argument; everything below is a
// domain failure that callers may want to tell apart.

class ArchiveError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class AnalysisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EncodingError : public std::runtime_error {
public:
    EncodingError(const std::string& what, std::size_t attempts, bool retryable)
        : std::runtime_error(what), attempts_(attempts), retryable_(retryable) {}

    std::size_t attempts() const noexcept { return attempts_; }
    bool retryable() const noexcept { return retryable_; }

private:
    std::size_t attempts_;
    bool retryable_;
};

class GraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class LoadError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class LookupError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class ClassificationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class NoReplyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IndexError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PipelineError : public std::runtime_error {
public:
    PipelineError(std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace afec
