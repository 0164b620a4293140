#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace carts {

/// Base of every error the engine raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DuplicateItemId : public Error {
public:
    explicit DuplicateItemId(const std::string& id)
        : Error("duplicate item id: " + id), id_(id) {}
    const std::string& id() const { return id_; }

private:
    std::string id_;
};

class EmptyJob : public Error {
public:
    explicit EmptyJob(const std::string& module_id)
        : Error("module " + module_id + " has no items") {}
};

class EmptyTitleText : public Error {
public:
    explicit EmptyTitleText(const std::string& item_id)
        : Error("item " + item_id + " has an empty title") {}
};

class InvalidValue : public Error {
public:
    using Error::Error;
};

class InvalidConfig : public Error {
public:
    using Error::Error;
};

class InvalidTheoryParams : public Error {
public:
    using Error::Error;
};

class NoFeasibleCandidate : public Error {
public:
    NoFeasibleCandidate() : Error("no candidate satisfies the title constraints") {}
};

/// Transport failure, non-success status or an exhausted script.
class BackendError : public Error {
public:
    using Error::Error;
};

class ScriptExhausted : public BackendError {
public:
    explicit ScriptExhausted(const std::string& stream)
        : BackendError("scripted backend exhausted for stream '" + stream + "'") {}
};

/// An agent reply could not be parsed after all retries.
class ParseFailure : public Error {
public:
    ParseFailure(const std::string& role, std::size_t attempts, const std::string& last)
        : Error(role + " reply unparseable after " + std::to_string(attempts) +
                " attempt(s); last reply: \"" + last + "\"") {}
};

class JudgeParseFailure : public Error {
public:
    JudgeParseFailure(std::size_t attempts, const std::string& last)
        : Error("judge reply is neither 1 nor 0 after " + std::to_string(attempts) +
                " attempt(s); last reply: \"" + last + "\"") {}
};

class TemplateError : public Error {
public:
    using Error::Error;
};

class JobFailed : public Error {
public:
    JobFailed(const std::string& module_id, const std::string& reason)
        : Error("module " + module_id + " failed: " + reason) {}
};

class FileNotFound : public Error {
public:
    explicit FileNotFound(const std::string& path) : Error("file not found: " + path) {}
};

class SchemaError : public Error {
public:
    SchemaError(std::size_t line, const std::string& reason)
        : Error("line " + std::to_string(line) + ": " + reason), line_(line), reason_(reason) {}
    std::size_t line() const { return line_; }
    const std::string& reason() const { return reason_; }

private:
    std::size_t line_;
    std::string reason_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace carts
