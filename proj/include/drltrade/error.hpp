#pragma once

#include <stdexcept>
#include <string>

namespace drltrade {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind { Config = 2, Io = 3, Numeric = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

inline Error config_error(const std::string& what) { return {ErrorKind::Config, what}; }
inline Error io_error(const std::string& what) { return {ErrorKind::Io, what}; }
inline Error numeric_error(const std::string& what) { return {ErrorKind::Numeric, what}; }

}  // namespace drltrade
