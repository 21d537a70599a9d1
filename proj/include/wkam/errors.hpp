#pragma once

#include <stdexcept>
#include <string>

namespace wkam {

/// Error categories mapped to CLI exit codes (usage/config -> 2, numeric -> 3).
enum class ErrorKind { Usage, Config, Numeric, Logic };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

inline Error config_error(const std::string& what) { return Error(ErrorKind::Config, what); }
inline Error numeric_error(const std::string& what) { return Error(ErrorKind::Numeric, what); }
inline Error logic_error(const std::string& what) { return Error(ErrorKind::Logic, what); }

}  // namespace wkam
