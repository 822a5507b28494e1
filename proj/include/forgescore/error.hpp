#pragma once

#include <stdexcept>
#include <string>

namespace forgescore {

// Broad failure classes; the CLI maps them onto exit codes 1/2/3.
enum class ErrorKind { usage, data, numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error data_error(const std::string& what) { return Error(ErrorKind::data, what); }
inline Error usage_error(const std::string& what) { return Error(ErrorKind::usage, what); }
inline Error numeric_error(const std::string& what) { return Error(ErrorKind::numeric, what); }

}  // namespace forgescore
