#pragma once

#include <stdexcept>
#include <string>

namespace dparse {

// Exit-code mapping used by the CLI: 2 config, 3 input, 4 backend.
class Error : public std::runtime_error {
public:
    explicit Error(std::string msg) : std::runtime_error(std::move(msg)) {}
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class BackendError : public Error {
public:
    using Error::Error;
};

}  // namespace dparse
