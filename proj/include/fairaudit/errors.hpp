#pragma once

#include <stdexcept>
#include <string>

namespace fairaudit {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad column-role configuration (missing columns, malformed schema JSON).
// The CLI maps this to a usage error (exit 2).
class SchemaError : public Error {
public:
    using Error::Error;
};

// Bad data or arguments at runtime (exit 1 in the CLI).
class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace fairaudit
