// errors.hpp - exception types shared by every module.
//
// Validation problems (bad manifests, illegal configs, broken layer chains)
// and arithmetic overflow are distinct so the CLI can map them to distinct
// exit codes.
#pragma once

#include <stdexcept>
#include <string>

namespace snnaccel {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input, illegal configuration, shape or bit-width violation.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Manifest/blob could not be parsed.
class ParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// A fixed-width datapath (12-bit engine psum, 18-bit merged psum, membrane
// potential) would have to wrap.
class OverflowError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace snnaccel
