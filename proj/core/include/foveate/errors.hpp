#pragma once

#include <stdexcept>
#include <string>

namespace foveate {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Möbius matrix with |ad - bc| below the degeneracy threshold.
class DegenerateParams : public Error {
public:
    using Error::Error;
};

class OutOfBounds : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

class ZeroVector : public Error {
public:
    using Error::Error;
};

/// A perceptual weight on the plugin metric was set but no plugin was supplied.
class MissingPlugin : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class InvalidImage : public Error {
public:
    using Error::Error;
};

/// Transport-level failure talking to an oracle (spawn, connect, EOF, timeout).
class OracleUnavailable : public Error {
public:
    using Error::Error;
};

/// The oracle answered with an "error" reply.
class OracleError : public Error {
public:
    using Error::Error;
};

/// Malformed message or mismatched request id on the oracle wire.
class ProtocolError : public Error {
public:
    using Error::Error;
};

class ZeroBaseline : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace foveate
