#pragma once

#include <stdexcept>
#include <string>

namespace uw {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Unsupported or malformed file content (image codecs, manifests).
class FormatError : public Error {
public:
    using Error::Error;
};

// Operands whose extents disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Weight file failed its integrity checks (truncation, checksum).
class CorruptionError : public Error {
public:
    using Error::Error;
};

class VersionError : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Loss or activation left the finite range during training.
class NumericError : public Error {
public:
    using Error::Error;
};

// Unknown image, rater, tournament or candidate.
class NotFoundError : public Error {
public:
    using Error::Error;
};

// Request is valid on its own but not in the current state (duplicate tournament,
// label before the final pick, ...).
class StateError : public Error {
public:
    using Error::Error;
};

}  // namespace uw
