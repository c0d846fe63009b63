#pragma once

#include <stdexcept>
#include <string>

namespace mhnlm {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition or parameter invariant was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Image file could not be read or written.
class ImageIoError : public Error {
public:
    enum class Kind {
        Unreadable,        ///< missing file, permission, short read
        Malformed,         ///< header or payload does not parse
        NotGrayscale,      ///< a color format (P3/P6, RGB PNG, ...)
        UnsupportedDepth,  ///< anything other than 8 bits per sample
        WriteFailed,
    };

    ImageIoError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

}  // namespace mhnlm
