#pragma once

#include <stdexcept>
#include <string>

namespace macrofp {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Grid sizes that are zero, non-square or mismatched.
class DimensionError : public Error
{
public:
    using Error::Error;
};

/// Apertures or aperture grids that do not fit the Fourier plane, or invalid
/// physical parameters.
class GeometryError : public Error
{
public:
    using Error::Error;
};

/// The resolution chart layout cannot hold the requested groups.
class LayoutError : public Error
{
public:
    using Error::Error;
};

/// Invalid arguments to an operation (empty sets, mode mismatches, ...).
class InputError : public Error
{
public:
    using Error::Error;
};

/// A non-finite value appeared during reconstruction.
class NumericalError : public Error
{
public:
    NumericalError(const std::string& what, int iteration)
        : Error(what + " (iteration " + std::to_string(iteration) + ")"), iteration_(iteration)
    {
    }

    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

/// Bad experiment configuration; carries the 1-based line number when known.
class ConfigError : public Error
{
public:
    explicit ConfigError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line)
    {
    }

    int line() const noexcept { return line_; }

private:
    int line_;
};

/// File system or file format failures.
class IoError : public Error
{
public:
    using Error::Error;
};

/// A dataset file does not match the checksum recorded in its manifest.
class ChecksumError : public IoError
{
public:
    using IoError::IoError;
};

} // namespace macrofp
