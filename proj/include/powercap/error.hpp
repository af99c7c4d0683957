#ifndef POWERCAP_ERROR_HPP
#define POWERCAP_ERROR_HPP

#include <stdexcept>
#include <string>

namespace powercap {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument or configuration value.
class InvalidArgument : public Error
{
public:
    using Error::Error;
};

/// Malformed or truncated input file.
class ParseError : public Error
{
public:
    using Error::Error;
};

/// File written by an incompatible format version.
class VersionError : public ParseError
{
public:
    using ParseError::ParseError;
};

/// A required file (trained net, parameter file) does not exist.
class MissingArtifact : public Error
{
public:
    MissingArtifact(const std::string& what, std::string prerequisite)
        : Error(what), prerequisite_(std::move(prerequisite)) {}

    /// Subcommand that produces the missing artifact (may be empty).
    const std::string& prerequisite() const { return prerequisite_; }

private:
    std::string prerequisite_;
};

/// Non-finite values, divergence, or an exceeded iteration/time cap.
class NumericalError : public Error
{
public:
    using Error::Error;
};

} // namespace powercap

#endif // POWERCAP_ERROR_HPP
