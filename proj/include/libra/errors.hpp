#pragma once

#include <stdexcept>
#include <string>

namespace libra {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: malformed files, config violations, broken preconditions.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A pipeline stage ran before the stage that produces its input.
class UpstreamMissingError : public Error {
public:
    UpstreamMissingError(const std::string& artifact, const std::string& producer)
        : Error("missing upstream artifact '" + artifact + "' (run `libra " + producer + "` first)"),
          artifact_(artifact), producer_(producer) {}

    const std::string& artifact() const noexcept { return artifact_; }
    const std::string& producer() const noexcept { return producer_; }

private:
    std::string artifact_;
    std::string producer_;
};

/// A model backend failed after retries, or returned a malformed response.
class ProviderError : public Error {
public:
    using Error::Error;
};

/// Violated internal identity; indicates a pipeline bug rather than bad input.
class InternalError : public Error {
public:
    using Error::Error;
};

}  // namespace libra
