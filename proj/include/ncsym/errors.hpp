#pragma once

#include <stdexcept>
#include <string>

namespace ncsym {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidValue : public Error {
public:
    using Error::Error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class IntegrationDiverged : public Error {
public:
    using Error::Error;
};

class SignalExhausted : public Error {
public:
    using Error::Error;
};

class UnsupportedDomain : public Error {
public:
    using Error::Error;
};

class UnsupportedCertificate : public Error {
public:
    using Error::Error;
};

class EmptyGrid : public Error {
public:
    using Error::Error;
};

// Raised when an exploration exceeds its configured state or path budget.
// Carries whatever statistics were gathered before the abort.
class CapExceeded : public Error {
public:
    CapExceeded(const std::string& what, std::size_t explored, std::size_t transitions)
        : Error(what), explored_(explored), transitions_(transitions) {}

    std::size_t explored() const { return explored_; }
    std::size_t transitions() const { return transitions_; }

private:
    std::size_t explored_;
    std::size_t transitions_;
};

class SpecTooLarge : public Error {
public:
    using Error::Error;
};

class InfeasibleScenario : public Error {
public:
    using Error::Error;
};

class RuntimeDomainMiss : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace ncsym
