#pragma once

#include <stdexcept>
#include <string>

namespace crmdp {

/// Base class of every exception raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error { public: using Error::Error; };
class SingularMatrix : public Error { public: using Error::Error; };
class NumericalBreakdown : public Error { public: using Error::Error; };
class InvalidWeights : public Error { public: using Error::Error; };
class IterationLimit : public Error { public: using Error::Error; };
class EmptySet : public Error { public: using Error::Error; };
class TooLarge : public Error { public: using Error::Error; };
class InvalidFactors : public Error { public: using Error::Error; };
class InvalidEpsilon : public Error { public: using Error::Error; };
class NotFixedPoint : public Error { public: using Error::Error; };
class DomainError : public Error { public: using Error::Error; };
class TooFewSamples : public Error { public: using Error::Error; };

/// Raised when b times the largest exponent argument exceeds the double
/// precision guard; computations must move to the log domain.
class OverflowRisk : public Error {
public:
    OverflowRisk(const std::string& what, double exponent)
        : Error(what), exponent_(exponent) {}
    double exponent() const { return exponent_; }

private:
    double exponent_;
};

/// An iterative solver stopped before meeting its tolerance. Carries the
/// residual of the best iterate found.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

// Input-side failures surfaced by the instance loader and the CLI.
class ParseError : public Error { public: using Error::Error; };
class ValidationError : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };
class UsageError : public Error { public: using Error::Error; };

} // namespace crmdp
