#pragma once

#include <stdexcept>
#include <string>

namespace bistats {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- matrix kernels -------------------------------------------------------

/// A matrix-function result contains non-finite entries.
class Overflow : public Error {
public:
    using Error::Error;
};

/// The principal matrix logarithm does not exist: an eigenvalue lies on
/// (or within the configured margin of) the closed negative real axis.
class SpectrumOnCut : public Error {
public:
    using Error::Error;
};

/// A symmetric factorization failed; the matrix is not positive definite.
class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

// --- groups ---------------------------------------------------------------

/// Operands of a group operation live on different groups.
class DescriptorMismatch : public Error {
public:
    using Error::Error;
};

/// The element is outside the principal-logarithm domain of its group.
class OutsideLogDomain : public Error {
public:
    using Error::Error;
};

/// A product group needs at least one factor.
class EmptyProduct : public Error {
public:
    using Error::Error;
};

/// A payload violates the invariants of its group kind.
class InvalidElement : public Error {
public:
    using Error::Error;
};

// --- stats ----------------------------------------------------------------

/// The group-mean fixed point did not reach the tolerance.
class NotConverged : public Error {
public:
    NotConverged(int iterations, double residual)
        : Error("group mean did not converge after " + std::to_string(iterations) +
                " iterations (residual " + std::to_string(residual) + ")"),
          iterations(iterations),
          residual(residual) {}

    int iterations;
    double residual;
};

/// Pooled covariance needs m + n > 2.
class DegenerateWeights : public Error {
public:
    using Error::Error;
};

/// Wrapped-Gaussian sampling rejected more than half of the tangent draws.
class CovarianceTooLarge : public Error {
public:
    using Error::Error;
};

// --- testing --------------------------------------------------------------

/// The test statistic is undefined on the original (unpermuted) split.
class BaselineDegenerate : public Error {
public:
    using Error::Error;
};

/// A permutation test needs m + n >= 4 joint samples.
class TooFewSamples : public Error {
public:
    using Error::Error;
};

/// The normal-score covariance of the global test is singular.
class ScoreCovarianceSingular : public Error {
public:
    using Error::Error;
};

/// Argument outside the domain of the inverse normal CDF.
class OutOfDomain : public Error {
public:
    using Error::Error;
};

// --- shape ----------------------------------------------------------------

/// PCA axes are ambiguous: the vertex-covariance spectrum has a (near-)tie.
class DegenerateSpectrum : public Error {
public:
    using Error::Error;
};

/// A simplicial deformation is not orientation-preserving on some face.
class OrientationFlip : public Error {
public:
    using Error::Error;
};

/// A mesh face has (near-)zero area.
class DegenerateFace : public Error {
public:
    using Error::Error;
};

/// Rank-deficient cross-covariance in Procrustes alignment.
class DegenerateConfiguration : public Error {
public:
    using Error::Error;
};

// --- io -------------------------------------------------------------------

/// Malformed dataset, mesh, or report file.
class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace bistats
