#pragma once

#include <Eigen/Dense>

#include "bistats/errors.hpp"
#include "bistats/numeric_policy.hpp"

namespace bistats::matfun {

/// Matrix exponential via scaling-and-squaring with Pade approximants.
/// Throws Overflow if the result contains non-finite entries.
Eigen::MatrixXd mat_exp(const Eigen::MatrixXd& a);

/// Principal matrix logarithm via inverse scaling-and-squaring on the real
/// Schur form. The spectrum is checked first: eigenvalues within
/// policy.spectrum_margin of the closed negative real axis raise
/// SpectrumOnCut rather than flipping branches.
Eigen::MatrixXd mat_log(const Eigen::MatrixXd& a,
                        const NumericPolicy& policy = NumericPolicy::standard());

/// Solves S x = b for symmetric positive definite S via Cholesky.
/// Accepts a symmetry defect up to policy.spd_symmetry_tol (relative) and
/// symmetrizes; throws NotPositiveDefinite if the factorization fails.
Eigen::VectorXd solve_spd(const Eigen::MatrixXd& s, const Eigen::VectorXd& b,
                          const NumericPolicy& policy = NumericPolicy::standard());

/// Matrix right-hand-side overload of solve_spd.
Eigen::MatrixXd solve_spd(const Eigen::MatrixXd& s, const Eigen::MatrixXd& b,
                          const NumericPolicy& policy = NumericPolicy::standard());

/// Determinant via LU with partial pivoting (exact sign).
double det(const Eigen::MatrixXd& a);

/// log(det S) for symmetric positive definite S, accumulated from the
/// Cholesky factor so large dimensions cannot overflow the raw determinant.
double logdet_spd(const Eigen::MatrixXd& s,
                  const NumericPolicy& policy = NumericPolicy::standard());

}  // namespace bistats::matfun
