#include "bistats/matfun.hpp"

#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

namespace bistats::matfun {

namespace {

void require_finite(const Eigen::MatrixXd& a, const char* who) {
    if (!a.allFinite()) {
        throw Overflow(std::string(who) + ": input has non-finite entries");
    }
}

// Distance from z to the set (-inf, 0] in the complex plane.
double distance_to_cut(std::complex<double> z) {
    if (z.real() <= 0.0) return std::abs(z.imag());
    return std::abs(z);
}

Eigen::LLT<Eigen::MatrixXd> cholesky_of_symmetrized(const Eigen::MatrixXd& s,
                                                    const NumericPolicy& policy) {
    if (s.rows() != s.cols()) {
        throw NotPositiveDefinite("solve_spd: matrix is not square");
    }
    require_finite(s, "solve_spd");
    const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    const double defect = (s - s.transpose()).cwiseAbs().maxCoeff();
    if (defect > policy.spd_symmetry_tol * scale) {
        throw NotPositiveDefinite("solve_spd: symmetry defect " + std::to_string(defect) +
                                  " exceeds tolerance");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(((s + s.transpose()) / 2.0).eval());
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("solve_spd: Cholesky factorization failed");
    }
    // Eigen's LLT tolerates zero pivots on the last row; reject those too.
    if (!(llt.matrixLLT().diagonal().minCoeff() > 0.0)) {
        throw NotPositiveDefinite("solve_spd: non-positive pivot");
    }
    return llt;
}

}  // namespace

Eigen::MatrixXd mat_exp(const Eigen::MatrixXd& a) {
    require_finite(a, "mat_exp");
    Eigen::MatrixXd result = a.exp();
    if (!result.allFinite()) {
        throw Overflow("mat_exp: result overflowed");
    }
    return result;
}

Eigen::MatrixXd mat_log(const Eigen::MatrixXd& a, const NumericPolicy& policy) {
    require_finite(a, "mat_log");
    Eigen::EigenSolver<Eigen::MatrixXd> eigs(a, /*computeEigenvectors=*/false);
    for (Eigen::Index i = 0; i < eigs.eigenvalues().size(); ++i) {
        if (distance_to_cut(eigs.eigenvalues()[i]) <= policy.spectrum_margin) {
            throw SpectrumOnCut("mat_log: eigenvalue on or near the closed negative real axis");
        }
    }
    Eigen::MatrixXd result = a.log();
    if (!result.allFinite()) {
        throw SpectrumOnCut("mat_log: non-finite result");
    }
    return result;
}

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& s, const Eigen::VectorXd& b,
                          const NumericPolicy& policy) {
    return cholesky_of_symmetrized(s, policy).solve(b);
}

Eigen::MatrixXd solve_spd(const Eigen::MatrixXd& s, const Eigen::MatrixXd& b,
                          const NumericPolicy& policy) {
    return cholesky_of_symmetrized(s, policy).solve(b);
}

double det(const Eigen::MatrixXd& a) {
    require_finite(a, "det");
    return Eigen::PartialPivLU<Eigen::MatrixXd>(a).determinant();
}

double logdet_spd(const Eigen::MatrixXd& s, const NumericPolicy& policy) {
    auto llt = cholesky_of_symmetrized(s, policy);
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace bistats::matfun
