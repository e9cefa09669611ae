#include "bistats/stats.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "bistats/matfun.hpp"
#include "bistats/rng.hpp"

namespace bistats::stats {

namespace {

using groups::connection_exp;
using groups::connection_log;
using groups::TangentCoords;

Eigen::VectorXd mean_of(const std::vector<Eigen::VectorXd>& xs) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(xs.front().size());
    for (const auto& x : xs) m += x;
    return m / static_cast<double>(xs.size());
}

// (1/m) sum (x - center)(x - center)^T
Eigen::MatrixXd scatter_of(const std::vector<Eigen::VectorXd>& xs, const Eigen::VectorXd& center) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(center.size(), center.size());
    for (const auto& x : xs) {
        const Eigen::VectorXd d = x - center;
        s += d * d.transpose();
    }
    return s / static_cast<double>(xs.size());
}

double quadratic_form_spd(const Eigen::MatrixXd& s, const Eigen::VectorXd& v,
                          const NumericPolicy& policy) {
    // v = 0 gives 0 for every covariance; skipping the solve keeps equal-mean
    // comparisons (and constant data sets) defined at the singular boundary.
    if (v.isZero(0.0)) return 0.0;
    return std::max(0.0, v.dot(matfun::solve_spd(s, v, policy)));
}

}  // namespace

void SampleSet::validate() const {
    if (elements.empty()) {
        throw InvalidElement("sample set must contain at least one element");
    }
    for (const auto& e : elements) {
        if (e.descriptor() != descriptor) {
            throw DescriptorMismatch("sample set mixes elements of " + e.descriptor().tag() +
                                     " into " + descriptor.tag());
        }
    }
}

void validate_covariance(const CovarianceAtIdentity& cov) {
    const auto& m = cov.matrix;
    if (m.rows() != cov.descriptor.dim() || m.cols() != cov.descriptor.dim()) {
        throw InvalidElement("covariance size does not match the group dimension");
    }
    if (!m.allFinite()) throw InvalidElement("covariance has non-finite entries");
    const double scale = std::max(1e-300, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw InvalidElement("covariance is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(m, Eigen::EigenvaluesOnly);
    const double max_eig = std::max(0.0, eigs.eigenvalues().maxCoeff());
    if (eigs.eigenvalues().minCoeff() < -1e-10 * std::max(1e-300, max_eig)) {
        throw InvalidElement("covariance is not positive semidefinite");
    }
}

MeanResult group_mean(const SampleSet& samples, double tol, int max_iter,
                      const NumericPolicy& policy) {
    samples.validate();
    const int m = samples.size();
    GroupElement mean = samples.elements.front();
    double residual = 0.0;
    for (int iter = 0; iter <= max_iter; ++iter) {
        Eigen::VectorXd update = Eigen::VectorXd::Zero(samples.descriptor.dim());
        for (const auto& g : samples.elements) {
            update += connection_log(mean, g, policy).coords;
        }
        update /= static_cast<double>(m);
        residual = update.norm();
        if (residual <= tol) {
            return {mean, iter, residual};
        }
        if (iter == max_iter) break;
        mean = connection_exp(mean, {samples.descriptor, update});
    }
    throw NotConverged(max_iter, residual);
}

CovarianceAtIdentity centralized_covariance(const SampleSet& samples, const GroupElement& mean,
                                            const NumericPolicy& policy) {
    samples.validate();
    const int d = samples.descriptor.dim();
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(d, d);
    for (const auto& g : samples.elements) {
        const Eigen::VectorXd v = connection_log(mean, g, policy).coords;
        sigma += v * v.transpose();
    }
    sigma /= static_cast<double>(samples.size());
    return {samples.descriptor, sigma, static_cast<double>(samples.size())};
}

CovarianceAtIdentity pooled_covariance(const CovarianceAtIdentity& cov_a,
                                       const CovarianceAtIdentity& cov_b) {
    if (cov_a.descriptor != cov_b.descriptor) {
        throw DescriptorMismatch("pooled_covariance: covariances from different groups");
    }
    const double m = cov_a.weight;
    const double n = cov_b.weight;
    if (m + n <= 2.0) {
        throw DegenerateWeights("pooled_covariance: m + n must exceed 2");
    }
    Eigen::MatrixXd pooled = (m * cov_a.matrix + n * cov_b.matrix) / (m + n - 2.0);
    return {cov_a.descriptor, std::move(pooled), m + n};
}

CovarianceAtIdentity averaged_covariance(const CovarianceAtIdentity& cov_a,
                                         const CovarianceAtIdentity& cov_b) {
    if (cov_a.descriptor != cov_b.descriptor) {
        throw DescriptorMismatch("averaged_covariance: covariances from different groups");
    }
    return {cov_a.descriptor, ((cov_a.matrix + cov_b.matrix) / 2.0).eval(),
            cov_a.weight + cov_b.weight};
}

double mahalanobis_sq(const GroupElement& f, const GroupElement& mean,
                      const CovarianceAtIdentity& cov, const NumericPolicy& policy) {
    const Eigen::VectorXd v = connection_log(mean, f, policy).coords;
    return quadratic_form_spd(cov.matrix, v, policy);
}

double hotelling_t2(const SampleSet& a, const SampleSet& b, const NumericPolicy& policy) {
    const double m = a.size();
    const double n = b.size();
    const GroupElement mean_a = group_mean(a, 1e-10, 100, policy).mean;
    const GroupElement mean_b = group_mean(b, 1e-10, 100, policy).mean;
    const auto pooled = pooled_covariance(centralized_covariance(a, mean_a, policy),
                                          centralized_covariance(b, mean_b, policy));
    const Eigen::VectorXd v = connection_log(mean_a, mean_b, policy).coords;
    return (m * n / (m + n)) * quadratic_form_spd(pooled.matrix, v, policy);
}

double bhattacharyya(const SampleSet& a, const SampleSet& b, const NumericPolicy& policy) {
    const GroupElement mean_a = group_mean(a, 1e-10, 100, policy).mean;
    const GroupElement mean_b = group_mean(b, 1e-10, 100, policy).mean;
    const auto cov_a = centralized_covariance(a, mean_a, policy);
    const auto cov_b = centralized_covariance(b, mean_b, policy);
    const auto avg = averaged_covariance(cov_a, cov_b);
    const Eigen::VectorXd v = connection_log(mean_a, mean_b, policy).coords;
    const double mean_term = quadratic_form_spd(avg.matrix, v, policy) / 8.0;
    // Equal covariances give a determinant ratio of one even at the singular
    // boundary (constant data); otherwise accumulate log-dets from Cholesky.
    double det_term = 0.0;
    if (!(cov_a.matrix.array() == cov_b.matrix.array()).all()) {
        det_term = 0.5 * (matfun::logdet_spd(avg.matrix, policy) -
                          0.5 * matfun::logdet_spd(cov_a.matrix, policy) -
                          0.5 * matfun::logdet_spd(cov_b.matrix, policy));
    }
    return std::max(0.0, mean_term + det_term);
}

double hellinger(const SampleSet& a, const SampleSet& b, const NumericPolicy& policy) {
    const double h = std::sqrt(-std::expm1(-bhattacharyya(a, b, policy)));
    // 1 - exp(-d) rounds to 1 for d > ~37; keep the documented range [0, 1).
    return std::min(h, std::nextafter(1.0, 0.0));
}

double euclidean_t2(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b) {
    const double m = static_cast<double>(a.size());
    const double n = static_cast<double>(b.size());
    if (m + n <= 2.0) throw DegenerateWeights("euclidean_t2: m + n must exceed 2");
    const Eigen::VectorXd mean_a = mean_of(a);
    const Eigen::VectorXd mean_b = mean_of(b);
    const Eigen::MatrixXd pooled =
        (m * scatter_of(a, mean_a) + n * scatter_of(b, mean_b)) / (m + n - 2.0);
    const Eigen::VectorXd d = mean_a - mean_b;
    return (m * n / (m + n)) * quadratic_form_spd(pooled, d, NumericPolicy::standard());
}

double euclidean_bhattacharyya(const std::vector<Eigen::VectorXd>& a,
                               const std::vector<Eigen::VectorXd>& b) {
    const NumericPolicy& policy = NumericPolicy::standard();
    const Eigen::VectorXd mean_a = mean_of(a);
    const Eigen::VectorXd mean_b = mean_of(b);
    const Eigen::MatrixXd s_a = scatter_of(a, mean_a);
    const Eigen::MatrixXd s_b = scatter_of(b, mean_b);
    const Eigen::MatrixXd s_avg = (s_a + s_b) / 2.0;
    const Eigen::VectorXd d = mean_a - mean_b;
    const double mean_term = quadratic_form_spd(s_avg, d, policy) / 8.0;
    const double det_term = 0.5 * (matfun::logdet_spd(s_avg, policy) -
                                   0.5 * matfun::logdet_spd(s_a, policy) -
                                   0.5 * matfun::logdet_spd(s_b, policy));
    return std::max(0.0, mean_term + det_term);
}

double riemannian_t2_euclidean(const std::vector<Eigen::VectorXd>& a,
                               const std::vector<Eigen::VectorXd>& b) {
    const NumericPolicy& policy = NumericPolicy::standard();
    const Eigen::VectorXd mean_a = mean_of(a);
    const Eigen::VectorXd mean_b = mean_of(b);
    const Eigen::VectorXd d = mean_b - mean_a;
    return 0.5 * (quadratic_form_spd(scatter_of(a, mean_a), d, policy) +
                  quadratic_form_spd(scatter_of(b, mean_b), d, policy));
}

WrappedGaussianSample sample_wrapped_gaussian(const GroupDescriptor& descriptor,
                                              const GroupElement& mean,
                                              const CovarianceAtIdentity& cov, int n,
                                              std::uint64_t seed, const NumericPolicy& policy) {
    if (n < 1) throw InvalidElement("sample_wrapped_gaussian: n must be >= 1");
    if (mean.descriptor() != descriptor || cov.descriptor != descriptor) {
        throw DescriptorMismatch("sample_wrapped_gaussian: descriptor mismatch");
    }
    validate_covariance(cov);
    const int d = descriptor.dim();

    // PSD factor A with A A^T = cov (eigendecomposition; tolerates rank
    // deficiency, in particular the zero covariance).
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(cov.matrix);
    const Eigen::VectorXd scale = eigs.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXd factor = eigs.eigenvectors() * scale.asDiagonal();

    rng::Generator gen(seed);
    WrappedGaussianSample out;
    out.samples.descriptor = descriptor;
    out.samples.elements.reserve(n);
    const long bailout = 2L * n + 32;
    while (out.samples.size() < n) {
        Eigen::VectorXd z(d);
        for (int i = 0; i < d; ++i) z(i) = gen.normal();
        const TangentCoords v{descriptor, factor * z};
        if (!groups::tangent_in_log_domain(v, policy.angle_margin)) {
            if (++out.rejections > bailout) {
                throw CovarianceTooLarge(
                    "sample_wrapped_gaussian: rejection rate exceeds 50%, covariance too large "
                    "for the log domain");
            }
            continue;
        }
        out.samples.elements.push_back(connection_exp(mean, v));
    }
    if (out.rejections > n) {
        throw CovarianceTooLarge(
            "sample_wrapped_gaussian: rejection rate exceeds 50%, covariance too large for the "
            "log domain");
    }
    return out;
}

}  // namespace bistats::stats
