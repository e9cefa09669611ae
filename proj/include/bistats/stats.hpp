#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "bistats/groups.hpp"
#include "bistats/numeric_policy.hpp"

namespace bistats::stats {

using groups::GroupDescriptor;
using groups::GroupElement;

/// Ordered collection of elements from one group.
struct SampleSet {
    GroupDescriptor descriptor;
    std::vector<GroupElement> elements;

    int size() const { return static_cast<int>(elements.size()); }

    /// Checks the shared-descriptor and non-emptiness invariants.
    void validate() const;
};

/// d x d symmetric positive-semidefinite matrix representing a covariance
/// (2,0)-tensor at the identity; weight records the sample count behind it.
struct CovarianceAtIdentity {
    GroupDescriptor descriptor;
    Eigen::MatrixXd matrix;
    double weight = 0.0;
};

/// Validates the symmetry / PSD invariants of an externally supplied
/// covariance (loaded from file, built by a caller).
void validate_covariance(const CovarianceAtIdentity& cov);

struct MeanResult {
    GroupElement mean;
    int iterations = 0;
    double residual = 0.0;
};

/// Group mean (exponential barycenter) by fixed-point iteration
/// mean <- mean * exp(average of log(mean^-1 g_i)), initialized at the first
/// sample. Converged when the update norm drops to tol; iterations counts
/// applied updates. Throws NotConverged past max_iter.
MeanResult group_mean(const SampleSet& samples, double tol = 1e-10, int max_iter = 100,
                      const NumericPolicy& policy = NumericPolicy::standard());

/// Left-centralized sample covariance (1/m) sum log(mean^-1 g_l) (x) itself.
CovarianceAtIdentity centralized_covariance(const SampleSet& samples, const GroupElement& mean,
                                            const NumericPolicy& policy = NumericPolicy::standard());

/// Left-pooled covariance (m Sigma_A + n Sigma_B) / (m + n - 2).
CovarianceAtIdentity pooled_covariance(const CovarianceAtIdentity& cov_a,
                                       const CovarianceAtIdentity& cov_b);

/// Left-averaged covariance (Sigma_A + Sigma_B) / 2.
CovarianceAtIdentity averaged_covariance(const CovarianceAtIdentity& cov_a,
                                         const CovarianceAtIdentity& cov_b);

/// Bi-invariant squared Mahalanobis distance of f to (mean, cov); solved via
/// Cholesky, never an explicit inverse.
double mahalanobis_sq(const GroupElement& f, const GroupElement& mean,
                      const CovarianceAtIdentity& cov,
                      const NumericPolicy& policy = NumericPolicy::standard());

/// Bi-invariant Hotelling T^2 statistic of two sample sets.
double hotelling_t2(const SampleSet& a, const SampleSet& b,
                    const NumericPolicy& policy = NumericPolicy::standard());

/// Bi-invariant Bhattacharyya distance; the determinant term is accumulated
/// from Cholesky factors.
double bhattacharyya(const SampleSet& a, const SampleSet& b,
                     const NumericPolicy& policy = NumericPolicy::standard());

/// Bi-invariant Hellinger distance sqrt(1 - exp(-D_B)), in [0, 1).
double hellinger(const SampleSet& a, const SampleSet& b,
                 const NumericPolicy& policy = NumericPolicy::standard());

/// Multivariate Hotelling T^2 on plain vectors (reduction oracle).
double euclidean_t2(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b);

/// Multivariate Bhattacharyya distance on plain vectors with 1/m-normalized
/// covariances (reduction oracle).
double euclidean_bhattacharyya(const std::vector<Eigen::VectorXd>& a,
                               const std::vector<Eigen::VectorXd>& b);

/// The two-sided Riemannian-style T^2 (average of the statistic at both
/// means) specialized to Euclidean data; kept as a comparison oracle to show
/// it does not coincide with euclidean_t2.
double riemannian_t2_euclidean(const std::vector<Eigen::VectorXd>& a,
                               const std::vector<Eigen::VectorXd>& b);

struct WrappedGaussianSample {
    SampleSet samples;
    long rejections = 0;
};

/// Draws n elements connection_exp(mean, v_i) with v_i ~ N(0, cov) in
/// identity coordinates. Deterministic per seed. Tangent draws outside the
/// principal-log-domain margin are rejected and redrawn; throws
/// CovarianceTooLarge when more than half of all draws get rejected.
WrappedGaussianSample sample_wrapped_gaussian(const GroupDescriptor& descriptor,
                                              const GroupElement& mean,
                                              const CovarianceAtIdentity& cov, int n,
                                              std::uint64_t seed,
                                              const NumericPolicy& policy =
                                                  NumericPolicy::standard());

}  // namespace bistats::stats
