#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bistats/stats.hpp"

namespace bistats::testing {

using stats::SampleSet;

enum class Statistic { HotellingT2, Bhattacharyya, Hellinger };

std::string to_string(Statistic s);
Statistic statistic_from_string(const std::string& name);

/// Evaluates the configured two-sample statistic.
double evaluate_statistic(Statistic s, const SampleSet& a, const SampleSet& b);

struct PermutationConfig {
    int n_permutations = 10000;
    std::uint64_t seed = 0;
    Statistic statistic = Statistic::HotellingT2;
    /// Worker count for the permutation loop; results are identical for any
    /// value (shuffles are precomputed, reductions are ordered).
    int threads = 1;
};

struct TestReport {
    double baseline = 0.0;
    /// Statistics of the non-degenerate permutations, in permutation order.
    std::vector<double> perm_stats;
    double p_value = 1.0;
    /// Permutations on which the statistic was undefined (singular
    /// covariance, non-convergent mean, log-domain violation).
    long degenerate_count = 0;
    PermutationConfig config;
};

/// Two-sample permutation test under the null of equal distributions.
/// Draws n_permutations random relabelings of the joint multiset (seeded,
/// reproducible) and returns p = #(T_l >= T_0) / L over the non-degenerate
/// permutations. The unpermuted split is itself a relabeling, so the count
/// is floored at one tie and p >= 1/L.
TestReport permutation_test(const SampleSet& a, const SampleSet& b,
                            const PermutationConfig& config);

struct LocalTestReport {
    /// Per-component p-values; NaN where the baseline statistic was
    /// undefined for that component.
    std::vector<double> p_values;
    /// BH rejection mask at level alpha (failed components never reject).
    std::vector<bool> reject_mask;
    double alpha = 0.05;
    /// Rows = components with a defined baseline, columns = baseline
    /// followed by the non-degenerate permutations (input to global_test).
    Eigen::MatrixXd stat_matrix;
    /// Maps rows of stat_matrix back to component indices.
    std::vector<int> matrix_components;
    /// Permutations dropped for all components because some component's
    /// statistic was undefined there (keeps the columns aligned).
    long degenerate_columns = 0;
    PermutationConfig config;
};

/// Component-wise permutation tests on a product group with one shared
/// permutation sequence across components, plus BH correction.
LocalTestReport local_tests(const SampleSet& a, const SampleSet& b,
                            const PermutationConfig& config, double alpha = 0.05);

/// Benjamini-Hochberg step-up rejection mask at level alpha. Ties at the
/// threshold are all rejected.
std::vector<bool> bh_fdr(const std::vector<double>& p_values, double alpha = 0.05);

/// Inverse standard-normal CDF (rational approximation with one Halley
/// refinement); absolute error below 1e-9 on (1e-10, 1 - 1e-10).
double inv_norm_cdf(double u);

/// Global normal-score Mahalanobis test over a component x statistic matrix
/// (column 0 = baseline). Each row is mapped through its empirical CDF and
/// the inverse normal CDF; the squared Mahalanobis distances of the score
/// columns give the permutation distribution. Optional positive per-row
/// weights rescale the scores (uniform weights reproduce the plain
/// formulation exactly).
double global_test(const Eigen::MatrixXd& stat_matrix,
                   const Eigen::VectorXd* weights = nullptr);

}  // namespace bistats::testing
