#include "bistats/testing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "bistats/matfun.hpp"
#include "bistats/parallel.hpp"
#include "bistats/rng.hpp"

namespace bistats::testing {

namespace {

using groups::GroupElement;

// Errors that make a statistic undefined on one particular relabeling.
template <typename Fn>
std::optional<double> try_statistic(const Fn& fn) {
    try {
        return fn();
    } catch (const NotPositiveDefinite&) {
    } catch (const NotConverged&) {
    } catch (const OutsideLogDomain&) {
    }
    return std::nullopt;
}

std::vector<std::vector<int>> draw_shuffles(std::uint64_t seed, int count, int size) {
    rng::Generator gen(rng::derive_seed(seed, 0));
    std::vector<std::vector<int>> shuffles;
    shuffles.reserve(count);
    for (int l = 0; l < count; ++l) shuffles.push_back(gen.permutation(size));
    return shuffles;
}

std::pair<SampleSet, SampleSet> split_by(const std::vector<GroupElement>& joint,
                                         const std::vector<int>& order, int m,
                                         const groups::GroupDescriptor& desc) {
    SampleSet a{desc, {}};
    SampleSet b{desc, {}};
    a.elements.reserve(m);
    b.elements.reserve(joint.size() - m);
    for (size_t k = 0; k < joint.size(); ++k) {
        (static_cast<int>(k) < m ? a : b).elements.push_back(joint[order[k]]);
    }
    return {std::move(a), std::move(b)};
}

double p_from_count(long count, long total) {
    // The unpermuted split is itself a relabeling and always ties with the
    // baseline, so the count is floored at one and p >= 1/L.
    return static_cast<double>(std::max<long>(count, 1)) / static_cast<double>(total);
}

std::vector<GroupElement> marginal(const std::vector<GroupElement>& elements, int i) {
    std::vector<GroupElement> out;
    out.reserve(elements.size());
    for (const auto& e : elements) out.push_back(groups::component(e, i));
    return out;
}

}  // namespace

std::string to_string(Statistic s) {
    switch (s) {
        case Statistic::HotellingT2:
            return "t2";
        case Statistic::Bhattacharyya:
            return "bhattacharyya";
        case Statistic::Hellinger:
            return "hellinger";
    }
    return "?";
}

Statistic statistic_from_string(const std::string& name) {
    if (name == "t2") return Statistic::HotellingT2;
    if (name == "bhattacharyya") return Statistic::Bhattacharyya;
    if (name == "hellinger") return Statistic::Hellinger;
    throw ParseError("unknown statistic '" + name + "' (expected t2|bhattacharyya|hellinger)");
}

double evaluate_statistic(Statistic s, const SampleSet& a, const SampleSet& b) {
    switch (s) {
        case Statistic::HotellingT2:
            return stats::hotelling_t2(a, b);
        case Statistic::Bhattacharyya:
            return stats::bhattacharyya(a, b);
        case Statistic::Hellinger:
            return stats::hellinger(a, b);
    }
    throw ParseError("unknown statistic");
}

TestReport permutation_test(const SampleSet& a, const SampleSet& b,
                            const PermutationConfig& config) {
    a.validate();
    b.validate();
    if (a.descriptor != b.descriptor) {
        throw DescriptorMismatch("permutation_test: sample sets on different groups");
    }
    if (config.n_permutations < 1) {
        throw ParseError("permutation_test: need at least one permutation");
    }
    const int m = a.size();
    const int n = b.size();
    if (m + n < 4) throw TooFewSamples("permutation_test: need m + n >= 4");

    TestReport report;
    report.config = config;
    try {
        report.baseline = evaluate_statistic(config.statistic, a, b);
    } catch (const Error& e) {
        throw BaselineDegenerate(std::string("statistic undefined on the original split: ") +
                                 e.what());
    }

    std::vector<GroupElement> joint = a.elements;
    joint.insert(joint.end(), b.elements.begin(), b.elements.end());
    const auto shuffles = draw_shuffles(config.seed, config.n_permutations, m + n);

    std::vector<std::optional<double>> slots(config.n_permutations);
    parallel::parallel_for(slots.size(), config.threads, [&](size_t l) {
        auto [pa, pb] = split_by(joint, shuffles[l], m, a.descriptor);
        slots[l] = try_statistic(
            [&] { return evaluate_statistic(config.statistic, pa, pb); });
    });

    long count = 0;
    report.perm_stats.reserve(slots.size());
    for (const auto& slot : slots) {
        if (!slot) {
            ++report.degenerate_count;
            continue;
        }
        report.perm_stats.push_back(*slot);
        if (*slot >= report.baseline) ++count;
    }
    if (report.perm_stats.empty()) {
        throw NotPositiveDefinite("permutation_test: statistic undefined on every permutation");
    }
    report.p_value = p_from_count(count, static_cast<long>(report.perm_stats.size()));
    return report;
}

LocalTestReport local_tests(const SampleSet& a, const SampleSet& b,
                            const PermutationConfig& config, double alpha) {
    a.validate();
    b.validate();
    if (a.descriptor != b.descriptor) {
        throw DescriptorMismatch("local_tests: sample sets on different groups");
    }
    const int m = a.size();
    const int n = b.size();
    if (m + n < 4) throw TooFewSamples("local_tests: need m + n >= 4");
    const int n_comp = groups::component_count(a.descriptor);

    LocalTestReport report;
    report.config = config;
    report.alpha = alpha;

    // Component marginals of both sets and of the joint multiset.
    std::vector<SampleSet> comp_a, comp_b;
    std::vector<std::vector<GroupElement>> comp_joint;
    for (int i = 0; i < n_comp; ++i) {
        const auto fdesc =
            (n_comp > 1 || a.descriptor.kind() == groups::GroupKind::Product)
                ? a.descriptor.factors()[i]
                : a.descriptor;
        comp_a.push_back({fdesc, marginal(a.elements, i)});
        comp_b.push_back({fdesc, marginal(b.elements, i)});
        auto joint = comp_a.back().elements;
        joint.insert(joint.end(), comp_b.back().elements.begin(), comp_b.back().elements.end());
        comp_joint.push_back(std::move(joint));
    }

    // Per-component baselines; a failed baseline drops the component from
    // the permutation machinery but is recorded, not fatal.
    std::vector<double> baselines(n_comp);
    std::vector<bool> component_ok(n_comp, false);
    for (int i = 0; i < n_comp; ++i) {
        auto value = try_statistic(
            [&] { return evaluate_statistic(config.statistic, comp_a[i], comp_b[i]); });
        if (value) {
            baselines[i] = *value;
            component_ok[i] = true;
            report.matrix_components.push_back(i);
        }
    }
    const int n_ok = static_cast<int>(report.matrix_components.size());
    if (n_ok == 0) {
        throw BaselineDegenerate("local_tests: statistic undefined on every component");
    }

    // One shared permutation sequence across components.
    const auto shuffles = draw_shuffles(config.seed, config.n_permutations, m + n);
    Eigen::MatrixXd all_stats(n_ok, config.n_permutations);
    std::vector<char> column_ok(config.n_permutations, 1);
    parallel::parallel_for(shuffles.size(), config.threads, [&](size_t l) {
        for (int r = 0; r < n_ok; ++r) {
            const int i = report.matrix_components[r];
            auto [pa, pb] = split_by(comp_joint[i], shuffles[l], m, comp_a[i].descriptor);
            auto value = try_statistic(
                [&] { return evaluate_statistic(config.statistic, pa, pb); });
            if (!value) {
                // Drop the whole column to keep the joint structure aligned.
                column_ok[l] = 0;
                break;
            }
            all_stats(r, static_cast<Eigen::Index>(l)) = *value;
        }
    });

    const long kept =
        std::count(column_ok.begin(), column_ok.end(), static_cast<char>(1));
    report.degenerate_columns = config.n_permutations - kept;
    if (kept == 0) {
        throw NotPositiveDefinite("local_tests: statistic undefined on every permutation");
    }

    report.stat_matrix.resize(n_ok, kept + 1);
    for (int r = 0; r < n_ok; ++r) report.stat_matrix(r, 0) = baselines[report.matrix_components[r]];
    Eigen::Index col = 1;
    for (int l = 0; l < config.n_permutations; ++l) {
        if (!column_ok[l]) continue;
        report.stat_matrix.col(col++) = all_stats.col(l);
    }

    report.p_values.assign(n_comp, std::numeric_limits<double>::quiet_NaN());
    for (int r = 0; r < n_ok; ++r) {
        long count = 0;
        for (Eigen::Index l = 1; l <= kept; ++l) {
            if (report.stat_matrix(r, l) >= report.stat_matrix(r, 0)) ++count;
        }
        report.p_values[report.matrix_components[r]] = p_from_count(count, kept);
    }

    // BH over the components with defined p-values.
    std::vector<double> defined;
    defined.reserve(n_ok);
    for (int r = 0; r < n_ok; ++r) defined.push_back(report.p_values[report.matrix_components[r]]);
    const auto defined_mask = bh_fdr(defined, alpha);
    report.reject_mask.assign(n_comp, false);
    for (int r = 0; r < n_ok; ++r) report.reject_mask[report.matrix_components[r]] = defined_mask[r];
    return report;
}

std::vector<bool> bh_fdr(const std::vector<double>& p_values, double alpha) {
    const int k_total = static_cast<int>(p_values.size());
    std::vector<bool> mask(k_total, false);
    if (k_total == 0) return mask;
    for (double p : p_values) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw OutOfDomain("bh_fdr: p-values must lie in [0, 1]");
        }
    }
    std::vector<int> order(k_total);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int lhs, int rhs) { return p_values[lhs] < p_values[rhs]; });
    double threshold = -1.0;
    for (int k = k_total; k >= 1; --k) {
        if (p_values[order[k - 1]] <= k * alpha / k_total) {
            threshold = p_values[order[k - 1]];
            break;
        }
    }
    if (threshold < 0.0) return mask;
    for (int i = 0; i < k_total; ++i) mask[i] = p_values[i] <= threshold;
    return mask;
}

namespace {

// Acklam's rational approximation plus one Halley refinement, on (0, 1/2].
// The lower half avoids cancellation in the erfc-based residual; the upper
// half is reflected onto it (1 - u is exact there by the Sterbenz lemma).
double inv_norm_cdf_lower(double u) {
    static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                    -2.759285104469687e+02, 1.383577518672690e+02,
                                    -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                    -1.556989798598866e+02, 6.680131188771972e+01,
                                    -1.328068155288572e+01};
    static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                    -2.400758277161838e+00, -2.549732539343734e+00,
                                    4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                    2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double low = 0.02425;
    double x;
    if (u < low) {
        const double q = std::sqrt(-2.0 * std::log(u));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else {
        const double q = u - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    const double err = 0.5 * std::erfc(-x / std::sqrt(2.0)) - u;
    const double step = err * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(x * x / 2.0);
    return x - step / (1.0 + x * step / 2.0);
}

}  // namespace

double inv_norm_cdf(double u) {
    if (!(u > 0.0 && u < 1.0)) {
        throw OutOfDomain("inv_norm_cdf: argument must lie in (0, 1)");
    }
    return u > 0.5 ? -inv_norm_cdf_lower(1.0 - u) : inv_norm_cdf_lower(u);
}

double global_test(const Eigen::MatrixXd& stat_matrix, const Eigen::VectorXd* weights) {
    const Eigen::Index n_comp = stat_matrix.rows();
    const Eigen::Index n_perm = stat_matrix.cols() - 1;
    if (n_comp < 1 || n_perm < 1) {
        throw ScoreCovarianceSingular("global_test: need at least one component and permutation");
    }
    if (n_perm <= n_comp) {
        throw ScoreCovarianceSingular("global_test: need more permutations than components");
    }
    if (!stat_matrix.allFinite()) {
        throw OutOfDomain("global_test: statistic matrix has non-finite entries");
    }
    if (weights != nullptr) {
        if (weights->size() != n_comp) {
            throw OutOfDomain("global_test: weight vector length does not match components");
        }
        if (!(weights->minCoeff() > 0.0)) {
            throw OutOfDomain("global_test: weights must be positive");
        }
    }

    // Normal scores: per component, the empirical CDF over the permutation
    // stats, squeezed into (0, 1). A baseline strictly below every
    // permutation stat would give CDF 0, so the CDF is floored at 1/L
    // (ranking it as tying the minimum).
    Eigen::MatrixXd scores(n_comp, n_perm + 1);
    std::vector<double> sorted(static_cast<size_t>(n_perm));
    for (Eigen::Index i = 0; i < n_comp; ++i) {
        for (Eigen::Index l = 0; l < n_perm; ++l) sorted[l] = stat_matrix(i, l + 1);
        std::sort(sorted.begin(), sorted.end());
        for (Eigen::Index l = 0; l <= n_perm; ++l) {
            const auto upper = std::upper_bound(sorted.begin(), sorted.end(), stat_matrix(i, l));
            double cdf = static_cast<double>(upper - sorted.begin()) / static_cast<double>(n_perm);
            cdf = std::max(cdf, 1.0 / static_cast<double>(n_perm));
            const double squeezed = 0.9998 * cdf - 0.00001;
            if (!(squeezed > 0.0 && squeezed < 1.0)) {
                throw OutOfDomain("global_test: squeezed CDF left (0, 1)");
            }
            scores(i, l) = inv_norm_cdf(squeezed);
        }
    }
    if (weights != nullptr) {
        scores = weights->cwiseSqrt().asDiagonal() * scores;
    }

    const Eigen::MatrixXd perm_scores = scores.rightCols(n_perm);
    const Eigen::MatrixXd score_cov =
        perm_scores * perm_scores.transpose() / static_cast<double>(n_perm - 1);
    Eigen::MatrixXd solved;
    try {
        solved = matfun::solve_spd(score_cov, scores);
    } catch (const NotPositiveDefinite& e) {
        throw ScoreCovarianceSingular(std::string("global_test: ") + e.what());
    }
    const Eigen::VectorXd mahalanobis = (scores.array() * solved.array()).colwise().sum();
    long count = 0;
    for (Eigen::Index l = 1; l <= n_perm; ++l) {
        if (mahalanobis(l) >= mahalanobis(0)) ++count;
    }
    return p_from_count(count, n_perm);
}

}  // namespace bistats::testing
