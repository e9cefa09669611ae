#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bistats/testing.hpp"
#include "test_support.hpp"

using namespace bistats;
using namespace bistats::testing;
using groups::compose;
using groups::GroupDescriptor;
using groups::GroupElement;
using stats::SampleSet;
using test_support::random_element;
using test_support::random_sample_set;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

SampleSet translation1(std::initializer_list<double> values) {
    SampleSet set{GroupDescriptor::translation(1), {}};
    for (double v : values) {
        set.elements.push_back(GroupElement::translation(Eigen::VectorXd::Constant(1, v)));
    }
    return set;
}

SampleSet constant_set(const GroupElement& g, int n) {
    return {g.descriptor(), std::vector<GroupElement>(n, g)};
}

SampleSet translated_left(const SampleSet& set, const GroupElement& f) {
    SampleSet out{set.descriptor, {}};
    for (const auto& g : set.elements) out.elements.push_back(compose(f, g));
    return out;
}

// Product-of-translations sample: component i holds the i-th value.
SampleSet product_samples(const std::vector<std::vector<double>>& rows) {
    const int k = static_cast<int>(rows.size());
    const int n = static_cast<int>(rows.front().size());
    const auto desc = GroupDescriptor::power(GroupDescriptor::translation(1), k);
    SampleSet set{desc, {}};
    for (int j = 0; j < n; ++j) {
        std::vector<GroupElement> parts;
        for (int i = 0; i < k; ++i) {
            parts.push_back(GroupElement::translation(Eigen::VectorXd::Constant(1, rows[i][j])));
        }
        set.elements.push_back(GroupElement::product(std::move(parts)));
    }
    return set;
}

}  // namespace

TEST_CASE("inverse normal CDF against a high-precision table") {
    // Frozen 16-digit quantiles of the standard normal distribution.
    const std::vector<std::pair<double, double>> table = {
        {1e-10, -6.361340902404056},   {1e-06, -4.753424308822899},
        {0.001, -3.090232306167813},   {0.025, -1.9599639845400545},
        {0.3, -0.5244005127080409},    {0.5, 0.0},
        {0.7, 0.5244005127080407},     {0.975, 1.959963984540054},
        {0.99, 2.3263478740408408},    {0.999, 3.090232306167813},
        {1.0 - 1e-06, 4.753424308817087}, {1.0 - 1e-10, 6.361340889697422},
    };
    for (const auto& [u, expected] : table) {
        CHECK(std::abs(inv_norm_cdf(u) - expected) < 1e-9);
    }
}

TEST_CASE("inverse normal CDF antisymmetry and domain") {
    bistats::rng::Generator gen(61);
    for (int trial = 0; trial < 200; ++trial) {
        const double u = gen.uniform01();
        CHECK(inv_norm_cdf(u) == doctest::Approx(-inv_norm_cdf(1.0 - u)).epsilon(1e-10));
    }
    CHECK_THROWS_AS(inv_norm_cdf(0.0), OutOfDomain);
    CHECK_THROWS_AS(inv_norm_cdf(1.0), OutOfDomain);
    CHECK_THROWS_AS(inv_norm_cdf(-0.5), OutOfDomain);
    CHECK_THROWS_AS(inv_norm_cdf(2.0), OutOfDomain);
}

TEST_CASE("Benjamini-Hochberg step-up") {
    // thresholds at alpha = 0.05 over 4 hypotheses: 0.0125, 0.025, 0.0375, 0.05
    const auto mask = bh_fdr({0.01, 0.02, 0.04, 0.2}, 0.05);
    CHECK(mask == std::vector<bool>{true, true, false, false});

    CHECK(bh_fdr({1.0, 1.0, 1.0}, 0.05) == std::vector<bool>{false, false, false});
    CHECK(bh_fdr({0.0, 0.0}, 0.05) == std::vector<bool>{true, true});

    // ties at the threshold are all rejected
    const auto tied = bh_fdr({0.01, 0.01, 0.9}, 0.05);
    CHECK(tied == std::vector<bool>{true, true, false});

    CHECK_THROWS_AS(bh_fdr({0.5, 1.5}, 0.05), OutOfDomain);
}

TEST_CASE("bh_fdr is monotone in alpha") {
    bistats::rng::Generator gen(62);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> p(12);
        for (auto& x : p) x = gen.uniform01();
        std::vector<bool> previous(p.size(), false);
        for (double alpha : {0.01, 0.05, 0.1, 0.3, 0.8}) {
            const auto mask = bh_fdr(p, alpha);
            for (size_t i = 0; i < p.size(); ++i) {
                if (previous[i]) CHECK(mask[i]);  // lowering alpha never rejects more
            }
            previous = mask;
        }
    }
}

TEST_CASE("permutation test on constant data gives p = 1") {
    bistats::rng::Generator gen(63);
    const auto g = random_element(GroupDescriptor::se3(), gen);
    const auto a = constant_set(g, 5);
    const auto b = constant_set(g, 6);
    for (auto stat : {Statistic::HotellingT2, Statistic::Bhattacharyya, Statistic::Hellinger}) {
        PermutationConfig config{200, 7, stat, 1};
        const auto report = permutation_test(a, b, config);
        CHECK(report.baseline == 0.0);
        CHECK(report.p_value == 1.0);
        CHECK(report.degenerate_count == 0);
    }
}

TEST_CASE("permutation test is deterministic and thread-count independent") {
    bistats::rng::Generator gen(64);
    const auto a = random_sample_set(GroupDescriptor::se3(), gen, 9);
    const auto b = random_sample_set(GroupDescriptor::se3(), gen, 8);
    PermutationConfig config{300, 123, Statistic::HotellingT2, 1};
    const auto first = permutation_test(a, b, config);
    const auto second = permutation_test(a, b, config);
    config.threads = 4;
    const auto threaded = permutation_test(a, b, config);
    CHECK(first.baseline == second.baseline);
    CHECK(first.p_value == second.p_value);
    CHECK(first.perm_stats == second.perm_stats);
    CHECK(first.perm_stats == threaded.perm_stats);
    CHECK(first.p_value == threaded.p_value);

    config.threads = 1;
    config.seed = 124;
    const auto other_seed = permutation_test(a, b, config);
    CHECK(other_seed.perm_stats != first.perm_stats);
}

TEST_CASE("permutation p-value is floored at 1/L under a strong alternative") {
    SampleSet a{GroupDescriptor::translation(1), {}};
    SampleSet b{GroupDescriptor::translation(1), {}};
    bistats::rng::Generator gen(9000);
    for (int i = 0; i < 12; ++i) {
        a.elements.push_back(GroupElement::translation(VectorXd::Constant(1, gen.normal())));
        b.elements.push_back(
            GroupElement::translation(VectorXd::Constant(1, 100.0 + gen.normal())));
    }
    PermutationConfig config{500, 9, Statistic::HotellingT2, 1};
    const auto report = permutation_test(a, b, config);
    CHECK(report.p_value >= 1.0 / 500.0);
    CHECK(report.p_value == doctest::Approx(1.0 / 500.0));
}

TEST_CASE("permutation test input errors") {
    const auto a = translation1({0.0, 1.0});
    const auto b = translation1({2.0});
    PermutationConfig config{100, 1, Statistic::HotellingT2, 1};
    CHECK_THROWS_AS(permutation_test(a, b, config), TooFewSamples);

    // four collinear points in R^2: singular pooled covariance on the
    // original split
    SampleSet line_a{GroupDescriptor::translation(2), {}};
    SampleSet line_b{GroupDescriptor::translation(2), {}};
    for (double x : {0.0, 1.0}) {
        line_a.elements.push_back(GroupElement::translation(Eigen::Vector2d(x, 0.0)));
        line_b.elements.push_back(GroupElement::translation(Eigen::Vector2d(x + 2.0, 0.0)));
    }
    CHECK_THROWS_AS(permutation_test(line_a, line_b, config), BaselineDegenerate);
}

TEST_CASE("the whole permutation test is bi-invariant") {
    bistats::rng::Generator gen(65);
    for (auto stat : {Statistic::HotellingT2, Statistic::Bhattacharyya}) {
        const auto a = random_sample_set(GroupDescriptor::glplus(3), gen, 12);
        const auto b = random_sample_set(GroupDescriptor::glplus(3), gen, 12);
        const auto f = random_element(GroupDescriptor::glplus(3), gen, 0.3);
        PermutationConfig config{120, 17, stat, 1};
        const auto base = permutation_test(a, b, config);
        const auto moved = permutation_test(translated_left(a, f), translated_left(b, f), config);
        CHECK(base.p_value == moved.p_value);
        REQUIRE(base.perm_stats.size() == moved.perm_stats.size());
        for (size_t l = 0; l < base.perm_stats.size(); ++l) {
            CHECK(moved.perm_stats[l] ==
                  doctest::Approx(base.perm_stats[l]).epsilon(1e-8).scale(1.0));
        }
    }
}

TEST_CASE("local tests: identical components give p = 1 everywhere") {
    const auto samples = product_samples({{0.0, 1.0, 2.0, 3.0, 4.0, 5.0},
                                          {1.0, -1.0, 0.5, -0.5, 0.2, -0.2}});
    PermutationConfig config{100, 3, Statistic::HotellingT2, 1};
    const auto report = local_tests(samples, samples, config, 0.05);
    REQUIRE(report.p_values.size() == 2);
    CHECK(report.p_values[0] == 1.0);
    CHECK(report.p_values[1] == 1.0);
    CHECK(report.reject_mask == std::vector<bool>{false, false});
    CHECK(report.degenerate_columns == 0);
}

TEST_CASE("local tests: the shifted component ranks below the null components") {
    bistats::rng::Generator gen(66);
    std::vector<std::vector<double>> rows_a(4), rows_b(4);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 10; ++j) {
            rows_a[i].push_back(gen.normal());
            rows_b[i].push_back(gen.normal() + (i == 2 ? 6.0 : 0.0));
        }
    }
    const auto a = product_samples(rows_a);
    const auto b = product_samples(rows_b);
    PermutationConfig config{400, 5, Statistic::HotellingT2, 1};
    const auto report = local_tests(a, b, config, 0.05);
    for (int i = 0; i < 4; ++i) {
        if (i != 2) CHECK(report.p_values[2] < report.p_values[i]);
    }
    CHECK(report.reject_mask[2]);
    CHECK(report.p_values[2] == doctest::Approx(1.0 / 400.0));

    // seeded reproducibility of the whole vector
    const auto again = local_tests(a, b, config, 0.05);
    CHECK(report.p_values == again.p_values);

    // thread-count independence
    PermutationConfig threaded = config;
    threaded.threads = 3;
    CHECK(local_tests(a, b, threaded, 0.05).p_values == report.p_values);
}

TEST_CASE("local tests on a single-factor product match the plain test") {
    bistats::rng::Generator gen(67);
    std::vector<std::vector<double>> row_a(1), row_b(1);
    for (int j = 0; j < 8; ++j) {
        row_a[0].push_back(gen.normal());
        row_b[0].push_back(gen.normal() + 0.8);
    }
    const auto a = product_samples(row_a);
    const auto b = product_samples(row_b);
    PermutationConfig config{250, 21, Statistic::Bhattacharyya, 1};
    const auto local = local_tests(a, b, config, 0.05);

    const auto plain_a = translation1({});  // rebuilt below with the same data
    SampleSet pa{GroupDescriptor::translation(1), {}};
    SampleSet pb{GroupDescriptor::translation(1), {}};
    for (double v : row_a[0]) pa.elements.push_back(GroupElement::translation(VectorXd::Constant(1, v)));
    for (double v : row_b[0]) pb.elements.push_back(GroupElement::translation(VectorXd::Constant(1, v)));
    const auto plain = permutation_test(pa, pb, config);
    CHECK(local.p_values[0] == plain.p_value);
    (void)plain_a;
}

TEST_CASE("global test reproduces hand-traced fixtures") {
    // K = 1, L = 10: baseline 7.5 against permutation stats 1..10. The score
    // pipeline is two-sided, so the traced p is 0.7 (not the one-sided 0.3).
    MatrixXd t(1, 11);
    t << 7.5, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10;
    CHECK(global_test(t) == doctest::Approx(0.7).epsilon(1e-12));

    // baseline below every permutation stat: CDF floor at 1/L binds
    t(0, 0) = 0.5;
    CHECK(global_test(t) == doctest::Approx(0.2).epsilon(1e-12));

    // baseline above every permutation stat: ties with the max through the
    // squeezed CDF, p = 1/L
    t(0, 0) = 20.0;
    CHECK(global_test(t) == doctest::Approx(0.1).epsilon(1e-12));

    // K = 2 hand-traced fixture (anti-correlated rows)
    MatrixXd t2(2, 7);
    t2 << 3.0, 1, 2, 3, 4, 5, 6, 2.5, 6, 5, 4, 3, 2, 1;
    CHECK(global_test(t2) == doctest::Approx(4.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("global test is invariant under monotone per-component transforms") {
    bistats::rng::Generator gen(68);
    MatrixXd t(3, 41);
    for (Eigen::Index i = 0; i < t.rows(); ++i)
        for (Eigen::Index l = 0; l < t.cols(); ++l) t(i, l) = gen.uniform01() * 5.0;
    const double base = global_test(t);
    MatrixXd warped = t;
    warped.row(0) = t.row(0).array().exp();
    warped.row(1) = 3.0 * t.row(1).array() + 7.0;
    warped.row(2) = t.row(2).array().cube();
    CHECK(global_test(warped) == base);
}

TEST_CASE("global test weight handling") {
    bistats::rng::Generator gen(69);
    MatrixXd t(3, 41);
    for (Eigen::Index i = 0; i < t.rows(); ++i)
        for (Eigen::Index l = 0; l < t.cols(); ++l) t(i, l) = gen.normal();
    const double base = global_test(t);

    const VectorXd ones = VectorXd::Ones(3);
    CHECK(global_test(t, &ones) == base);

    VectorXd weights(3);
    weights << 0.5, 2.0, 3.5;
    CHECK(global_test(t, &weights) == base);  // diagonal rescaling cancels

    VectorXd bad(3);
    bad << 1.0, -1.0, 2.0;
    CHECK_THROWS_AS(global_test(t, &bad), OutOfDomain);
    VectorXd short_w(2);
    short_w << 1.0, 1.0;
    CHECK_THROWS_AS(global_test(t, &short_w), OutOfDomain);
}

TEST_CASE("global test rejects degenerate inputs") {
    MatrixXd square(3, 4);  // L = 3 <= K = 3
    square.setRandom();
    CHECK_THROWS_AS(global_test(square), ScoreCovarianceSingular);

    MatrixXd constant_rows(2, 9);
    constant_rows.setOnes();  // scores perfectly correlated across components
    CHECK_THROWS_AS(global_test(constant_rows), ScoreCovarianceSingular);
}
