// Command-line front end: dataset statistics, permutation tests, synthetic
// data generation, and mesh-to-group encodings with reproducible seeds.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bistats/dataset_io.hpp"
#include "bistats/shape.hpp"
#include "bistats/stats.hpp"
#include "bistats/testing.hpp"

namespace {

using bistats::io::Dataset;
using nlohmann::json;

void emit(const json& report, const std::string& output) {
    if (output.empty()) {
        std::cout << report.dump(2) << "\n";
        return;
    }
    std::ofstream out(output);
    if (!out) throw bistats::ParseError(output + ": cannot open file for writing");
    out << report.dump(2) << "\n";
}

json run_mean(const std::string& input, double tol, int max_iter, const std::string& output) {
    const Dataset dataset = bistats::io::read_dataset(input);
    const auto result = bistats::stats::group_mean(dataset.samples, tol, max_iter);
    json report;
    report["schema"] = "bistats-report/1";
    report["command"] = "mean";
    report["config"] = {{"input", input}, {"tol", tol}, {"max_iter", max_iter}};
    report["group"] = bistats::io::tag_from_descriptor(dataset.samples.descriptor);
    report["mean"] = bistats::io::element_to_json(result.mean);
    report["iterations"] = result.iterations;
    report["residual"] = result.residual;
    emit(report, output);
    return report;
}

bistats::testing::PermutationConfig make_config(const std::string& statistic, int permutations,
                                                std::uint64_t seed, int threads) {
    bistats::testing::PermutationConfig config;
    config.statistic = bistats::testing::statistic_from_string(statistic);
    config.n_permutations = permutations;
    config.seed = seed;
    config.threads = threads;
    return config;
}

json config_echo(const std::string& a, const std::string& b,
                 const bistats::testing::PermutationConfig& config, double alpha) {
    return {{"a", a},
            {"b", b},
            {"statistic", bistats::testing::to_string(config.statistic)},
            {"n_permutations", config.n_permutations},
            {"seed", config.seed},
            {"alpha", alpha},
            {"threads", config.threads}};
}

json run_test(const std::string& a_path, const std::string& b_path, const std::string& statistic,
              int permutations, std::uint64_t seed, double alpha, int threads,
              const std::string& output) {
    const Dataset a = bistats::io::read_dataset(a_path);
    const Dataset b = bistats::io::read_dataset(b_path);
    const auto config = make_config(statistic, permutations, seed, threads);
    const auto report = bistats::testing::permutation_test(a.samples, b.samples, config);
    json out;
    out["schema"] = "bistats-report/1";
    out["command"] = "test";
    out["config"] = config_echo(a_path, b_path, config, alpha);
    out["group"] = bistats::io::tag_from_descriptor(a.samples.descriptor);
    out["m"] = a.samples.size();
    out["n"] = b.samples.size();
    out["baseline"] = report.baseline;
    out["p_value"] = report.p_value;
    out["degenerate_permutations"] = report.degenerate_count;
    out["significant"] = report.p_value < alpha;
    emit(out, output);
    return out;
}

json local_report_json(const bistats::testing::LocalTestReport& report) {
    json j;
    j["p_values"] = json::array();
    for (double p : report.p_values) {
        if (std::isnan(p)) {
            j["p_values"].push_back(nullptr);
        } else {
            j["p_values"].push_back(p);
        }
    }
    j["reject_mask"] = report.reject_mask;
    j["degenerate_columns"] = report.degenerate_columns;
    return j;
}

json run_localtest(const std::string& a_path, const std::string& b_path,
                   const std::string& statistic, int permutations, std::uint64_t seed,
                   double alpha, int threads, const std::string& output) {
    const Dataset a = bistats::io::read_dataset(a_path);
    const Dataset b = bistats::io::read_dataset(b_path);
    const auto config = make_config(statistic, permutations, seed, threads);
    const auto report = bistats::testing::local_tests(a.samples, b.samples, config, alpha);
    json out;
    out["schema"] = "bistats-report/1";
    out["command"] = "localtest";
    out["config"] = config_echo(a_path, b_path, config, alpha);
    out["group"] = bistats::io::tag_from_descriptor(a.samples.descriptor);
    out.update(local_report_json(report));
    emit(out, output);
    return out;
}

json run_globaltest(const std::string& a_path, const std::string& b_path,
                    const std::string& statistic, int permutations, std::uint64_t seed,
                    double alpha, int threads, const std::string& weights_path,
                    const std::string& output) {
    const Dataset a = bistats::io::read_dataset(a_path);
    const Dataset b = bistats::io::read_dataset(b_path);
    const auto config = make_config(statistic, permutations, seed, threads);
    const auto report = bistats::testing::local_tests(a.samples, b.samples, config, alpha);

    double global_p;
    if (weights_path.empty()) {
        global_p = bistats::testing::global_test(report.stat_matrix);
    } else {
        const Eigen::VectorXd weights = bistats::io::read_weights(weights_path);
        const int n_comp = bistats::groups::component_count(a.samples.descriptor);
        if (weights.size() != n_comp) {
            throw bistats::ParseError("weight file lists " + std::to_string(weights.size()) +
                                      " weights for " + std::to_string(n_comp) + " components");
        }
        Eigen::VectorXd subset(report.matrix_components.size());
        for (size_t r = 0; r < report.matrix_components.size(); ++r) {
            subset(static_cast<Eigen::Index>(r)) = weights(report.matrix_components[r]);
        }
        global_p = bistats::testing::global_test(report.stat_matrix, &subset);
    }

    json out;
    out["schema"] = "bistats-report/1";
    out["command"] = "globaltest";
    out["config"] = config_echo(a_path, b_path, config, alpha);
    out["config"]["weights"] = weights_path;
    out["group"] = bistats::io::tag_from_descriptor(a.samples.descriptor);
    out.update(local_report_json(report));
    out["global_p"] = global_p;
    out["global_significant"] = global_p < alpha;
    emit(out, output);
    return out;
}

json run_synth(const std::string& group_tag, const std::string& mean_path,
               const std::string& cov_path, int n, std::uint64_t seed,
               const std::string& output) {
    const auto desc = bistats::io::descriptor_from_tag(group_tag);
    const auto mean = bistats::io::read_element(mean_path);
    auto cov = bistats::io::read_covariance(cov_path);
    if (mean.descriptor() != desc || cov.descriptor != desc) {
        throw bistats::ParseError("mean/covariance files do not match group " + group_tag);
    }
    const auto drawn = bistats::stats::sample_wrapped_gaussian(desc, mean, cov, n, seed);
    Dataset dataset{drawn.samples, {}};
    json out = bistats::io::dataset_to_json(dataset);
    out["provenance"] = {{"command", "synth"}, {"group", group_tag}, {"mean_file", mean_path},
                         {"cov_file", cov_path}, {"n", n},           {"seed", seed},
                         {"rejections", drawn.rejections}};
    emit(out, output);
    return out;
}

json run_pose(const std::string& mesh_a, const std::string& mesh_b, const std::string& output) {
    const auto a = bistats::shape::read_mesh(mesh_a);
    const auto b = bistats::shape::read_mesh(mesh_b);
    const auto frame_a = bistats::shape::frame_from_pca(a);
    const auto frame_b = bistats::shape::frame_from_pca(b, &frame_a);
    const auto pose = bistats::shape::relative_pose(frame_a, frame_b);
    Dataset dataset{{pose.descriptor(), {pose}}, {}};
    json out = bistats::io::dataset_to_json(dataset);
    out["provenance"] = {{"command", "pose"}, {"mesh_a", mesh_a}, {"mesh_b", mesh_b}};
    emit(out, output);
    return out;
}

json run_diffcoords(const std::string& reference_path, const std::vector<std::string>& targets,
                    const std::string& output) {
    const auto reference = bistats::shape::read_mesh(reference_path);
    Dataset dataset;
    std::vector<bistats::groups::GroupElement> elements;
    for (const auto& target_path : targets) {
        const auto target = bistats::shape::read_mesh(target_path);
        elements.push_back(bistats::shape::differential_coords(reference, target));
        dataset.labels.push_back(target_path);
    }
    dataset.samples = {elements.front().descriptor(), std::move(elements)};
    json out = bistats::io::dataset_to_json(dataset);
    out["provenance"] = {{"command", "diffcoords"}, {"reference", reference_path},
                         {"targets", targets}};
    emit(out, output);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bistats: bi-invariant statistics and two-sample tests on Lie groups"};
    app.require_subcommand(1);

    std::string input, a_path, b_path, output, weights_path, group_tag, mean_path, cov_path;
    std::string statistic = "t2";
    std::string reference_path;
    std::vector<std::string> target_paths;
    double tol = 1e-10, alpha = 0.05;
    int max_iter = 100, permutations = 10000, n_samples = 1, threads = 1;
    std::uint64_t seed = 0;

    auto* mean_cmd = app.add_subcommand("mean", "Group mean of a dataset");
    mean_cmd->add_option("input", input, "dataset file")->required();
    mean_cmd->add_option("--tol", tol, "convergence tolerance");
    mean_cmd->add_option("--max-iter", max_iter, "iteration cap");
    mean_cmd->add_option("--output", output, "report file (default stdout)");

    auto add_test_options = [&](CLI::App* cmd) {
        cmd->add_option("a", a_path, "first dataset")->required();
        cmd->add_option("b", b_path, "second dataset")->required();
        cmd->add_option("--statistic", statistic, "t2|bhattacharyya|hellinger");
        cmd->add_option("--permutations", permutations, "number of permutations");
        cmd->add_option("--seed", seed, "RNG seed");
        cmd->add_option("--alpha", alpha, "significance level");
        cmd->add_option("--threads", threads, "worker count (output-invariant)");
        cmd->add_option("--output", output, "report file (default stdout)");
    };
    auto* test_cmd = app.add_subcommand("test", "Two-sample permutation test");
    add_test_options(test_cmd);
    auto* local_cmd =
        app.add_subcommand("localtest", "Component-wise permutation tests with BH correction");
    add_test_options(local_cmd);
    auto* global_cmd =
        app.add_subcommand("globaltest", "Local tests plus the global normal-score test");
    add_test_options(global_cmd);
    global_cmd->add_option("--weights", weights_path, "per-component weight file");

    auto* synth_cmd = app.add_subcommand("synth", "Sample a wrapped Gaussian dataset");
    synth_cmd->add_option("--group", group_tag, "group tag")->required();
    synth_cmd->add_option("--mean", mean_path, "element file with the mean")->required();
    synth_cmd->add_option("--cov", cov_path, "covariance file")->required();
    synth_cmd->add_option("-n,--samples", n_samples, "sample count")->required();
    synth_cmd->add_option("--seed", seed, "RNG seed");
    synth_cmd->add_option("--output", output, "dataset file (default stdout)");

    auto* pose_cmd = app.add_subcommand("pose", "SE(3) relative pose of two meshes (PCA frames)");
    pose_cmd->add_option("mesh_a", a_path, "first mesh (OFF/OBJ)")->required();
    pose_cmd->add_option("mesh_b", b_path, "second mesh (OFF/OBJ)")->required();
    pose_cmd->add_option("--output", output, "dataset file (default stdout)");

    auto* diff_cmd =
        app.add_subcommand("diffcoords", "GL+(3)^m differential coordinates of meshes");
    diff_cmd->add_option("reference", reference_path, "reference mesh")->required();
    diff_cmd->add_option("targets", target_paths, "target meshes")->required();
    diff_cmd->add_option("--output", output, "dataset file (default stdout)");

    try {
        app.parse(argc, argv);
        if (mean_cmd->parsed()) {
            run_mean(input, tol, max_iter, output);
        } else if (test_cmd->parsed()) {
            run_test(a_path, b_path, statistic, permutations, seed, alpha, threads, output);
        } else if (local_cmd->parsed()) {
            run_localtest(a_path, b_path, statistic, permutations, seed, alpha, threads, output);
        } else if (global_cmd->parsed()) {
            run_globaltest(a_path, b_path, statistic, permutations, seed, alpha, threads,
                           weights_path, output);
        } else if (synth_cmd->parsed()) {
            run_synth(group_tag, mean_path, cov_path, n_samples, seed, output);
        } else if (pose_cmd->parsed()) {
            run_pose(a_path, b_path, output);
        } else if (diff_cmd->parsed()) {
            run_diffcoords(reference_path, target_paths, output);
        }
        return 0;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const bistats::ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const bistats::InvalidElement& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const bistats::DescriptorMismatch& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const bistats::EmptyProduct& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const bistats::TooFewSamples& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 1;
    } catch (const bistats::Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
