#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "bistats/groups.hpp"
#include "bistats/stats.hpp"

namespace bistats::io {

using nlohmann::json;

/// Dataset file payload: one sample set plus optional per-sample labels.
struct Dataset {
    stats::SampleSet samples;
    std::vector<std::string> labels;  // empty or one per sample
};

/// Parses a file-format group tag: "translation:d", "so3", "se3",
/// "glplus:n", "power:glplus:n:m".
groups::GroupDescriptor descriptor_from_tag(const std::string& tag);

/// Inverse of descriptor_from_tag; throws ParseError for descriptors the
/// file format cannot express (heterogeneous products).
std::string tag_from_descriptor(const groups::GroupDescriptor& desc);

json element_to_json(const groups::GroupElement& element);
groups::GroupElement element_from_json(const groups::GroupDescriptor& desc, const json& payload);

json dataset_to_json(const Dataset& dataset);
Dataset dataset_from_json(const json& j);
Dataset read_dataset(const std::string& path);
void write_dataset(const Dataset& dataset, const std::string& path);

/// Single-element file ("bistats-element/1").
groups::GroupElement read_element(const std::string& path);
json element_file_to_json(const groups::GroupElement& element);

/// Covariance file ("bistats-covariance/1"); validated on load.
stats::CovarianceAtIdentity read_covariance(const std::string& path);

/// Weight vector: plain JSON array or {"weights": [...]}.
Eigen::VectorXd read_weights(const std::string& path);

/// Parses JSON with ParseError carrying the line/column diagnostics.
json parse_json_file(const std::string& path);

}  // namespace bistats::io
