#include "bistats/dataset_io.hpp"

#include <fstream>
#include <sstream>

#include "bistats/errors.hpp"

namespace bistats::io {

namespace {

using groups::GroupDescriptor;
using groups::GroupElement;
using groups::GroupKind;

constexpr const char* kDatasetSchema = "bistats-dataset/1";
constexpr const char* kElementSchema = "bistats-element/1";
constexpr const char* kCovarianceSchema = "bistats-covariance/1";

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) parts.push_back(item);
    return parts;
}

int parse_positive_int(const std::string& s, const std::string& context) {
    try {
        size_t pos = 0;
        const int value = std::stoi(s, &pos);
        if (pos != s.size() || value < 1) throw std::invalid_argument(s);
        return value;
    } catch (const std::exception&) {
        throw ParseError(context + ": expected a positive integer, got '" + s + "'");
    }
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, int rows, int cols, const std::string& context) {
    if (!j.is_array() || static_cast<int>(j.size()) != rows) {
        throw ParseError(context + ": expected " + std::to_string(rows) + " matrix rows");
    }
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        const json& row = j[i];
        if (!row.is_array() || static_cast<int>(row.size()) != cols) {
            throw ParseError(context + ": row " + std::to_string(i) + " must have " +
                             std::to_string(cols) + " entries");
        }
        for (int k = 0; k < cols; ++k) {
            if (!row[k].is_number()) {
                throw ParseError(context + ": non-numeric matrix entry");
            }
            m(i, k) = row[k].get<double>();
        }
    }
    return m;
}

Eigen::VectorXd vector_from_json(const json& j, int size, const std::string& context) {
    if (!j.is_array() || static_cast<int>(j.size()) != size) {
        throw ParseError(context + ": expected a vector of length " + std::to_string(size));
    }
    Eigen::VectorXd v(size);
    for (int i = 0; i < size; ++i) {
        if (!j[i].is_number()) throw ParseError(context + ": non-numeric vector entry");
        v(i) = j[i].get<double>();
    }
    return v;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

void require_schema(const json& j, const char* schema, const std::string& path) {
    if (!j.is_object() || !j.contains("schema") || j["schema"] != schema) {
        throw ParseError(path + ": missing or unexpected schema (expected '" + schema + "')");
    }
}

}  // namespace

GroupDescriptor descriptor_from_tag(const std::string& tag) {
    const auto parts = split(tag, ':');
    if (parts.empty()) throw ParseError("empty group tag");
    if (parts[0] == "so3" && parts.size() == 1) return GroupDescriptor::so3();
    if (parts[0] == "se3" && parts.size() == 1) return GroupDescriptor::se3();
    if (parts[0] == "translation" && parts.size() == 2) {
        return GroupDescriptor::translation(parse_positive_int(parts[1], "group tag '" + tag + "'"));
    }
    if (parts[0] == "glplus" && parts.size() == 2) {
        return GroupDescriptor::glplus(parse_positive_int(parts[1], "group tag '" + tag + "'"));
    }
    if (parts[0] == "power" && parts.size() == 4 && parts[1] == "glplus") {
        const int n = parse_positive_int(parts[2], "group tag '" + tag + "'");
        const int copies = parse_positive_int(parts[3], "group tag '" + tag + "'");
        return GroupDescriptor::power(GroupDescriptor::glplus(n), copies);
    }
    throw ParseError("unknown group tag '" + tag +
                     "' (expected translation:d, so3, se3, glplus:n, or power:glplus:n:m)");
}

std::string tag_from_descriptor(const GroupDescriptor& desc) {
    switch (desc.kind()) {
        case GroupKind::Translation:
            return "translation:" + std::to_string(desc.size_param());
        case GroupKind::SO3:
            return "so3";
        case GroupKind::SE3:
            return "se3";
        case GroupKind::GLplus:
            return "glplus:" + std::to_string(desc.size_param());
        case GroupKind::Product: {
            const auto& factors = desc.factors();
            for (const auto& f : factors) {
                if (f.kind() != GroupKind::GLplus || !(f == factors.front())) {
                    throw ParseError("dataset files can only express powers of GL+(n), not " +
                                     desc.tag());
                }
            }
            return "power:glplus:" + std::to_string(factors.front().size_param()) + ":" +
                   std::to_string(factors.size());
        }
    }
    throw ParseError("unknown group kind");
}

json element_to_json(const GroupElement& element) {
    switch (element.descriptor().kind()) {
        case GroupKind::Translation:
            return vector_to_json(element.as_translation().v);
        case GroupKind::SO3:
            return matrix_to_json(element.as_so3().r);
        case GroupKind::SE3: {
            json j;
            j["R"] = matrix_to_json(element.as_se3().r);
            j["t"] = vector_to_json(element.as_se3().t);
            return j;
        }
        case GroupKind::GLplus:
            return matrix_to_json(element.as_glplus().a);
        case GroupKind::Product: {
            json parts = json::array();
            for (const auto& p : element.as_product().parts) parts.push_back(element_to_json(p));
            return parts;
        }
    }
    throw ParseError("unknown group kind");
}

GroupElement element_from_json(const GroupDescriptor& desc, const json& payload) {
    switch (desc.kind()) {
        case GroupKind::Translation:
            return GroupElement::translation(
                vector_from_json(payload, desc.size_param(), "translation payload"));
        case GroupKind::SO3:
            return GroupElement::so3(matrix_from_json(payload, 3, 3, "SO(3) payload"));
        case GroupKind::SE3: {
            if (!payload.is_object() || !payload.contains("R") || !payload.contains("t")) {
                throw ParseError("SE(3) payload must be an object with \"R\" and \"t\"");
            }
            return GroupElement::se3(matrix_from_json(payload["R"], 3, 3, "SE(3) rotation"),
                                     vector_from_json(payload["t"], 3, "SE(3) translation"));
        }
        case GroupKind::GLplus:
            return GroupElement::glplus(
                matrix_from_json(payload, desc.size_param(), desc.size_param(), "GL+ payload"));
        case GroupKind::Product: {
            const auto& factors = desc.factors();
            if (!payload.is_array() || payload.size() != factors.size()) {
                throw ParseError("product payload must be a list of " +
                                 std::to_string(factors.size()) + " factor payloads");
            }
            std::vector<GroupElement> parts;
            parts.reserve(factors.size());
            for (size_t i = 0; i < factors.size(); ++i) {
                try {
                    parts.push_back(element_from_json(factors[i], payload[i]));
                } catch (const Error& e) {
                    throw ParseError("factor " + std::to_string(i) + ": " + e.what());
                }
            }
            return GroupElement::product(std::move(parts));
        }
    }
    throw ParseError("unknown group kind");
}

json dataset_to_json(const Dataset& dataset) {
    json j;
    j["schema"] = kDatasetSchema;
    j["group"] = tag_from_descriptor(dataset.samples.descriptor);
    json samples = json::array();
    for (const auto& e : dataset.samples.elements) samples.push_back(element_to_json(e));
    j["samples"] = std::move(samples);
    if (!dataset.labels.empty()) j["labels"] = dataset.labels;
    return j;
}

Dataset dataset_from_json(const json& j) {
    require_schema(j, kDatasetSchema, "dataset");
    if (!j.contains("group") || !j["group"].is_string()) {
        throw ParseError("dataset: missing \"group\" tag");
    }
    Dataset dataset;
    dataset.samples.descriptor = descriptor_from_tag(j["group"].get<std::string>());
    if (!j.contains("samples") || !j["samples"].is_array() || j["samples"].empty()) {
        throw ParseError("dataset: \"samples\" must be a non-empty list");
    }
    for (size_t i = 0; i < j["samples"].size(); ++i) {
        try {
            dataset.samples.elements.push_back(
                element_from_json(dataset.samples.descriptor, j["samples"][i]));
        } catch (const Error& e) {
            throw ParseError("sample " + std::to_string(i) + ": " + e.what());
        }
    }
    if (j.contains("labels")) {
        if (!j["labels"].is_array() || j["labels"].size() != j["samples"].size()) {
            throw ParseError("dataset: \"labels\" must list one label per sample");
        }
        for (const auto& label : j["labels"]) dataset.labels.push_back(label.get<std::string>());
    }
    return dataset;
}

json parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

Dataset read_dataset(const std::string& path) {
    try {
        return dataset_from_json(parse_json_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void write_dataset(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError(path + ": cannot open file for writing");
    out << dataset_to_json(dataset).dump(2) << "\n";
}

GroupElement read_element(const std::string& path) {
    const json j = parse_json_file(path);
    require_schema(j, kElementSchema, path);
    if (!j.contains("group") || !j.contains("payload")) {
        throw ParseError(path + ": element file needs \"group\" and \"payload\"");
    }
    try {
        return element_from_json(descriptor_from_tag(j["group"].get<std::string>()), j["payload"]);
    } catch (const Error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

json element_file_to_json(const GroupElement& element) {
    json j;
    j["schema"] = kElementSchema;
    j["group"] = tag_from_descriptor(element.descriptor());
    j["payload"] = element_to_json(element);
    return j;
}

stats::CovarianceAtIdentity read_covariance(const std::string& path) {
    const json j = parse_json_file(path);
    require_schema(j, kCovarianceSchema, path);
    if (!j.contains("group") || !j.contains("matrix")) {
        throw ParseError(path + ": covariance file needs \"group\" and \"matrix\"");
    }
    stats::CovarianceAtIdentity cov;
    try {
        cov.descriptor = descriptor_from_tag(j["group"].get<std::string>());
        const int d = cov.descriptor.dim();
        cov.matrix = matrix_from_json(j["matrix"], d, d, "covariance matrix");
        cov.weight = 0.0;
        stats::validate_covariance(cov);
    } catch (const Error& e) {
        throw ParseError(path + ": " + e.what());
    }
    return cov;
}

Eigen::VectorXd read_weights(const std::string& path) {
    const json j = parse_json_file(path);
    const json* arr = nullptr;
    if (j.is_array()) {
        arr = &j;
    } else if (j.is_object() && j.contains("weights") && j["weights"].is_array()) {
        arr = &j["weights"];
    } else {
        throw ParseError(path + ": expected a JSON array or an object with \"weights\"");
    }
    Eigen::VectorXd w(arr->size());
    for (size_t i = 0; i < arr->size(); ++i) {
        if (!(*arr)[i].is_number()) throw ParseError(path + ": non-numeric weight");
        w(static_cast<Eigen::Index>(i)) = (*arr)[i].get<double>();
    }
    return w;
}

}  // namespace bistats::io
