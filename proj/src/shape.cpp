#include "bistats/shape.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "bistats/errors.hpp"

namespace bistats::shape {

namespace {

double face_area(const TriangleMesh& mesh, const std::array<int, 3>& face) {
    const Eigen::Vector3d e1 = mesh.vertices[face[1]] - mesh.vertices[face[0]];
    const Eigen::Vector3d e2 = mesh.vertices[face[2]] - mesh.vertices[face[0]];
    return 0.5 * e1.cross(e2).norm();
}

Eigen::Vector3d centroid(const std::vector<Eigen::Vector3d>& vertices) {
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (const auto& v : vertices) c += v;
    return c / static_cast<double>(vertices.size());
}

// Frame of one face: columns (e1, e2, unit normal).
Eigen::Matrix3d face_frame(const TriangleMesh& mesh, const std::array<int, 3>& face) {
    const Eigen::Vector3d e1 = mesh.vertices[face[1]] - mesh.vertices[face[0]];
    const Eigen::Vector3d e2 = mesh.vertices[face[2]] - mesh.vertices[face[0]];
    const Eigen::Vector3d cross = e1.cross(e2);
    const double norm = cross.norm();
    if (0.5 * norm <= 1e-12) {
        throw DegenerateFace("face has (near-)zero area");
    }
    Eigen::Matrix3d f;
    f.col(0) = e1;
    f.col(1) = e2;
    f.col(2) = cross / norm;
    return f;
}

void require_shared_connectivity(const TriangleMesh& a, const TriangleMesh& b, const char* who) {
    if (a.vertices.size() != b.vertices.size() || a.faces != b.faces) {
        throw DescriptorMismatch(std::string(who) + ": meshes are not in correspondence (" +
                                 std::to_string(a.vertices.size()) + " vs " +
                                 std::to_string(b.vertices.size()) + " vertices, " +
                                 std::to_string(a.faces.size()) + " vs " +
                                 std::to_string(b.faces.size()) + " faces)");
    }
}

void warn_skipped(const std::string& what, std::set<std::string>& seen) {
    if (seen.insert(what).second) {
        std::cerr << "warning: ignoring " << what << "\n";
    }
}

TriangleMesh read_off(std::istream& in, const std::string& path) {
    std::string token;
    if (!(in >> token) || token != "OFF") {
        throw ParseError(path + ": missing OFF header");
    }
    long nv = 0, nf = 0, ne = 0;
    if (!(in >> nv >> nf >> ne)) {
        throw ParseError(path + ": malformed OFF count line");
    }
    TriangleMesh mesh;
    mesh.vertices.reserve(nv);
    for (long i = 0; i < nv; ++i) {
        Eigen::Vector3d v;
        if (!(in >> v.x() >> v.y() >> v.z())) {
            throw ParseError(path + ": truncated vertex list at vertex " + std::to_string(i));
        }
        mesh.vertices.push_back(v);
    }
    std::set<std::string> warned;
    for (long i = 0; i < nf; ++i) {
        int k = 0;
        if (!(in >> k)) {
            throw ParseError(path + ": truncated face list at face " + std::to_string(i));
        }
        std::vector<int> idx(k);
        for (int& j : idx) {
            if (!(in >> j)) {
                throw ParseError(path + ": truncated face " + std::to_string(i));
            }
        }
        if (k == 3) {
            mesh.faces.push_back({idx[0], idx[1], idx[2]});
        } else {
            warn_skipped("non-triangular OFF face (" + std::to_string(k) + " vertices)", warned);
        }
    }
    return mesh;
}

TriangleMesh read_obj(std::istream& in, const std::string& path) {
    TriangleMesh mesh;
    std::string line;
    std::set<std::string> warned;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string record;
        if (!(ls >> record) || record[0] == '#') continue;
        if (record == "v") {
            Eigen::Vector3d v;
            if (!(ls >> v.x() >> v.y() >> v.z())) {
                throw ParseError(path + ": malformed vertex at line " + std::to_string(line_no));
            }
            mesh.vertices.push_back(v);
        } else if (record == "f") {
            std::vector<int> idx;
            std::string corner;
            while (ls >> corner) {
                // "i", "i/t", "i/t/n", "i//n" all start with the vertex index.
                size_t pos = 0;
                const long v = std::stol(corner, &pos);
                if (v < 1) {
                    throw ParseError(path + ": unsupported face index at line " +
                                     std::to_string(line_no));
                }
                idx.push_back(static_cast<int>(v - 1));
            }
            if (idx.size() == 3) {
                mesh.faces.push_back({idx[0], idx[1], idx[2]});
            } else {
                warn_skipped("non-triangular OBJ face (" + std::to_string(idx.size()) +
                                 " vertices)",
                             warned);
            }
        } else {
            warn_skipped("OBJ record '" + record + "'", warned);
        }
    }
    return mesh;
}

}  // namespace

void TriangleMesh::validate(double min_area) const {
    const int nv = static_cast<int>(vertices.size());
    for (const auto& v : vertices) {
        if (!v.allFinite()) throw InvalidElement("mesh vertex has non-finite coordinates");
    }
    for (size_t i = 0; i < faces.size(); ++i) {
        for (int j : faces[i]) {
            if (j < 0 || j >= nv) {
                throw InvalidElement("face " + std::to_string(i) + " references vertex " +
                                     std::to_string(j) + " out of range");
            }
        }
        if (face_area(*this, faces[i]) <= min_area) {
            throw DegenerateFace("face " + std::to_string(i) + " has (near-)zero area");
        }
    }
}

ReferenceFrame frame_from_pca(const TriangleMesh& mesh, const ReferenceFrame* sign_reference) {
    if (mesh.vertices.size() < 4) {
        throw DegenerateSpectrum("frame_from_pca: need at least 4 vertices");
    }
    const Eigen::Vector3d origin = centroid(mesh.vertices);
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& v : mesh.vertices) {
        const Eigen::Vector3d d = v - origin;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(mesh.vertices.size());

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eigs(cov);
    // Ascending from Eigen; reorder to descending eigenvalue order.
    Eigen::Vector3d values;
    Eigen::Matrix3d axes;
    for (int i = 0; i < 3; ++i) {
        values(i) = eigs.eigenvalues()(2 - i);
        axes.col(i) = eigs.eigenvectors().col(2 - i);
    }
    const double scale = std::max(values(0), 1e-300);
    if ((values(0) - values(1)) / scale < 1e-9 || (values(1) - values(2)) / scale < 1e-9) {
        throw DegenerateSpectrum("frame_from_pca: ambiguous axes, eigenvalue gap below 1e-9");
    }

    Eigen::Vector3d commitment;  // |dot| with the sign rule, per axis
    for (int i = 0; i < 3; ++i) {
        double dot;
        if (sign_reference != nullptr) {
            dot = axes.col(i).dot(sign_reference->axes.col(i));
        } else {
            int arg_max = 0;
            axes.col(i).cwiseAbs().maxCoeff(&arg_max);
            dot = axes.col(i)(arg_max);
        }
        if (dot < 0.0) axes.col(i) = -axes.col(i);
        commitment(i) = std::abs(dot);
    }
    if (axes.determinant() < 0.0) {
        int weakest = 0;
        commitment.minCoeff(&weakest);
        axes.col(weakest) = -axes.col(weakest);
    }
    return {origin, axes};
}

GroupElement relative_pose(const ReferenceFrame& frame_a, const ReferenceFrame& frame_b) {
    return GroupElement::se3(frame_b.axes * frame_a.axes.transpose(),
                             frame_b.origin - frame_a.origin);
}

std::vector<TriangleMesh> procrustes_align(const std::vector<TriangleMesh>& meshes,
                                           int reference_index) {
    if (meshes.empty()) throw InvalidElement("procrustes_align: no meshes");
    if (reference_index < 0 || reference_index >= static_cast<int>(meshes.size())) {
        throw InvalidElement("procrustes_align: reference index out of range");
    }
    const TriangleMesh& ref = meshes[reference_index];
    for (const auto& mesh : meshes) require_shared_connectivity(ref, mesh, "procrustes_align");

    const Eigen::Vector3d ref_center = centroid(ref.vertices);
    std::vector<TriangleMesh> aligned;
    aligned.reserve(meshes.size());
    for (size_t k = 0; k < meshes.size(); ++k) {
        if (static_cast<int>(k) == reference_index) {
            aligned.push_back(meshes[k]);
            continue;
        }
        const auto& mesh = meshes[k];
        const Eigen::Vector3d center = centroid(mesh.vertices);
        Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
        for (size_t i = 0; i < mesh.vertices.size(); ++i) {
            cross += (ref.vertices[i] - ref_center) * (mesh.vertices[i] - center).transpose();
        }
        Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
        if (svd.singularValues()(1) <= 1e-12 * std::max(svd.singularValues()(0), 1e-300)) {
            throw DegenerateConfiguration("procrustes_align: rank-deficient cross-covariance");
        }
        Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
        if (r.determinant() < 0.0) {
            Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
            flip(2, 2) = -1.0;
            r = svd.matrixU() * flip * svd.matrixV().transpose();
        }
        TriangleMesh out = mesh;
        for (auto& v : out.vertices) v = r * (v - center) + ref_center;
        aligned.push_back(std::move(out));
    }
    return aligned;
}

GroupElement differential_coords(const TriangleMesh& reference, const TriangleMesh& target) {
    require_shared_connectivity(reference, target, "differential_coords");
    if (reference.faces.empty()) {
        throw InvalidElement("differential_coords: meshes have no faces");
    }
    std::vector<GroupElement> gradients;
    gradients.reserve(reference.faces.size());
    for (size_t j = 0; j < reference.faces.size(); ++j) {
        const Eigen::Matrix3d ref_frame = face_frame(reference, reference.faces[j]);
        const Eigen::Matrix3d tgt_frame = face_frame(target, target.faces[j]);
        const Eigen::Matrix3d g = tgt_frame * ref_frame.inverse();
        if (!(g.determinant() > 0.0)) {
            throw OrientationFlip("differential_coords: orientation flip on face " +
                                  std::to_string(j));
        }
        gradients.push_back(GroupElement::glplus(g));
    }
    return GroupElement::product(std::move(gradients));
}

TriangleMesh read_mesh(const std::string& path) {
    std::string ext;
    const auto dot = path.find_last_of('.');
    if (dot != std::string::npos) {
        ext = path.substr(dot + 1);
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
    }
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    TriangleMesh mesh;
    if (ext == "off") {
        mesh = read_off(in, path);
    } else if (ext == "obj") {
        mesh = read_obj(in, path);
    } else {
        throw ParseError(path + ": unsupported mesh format (expected .off or .obj)");
    }
    mesh.validate();
    return mesh;
}

}  // namespace bistats::shape
