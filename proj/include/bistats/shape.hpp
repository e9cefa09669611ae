#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bistats/groups.hpp"

namespace bistats::shape {

using groups::GroupElement;

struct TriangleMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<int, 3>> faces;

    /// Face indices in range and every face area above min_area.
    void validate(double min_area = 1e-12) const;
};

/// Orthonormal frame: origin plus axes as the columns of a rotation matrix.
struct ReferenceFrame {
    Eigen::Vector3d origin;
    Eigen::Matrix3d axes;
};

/// PCA frame of the vertex cloud: centroid origin, unit eigenvectors of the
/// vertex covariance as axes in descending eigenvalue order. Signs are fixed
/// deterministically (largest-magnitude entry positive), aligned with
/// sign_reference when given (dot product >= 0), and the determinant is
/// corrected to +1 by flipping the least-committed axis.
/// Throws DegenerateSpectrum when eigenvalues nearly tie.
ReferenceFrame frame_from_pca(const TriangleMesh& mesh,
                              const ReferenceFrame* sign_reference = nullptr);

/// Relative pose (O_b O_a^T, o_b - o_a) of frame b with respect to frame a,
/// as an SE(3) element.
GroupElement relative_pose(const ReferenceFrame& frame_a, const ReferenceFrame& frame_b);

/// Rigidly aligns every mesh to meshes[reference_index] (rotation plus
/// translation, no scaling) by centroid alignment and the orthogonal
/// Procrustes rotation with determinant correction. The reference is
/// returned unchanged.
std::vector<TriangleMesh> procrustes_align(const std::vector<TriangleMesh>& meshes,
                                           int reference_index);

/// Per-face deformation gradients of the simplicial map reference -> target:
/// G_j = [e1' e2' n'] [e1 e2 n]^-1 with edge vectors (v1-v0, v2-v0) and the
/// unit face normal. Returns an element of GL+(3)^m (m = face count).
/// Throws OrientationFlip if det(G_j) <= 0 on some face.
GroupElement differential_coords(const TriangleMesh& reference, const TriangleMesh& target);

/// Reads an OFF or Wavefront OBJ mesh (triangular faces only; unsupported
/// records are skipped with a warning on stderr). Selected by extension.
TriangleMesh read_mesh(const std::string& path);

}  // namespace bistats::shape
