#pragma once

// Shared helpers for the unit and acceptance suites: seeded random elements
// that stay inside the principal-log domain, and a uniform element metric.

#include <Eigen/Dense>

#include "bistats/groups.hpp"
#include "bistats/rng.hpp"
#include "bistats/stats.hpp"

namespace test_support {

using bistats::groups::GroupDescriptor;
using bistats::groups::GroupElement;
using bistats::groups::TangentCoords;

/// Uniform draw in [-scale, scale] per coordinate.
inline Eigen::VectorXd random_coords(bistats::rng::Generator& gen, int dim, double scale) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v(i) = (2.0 * gen.uniform01() - 1.0) * scale;
    return v;
}

inline TangentCoords random_tangent(const GroupDescriptor& desc, bistats::rng::Generator& gen,
                                    double scale) {
    return {desc, random_coords(gen, desc.dim(), scale)};
}

/// Random element exp(v) with bounded v; scale <= 0.4 keeps composites of a
/// few factors inside the log domain for every supported group.
inline GroupElement random_element(const GroupDescriptor& desc, bistats::rng::Generator& gen,
                                   double scale = 0.4) {
    return bistats::groups::group_exp(random_tangent(desc, gen, scale));
}

/// Random sample set clustered around a random base point.
inline bistats::stats::SampleSet random_sample_set(const GroupDescriptor& desc,
                                                   bistats::rng::Generator& gen, int m,
                                                   double base_scale = 0.3,
                                                   double spread = 0.15) {
    const GroupElement base = random_element(desc, gen, base_scale);
    bistats::stats::SampleSet set{desc, {}};
    set.elements.reserve(m);
    for (int i = 0; i < m; ++i) {
        set.elements.push_back(
            bistats::groups::connection_exp(base, random_tangent(desc, gen, spread)));
    }
    return set;
}

/// Max-abs distance between the matrix representations of two elements.
inline double element_distance(const GroupElement& a, const GroupElement& b) {
    return (bistats::groups::to_matrix(a) - bistats::groups::to_matrix(b)).cwiseAbs().maxCoeff();
}

inline Eigen::Matrix3d rot_z(double angle) {
    return Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

}  // namespace test_support
