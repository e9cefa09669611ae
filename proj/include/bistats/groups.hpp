#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "bistats/errors.hpp"
#include "bistats/numeric_policy.hpp"

namespace bistats::groups {

enum class GroupKind { Translation, SO3, SE3, GLplus, Product };

/// Identifies a supported Lie group and caches its tangent dimension.
/// Products may nest arbitrarily; all operations act factor-wise on them.
class GroupDescriptor {
public:
    /// Placeholder descriptor (dim 0); every factory produces a valid one.
    GroupDescriptor() = default;

    static GroupDescriptor translation(int d);
    static GroupDescriptor so3();
    static GroupDescriptor se3();
    static GroupDescriptor glplus(int n);
    static GroupDescriptor product(std::vector<GroupDescriptor> factors);
    /// Product of `copies` identical factors.
    static GroupDescriptor power(const GroupDescriptor& factor, int copies);

    GroupKind kind() const { return kind_; }
    int dim() const { return dim_; }
    /// Translation dimension d or GLplus matrix size n.
    int size_param() const { return n_; }
    const std::vector<GroupDescriptor>& factors() const { return factors_; }

    bool operator==(const GroupDescriptor& other) const;
    bool operator!=(const GroupDescriptor& other) const { return !(*this == other); }

    /// Compact tag ("se3", "translation:3", "product(glplus:3,so3)", ...).
    std::string tag() const;

private:
    GroupKind kind_ = GroupKind::Translation;
    int n_ = 0;
    int dim_ = 0;
    std::vector<GroupDescriptor> factors_;
};

struct TranslationPayload {
    Eigen::VectorXd v;
};
struct So3Payload {
    Eigen::Matrix3d r;
};
struct Se3Payload {
    Eigen::Matrix3d r;
    Eigen::Vector3d t;
};
struct GlpPayload {
    Eigen::MatrixXd a;
};
class GroupElement;
struct ProductPayload {
    std::vector<GroupElement> parts;
};

/// A point of a supported Lie group. Public factories validate the payload
/// invariants (orthonormality, positive determinant, finiteness); the group
/// operations construct results through a trusted path and assume validity.
class GroupElement {
public:
    using Payload =
        std::variant<TranslationPayload, So3Payload, Se3Payload, GlpPayload, ProductPayload>;

    static GroupElement translation(Eigen::VectorXd v);
    static GroupElement so3(const Eigen::Matrix3d& r,
                            const NumericPolicy& policy = NumericPolicy::standard());
    static GroupElement se3(const Eigen::Matrix3d& r, const Eigen::Vector3d& t,
                            const NumericPolicy& policy = NumericPolicy::standard());
    static GroupElement glplus(const Eigen::MatrixXd& a,
                               const NumericPolicy& policy = NumericPolicy::standard());
    static GroupElement product(std::vector<GroupElement> parts);

    const GroupDescriptor& descriptor() const { return desc_; }

    const TranslationPayload& as_translation() const;
    const So3Payload& as_so3() const;
    const Se3Payload& as_se3() const;
    const GlpPayload& as_glplus() const;
    const ProductPayload& as_product() const;

private:
    friend GroupElement detail_make_unchecked(GroupDescriptor desc, GroupElement::Payload payload);

    GroupElement(GroupDescriptor desc, Payload payload)
        : desc_(std::move(desc)), payload_(std::move(payload)) {}

    GroupDescriptor desc_;
    Payload payload_;
};

/// Coordinates of a tangent vector at the identity in the canonical basis:
/// standard basis for translations, axis-angle for SO(3), (omega, u) with
/// rotation first for SE(3), row-major elementary matrices for GL+(n),
/// concatenation for products.
struct TangentCoords {
    GroupDescriptor descriptor;
    Eigen::VectorXd coords;
};

/// Matrix of Ad(g) acting on canonical identity coordinates.
struct AdjointMatrix {
    GroupDescriptor descriptor;
    Eigen::MatrixXd matrix;
};

GroupElement identity(const GroupDescriptor& desc);

/// Bitwise payload equality (same descriptor and identical representation).
bool identical(const GroupElement& g, const GroupElement& h);

GroupElement compose(const GroupElement& g, const GroupElement& h);

GroupElement inverse(const GroupElement& g);

/// Coordinates of log(g) at the identity. Throws OutsideLogDomain when g is
/// not in the principal-logarithm domain of its kind (rotation angle >= pi,
/// spectrum on the negative real axis).
TangentCoords group_log(const GroupElement& g,
                        const NumericPolicy& policy = NumericPolicy::standard());

GroupElement group_exp(const TangentCoords& v);

AdjointMatrix adjoint(const GroupElement& g);

/// Left-trivialized logarithm of the canonical Cartan-Schouten connection:
/// the coordinates of log(g^-1 h) at the identity.
TangentCoords connection_log(const GroupElement& g, const GroupElement& h,
                             const NumericPolicy& policy = NumericPolicy::standard());

/// Inverse of connection_log: compose(g, group_exp(v)).
GroupElement connection_exp(const GroupElement& g, const TangentCoords& v);

/// Number of top-level components: product factor count, 1 otherwise.
int component_count(const GroupDescriptor& desc);

/// The i-th top-level component of an element (the element itself for
/// non-product groups and i = 0).
const GroupElement& component(const GroupElement& g, int i);

/// Whether tangent coordinates v stay inside the principal-log domain with
/// the given margin, i.e. group_log(group_exp(v)) recovers v. Used by the
/// wrapped-Gaussian sampler to reject draws that would wrap.
bool tangent_in_log_domain(const TangentCoords& v, double margin);

/// Matrix representation helpers used for cross-checks against the dense
/// kernels: SO(3) as 3x3, SE(3) as homogeneous 4x4, GL+(n) as n x n.
Eigen::MatrixXd to_matrix(const GroupElement& g);

}  // namespace bistats::groups
