#include "bistats/groups.hpp"

#include <cmath>
#include <numeric>
#include <utility>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "bistats/matfun.hpp"

namespace bistats::groups {

namespace {

constexpr double kPi = 3.14159265358979323846;

Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
    Eigen::Matrix3d k;
    k << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
    return k;
}

// Rodrigues with 4th-order series below the small-angle switch.
Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w, const NumericPolicy& policy) {
    const double theta = w.norm();
    const Eigen::Matrix3d k = skew(w);
    double a, b;  // R = I + a K + b K^2
    if (theta < policy.small_angle) {
        const double t2 = theta * theta;
        a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
        b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
    } else {
        a = std::sin(theta) / theta;
        b = (1.0 - std::cos(theta)) / (theta * theta);
    }
    return Eigen::Matrix3d::Identity() + a * k + b * k * k;
}

// Axis-angle via quaternion extraction; stable for all angles up to the
// principal-branch gate at pi - angle_margin.
Eigen::Vector3d so3_log(const Eigen::Matrix3d& r, const NumericPolicy& policy) {
    Eigen::Quaterniond q(r);
    q.normalize();
    if (q.w() < 0.0) q.coeffs() *= -1.0;
    const Eigen::Vector3d v = q.vec();
    const double nv = v.norm();
    const double theta = 2.0 * std::atan2(nv, q.w());
    if (theta >= kPi - policy.angle_margin) {
        throw OutsideLogDomain("SO(3) logarithm: rotation angle " + std::to_string(theta) +
                               " is outside the principal branch");
    }
    const double scale = (nv > 1e-9) ? theta / nv : 2.0 / q.w();
    return scale * v;
}

// V(w) with exp_se3(w, u) = (exp_so3(w), V(w) u).
Eigen::Matrix3d se3_v(const Eigen::Vector3d& w, const NumericPolicy& policy) {
    const double theta = w.norm();
    const Eigen::Matrix3d k = skew(w);
    double b, c;  // V = I + b K + c K^2
    if (theta < policy.small_angle) {
        const double t2 = theta * theta;
        b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
        c = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
    } else {
        b = (1.0 - std::cos(theta)) / (theta * theta);
        c = (theta - std::sin(theta)) / (theta * theta * theta);
    }
    return Eigen::Matrix3d::Identity() + b * k + c * k * k;
}

// Closed-form inverse of V(w); valid on the principal branch (theta < pi).
Eigen::Matrix3d se3_v_inverse(const Eigen::Vector3d& w, const NumericPolicy& policy) {
    const double theta = w.norm();
    const Eigen::Matrix3d k = skew(w);
    double c;  // V^-1 = I - K/2 + c K^2
    if (theta < policy.small_angle) {
        const double t2 = theta * theta;
        c = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
    } else {
        c = (1.0 - theta * std::sin(theta) / (2.0 * (1.0 - std::cos(theta)))) / (theta * theta);
    }
    return Eigen::Matrix3d::Identity() - 0.5 * k + c * k * k;
}

Eigen::VectorXd vec_rowmajor(const Eigen::MatrixXd& m) {
    const int n = static_cast<int>(m.rows());
    Eigen::VectorXd v(n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) v(i * n + j) = m(i, j);
    return v;
}

Eigen::MatrixXd unvec_rowmajor(const Eigen::VectorXd& v, int n) {
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = v(i * n + j);
    return m;
}

void require_same_descriptor(const GroupElement& g, const GroupElement& h, const char* who) {
    if (g.descriptor() != h.descriptor()) {
        throw DescriptorMismatch(std::string(who) + ": elements live on different groups (" +
                                 g.descriptor().tag() + " vs " + h.descriptor().tag() + ")");
    }
}

}  // namespace

GroupElement detail_make_unchecked(GroupDescriptor desc, GroupElement::Payload payload) {
    return GroupElement(std::move(desc), std::move(payload));
}

// --- GroupDescriptor --------------------------------------------------------

GroupDescriptor GroupDescriptor::translation(int d) {
    if (d < 1) throw InvalidElement("translation group needs dimension >= 1");
    GroupDescriptor desc;
    desc.kind_ = GroupKind::Translation;
    desc.n_ = d;
    desc.dim_ = d;
    return desc;
}

GroupDescriptor GroupDescriptor::so3() {
    GroupDescriptor desc;
    desc.kind_ = GroupKind::SO3;
    desc.dim_ = 3;
    return desc;
}

GroupDescriptor GroupDescriptor::se3() {
    GroupDescriptor desc;
    desc.kind_ = GroupKind::SE3;
    desc.dim_ = 6;
    return desc;
}

GroupDescriptor GroupDescriptor::glplus(int n) {
    if (n < 1) throw InvalidElement("GL+ group needs n >= 1");
    GroupDescriptor desc;
    desc.kind_ = GroupKind::GLplus;
    desc.n_ = n;
    desc.dim_ = n * n;
    return desc;
}

GroupDescriptor GroupDescriptor::product(std::vector<GroupDescriptor> factors) {
    if (factors.empty()) throw EmptyProduct("product group needs at least one factor");
    GroupDescriptor desc;
    desc.kind_ = GroupKind::Product;
    desc.factors_ = std::move(factors);
    desc.dim_ = 0;
    for (const auto& f : desc.factors_) desc.dim_ += f.dim();
    return desc;
}

GroupDescriptor GroupDescriptor::power(const GroupDescriptor& factor, int copies) {
    if (copies < 1) throw EmptyProduct("power group needs at least one copy");
    return product(std::vector<GroupDescriptor>(copies, factor));
}

bool GroupDescriptor::operator==(const GroupDescriptor& other) const {
    if (kind_ != other.kind_ || n_ != other.n_) return false;
    return factors_ == other.factors_;
}

std::string GroupDescriptor::tag() const {
    switch (kind_) {
        case GroupKind::Translation:
            return "translation:" + std::to_string(n_);
        case GroupKind::SO3:
            return "so3";
        case GroupKind::SE3:
            return "se3";
        case GroupKind::GLplus:
            return "glplus:" + std::to_string(n_);
        case GroupKind::Product: {
            std::string s = "product(";
            for (size_t i = 0; i < factors_.size(); ++i) {
                if (i > 0) s += ",";
                s += factors_[i].tag();
            }
            return s + ")";
        }
    }
    return "?";
}

// --- GroupElement factories -------------------------------------------------

GroupElement GroupElement::translation(Eigen::VectorXd v) {
    if (!v.allFinite()) throw InvalidElement("translation payload has non-finite entries");
    auto desc = GroupDescriptor::translation(static_cast<int>(v.size()));
    return GroupElement(desc, TranslationPayload{std::move(v)});
}

GroupElement GroupElement::so3(const Eigen::Matrix3d& r, const NumericPolicy& policy) {
    if (!r.allFinite()) throw InvalidElement("SO(3) payload has non-finite entries");
    const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (ortho > policy.element_tol) {
        throw InvalidElement("SO(3) payload is not orthonormal (defect " + std::to_string(ortho) +
                             ")");
    }
    if (std::abs(r.determinant() - 1.0) > policy.element_tol) {
        throw InvalidElement("SO(3) payload has determinant != +1");
    }
    return GroupElement(GroupDescriptor::so3(), So3Payload{r});
}

GroupElement GroupElement::se3(const Eigen::Matrix3d& r, const Eigen::Vector3d& t,
                               const NumericPolicy& policy) {
    GroupElement rot = so3(r, policy);  // reuse the rotation checks
    if (!t.allFinite()) throw InvalidElement("SE(3) translation has non-finite entries");
    return GroupElement(GroupDescriptor::se3(), Se3Payload{rot.as_so3().r, t});
}

GroupElement GroupElement::glplus(const Eigen::MatrixXd& a, const NumericPolicy& policy) {
    (void)policy;
    if (a.rows() != a.cols() || a.rows() < 1) throw InvalidElement("GL+ payload must be square");
    if (!a.allFinite()) throw InvalidElement("GL+ payload has non-finite entries");
    if (!(matfun::det(a) > 0.0)) throw InvalidElement("GL+ payload has non-positive determinant");
    return GroupElement(GroupDescriptor::glplus(static_cast<int>(a.rows())), GlpPayload{a});
}

GroupElement GroupElement::product(std::vector<GroupElement> parts) {
    if (parts.empty()) throw EmptyProduct("product element needs at least one part");
    std::vector<GroupDescriptor> factors;
    factors.reserve(parts.size());
    for (const auto& p : parts) factors.push_back(p.descriptor());
    auto desc = GroupDescriptor::product(std::move(factors));
    return GroupElement(std::move(desc), ProductPayload{std::move(parts)});
}

const TranslationPayload& GroupElement::as_translation() const {
    return std::get<TranslationPayload>(payload_);
}
const So3Payload& GroupElement::as_so3() const { return std::get<So3Payload>(payload_); }
const Se3Payload& GroupElement::as_se3() const { return std::get<Se3Payload>(payload_); }
const GlpPayload& GroupElement::as_glplus() const { return std::get<GlpPayload>(payload_); }
const ProductPayload& GroupElement::as_product() const { return std::get<ProductPayload>(payload_); }

// --- operations --------------------------------------------------------------

GroupElement identity(const GroupDescriptor& desc) {
    switch (desc.kind()) {
        case GroupKind::Translation:
            return detail_make_unchecked(
                desc, TranslationPayload{Eigen::VectorXd::Zero(desc.size_param())});
        case GroupKind::SO3:
            return detail_make_unchecked(desc, So3Payload{Eigen::Matrix3d::Identity()});
        case GroupKind::SE3:
            return detail_make_unchecked(
                desc, Se3Payload{Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero()});
        case GroupKind::GLplus:
            return detail_make_unchecked(
                desc, GlpPayload{Eigen::MatrixXd::Identity(desc.size_param(), desc.size_param())});
        case GroupKind::Product: {
            std::vector<GroupElement> parts;
            parts.reserve(desc.factors().size());
            for (const auto& f : desc.factors()) parts.push_back(identity(f));
            return detail_make_unchecked(desc, ProductPayload{std::move(parts)});
        }
    }
    throw InvalidElement("identity: unknown group kind");
}

bool identical(const GroupElement& g, const GroupElement& h) {
    if (g.descriptor() != h.descriptor()) return false;
    switch (g.descriptor().kind()) {
        case GroupKind::Translation:
            return (g.as_translation().v.array() == h.as_translation().v.array()).all();
        case GroupKind::SO3:
            return (g.as_so3().r.array() == h.as_so3().r.array()).all();
        case GroupKind::SE3:
            return (g.as_se3().r.array() == h.as_se3().r.array()).all() &&
                   (g.as_se3().t.array() == h.as_se3().t.array()).all();
        case GroupKind::GLplus:
            return (g.as_glplus().a.array() == h.as_glplus().a.array()).all();
        case GroupKind::Product: {
            const auto& pg = g.as_product().parts;
            const auto& ph = h.as_product().parts;
            for (size_t i = 0; i < pg.size(); ++i) {
                if (!identical(pg[i], ph[i])) return false;
            }
            return true;
        }
    }
    return false;
}

GroupElement compose(const GroupElement& g, const GroupElement& h) {
    require_same_descriptor(g, h, "compose");
    const auto& desc = g.descriptor();
    switch (desc.kind()) {
        case GroupKind::Translation:
            return detail_make_unchecked(
                desc, TranslationPayload{g.as_translation().v + h.as_translation().v});
        case GroupKind::SO3:
            return detail_make_unchecked(desc, So3Payload{g.as_so3().r * h.as_so3().r});
        case GroupKind::SE3: {
            const auto& a = g.as_se3();
            const auto& b = h.as_se3();
            // semidirect rule (R, v)(Q, w) = (RQ, v + Rw)
            return detail_make_unchecked(desc, Se3Payload{a.r * b.r, a.t + a.r * b.t});
        }
        case GroupKind::GLplus:
            return detail_make_unchecked(desc, GlpPayload{g.as_glplus().a * h.as_glplus().a});
        case GroupKind::Product: {
            const auto& pg = g.as_product().parts;
            const auto& ph = h.as_product().parts;
            std::vector<GroupElement> parts;
            parts.reserve(pg.size());
            for (size_t i = 0; i < pg.size(); ++i) parts.push_back(compose(pg[i], ph[i]));
            return detail_make_unchecked(desc, ProductPayload{std::move(parts)});
        }
    }
    throw InvalidElement("compose: unknown group kind");
}

GroupElement inverse(const GroupElement& g) {
    const auto& desc = g.descriptor();
    switch (desc.kind()) {
        case GroupKind::Translation:
            return detail_make_unchecked(desc, TranslationPayload{-g.as_translation().v});
        case GroupKind::SO3:
            return detail_make_unchecked(desc, So3Payload{g.as_so3().r.transpose()});
        case GroupKind::SE3: {
            const auto& a = g.as_se3();
            Eigen::Matrix3d rt = a.r.transpose();
            return detail_make_unchecked(desc, Se3Payload{rt, -(rt * a.t)});
        }
        case GroupKind::GLplus:
            return detail_make_unchecked(desc, GlpPayload{g.as_glplus().a.inverse()});
        case GroupKind::Product: {
            std::vector<GroupElement> parts;
            parts.reserve(g.as_product().parts.size());
            for (const auto& p : g.as_product().parts) parts.push_back(inverse(p));
            return detail_make_unchecked(desc, ProductPayload{std::move(parts)});
        }
    }
    throw InvalidElement("inverse: unknown group kind");
}

TangentCoords group_log(const GroupElement& g, const NumericPolicy& policy) {
    const auto& desc = g.descriptor();
    switch (desc.kind()) {
        case GroupKind::Translation:
            return {desc, g.as_translation().v};
        case GroupKind::SO3:
            return {desc, so3_log(g.as_so3().r, policy)};
        case GroupKind::SE3: {
            const auto& p = g.as_se3();
            const Eigen::Vector3d w = so3_log(p.r, policy);
            Eigen::VectorXd coords(6);
            coords.head<3>() = w;
            coords.tail<3>() = se3_v_inverse(w, policy) * p.t;
            return {desc, coords};
        }
        case GroupKind::GLplus: {
            try {
                return {desc, vec_rowmajor(matfun::mat_log(g.as_glplus().a, policy))};
            } catch (const SpectrumOnCut& e) {
                throw OutsideLogDomain(std::string("GL+ logarithm: ") + e.what());
            }
        }
        case GroupKind::Product: {
            Eigen::VectorXd coords(desc.dim());
            int offset = 0;
            for (const auto& p : g.as_product().parts) {
                coords.segment(offset, p.descriptor().dim()) = group_log(p, policy).coords;
                offset += p.descriptor().dim();
            }
            return {desc, coords};
        }
    }
    throw InvalidElement("group_log: unknown group kind");
}

GroupElement group_exp(const TangentCoords& v) {
    const auto& desc = v.descriptor;
    if (v.coords.size() != desc.dim()) {
        throw DescriptorMismatch("group_exp: coordinate length does not match group dimension");
    }
    if (!v.coords.allFinite()) {
        throw InvalidElement("group_exp: non-finite coordinates");
    }
    const NumericPolicy& policy = NumericPolicy::standard();
    switch (desc.kind()) {
        case GroupKind::Translation:
            return detail_make_unchecked(desc, TranslationPayload{v.coords});
        case GroupKind::SO3:
            return detail_make_unchecked(desc, So3Payload{so3_exp(v.coords.head<3>(), policy)});
        case GroupKind::SE3: {
            const Eigen::Vector3d w = v.coords.head<3>();
            const Eigen::Vector3d u = v.coords.tail<3>();
            return detail_make_unchecked(desc, Se3Payload{so3_exp(w, policy), se3_v(w, policy) * u});
        }
        case GroupKind::GLplus:
            return detail_make_unchecked(
                desc, GlpPayload{matfun::mat_exp(unvec_rowmajor(v.coords, desc.size_param()))});
        case GroupKind::Product: {
            std::vector<GroupElement> parts;
            parts.reserve(desc.factors().size());
            int offset = 0;
            for (const auto& f : desc.factors()) {
                parts.push_back(group_exp({f, v.coords.segment(offset, f.dim())}));
                offset += f.dim();
            }
            return detail_make_unchecked(desc, ProductPayload{std::move(parts)});
        }
    }
    throw InvalidElement("group_exp: unknown group kind");
}

AdjointMatrix adjoint(const GroupElement& g) {
    const auto& desc = g.descriptor();
    switch (desc.kind()) {
        case GroupKind::Translation:
            return {desc, Eigen::MatrixXd::Identity(desc.dim(), desc.dim())};
        case GroupKind::SO3:
            return {desc, g.as_so3().r};
        case GroupKind::SE3: {
            const auto& p = g.as_se3();
            Eigen::MatrixXd ad = Eigen::MatrixXd::Zero(6, 6);
            ad.block<3, 3>(0, 0) = p.r;
            ad.block<3, 3>(3, 0) = skew(p.t) * p.r;
            ad.block<3, 3>(3, 3) = p.r;
            return {desc, ad};
        }
        case GroupKind::GLplus: {
            const int n = desc.size_param();
            const Eigen::MatrixXd& a = g.as_glplus().a;
            const Eigen::MatrixXd ainv = a.inverse();
            Eigen::MatrixXd ad(n * n, n * n);
            Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(n, n);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    basis(i, j) = 1.0;
                    ad.col(i * n + j) = vec_rowmajor(a * basis * ainv);
                    basis(i, j) = 0.0;
                }
            }
            return {desc, ad};
        }
        case GroupKind::Product: {
            Eigen::MatrixXd ad = Eigen::MatrixXd::Zero(desc.dim(), desc.dim());
            int offset = 0;
            for (const auto& p : g.as_product().parts) {
                const int d = p.descriptor().dim();
                ad.block(offset, offset, d, d) = adjoint(p).matrix;
                offset += d;
            }
            return {desc, ad};
        }
    }
    throw InvalidElement("adjoint: unknown group kind");
}

TangentCoords connection_log(const GroupElement& g, const GroupElement& h,
                             const NumericPolicy& policy) {
    require_same_descriptor(g, h, "connection_log");
    // Exact zero for identical points; g^-1 h would only recover it up to
    // rounding, which matters for constant data sets downstream.
    if (identical(g, h)) return {g.descriptor(), Eigen::VectorXd::Zero(g.descriptor().dim())};
    return group_log(compose(inverse(g), h), policy);
}

GroupElement connection_exp(const GroupElement& g, const TangentCoords& v) {
    if (g.descriptor() != v.descriptor) {
        throw DescriptorMismatch("connection_exp: tangent coordinates from a different group");
    }
    return compose(g, group_exp(v));
}

int component_count(const GroupDescriptor& desc) {
    if (desc.kind() == GroupKind::Product) return static_cast<int>(desc.factors().size());
    return 1;
}

const GroupElement& component(const GroupElement& g, int i) {
    if (g.descriptor().kind() == GroupKind::Product) {
        return g.as_product().parts.at(static_cast<size_t>(i));
    }
    if (i != 0) throw DescriptorMismatch("component: non-product group has a single component");
    return g;
}

bool tangent_in_log_domain(const TangentCoords& v, double margin) {
    const auto& desc = v.descriptor;
    switch (desc.kind()) {
        case GroupKind::Translation:
            return true;
        case GroupKind::SO3:
            return v.coords.head<3>().norm() < kPi - margin;
        case GroupKind::SE3:
            return v.coords.head<3>().norm() < kPi - margin;
        case GroupKind::GLplus: {
            // exp(M) stays on the principal branch iff |Im lambda(M)| < pi.
            Eigen::EigenSolver<Eigen::MatrixXd> eigs(unvec_rowmajor(v.coords, desc.size_param()),
                                                     false);
            return eigs.eigenvalues().imag().cwiseAbs().maxCoeff() < kPi - margin;
        }
        case GroupKind::Product: {
            int offset = 0;
            for (const auto& f : desc.factors()) {
                if (!tangent_in_log_domain({f, v.coords.segment(offset, f.dim())}, margin)) {
                    return false;
                }
                offset += f.dim();
            }
            return true;
        }
    }
    return false;
}

Eigen::MatrixXd to_matrix(const GroupElement& g) {
    const auto& desc = g.descriptor();
    switch (desc.kind()) {
        case GroupKind::Translation: {
            const int d = desc.size_param();
            Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d + 1, d + 1);
            m.block(0, d, d, 1) = g.as_translation().v;
            return m;
        }
        case GroupKind::SO3:
            return g.as_so3().r;
        case GroupKind::SE3: {
            Eigen::MatrixXd m = Eigen::MatrixXd::Identity(4, 4);
            m.block<3, 3>(0, 0) = g.as_se3().r;
            m.block<3, 1>(0, 3) = g.as_se3().t;
            return m;
        }
        case GroupKind::GLplus:
            return g.as_glplus().a;
        case GroupKind::Product: {
            int total = 0;
            std::vector<Eigen::MatrixXd> blocks;
            for (const auto& p : g.as_product().parts) {
                blocks.push_back(to_matrix(p));
                total += static_cast<int>(blocks.back().rows());
            }
            Eigen::MatrixXd m = Eigen::MatrixXd::Zero(total, total);
            int offset = 0;
            for (const auto& b : blocks) {
                m.block(offset, offset, b.rows(), b.cols()) = b;
                offset += static_cast<int>(b.rows());
            }
            return m;
        }
    }
    throw InvalidElement("to_matrix: unknown group kind");
}

}  // namespace bistats::groups
