#pragma once

namespace bistats {

/// Central record of the numeric tolerances used by the kernels.
/// Callers may pass a modified copy; all defaults live here.
struct NumericPolicy {
    /// mat_log refuses eigenvalues closer than this to the closed negative
    /// real axis instead of silently picking a branch.
    double spectrum_margin = 1e-12;

    /// Relative symmetry defect accepted by solve_spd before symmetrizing.
    double spd_symmetry_tol = 1e-8;

    /// SO(3)/SE(3) logarithms reject rotation angles >= pi - angle_margin.
    double angle_margin = 1e-9;

    /// Below this rotation angle the closed-form kernels switch to series.
    double small_angle = 1e-4;

    /// Tolerance for the orthonormality / determinant checks applied when
    /// elements are constructed from untrusted payloads.
    double element_tol = 1e-9;

    static const NumericPolicy& standard() {
        static const NumericPolicy policy{};
        return policy;
    }
};

}  // namespace bistats
