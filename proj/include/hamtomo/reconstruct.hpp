// reconstruct.hpp — Inverse solvers: linearized constant-background recovery,
// the pseudolinearization (Gauss-Newton) iteration, and scalar-coefficient
// recovery for H = H0 + f G with known H0 and G.
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hamtomo/expcalc.hpp"
#include "hamtomo/field.hpp"
#include "hamtomo/geometry.hpp"
#include "hamtomo/matrix.hpp"
#include "hamtomo/measurement.hpp"

namespace hamtomo {

struct ReconstructionReport {
    int iterations = 0;
    std::vector<double> residuals;  // Frobenius data residual, summed over rays, per iteration

    struct SkippedRay {
        std::size_t index;
        std::string reason;
    };
    std::vector<SkippedRay> skipped_rays;

    std::string to_json() const;
};

// Orthonormal basis of traceless hermitean N x N matrices under tr(AB).
std::vector<Matrix> traceless_hermitean_basis(int n);

struct LinearizedOptions {
    double h = 1.0 / 64.0;
    double sing_tol = kSingTol;
    double sing_margin = 0.05;  // skip rays with |T - s| below this
    double max_skip_fraction = 0.2;
    int threads = 1;
};

struct LinearizedResult {
    std::shared_ptr<MatrixGrid> field;  // traceless hermitean per node
    ReconstructionReport report;
};

// Linearized constant-background pipeline: per ray invert dexp at the constant
// traceless background to read off the deviation integrals, drop the trace
// channel, expand in the traceless basis, and invert each component sinogram
// by filtered back-projection. Data must be ideal-mode.
LinearizedResult reconstruct_linearized(const MeasurementSet& data, const Matrix& h0,
                                        const RayFamily& rays, const GridSpec& grid,
                                        const LinearizedOptions& opts = {});

// 3D variant: one 2D problem per slice plane of the chosen axis of a beam_3d
// family (rays of other axes are ignored). Returns the per-plane fields on
// slice_grid, in plane order; slice coordinates are the two axes following the
// slice axis cyclically.
std::vector<LinearizedResult> reconstruct_linearized_slices(const MeasurementSet& data,
                                                            const Matrix& h0,
                                                            const RayFamily& rays,
                                                            const GridSpec& slice_grid, int axis,
                                                            const LinearizedOptions& opts = {});

struct IterativeOptions {
    double h = 1.0 / 32.0;
    int max_iters = 8;
    int inner_iters = 40;     // Landweber steps per outer iteration
    int power_iters = 10;     // spectral-norm estimation
    double stall_rel = 0.01;  // stop when the relative residual decrease falls below
    int threads = 1;
    std::uint64_t seed = 1;   // power-iteration start vector
};

struct PseudolinearResult {
    std::shared_ptr<MatrixGrid> field;
    ReconstructionReport report;
};

// Gauss-Newton on the pseudolinearization identity: both weight factors from
// the current iterate, inner solve by Landweber on the normal equations,
// update projected to traceless hermitean. Throws Diverged when the residual
// grows in two consecutive outer iterations.
PseudolinearResult reconstruct_pseudolinear(const MeasurementSet& data,
                                            const MatrixField& initial_guess,
                                            const RayFamily& rays, const GridSpec& grid,
                                            const IterativeOptions& opts = {});

struct ScalarCoefficientOptions : IterativeOptions {
    double g_min = 1e-6;  // minimal pointwise traceless norm of G
};

struct ScalarCoefficientResult {
    std::shared_ptr<ScalarGrid> field;
    ReconstructionReport report;
};

// H(x) = H0(x) + f(x) G(x) with H0, G known; recovers the scalar f. The update
// solves the overdetermined system stacking all N^2 complex weight components
// w_ij = [U(T,t) G U(t,0)]_ij per ray. Throws WeightDegenerate when the
// traceless part of G drops below g_min anywhere on the grid.
ScalarCoefficientResult reconstruct_scalar_coefficient(const MeasurementSet& data,
                                                       const MatrixField& h0_field,
                                                       const MatrixField& g_field,
                                                       const RayFamily& rays, const GridSpec& grid,
                                                       const ScalarCoefficientOptions& opts = {});

}  // namespace hamtomo
