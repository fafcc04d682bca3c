// measurement.hpp — Phaseless measurement generation, ideal-data unitary
// recovery, special-unitary phase calibration, the 2D gauge equivalence
// checker, and the amplitude-preserving symmetry dimension experiment.
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hamtomo/field.hpp"
#include "hamtomo/geometry.hpp"
#include "hamtomo/matrix.hpp"
#include "hamtomo/propagator.hpp"

namespace hamtomo {

struct StateSets {
    std::vector<std::vector<cplx>> initial;  // possible prepared states
    std::vector<std::vector<cplx>> final;    // measurable states

    static StateSets orthonormal_basis(int n);
    void validate() const;  // unit norms, nonempty
};

enum class MeasureMode { Amplitudes, IdealUnitary };

struct MeasurementSet {
    MeasureMode mode = MeasureMode::Amplitudes;
    int state_dim = 0;
    StateSets states;  // amplitude mode only

    // Per ray: either the calibrated unitary or the |final|x|initial| table of
    // |a* U b| values (row-major over finals).
    std::vector<Matrix> unitaries;
    std::vector<std::vector<double>> amplitudes;
};

// Ideal mode stores the unitary of the traceless part of the field (the
// special-unitary calibration): exp(+i int tr(H)/N) * U_H at matching
// quadrature. This is what ideal data plus phase calibration recovers.
MeasurementSet measure(const MatrixField& field, const RayFamily& rays, const StateSets& states,
                       MeasureMode mode, double h = kDefaultStep,
                       Propagation propagation = Propagation::Ordered, int threads = 1);

// |a* U b| for a prepared/measured pair; a is the final state, b the initial.
using AmplitudeOracle = std::function<double(const std::vector<cplx>&, const std::vector<cplx>&)>;

// Recover V = e^{i phi} U from amplitude probes: entry magnitudes from basis
// pairs, in-row phases from two interference probes per entry anchored at the
// row pivot, rows linked through superposition finals. The global phase is
// fixed by making the first nonzero entry of column one real positive.
Matrix recover_unitary_up_to_phase(const AmplitudeOracle& oracle, int n);

// Multiply by the unit-modulus factor (an N-th root of unity times a phase)
// that makes det = 1, choosing the branch closest to `reference`.
Matrix calibrate_su_phase(const Matrix& raw, const Matrix& reference);
Matrix calibrate_su_phase(const Matrix& raw);  // reference = identity

// Continuation along a family ordered from a short chord: each member is
// calibrated against the previous one. Throws BranchJump when consecutive
// calibrated members are farther apart than branch_tol.
std::vector<Matrix> calibrate_su_phase_family(const std::vector<Matrix>& raws,
                                              double branch_tol = 0.5);

struct GaugeAngles {
    double alpha = 0.0;
    double beta = 0.0;
    double theta = 0.0;
};

// e^{i theta} diag(e^{i alpha}, e^{-i alpha}) U diag(e^{i beta}, e^{-i beta}).
Matrix apply_gauge_2d(const Matrix& u, const GaugeAngles& g);

// Angles relating two 2x2 unitaries with the same first-column amplitudes;
// empty when the amplitude data differs by more than tol.
std::optional<GaugeAngles> gauge_equivalent_2d(const Matrix& u, const Matrix& v, double tol);

// Dimension of the group of elementwise phase changes preserving unitarity
// (equivalently all |U_ij|), by singular-value thresholding of the linearized
// constraint map. Requires all entries nonzero (generic).
int symmetry_dimension(const Matrix& u);

// File format: one JSON header line (mode, state sets, ray-family header),
// then CSV rows (amplitude mode) or binary matrices (ideal mode).
void save_measurement_set(const std::string& path, const MeasurementSet& ms,
                          const RayFamily& rays);
MeasurementSet load_measurement_set(const std::string& path, RayFamily* rays_out = nullptr);

}  // namespace hamtomo
