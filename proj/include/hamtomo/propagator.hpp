// propagator.hpp — Time-ordered and unordered evolution along rays, interval
// evolution, cached partial products, and the linearized response.
//
// Conventions: iPsi' = H Psi, so U(t2,t1) = Texp(-i int_{t1}^{t2} H dt) maps the
// state at t1 to the state at t2; products compose with later factors on the
// left. The integrator is the midpoint exponential product (order 2, exactly
// unitary per step).
#pragma once

#include <vector>

#include "hamtomo/field.hpp"
#include "hamtomo/geometry.hpp"
#include "hamtomo/matrix.hpp"

namespace hamtomo {

// Default quadrature step: ~256 steps per unit-length chord.
inline constexpr double kDefaultStep = 1.0 / 256.0;

enum class Propagation { Ordered, Unordered };

// U(T,0) over the whole chord.
Matrix evolve(const MatrixField& field, const Ray& ray, double h = kDefaultStep);

// U(t2,t1). Quadrature nodes come from the fixed full-chord partition with end
// weights clipped, so composition U(T,s) U(s,0) = U(T,0) is exact.
Matrix evolve_interval(const MatrixField& field, const Ray& ray, double t1, double t2,
                       double h = kDefaultStep);

// exp(-i int_0^T H dt) with the integral by midpoint quadrature at the same
// nodes as evolve.
Matrix unordered_evolve(const MatrixField& field, const Ray& ray, double h = kDefaultStep);

// d/ds evolve(H0 + s H')|_{s=0} = -i int_0^T U(T,t) H'(gamma(t)) U(t,0) dt,
// by midpoint quadrature with cached partial products (single sweep).
Matrix linearized_response(const MatrixField& h0, const MatrixField& hprime, const Ray& ray,
                           double h = kDefaultStep);

// Per-ray cache of partial products for weight construction.
struct RayPropagation {
    std::vector<SampleNode> nodes;   // K midpoints with weights
    std::vector<Matrix> half_step;   // exp(-i w/2 H_k)
    std::vector<Matrix> prefix;      // prefix[k] = U(k w, 0), size K+1
    std::vector<Matrix> suffix;      // suffix[k] = U(T, k w), size K+1
    Matrix total;                    // U(T, 0)

    // U(T, t_k) and U(t_k, 0) at the k-th midpoint.
    Matrix left_at(std::size_t k) const { return suffix[k + 1] * half_step[k]; }
    Matrix right_at(std::size_t k) const { return half_step[k] * prefix[k]; }
};

RayPropagation propagate_with_cache(const MatrixField& field, const Ray& ray,
                                    double h = kDefaultStep);

// Quadrature of int_0^T f(gamma(t)) dt at the evolve nodes; pairs with the
// phase-gauge identity evolve(H + f I) = exp(-i int f) evolve(H).
double line_integral(const ScalarField& f, const Ray& ray, double h = kDefaultStep);

}  // namespace hamtomo
