// xray.hpp — Scalar and matrix-weighted X-ray transforms, back-projection,
// Riesz potentials, and filtered back-projection for 2D parallel-beam data.
//
// Normalization: back_project is the angle average over [0, pi), matching the
// (1/2pi) full-circle integral over directed lines. riesz is normalized so
// that back_project(xray_scalar(f)) equals riesz(f, 1); its spatial kernel is
// then (2^{1-a} Gamma(1-a/2) / (pi Gamma(a/2))) |y|^{a-2}, i.e. 1/(pi |y|) at
// a = 1.
#pragma once

#include <functional>
#include <vector>

#include "hamtomo/field.hpp"
#include "hamtomo/geometry.hpp"
#include "hamtomo/matrix.hpp"

namespace hamtomo {

// Matrix-valued weight on the sphere bundle (position, direction).
class WeightField {
  public:
    static WeightField constant(const Matrix& w);
    static WeightField closed_form(int dim, std::function<Matrix(const Vec3&, const Vec3&)> fn);

    Matrix eval(const Vec3& x, const Vec3& v) const;
    int dim() const { return dim_; }

  private:
    int dim_ = 0;
    std::function<Matrix(const Vec3&, const Vec3&)> fn_;
};

// Per-ray values; components entries per ray, stored ray-major.
struct Sinogram {
    RayFamily family;
    int components = 1;
    std::vector<cplx> values;

    cplx& at(std::size_t ray, int comp) {
        return values[ray * static_cast<std::size_t>(components) + comp];
    }
    const cplx& at(std::size_t ray, int comp) const {
        return values[ray * static_cast<std::size_t>(components) + comp];
    }
};

// int f(gamma(t)) dt per ray by midpoint quadrature.
Sinogram xray_scalar(const ScalarField& f, const RayFamily& rays, double h);

// int W(gamma(t), dgamma) f(gamma(t)) dt for a C^dim-valued f.
using VectorFieldFn = std::function<std::vector<cplx>(const Vec3&)>;
Sinogram xray_weighted(const WeightField& w, int dim, const VectorFieldFn& f,
                       const RayFamily& rays, double h);

// sum_k weight_k L_k F(x_k) R_k over precomputed per-node sandwich factors.
Matrix sandwich_line_integral(const std::vector<SampleNode>& nodes,
                              const std::vector<Matrix>& left, const std::vector<Matrix>& right,
                              const std::function<Matrix(const Vec3&)>& f);

// Angle average of the sinogram values of lines through each grid point
// (nearest two offsets, linear interpolation). Scalar (1-component) sinograms
// over a parallel2d family; needs >= 8 angles.
ScalarGrid back_project(const Sinogram& s, const GridSpec& grid);

struct RieszResult {
    ScalarGrid field;
    double alias_fraction = 0.0;  // spectrum energy near the padded Nyquist ring
    bool alias_warning = false;   // set when alias_fraction > 1%
};

// Riesz potential of order alpha in (0, 2) on a square 2D grid: Fourier
// multiplier on a 4x zero-padded grid with the DC cell averaged.
RieszResult riesz(const ScalarGrid& f, double alpha);

// Ramp-filtered (raised-cosine apodized) back-projection inverting
// xray_scalar on dense 2D parallel-beam data.
ScalarGrid fbp_invert(const Sinogram& s, const GridSpec& grid);

// Invertibility contract: smallest singular value of W at every quadrature
// node of every ray must exceed inv_tol. Throws NonInvertibleWeight.
void require_invertible_weight(const WeightField& w, const RayFamily& rays, double h,
                               double inv_tol);

// Smallest and largest eigenvalue estimates of the discrete normal operator
// I_W* I_W on C^dim-valued grid functions, by power iteration. Checks the
// invertibility contract first. Used by the numerical injectivity smoke test.
struct NormalOperatorBounds {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
};
NormalOperatorBounds weighted_normal_operator_bounds(const WeightField& w, const RayFamily& rays,
                                                     const GridSpec& grid, double h,
                                                     int power_iters, std::uint64_t seed,
                                                     double inv_tol = 1e-6);

// Radix-2 FFT on power-of-two sized vectors (in place). Exposed for tests.
void fft(std::vector<cplx>& a, bool inverse);

// Sinogram file: one JSON header line, then CSV rows
// (ray_index, component_index, re, im).
void save_sinogram(const std::string& path, const Sinogram& s);
Sinogram load_sinogram(const std::string& path);

}  // namespace hamtomo
