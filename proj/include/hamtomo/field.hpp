// field.hpp — Position-dependent fields: grid-backed (multilinear) and
// closed-form scalar/hermitean-matrix fields, test phantoms, and the neutrino
// matter Hamiltonian.
#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hamtomo/geometry.hpp"
#include "hamtomo/matrix.hpp"

namespace hamtomo {

struct GridSpec {
    int dim = 2;  // spatial dimension
    int nx = 0, ny = 0, nz = 1;
    Vec3 origin{};
    double spacing = 0.0;

    std::size_t node_count() const {
        return static_cast<std::size_t>(nx) * ny * nz;
    }
    std::size_t node_index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * ny + j) * nx + i;
    }
    Vec3 node_pos(int i, int j, int k) const {
        return {origin.x + i * spacing, origin.y + j * spacing, origin.z + k * spacing};
    }
    // Square 2D grid over [-extent, extent]^2 with n nodes per side.
    static GridSpec square2d(int n, double extent);
};

struct ScalarGrid {
    GridSpec spec;
    std::vector<double> values;  // node-index order

    double eval(const Vec3& p) const;
};

struct MatrixGrid {
    GridSpec spec;
    int state_dim = 0;
    std::vector<Matrix> values;  // node-index order, hermitean cell-by-cell

    Matrix eval(const Vec3& p) const;
};

class ScalarField {
  public:
    ScalarField() = default;

    static ScalarField closed_form(std::function<double(const Vec3&)> fn);
    static ScalarField constant(double value);
    static ScalarField from_grid(std::shared_ptr<const ScalarGrid> grid);

    double eval(const Vec3& p) const;
    bool is_grid() const { return grid_ != nullptr; }
    const ScalarGrid& grid() const { return *grid_; }

  private:
    std::function<double(const Vec3&)> fn_;
    std::shared_ptr<const ScalarGrid> grid_;
};

class MatrixField {
  public:
    MatrixField() = default;

    static MatrixField closed_form(int state_dim, std::function<Matrix(const Vec3&)> fn);
    static MatrixField constant(const Matrix& value);
    static MatrixField from_grid(std::shared_ptr<const MatrixGrid> grid);

    Matrix eval(const Vec3& p) const;
    int state_dim() const { return state_dim_; }
    bool is_grid() const { return grid_ != nullptr; }
    const MatrixGrid& grid() const { return *grid_; }

  private:
    int state_dim_ = 0;
    std::function<Matrix(const Vec3&)> fn_;
    std::shared_ptr<const MatrixGrid> grid_;
};

// Sample a field onto a grid.
std::shared_ptr<MatrixGrid> make_matrix_grid(const MatrixField& field, const GridSpec& spec);
std::shared_ptr<ScalarGrid> make_scalar_grid(const ScalarField& field, const GridSpec& spec);

// Pointwise H = A + f*I split lifted to fields; grid backends keep their grid.
std::pair<MatrixField, ScalarField> traceless_field(const MatrixField& field);

// 2D bilinear stencil of a point: the four node indices and weights. Shared by
// the transforms and reconstruction (forward interpolation and its adjoint).
struct InterpStencil2D {
    std::size_t idx[4];
    double w[4];
};
InterpStencil2D interp_stencil_2d(const GridSpec& spec, const Vec3& p);

struct NeutrinoParameters {
    Matrix pmns;  // 3x3 unitary
    std::array<double, 3> mass_squares{};
    double energy = 1.0;
    double fermi_constant = 1.0;
    bool antineutrino = false;

    void validate() const;
};

// H(x) = (1/2E) U diag(m^2) U* + s * E f(x) diag(1,0,0) with f = 2*sqrt(2)*G_F*N_e
// and s = -1 for antineutrinos. `electron_density` supplies N_e.
MatrixField neutrino_hamiltonian(const NeutrinoParameters& params, ScalarField electron_density);

// Phantoms ------------------------------------------------------------------

struct GaussianBump {
    double amplitude = 1.0;
    Vec3 center{};
    double sigma = 1.0;
};

MatrixField phantom_constant(const Matrix& value);
MatrixField phantom_gaussian_bump(const Matrix& base, const GaussianBump& bump,
                                  const Matrix& direction);
MatrixField phantom_two_bumps(const Matrix& base, const GaussianBump& bump1,
                              const Matrix& direction1, const GaussianBump& bump2,
                              const Matrix& direction2);
// Radial shell profile, tanh-smoothed at interfaces over width w; zero outside
// the outermost radius.
ScalarField phantom_layered_sphere(const Vec3& center, const std::vector<double>& radii,
                                   const std::vector<double>& shell_values, double smooth_width);

ScalarField scalar_constant(double value);
ScalarField scalar_gaussian_bump(double base, const GaussianBump& bump);
ScalarField scalar_two_bumps(double base, const GaussianBump& bump1, const GaussianBump& bump2);

// Grid file format: one JSON header line, then the binary payload in
// matrix-core serialization order (row-major over nodes).
void save_matrix_grid(const std::string& path, const MatrixGrid& grid);
std::shared_ptr<MatrixGrid> load_matrix_grid(const std::string& path);
void save_scalar_grid(const std::string& path, const ScalarGrid& grid);
std::shared_ptr<ScalarGrid> load_scalar_grid(const std::string& path);

}  // namespace hamtomo
