#include "hamtomo/field.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace hamtomo {

using nlohmann::json;

GridSpec GridSpec::square2d(int n, double extent) {
    GridSpec s;
    s.dim = 2;
    s.nx = s.ny = n;
    s.nz = 1;
    s.spacing = 2.0 * extent / (n - 1);
    s.origin = {-extent, -extent, 0.0};
    return s;
}

namespace {

// Map a coordinate to (node index, fraction) with the half-cell clamp margin.
void locate(double coord, double origin, double spacing, int n, const char* axis, int& i0,
            double& frac) {
    if (n == 1) {
        i0 = 0;
        frac = 0.0;
        return;
    }
    double u = (coord - origin) / spacing;
    if (u < -0.5 - 1e-9 || u > (n - 1) + 0.5 + 1e-9) {
        throw OutOfDomain(std::string("grid eval: coordinate outside grid margin on axis ") + axis);
    }
    u = std::min(std::max(u, 0.0), static_cast<double>(n - 1));
    i0 = std::min(static_cast<int>(u), n - 2);
    frac = u - i0;
}

}  // namespace

double ScalarGrid::eval(const Vec3& p) const {
    int i0, j0, k0;
    double fx, fy, fz;
    locate(p.x, spec.origin.x, spec.spacing, spec.nx, "x", i0, fx);
    locate(p.y, spec.origin.y, spec.spacing, spec.ny, "y", j0, fy);
    if (spec.dim == 3) {
        locate(p.z, spec.origin.z, spec.spacing, spec.nz, "z", k0, fz);
    } else {
        k0 = 0;
        fz = 0.0;
    }

    double out = 0.0;
    for (int dk = 0; dk <= (spec.dim == 3 ? 1 : 0); ++dk) {
        const double wz = (spec.dim == 3) ? (dk ? fz : 1.0 - fz) : 1.0;
        for (int dj = 0; dj <= (spec.ny > 1 ? 1 : 0); ++dj) {
            const double wy = (spec.ny > 1) ? (dj ? fy : 1.0 - fy) : 1.0;
            for (int di = 0; di <= (spec.nx > 1 ? 1 : 0); ++di) {
                const double wx = (spec.nx > 1) ? (di ? fx : 1.0 - fx) : 1.0;
                out += wx * wy * wz * values[spec.node_index(i0 + di, j0 + dj, k0 + dk)];
            }
        }
    }
    return out;
}

Matrix MatrixGrid::eval(const Vec3& p) const {
    int i0, j0, k0;
    double fx, fy, fz;
    locate(p.x, spec.origin.x, spec.spacing, spec.nx, "x", i0, fx);
    locate(p.y, spec.origin.y, spec.spacing, spec.ny, "y", j0, fy);
    if (spec.dim == 3) {
        locate(p.z, spec.origin.z, spec.spacing, spec.nz, "z", k0, fz);
    } else {
        k0 = 0;
        fz = 0.0;
    }

    Matrix out(state_dim);
    for (int dk = 0; dk <= (spec.dim == 3 ? 1 : 0); ++dk) {
        const double wz = (spec.dim == 3) ? (dk ? fz : 1.0 - fz) : 1.0;
        for (int dj = 0; dj <= (spec.ny > 1 ? 1 : 0); ++dj) {
            const double wy = (spec.ny > 1) ? (dj ? fy : 1.0 - fy) : 1.0;
            for (int di = 0; di <= (spec.nx > 1 ? 1 : 0); ++di) {
                const double wx = (spec.nx > 1) ? (di ? fx : 1.0 - fx) : 1.0;
                const double w = wx * wy * wz;
                if (w == 0.0) continue;
                const Matrix& m = values[spec.node_index(i0 + di, j0 + dj, k0 + dk)];
                for (int a = 0; a < state_dim; ++a)
                    for (int b = 0; b < state_dim; ++b) out(a, b) += w * m(a, b);
            }
        }
    }
    return out;
}

ScalarField ScalarField::closed_form(std::function<double(const Vec3&)> fn) {
    ScalarField f;
    f.fn_ = std::move(fn);
    return f;
}

ScalarField ScalarField::constant(double value) {
    return closed_form([value](const Vec3&) { return value; });
}

ScalarField ScalarField::from_grid(std::shared_ptr<const ScalarGrid> grid) {
    ScalarField f;
    f.grid_ = std::move(grid);
    return f;
}

double ScalarField::eval(const Vec3& p) const {
    if (grid_) return grid_->eval(p);
    if (!fn_) throw Error("ScalarField: evaluating an empty field");
    return fn_(p);
}

MatrixField MatrixField::closed_form(int state_dim, std::function<Matrix(const Vec3&)> fn) {
    MatrixField f;
    f.state_dim_ = state_dim;
    f.fn_ = std::move(fn);
    return f;
}

MatrixField MatrixField::constant(const Matrix& value) {
    return closed_form(value.dim(), [value](const Vec3&) { return value; });
}

MatrixField MatrixField::from_grid(std::shared_ptr<const MatrixGrid> grid) {
    MatrixField f;
    f.state_dim_ = grid->state_dim;
    f.grid_ = std::move(grid);
    return f;
}

Matrix MatrixField::eval(const Vec3& p) const {
    if (grid_) return grid_->eval(p);
    if (!fn_) throw Error("MatrixField: evaluating an empty field");
    return fn_(p);
}

std::shared_ptr<MatrixGrid> make_matrix_grid(const MatrixField& field, const GridSpec& spec) {
    auto grid = std::make_shared<MatrixGrid>();
    grid->spec = spec;
    grid->state_dim = field.state_dim();
    grid->values.reserve(spec.node_count());
    for (int k = 0; k < spec.nz; ++k)
        for (int j = 0; j < spec.ny; ++j)
            for (int i = 0; i < spec.nx; ++i) grid->values.push_back(field.eval(spec.node_pos(i, j, k)));
    return grid;
}

std::shared_ptr<ScalarGrid> make_scalar_grid(const ScalarField& field, const GridSpec& spec) {
    auto grid = std::make_shared<ScalarGrid>();
    grid->spec = spec;
    grid->values.reserve(spec.node_count());
    for (int k = 0; k < spec.nz; ++k)
        for (int j = 0; j < spec.ny; ++j)
            for (int i = 0; i < spec.nx; ++i) grid->values.push_back(field.eval(spec.node_pos(i, j, k)));
    return grid;
}

std::pair<MatrixField, ScalarField> traceless_field(const MatrixField& field) {
    if (field.is_grid()) {
        auto tl = std::make_shared<MatrixGrid>();
        auto tr = std::make_shared<ScalarGrid>();
        const MatrixGrid& g = field.grid();
        tl->spec = g.spec;
        tl->state_dim = g.state_dim;
        tr->spec = g.spec;
        for (const Matrix& m : g.values) {
            auto [a, f] = traceless_split(m);
            tl->values.push_back(std::move(a));
            tr->values.push_back(f);
        }
        return {MatrixField::from_grid(tl), ScalarField::from_grid(tr)};
    }
    MatrixField copy = field;
    MatrixField a = MatrixField::closed_form(field.state_dim(), [copy](const Vec3& x) {
        return traceless_split(copy.eval(x)).first;
    });
    MatrixField copy2 = field;
    ScalarField f = ScalarField::closed_form(
        [copy2](const Vec3& x) { return traceless_split(copy2.eval(x)).second; });
    return {a, f};
}

InterpStencil2D interp_stencil_2d(const GridSpec& spec, const Vec3& p) {
    int i0, j0;
    double fx, fy;
    locate(p.x, spec.origin.x, spec.spacing, spec.nx, "x", i0, fx);
    locate(p.y, spec.origin.y, spec.spacing, spec.ny, "y", j0, fy);
    InterpStencil2D s;
    s.idx[0] = spec.node_index(i0, j0, 0);
    s.idx[1] = spec.node_index(i0 + 1, j0, 0);
    s.idx[2] = spec.node_index(i0, j0 + 1, 0);
    s.idx[3] = spec.node_index(i0 + 1, j0 + 1, 0);
    s.w[0] = (1.0 - fx) * (1.0 - fy);
    s.w[1] = fx * (1.0 - fy);
    s.w[2] = (1.0 - fx) * fy;
    s.w[3] = fx * fy;
    return s;
}

void NeutrinoParameters::validate() const {
    if (pmns.dim() != 3) throw ConfigError("NeutrinoParameters: PMNS matrix must be 3x3");
    if (!pmns.is_unitary(kStructTol)) throw StructureError("NeutrinoParameters: PMNS not unitary");
    if (energy <= 0.0) throw ConfigError("NeutrinoParameters: energy must be positive");
    if (fermi_constant <= 0.0) throw ConfigError("NeutrinoParameters: G_F must be positive");
}

MatrixField neutrino_hamiltonian(const NeutrinoParameters& params, ScalarField electron_density) {
    params.validate();
    Matrix vacuum = params.pmns *
                    Matrix::diag_real({params.mass_squares[0], params.mass_squares[1],
                                       params.mass_squares[2]}) *
                    params.pmns.adjoint();
    vacuum *= cplx(1.0 / (2.0 * params.energy), 0.0);
    const double sign = params.antineutrino ? -1.0 : 1.0;
    const double matter_scale = sign * params.energy * 2.0 * std::sqrt(2.0) * params.fermi_constant;
    return MatrixField::closed_form(3, [vacuum, matter_scale, electron_density](const Vec3& x) {
        Matrix h = vacuum;
        h(0, 0) += matter_scale * electron_density.eval(x);
        return h;
    });
}

MatrixField phantom_constant(const Matrix& value) { return MatrixField::constant(value); }

namespace {

double bump_value(const GaussianBump& b, const Vec3& x) {
    const Vec3 d = x - b.center;
    return b.amplitude * std::exp(-dot(d, d) / (2.0 * b.sigma * b.sigma));
}

}  // namespace

MatrixField phantom_gaussian_bump(const Matrix& base, const GaussianBump& bump,
                                  const Matrix& direction) {
    if (base.dim() != direction.dim()) throw DimensionMismatch("phantom_gaussian_bump: dims");
    return MatrixField::closed_form(base.dim(), [base, bump, direction](const Vec3& x) {
        return base + cplx(bump_value(bump, x), 0.0) * direction;
    });
}

MatrixField phantom_two_bumps(const Matrix& base, const GaussianBump& bump1,
                              const Matrix& direction1, const GaussianBump& bump2,
                              const Matrix& direction2) {
    return MatrixField::closed_form(
        base.dim(), [base, bump1, direction1, bump2, direction2](const Vec3& x) {
            return base + cplx(bump_value(bump1, x), 0.0) * direction1 +
                   cplx(bump_value(bump2, x), 0.0) * direction2;
        });
}

ScalarField phantom_layered_sphere(const Vec3& center, const std::vector<double>& radii,
                                   const std::vector<double>& shell_values, double smooth_width) {
    if (radii.size() != shell_values.size() || radii.empty()) {
        throw ConfigError("phantom_layered_sphere: need one value per shell radius");
    }
    for (std::size_t i = 1; i < radii.size(); ++i) {
        if (radii[i] <= radii[i - 1]) throw ConfigError("phantom_layered_sphere: radii must ascend");
    }
    return ScalarField::closed_form([center, radii, shell_values, smooth_width](const Vec3& x) {
        const double r = norm(x - center);
        // Start in the innermost shell; each interface blends to the next value.
        double v = shell_values[0];
        for (std::size_t i = 0; i < radii.size(); ++i) {
            const double next = (i + 1 < radii.size()) ? shell_values[i + 1] : 0.0;
            const double s = 0.5 * (1.0 + std::tanh((r - radii[i]) / smooth_width));
            v += (next - shell_values[i]) * s;
        }
        return v;
    });
}

ScalarField scalar_constant(double value) { return ScalarField::constant(value); }

ScalarField scalar_gaussian_bump(double base, const GaussianBump& bump) {
    return ScalarField::closed_form(
        [base, bump](const Vec3& x) { return base + bump_value(bump, x); });
}

ScalarField scalar_two_bumps(double base, const GaussianBump& bump1, const GaussianBump& bump2) {
    return ScalarField::closed_form([base, bump1, bump2](const Vec3& x) {
        return base + bump_value(bump1, x) + bump_value(bump2, x);
    });
}

namespace {

json grid_header(const GridSpec& spec, int state_dim, const char* kind) {
    json j;
    j["format"] = "hamtomo-grid-1";
    j["kind"] = kind;
    j["dim"] = spec.dim;
    j["dims"] = {spec.nx, spec.ny, spec.nz};
    j["origin"] = {spec.origin.x, spec.origin.y, spec.origin.z};
    j["spacing"] = spec.spacing;
    j["N"] = state_dim;
    return j;
}

GridSpec spec_from_header(const json& j) {
    GridSpec s;
    s.dim = j.at("dim").get<int>();
    auto d = j.at("dims");
    s.nx = d[0];
    s.ny = d[1];
    s.nz = d[2];
    auto o = j.at("origin");
    s.origin = {o[0], o[1], o[2]};
    s.spacing = j.at("spacing").get<double>();
    return s;
}

json read_header_line(std::istream& is, const std::string& path) {
    std::string line;
    if (!std::getline(is, line)) throw IoError("cannot read header from " + path);
    return json::parse(line);
}

}  // namespace

void save_matrix_grid(const std::string& path, const MatrixGrid& grid) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << grid_header(grid.spec, grid.state_dim, "matrix").dump() << "\n";
    for (const Matrix& m : grid.values) write_matrix(os, m);
    if (!os) throw IoError("write failed on " + path);
}

std::shared_ptr<MatrixGrid> load_matrix_grid(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    json j = read_header_line(is, path);
    if (j.at("kind") != "matrix") throw IoError(path + ": not a matrix grid file");
    auto grid = std::make_shared<MatrixGrid>();
    grid->spec = spec_from_header(j);
    grid->state_dim = j.at("N").get<int>();
    const std::size_t count = grid->spec.node_count();
    grid->values.reserve(count);
    for (std::size_t i = 0; i < count; ++i) grid->values.push_back(read_matrix(is));
    return grid;
}

void save_scalar_grid(const std::string& path, const ScalarGrid& grid) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << grid_header(grid.spec, 1, "scalar").dump() << "\n";
    for (double v : grid.values) {
        // Same little-endian layout as the matrix payload.
        Matrix m(1);
        m(0, 0) = v;
        write_matrix(os, m);
    }
    if (!os) throw IoError("write failed on " + path);
}

std::shared_ptr<ScalarGrid> load_scalar_grid(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    json j = read_header_line(is, path);
    if (j.at("kind") != "scalar") throw IoError(path + ": not a scalar grid file");
    auto grid = std::make_shared<ScalarGrid>();
    grid->spec = spec_from_header(j);
    const std::size_t count = grid->spec.node_count();
    grid->values.reserve(count);
    for (std::size_t i = 0; i < count; ++i) grid->values.push_back(read_matrix(is)(0, 0).real());
    return grid;
}

}  // namespace hamtomo
