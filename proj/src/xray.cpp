#include "hamtomo/xray.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace hamtomo {

using nlohmann::json;

WeightField WeightField::constant(const Matrix& w) {
    WeightField f;
    f.dim_ = w.dim();
    f.fn_ = [w](const Vec3&, const Vec3&) { return w; };
    return f;
}

WeightField WeightField::closed_form(int dim, std::function<Matrix(const Vec3&, const Vec3&)> fn) {
    WeightField f;
    f.dim_ = dim;
    f.fn_ = std::move(fn);
    return f;
}

Matrix WeightField::eval(const Vec3& x, const Vec3& v) const {
    if (!fn_) throw Error("WeightField: evaluating an empty weight");
    return fn_(x, v);
}

Sinogram xray_scalar(const ScalarField& f, const RayFamily& rays, double h) {
    Sinogram s;
    s.family = rays;
    s.components = 1;
    s.values.reserve(rays.size());
    for (const Ray& ray : rays.rays) {
        double acc = 0.0;
        for (const SampleNode& node : sample(ray, h)) acc += node.weight * f.eval(node.point);
        s.values.push_back(acc);
    }
    return s;
}

Sinogram xray_weighted(const WeightField& w, int dim, const VectorFieldFn& f,
                       const RayFamily& rays, double h) {
    if (w.dim() != dim) throw DimensionMismatch("xray_weighted: weight/value dimension mismatch");
    Sinogram s;
    s.family = rays;
    s.components = dim;
    s.values.assign(rays.size() * static_cast<std::size_t>(dim), cplx(0.0, 0.0));
    for (std::size_t r = 0; r < rays.size(); ++r) {
        const Ray& ray = rays.rays[r];
        for (const SampleNode& node : sample(ray, h)) {
            const std::vector<cplx> term = w.eval(node.point, ray.direction) * f(node.point);
            for (int c = 0; c < dim; ++c) {
                s.at(r, c) += node.weight * term[static_cast<std::size_t>(c)];
            }
        }
    }
    return s;
}

Matrix sandwich_line_integral(const std::vector<SampleNode>& nodes,
                              const std::vector<Matrix>& left, const std::vector<Matrix>& right,
                              const std::function<Matrix(const Vec3&)>& f) {
    if (nodes.size() != left.size() || nodes.size() != right.size()) {
        throw DimensionMismatch("sandwich_line_integral: factor count mismatch");
    }
    if (nodes.empty()) throw Error("sandwich_line_integral: no nodes");
    Matrix acc(left.front().dim());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const Matrix term = left[k] * f(nodes[k].point) * right[k];
        for (int i = 0; i < acc.dim(); ++i)
            for (int j = 0; j < acc.dim(); ++j) acc(i, j) += nodes[k].weight * term(i, j);
    }
    return acc;
}

namespace {

// Dense (angle, offset) table from a parallel2d sinogram; dropped rays read 0.
std::vector<double> sinogram_table(const Sinogram& s) {
    if (s.family.kind != "parallel2d") {
        throw ConfigError("back_project: sinogram must come from a parallel2d family");
    }
    if (s.components != 1) throw ConfigError("back_project: scalar sinograms only");
    std::vector<double> table(
        static_cast<std::size_t>(s.family.n_angles) * s.family.n_offsets, 0.0);
    for (std::size_t r = 0; r < s.family.size(); ++r) {
        const RayTag& tag = s.family.tags[r];
        table[static_cast<std::size_t>(tag.angle) * s.family.n_offsets + tag.offset] =
            s.values[r].real();
    }
    return table;
}

ScalarGrid back_project_table(const std::vector<double>& table, const RayFamily& family,
                              const GridSpec& grid) {
    const int na = family.n_angles;
    const int no = family.n_offsets;
    const double width = family.domain.width();
    const Vec3 center = family.domain.center();

    ScalarGrid out;
    out.spec = grid;
    out.values.assign(grid.node_count(), 0.0);

    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const Vec3 x = grid.node_pos(i, j, 0);
            double acc = 0.0;
            for (int ia = 0; ia < na; ++ia) {
                const double theta = M_PI * ia / na;
                const double s = -(x.x - center.x) * std::sin(theta) +
                                 (x.y - center.y) * std::cos(theta);
                const double u = (s / width + 0.5) * no - 0.5;  // continuous offset index
                const int i0 = static_cast<int>(std::floor(u));
                const double frac = u - i0;
                double v0 = 0.0, v1 = 0.0;
                if (i0 >= 0 && i0 < no) v0 = table[static_cast<std::size_t>(ia) * no + i0];
                if (i0 + 1 >= 0 && i0 + 1 < no)
                    v1 = table[static_cast<std::size_t>(ia) * no + i0 + 1];
                acc += (1.0 - frac) * v0 + frac * v1;
            }
            out.values[grid.node_index(i, j, 0)] = acc / na;
        }
    }
    return out;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Spatial kernel of the anchored Riesz potential: k_a |y|^{a-2} with
// k_a = 2^{1-a} Gamma(1-a/2) / (pi Gamma(a/2)), whose Fourier symbol is
// 2 |xi|^{-a}; k_1 = 1/pi makes the a = 1 case equal P I_I.
double riesz_kernel_constant(double alpha) {
    return std::pow(2.0, 1.0 - alpha) * std::tgamma(1.0 - 0.5 * alpha) /
           (M_PI * std::tgamma(0.5 * alpha));
}

// Kernel sample at a lag of (di, dj) cells: cell average (sub-sampled) near
// the singularity, midpoint value farther out.
double riesz_kernel_sample(double alpha, double k_const, double dx, long di, long dj) {
    if (std::labs(di) <= 1 && std::labs(dj) <= 1) {
        const int sub = 128;
        double acc = 0.0;
        for (int a = 0; a < sub; ++a) {
            for (int b = 0; b < sub; ++b) {
                const double x = (di + (a + 0.5) / sub - 0.5) * dx;
                const double y = (dj + (b + 0.5) / sub - 0.5) * dx;
                acc += std::pow(x * x + y * y, 0.5 * (alpha - 2.0));
            }
        }
        return k_const * acc / (static_cast<double>(sub) * sub);
    }
    const double r = dx * std::sqrt(static_cast<double>(di) * di + static_cast<double>(dj) * dj);
    return k_const * std::pow(r, alpha - 2.0);
}

}  // namespace

void fft(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0) throw ConfigError("fft: size must be a power of two");

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * M_PI / len * (inverse ? 1.0 : -1.0);
        const cplx wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cplx u = a[i + k];
                const cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse) {
        for (auto& x : a) x /= static_cast<double>(n);
    }
}

ScalarGrid back_project(const Sinogram& s, const GridSpec& grid) {
    if (s.family.n_angles < 8) {
        throw InsufficientAngles("back_project: need at least 8 angles");
    }
    return back_project_table(sinogram_table(s), s.family, grid);
}

RieszResult riesz(const ScalarGrid& f, double alpha) {
    if (alpha <= 0.0 || alpha >= 2.0) throw ConfigError("riesz: alpha must be in (0, 2)");
    if (f.spec.dim != 2 || f.spec.nx != f.spec.ny) throw ConfigError("riesz: need a square 2D grid");

    const int n = f.spec.nx;
    const std::size_t m = next_pow2(static_cast<std::size_t>(4) * n);
    const double dx = f.spec.spacing;

    std::vector<std::vector<cplx>> rows(m, std::vector<cplx>(m, cplx(0.0, 0.0)));
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
            f.values[f.spec.node_index(i, j, 0)];

    for (auto& row : rows) fft(row, false);
    // Column passes via transpose gather/scatter.
    std::vector<cplx> col(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) col[j] = rows[j][i];
        fft(col, false);
        for (std::size_t j = 0; j < m; ++j) rows[j][i] = col[j];
    }

    // Spectrum boundary energy fraction (aliasing indicator).
    double total = 0.0, boundary = 0.0;
    const long ring = static_cast<long>(m) * 7 / 16;
    for (std::size_t j = 0; j < m; ++j) {
        const long sj = (j <= m / 2) ? static_cast<long>(j) : static_cast<long>(j) - static_cast<long>(m);
        for (std::size_t i = 0; i < m; ++i) {
            const long si = (i <= m / 2) ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(m);
            const double e = std::norm(rows[j][i]);
            total += e;
            if (std::max(std::labs(si), std::labs(sj)) >= ring) boundary += e;
        }
    }

    // Multiplier: the discrete symbol of the truncated kernel (the DFT of the
    // sampled kernel, whose continuum symbol is 2 |xi|^{-alpha}). Sampling the
    // symbol pointwise instead would convolve with the periodized kernel and
    // bias the result by a few percent at this padding.
    {
        const double k_const = riesz_kernel_constant(alpha);
        std::vector<std::vector<cplx>> kernel(m, std::vector<cplx>(m, cplx(0.0, 0.0)));
        for (std::size_t j = 0; j < m; ++j) {
            const long sj = (j <= m / 2) ? static_cast<long>(j)
                                         : static_cast<long>(j) - static_cast<long>(m);
            for (std::size_t i = 0; i < m; ++i) {
                const long si = (i <= m / 2) ? static_cast<long>(i)
                                             : static_cast<long>(i) - static_cast<long>(m);
                kernel[j][i] = riesz_kernel_sample(alpha, k_const, dx, si, sj) * dx * dx;
            }
        }
        for (auto& row : kernel) fft(row, false);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) col[j] = kernel[j][i];
            fft(col, false);
            for (std::size_t j = 0; j < m; ++j) kernel[j][i] = col[j];
        }
        for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t i = 0; i < m; ++i) {
                // The kernel is even, so its transform is real.
                rows[j][i] *= kernel[j][i].real();
            }
        }
    }

    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) col[j] = rows[j][i];
        fft(col, true);
        for (std::size_t j = 0; j < m; ++j) rows[j][i] = col[j];
    }
    for (auto& row : rows) fft(row, true);

    RieszResult result;
    result.field.spec = f.spec;
    result.field.values.assign(f.spec.node_count(), 0.0);
    double imag_max = 0.0, real_max = 0.0;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const cplx v = rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
            imag_max = std::max(imag_max, std::abs(v.imag()));
            real_max = std::max(real_max, std::abs(v.real()));
            result.field.values[f.spec.node_index(i, j, 0)] = v.real();
        }
    }
    if (imag_max > 1e-10 * std::max(1.0, real_max)) {
        throw Error("riesz: unexpected imaginary residue in the output");
    }
    result.alias_fraction = (total > 0.0) ? boundary / total : 0.0;
    result.alias_warning = result.alias_fraction > 0.01;
    return result;
}

ScalarGrid fbp_invert(const Sinogram& s, const GridSpec& grid) {
    if (s.family.n_angles < 8) {
        throw InsufficientAngles("fbp_invert: need at least 8 angles");
    }
    std::vector<double> table = sinogram_table(s);
    const int na = s.family.n_angles;
    const int no = s.family.n_offsets;
    const double ds = s.family.domain.width() / no;
    const std::size_t p = next_pow2(static_cast<std::size_t>(2) * no);
    const double nyquist = M_PI / ds;

    std::vector<cplx> prof(p);
    for (int ia = 0; ia < na; ++ia) {
        std::fill(prof.begin(), prof.end(), cplx(0.0, 0.0));
        for (int io = 0; io < no; ++io) prof[static_cast<std::size_t>(io)] =
            table[static_cast<std::size_t>(ia) * no + io];
        fft(prof, false);
        for (std::size_t m = 0; m < p; ++m) {
            const long sm = (m <= p / 2) ? static_cast<long>(m) : static_cast<long>(m) - static_cast<long>(p);
            const double omega = 2.0 * M_PI * sm / (static_cast<double>(p) * ds);
            // Ramp with a raised-cosine rolloff at the offset Nyquist frequency.
            const double window = (std::abs(omega) >= nyquist)
                                      ? 0.0
                                      : 0.5 * (1.0 + std::cos(M_PI * omega / nyquist));
            prof[m] *= std::abs(omega) * window;
        }
        fft(prof, true);
        for (int io = 0; io < no; ++io) {
            table[static_cast<std::size_t>(ia) * no + io] = prof[static_cast<std::size_t>(io)].real();
        }
    }

    ScalarGrid out = back_project_table(table, s.family, grid);
    for (double& v : out.values) v *= 0.5;
    return out;
}

namespace {

// Forward transform of a C^dim grid function, then its adjoint; the discrete
// normal operator used by the injectivity smoke test.
struct WeightedNormalOperator {
    const WeightField& w;
    const RayFamily& rays;
    const GridSpec& grid;
    double h;
    int dim;

    std::vector<cplx> apply(const std::vector<cplx>& f) const {
        std::vector<cplx> out(f.size(), cplx(0.0, 0.0));
        std::vector<cplx> value(static_cast<std::size_t>(dim));
        std::vector<cplx> point_val(static_cast<std::size_t>(dim));
        for (const Ray& ray : rays.rays) {
            const auto nodes = sample(ray, h);
            std::vector<InterpStencil2D> stencils;
            stencils.reserve(nodes.size());
            std::fill(value.begin(), value.end(), cplx(0.0, 0.0));
            std::vector<Matrix> weights;
            weights.reserve(nodes.size());
            for (const SampleNode& node : nodes) {
                stencils.push_back(interp_stencil_2d(grid, node.point));
                weights.push_back(w.eval(node.point, ray.direction));
                const InterpStencil2D& st = stencils.back();
                std::fill(point_val.begin(), point_val.end(), cplx(0.0, 0.0));
                for (int c = 0; c < 4; ++c) {
                    for (int d = 0; d < dim; ++d) {
                        point_val[static_cast<std::size_t>(d)] +=
                            st.w[c] * f[st.idx[c] * dim + static_cast<std::size_t>(d)];
                    }
                }
                const std::vector<cplx> wv = weights.back() * point_val;
                for (int d = 0; d < dim; ++d) {
                    value[static_cast<std::size_t>(d)] += node.weight * wv[static_cast<std::size_t>(d)];
                }
            }
            // Adjoint: deposit W* value with the same quadrature and stencils.
            for (std::size_t k = 0; k < nodes.size(); ++k) {
                const std::vector<cplx> back = weights[k].adjoint() * value;
                const InterpStencil2D& st = stencils[k];
                for (int c = 0; c < 4; ++c) {
                    for (int d = 0; d < dim; ++d) {
                        out[st.idx[c] * dim + static_cast<std::size_t>(d)] +=
                            nodes[k].weight * st.w[c] * back[static_cast<std::size_t>(d)];
                    }
                }
            }
        }
        return out;
    }
};

double power_iteration(const WeightedNormalOperator& op, std::vector<cplx> v, int iters,
                       double shift) {
    // Iterates shift*I - A when shift > 0, A otherwise.
    double eig = 0.0;
    for (int it = 0; it < iters; ++it) {
        const double nv = vnorm(v);
        for (auto& x : v) x /= nv;
        std::vector<cplx> av = op.apply(v);
        if (shift > 0.0) {
            for (std::size_t i = 0; i < v.size(); ++i) av[i] = shift * v[i] - av[i];
        }
        cplx rayleigh = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) rayleigh += std::conj(v[i]) * av[i];
        eig = rayleigh.real();
        v = std::move(av);
    }
    return eig;
}

}  // namespace

void require_invertible_weight(const WeightField& w, const RayFamily& rays, double h,
                               double inv_tol) {
    for (const Ray& ray : rays.rays) {
        for (const SampleNode& node : sample(ray, h)) {
            const Matrix m = w.eval(node.point, ray.direction);
            // Smallest singular value via the hermitean spectrum of W* W.
            const EigenDecomposition ed = eigh(m.adjoint() * m, 1e-6);
            if (std::sqrt(std::max(ed.eigenvalues.front(), 0.0)) < inv_tol) {
                throw NonInvertibleWeight(
                    "weight matrix below the invertibility tolerance on a quadrature node");
            }
        }
    }
}

NormalOperatorBounds weighted_normal_operator_bounds(const WeightField& w, const RayFamily& rays,
                                                     const GridSpec& grid, double h,
                                                     int power_iters, std::uint64_t seed,
                                                     double inv_tol) {
    require_invertible_weight(w, rays, h, inv_tol);
    const int dim = w.dim();
    WeightedNormalOperator op{w, rays, grid, h, dim};
    Rng rng(seed);
    std::vector<cplx> v0(grid.node_count() * static_cast<std::size_t>(dim));
    for (auto& x : v0) x = rng.gaussian_cplx();

    NormalOperatorBounds out;
    out.lambda_max = power_iteration(op, v0, power_iters, 0.0);
    const double shift = 1.05 * out.lambda_max;
    Rng rng2(seed + 1);
    for (auto& x : v0) x = rng2.gaussian_cplx();
    const double mu = power_iteration(op, v0, 4 * power_iters, shift);
    out.lambda_min = shift - mu;
    return out;
}

void save_sinogram(const std::string& path, const Sinogram& s) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");
    json j;
    j["format"] = "hamtomo-sinogram-1";
    j["components"] = s.components;
    j["rays"] = json::parse(ray_family_header_json(s.family));
    os << j.dump() << "\n";
    os.precision(17);
    for (std::size_t r = 0; r < s.family.size(); ++r) {
        for (int c = 0; c < s.components; ++c) {
            const cplx v = s.at(r, c);
            os << r << "," << c << "," << v.real() << "," << v.imag() << "\n";
        }
    }
    if (!os) throw IoError("write failed on " + path);
}

Sinogram load_sinogram(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) throw IoError("cannot read header from " + path);
    json j = json::parse(line);
    Sinogram s;
    s.family = ray_family_from_header_json(j.at("rays").dump());
    s.components = j.at("components").get<int>();
    s.values.assign(s.family.size() * static_cast<std::size_t>(s.components), cplx(0.0, 0.0));
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::size_t r;
        int c;
        double re, im;
        char comma;
        ss >> r >> comma >> c >> comma >> re >> comma >> im;
        if (!ss) throw IoError(path + ": malformed CSV row '" + line + "'");
        if (r >= s.family.size() || c >= s.components) throw IoError(path + ": index out of range");
        s.at(r, c) = cplx(re, im);
    }
    return s;
}

}  // namespace hamtomo
