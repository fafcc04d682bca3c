#include "hamtomo/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hamtomo/parallel.hpp"
#include "hamtomo/propagator.hpp"
#include "hamtomo/xray.hpp"

namespace hamtomo {

using nlohmann::json;

std::string ReconstructionReport::to_json() const {
    json j;
    j["iterations"] = iterations;
    j["residuals"] = residuals;
    json skipped = json::array();
    for (const auto& s : skipped_rays) {
        skipped.push_back({{"index", s.index}, {"reason", s.reason}});
    }
    j["skipped_rays"] = skipped;
    return j.dump();
}

std::vector<Matrix> traceless_hermitean_basis(int n) {
    std::vector<Matrix> basis;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int j = 0; j < n; ++j) {
        for (int k = j + 1; k < n; ++k) {
            Matrix x(n);
            x(j, k) = inv_sqrt2;
            x(k, j) = inv_sqrt2;
            basis.push_back(x);
            Matrix y(n);
            y(j, k) = cplx(0.0, -inv_sqrt2);
            y(k, j) = cplx(0.0, inv_sqrt2);
            basis.push_back(y);
        }
    }
    for (int l = 1; l < n; ++l) {
        Matrix d(n);
        const double s = 1.0 / std::sqrt(static_cast<double>(l) * (l + 1));
        for (int i = 0; i < l; ++i) d(i, i) = s;
        d(l, l) = -static_cast<double>(l) * s;
        basis.push_back(d);
    }
    return basis;
}

namespace {

Matrix hermitize(const Matrix& m) {
    Matrix h = m + m.adjoint();
    h *= 0.5;
    return h;
}

Matrix project_traceless_hermitean(const Matrix& m) {
    Matrix h = hermitize(m);
    const double f = h.trace().real() / h.dim();
    for (int i = 0; i < h.dim(); ++i) h(i, i) -= f;
    return h;
}

double frobenius_sum(const std::vector<Matrix>& residuals) {
    double s = 0.0;
    for (const Matrix& r : residuals) {
        const double f = r.frobenius_norm();
        s += f * f;
    }
    return std::sqrt(s);
}

}  // namespace

LinearizedResult reconstruct_linearized(const MeasurementSet& data, const Matrix& h0,
                                        const RayFamily& rays, const GridSpec& grid,
                                        const LinearizedOptions& opts) {
    if (data.mode != MeasureMode::IdealUnitary) {
        throw ConfigError("reconstruct_linearized: ideal-mode data required");
    }
    if (data.unitaries.size() != rays.size()) {
        throw DimensionMismatch("reconstruct_linearized: data/ray count mismatch");
    }
    const int n = h0.dim();
    const Matrix a0 = traceless_split(h0).first;  // ideal data sees only this part

    double t_max = 0.0;
    for (const Ray& r : rays.rays) t_max = std::max(t_max, r.length);
    const std::vector<double> singular =
        singular_lengths(cplx(0.0, -1.0) * a0, t_max + opts.sing_margin + 1.0);

    const auto basis = traceless_hermitean_basis(n);
    const std::size_t n_comp = basis.size();
    const std::size_t n_rays = rays.size();

    // Per-ray component integrals; skipped rays contribute zero.
    std::vector<std::vector<double>> comps(n_comp, std::vector<double>(n_rays, 0.0));
    std::vector<int> skip_reason(n_rays, 0);  // 0 ok, 1 near-singular length, 2 solver singular

    parallel_for(n_rays, opts.threads, [&](std::size_t i) {
        const double t = rays.rays[i].length;
        for (double s : singular) {
            if (std::abs(t - s) < opts.sing_margin) {
                skip_reason[i] = 1;
                return;
            }
        }
        const Matrix generator = cplx(0.0, -t) * a0;
        Matrix deviation = data.unitaries[i] - mat_exp(generator);
        Matrix b;
        try {
            b = dexp_invert(generator, deviation, opts.sing_tol);
        } catch (const SingularDerivative&) {
            skip_reason[i] = 2;
            return;
        }
        // i B ~= int (A - A0) dt; drop the trace channel per ray.
        const Matrix m = project_traceless_hermitean(cplx(0.0, 1.0) * b);
        for (std::size_t c = 0; c < n_comp; ++c) {
            comps[c][i] = (basis[c] * m).trace().real();
        }
    });

    LinearizedResult result;
    for (std::size_t i = 0; i < n_rays; ++i) {
        if (skip_reason[i] == 1) {
            result.report.skipped_rays.push_back({i, "chord length near singular set"});
        } else if (skip_reason[i] == 2) {
            result.report.skipped_rays.push_back({i, "SingularDerivative"});
        }
    }
    if (result.report.skipped_rays.size() > opts.max_skip_fraction * n_rays) {
        throw TooManySkipped("reconstruct_linearized: over " +
                             std::to_string(static_cast<int>(100 * opts.max_skip_fraction)) +
                             "% of rays near singular chord lengths");
    }

    // One scalar sinogram per traceless basis component, inverted by FBP.
    auto grid_out = std::make_shared<MatrixGrid>();
    grid_out->spec = grid;
    grid_out->state_dim = n;
    grid_out->values.assign(grid.node_count(), a0);
    for (std::size_t c = 0; c < n_comp; ++c) {
        Sinogram s;
        s.family = rays;
        s.components = 1;
        s.values.assign(n_rays, cplx(0.0, 0.0));
        for (std::size_t i = 0; i < n_rays; ++i) s.values[i] = comps[c][i];
        const ScalarGrid g = fbp_invert(s, grid);
        for (std::size_t node = 0; node < grid.node_count(); ++node) {
            for (int p = 0; p < n; ++p) {
                for (int q = 0; q < n; ++q) {
                    grid_out->values[node](p, q) += g.values[node] * basis[c](p, q);
                }
            }
        }
    }

    result.field = grid_out;
    result.report.iterations = 1;
    double dev = 0.0;
    for (std::size_t i = 0; i < n_rays; ++i) {
        if (skip_reason[i] != 0) continue;
        const double d =
            (data.unitaries[i] - mat_exp(cplx(0.0, -rays.rays[i].length) * a0)).frobenius_norm();
        dev += d * d;
    }
    result.report.residuals.push_back(std::sqrt(dev));
    return result;
}

std::vector<LinearizedResult> reconstruct_linearized_slices(const MeasurementSet& data,
                                                            const Matrix& h0,
                                                            const RayFamily& rays,
                                                            const GridSpec& slice_grid, int axis,
                                                            const LinearizedOptions& opts) {
    if (rays.kind != "beam3d") {
        throw ConfigError("reconstruct_linearized_slices: beam_3d ray family required");
    }
    if (data.unitaries.size() != rays.size()) {
        throw DimensionMismatch("reconstruct_linearized_slices: data/ray count mismatch");
    }
    const int u_axis = (axis + 1) % 3;
    const int v_axis = (axis + 2) % 3;
    auto comp = [](const Vec3& p, int ax) { return ax == 0 ? p.x : (ax == 1 ? p.y : p.z); };

    // The synthetic per-slice family keeps the 3D family's offset grid: same
    // counts, same width, centered on the slice coordinates. Lines missing the
    // cross-section carry no data slots, which is consistent with their zero
    // integrals.
    const Vec3 center2{comp(rays.domain.center(), u_axis), comp(rays.domain.center(), v_axis),
                       0.0};
    const ConvexDomain slice_domain =
        ConvexDomain::ball(2, center2, 0.5 * rays.domain.width());

    std::vector<LinearizedResult> out;
    for (int plane = 0; plane < rays.n_planes; ++plane) {
        RayFamily fam2;
        fam2.kind = "parallel2d";
        fam2.domain = slice_domain;
        fam2.n_angles = rays.n_angles;
        fam2.n_offsets = rays.n_offsets;

        MeasurementSet slice_data;
        slice_data.mode = MeasureMode::IdealUnitary;
        slice_data.state_dim = data.state_dim;
        for (std::size_t i = 0; i < rays.size(); ++i) {
            const RayTag& tag = rays.tags[i];
            if (tag.axis != axis || tag.plane != plane) continue;
            Ray flat;
            flat.entry = {comp(rays.rays[i].entry, u_axis), comp(rays.rays[i].entry, v_axis), 0.0};
            flat.direction = {comp(rays.rays[i].direction, u_axis),
                              comp(rays.rays[i].direction, v_axis), 0.0};
            flat.length = rays.rays[i].length;
            fam2.rays.push_back(flat);
            fam2.tags.push_back({tag.angle, tag.offset, 0, 0});
            slice_data.unitaries.push_back(data.unitaries[i]);
        }
        out.push_back(reconstruct_linearized(slice_data, h0, fam2, slice_grid, opts));
    }
    return out;
}

namespace {

// Per-ray weight cache for one Gauss-Newton outer iteration.
struct RayWeights {
    std::vector<SampleNode> nodes;
    std::vector<InterpStencil2D> stencils;
    std::vector<Matrix> left;    // U(T, t_k)
    std::vector<Matrix> right;   // U(t_k, 0)
    Matrix residual;             // U_data - U_model
};

// Matrix-update linear map: F(delta)(ray) = sum_k w_k L_k delta(x_k) R_k.
struct MatrixUpdateMap {
    const std::vector<RayWeights>& rays;
    const GridSpec& grid;
    int n;
    int threads;

    std::vector<Matrix> forward(const std::vector<Matrix>& delta) const {
        std::vector<Matrix> out(rays.size(), Matrix(n));
        parallel_for(rays.size(), threads, [&](std::size_t r) {
            const RayWeights& rw = rays[r];
            Matrix acc(n);
            Matrix point(n);
            for (std::size_t k = 0; k < rw.nodes.size(); ++k) {
                const InterpStencil2D& st = rw.stencils[k];
                for (int i = 0; i < n; ++i) {
                    for (int j = 0; j < n; ++j) {
                        point(i, j) = st.w[0] * delta[st.idx[0]](i, j) +
                                      st.w[1] * delta[st.idx[1]](i, j) +
                                      st.w[2] * delta[st.idx[2]](i, j) +
                                      st.w[3] * delta[st.idx[3]](i, j);
                    }
                }
                const Matrix term = rw.left[k] * point * rw.right[k];
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) acc(i, j) += rw.nodes[k].weight * term(i, j);
            }
            out[r] = std::move(acc);
        });
        return out;
    }

    std::vector<Matrix> adjoint(const std::vector<Matrix>& per_ray) const {
        const int workers = std::max(1, threads);
        std::vector<std::vector<Matrix>> partial(
            static_cast<std::size_t>(workers),
            std::vector<Matrix>(grid.node_count(), Matrix(n)));
        parallel_for(static_cast<std::size_t>(workers), threads, [&](std::size_t w) {
            std::vector<Matrix>& acc = partial[w];
            for (std::size_t r = w; r < rays.size(); r += workers) {
                const RayWeights& rw = rays[r];
                for (std::size_t k = 0; k < rw.nodes.size(); ++k) {
                    const Matrix back = rw.left[k].adjoint() * per_ray[r] * rw.right[k].adjoint();
                    const InterpStencil2D& st = rw.stencils[k];
                    for (int c = 0; c < 4; ++c) {
                        const double wgt = rw.nodes[k].weight * st.w[c];
                        Matrix& cell = acc[st.idx[c]];
                        for (int i = 0; i < n; ++i)
                            for (int j = 0; j < n; ++j) cell(i, j) += wgt * back(i, j);
                    }
                }
            }
        });
        std::vector<Matrix> out(grid.node_count(), Matrix(n));
        for (int w = 0; w < workers; ++w) {
            for (std::size_t node = 0; node < out.size(); ++node) out[node] += partial[w][node];
        }
        for (Matrix& m : out) m = project_traceless_hermitean(m);
        return out;
    }
};

double grid_matrix_norm(const std::vector<Matrix>& v) {
    double s = 0.0;
    for (const Matrix& m : v) {
        const double f = m.frobenius_norm();
        s += f * f;
    }
    return std::sqrt(s);
}

}  // namespace

PseudolinearResult reconstruct_pseudolinear(const MeasurementSet& data,
                                            const MatrixField& initial_guess,
                                            const RayFamily& rays, const GridSpec& grid,
                                            const IterativeOptions& opts) {
    if (data.mode != MeasureMode::IdealUnitary) {
        throw ConfigError("reconstruct_pseudolinear: ideal-mode data required");
    }
    if (data.unitaries.size() != rays.size()) {
        throw DimensionMismatch("reconstruct_pseudolinear: data/ray count mismatch");
    }
    const int n = data.state_dim;

    auto iterate = std::make_shared<MatrixGrid>();
    iterate->spec = grid;
    iterate->state_dim = n;
    {
        auto sampled = make_matrix_grid(initial_guess, grid);
        iterate->values.reserve(sampled->values.size());
        for (const Matrix& m : sampled->values) {
            iterate->values.push_back(project_traceless_hermitean(m));
        }
    }

    PseudolinearResult result;
    const std::size_t n_rays = rays.size();
    int grew = 0;

    for (int outer = 0; outer <= opts.max_iters; ++outer) {
        // Weights and residuals at the current iterate.
        const MatrixField model_field = MatrixField::from_grid(iterate);
        std::vector<RayWeights> weights(n_rays);
        parallel_for(n_rays, opts.threads, [&](std::size_t r) {
            RayWeights rw;
            const RayPropagation rp = propagate_with_cache(model_field, rays.rays[r], opts.h);
            rw.nodes = rp.nodes;
            rw.stencils.reserve(rp.nodes.size());
            rw.left.reserve(rp.nodes.size());
            rw.right.reserve(rp.nodes.size());
            for (std::size_t k = 0; k < rp.nodes.size(); ++k) {
                rw.stencils.push_back(interp_stencil_2d(grid, rp.nodes[k].point));
                rw.left.push_back(rp.left_at(k));
                rw.right.push_back(rp.right_at(k));
            }
            rw.residual = data.unitaries[r] - rp.total;
            weights[r] = std::move(rw);
        });

        std::vector<Matrix> residuals(n_rays, Matrix(n));
        for (std::size_t r = 0; r < n_rays; ++r) residuals[r] = weights[r].residual;
        const double res = frobenius_sum(residuals);
        result.report.residuals.push_back(res);
        result.report.iterations = outer;

        if (outer == opts.max_iters) break;
        if (res <= 1e-10 * std::sqrt(static_cast<double>(n_rays))) break;
        if (outer > 0) {
            const double prev = result.report.residuals[static_cast<std::size_t>(outer) - 1];
            if (res >= prev) {
                if (++grew >= 2) {
                    throw Diverged("reconstruct_pseudolinear: residual grew twice in a row");
                }
            } else {
                grew = 0;
                if (prev - res < opts.stall_rel * prev) break;  // stalled
            }
        }

        // Landweber on the normal equations for the traceless update.
        MatrixUpdateMap map{weights, grid, n, opts.threads};
        std::vector<Matrix> target(n_rays, Matrix(n));
        for (std::size_t r = 0; r < n_rays; ++r) target[r] = cplx(0.0, 1.0) * weights[r].residual;

        // Spectral norm of F*F by power iteration from a seeded start.
        double lambda_max = 0.0;
        {
            Rng rng(opts.seed + static_cast<std::uint64_t>(outer));
            std::vector<Matrix> v(grid.node_count(), Matrix(n));
            for (Matrix& m : v) {
                Matrix g(n);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) g(i, j) = rng.gaussian_cplx();
                m = project_traceless_hermitean(g);
            }
            for (int it = 0; it < opts.power_iters; ++it) {
                const double nv = grid_matrix_norm(v);
                for (Matrix& m : v) m *= cplx(1.0 / nv, 0.0);
                v = map.adjoint(map.forward(v));
                lambda_max = grid_matrix_norm(v);
            }
        }
        const double step = 0.95 / std::max(lambda_max, 1e-30);

        std::vector<Matrix> delta(grid.node_count(), Matrix(n));
        for (int it = 0; it < opts.inner_iters; ++it) {
            std::vector<Matrix> fd = map.forward(delta);
            for (std::size_t r = 0; r < n_rays; ++r) fd[r] -= target[r];
            const std::vector<Matrix> grad = map.adjoint(fd);
            for (std::size_t node = 0; node < delta.size(); ++node) {
                Matrix g = grad[node];
                g *= cplx(step, 0.0);
                delta[node] -= g;
            }
        }

        auto next = std::make_shared<MatrixGrid>();
        next->spec = grid;
        next->state_dim = n;
        next->values.reserve(grid.node_count());
        for (std::size_t node = 0; node < grid.node_count(); ++node) {
            next->values.push_back(
                project_traceless_hermitean(iterate->values[node] + delta[node]));
        }
        iterate = next;
    }

    result.field = iterate;
    return result;
}

ScalarCoefficientResult reconstruct_scalar_coefficient(const MeasurementSet& data,
                                                       const MatrixField& h0_field,
                                                       const MatrixField& g_field,
                                                       const RayFamily& rays, const GridSpec& grid,
                                                       const ScalarCoefficientOptions& opts) {
    if (data.mode != MeasureMode::IdealUnitary) {
        throw ConfigError("reconstruct_scalar_coefficient: ideal-mode data required");
    }
    if (data.unitaries.size() != rays.size()) {
        throw DimensionMismatch("reconstruct_scalar_coefficient: data/ray count mismatch");
    }
    const int n = data.state_dim;

    // G must stay away from identity multiples or all weights vanish jointly.
    for (std::size_t node = 0; node < grid.node_count(); ++node) {
        const int k = static_cast<int>(node / (static_cast<std::size_t>(grid.nx) * grid.ny));
        const int rem = static_cast<int>(node % (static_cast<std::size_t>(grid.nx) * grid.ny));
        const Vec3 p = grid.node_pos(rem % grid.nx, rem / grid.nx, k);
        if (traceless_split(g_field.eval(p)).first.frobenius_norm() < opts.g_min) {
            throw WeightDegenerate(
                "reconstruct_scalar_coefficient: G is a multiple of the identity at a grid node");
        }
    }

    // Ideal data is calibrated to the traceless gauge, so the model works with
    // the traceless parts of H0 and G; f is unchanged by the reduction.
    const MatrixField h0_tl = traceless_field(h0_field).first;
    const MatrixField g_tl = traceless_field(g_field).first;

    auto iterate = std::make_shared<ScalarGrid>();
    iterate->spec = grid;
    iterate->values.assign(grid.node_count(), 0.0);

    ScalarCoefficientResult result;
    const std::size_t n_rays = rays.size();
    int grew = 0;

    struct RayScalarWeights {
        std::vector<SampleNode> nodes;
        std::vector<InterpStencil2D> stencils;
        std::vector<Matrix> w;  // U(T,t_k) G(x_k) U(t_k,0)
        Matrix residual;
    };

    for (int outer = 0; outer <= opts.max_iters; ++outer) {
        const ScalarField f_now = ScalarField::from_grid(iterate);
        MatrixField model_field = MatrixField::closed_form(n, [&](const Vec3& x) {
            Matrix h = h0_tl.eval(x);
            const double f = f_now.eval(x);
            const Matrix g = g_tl.eval(x);
            for (int i = 0; i < h.dim(); ++i)
                for (int j = 0; j < h.dim(); ++j) h(i, j) += f * g(i, j);
            return h;
        });

        std::vector<RayScalarWeights> weights(n_rays);
        parallel_for(n_rays, opts.threads, [&](std::size_t r) {
            RayScalarWeights rw;
            const RayPropagation rp = propagate_with_cache(model_field, rays.rays[r], opts.h);
            rw.nodes = rp.nodes;
            rw.stencils.reserve(rp.nodes.size());
            rw.w.reserve(rp.nodes.size());
            for (std::size_t k = 0; k < rp.nodes.size(); ++k) {
                rw.stencils.push_back(interp_stencil_2d(grid, rp.nodes[k].point));
                rw.w.push_back(rp.left_at(k) * g_tl.eval(rp.nodes[k].point) * rp.right_at(k));
            }
            rw.residual = data.unitaries[r] - rp.total;
            weights[r] = std::move(rw);
        });

        double res = 0.0;
        for (const auto& rw : weights) {
            const double f = rw.residual.frobenius_norm();
            res += f * f;
        }
        res = std::sqrt(res);
        result.report.residuals.push_back(res);
        result.report.iterations = outer;

        if (outer == opts.max_iters) break;
        if (res <= 1e-10 * std::sqrt(static_cast<double>(n_rays))) break;
        if (outer > 0) {
            const double prev = result.report.residuals[static_cast<std::size_t>(outer) - 1];
            if (res >= prev) {
                if (++grew >= 2) {
                    throw Diverged("reconstruct_scalar_coefficient: residual grew twice in a row");
                }
            } else {
                grew = 0;
                if (prev - res < opts.stall_rel * prev) break;
            }
        }

        auto forward = [&](const std::vector<double>& delta) {
            std::vector<Matrix> out(n_rays, Matrix(n));
            parallel_for(n_rays, opts.threads, [&](std::size_t r) {
                const RayScalarWeights& rw = weights[r];
                Matrix acc(n);
                for (std::size_t k = 0; k < rw.nodes.size(); ++k) {
                    const InterpStencil2D& st = rw.stencils[k];
                    const double d = st.w[0] * delta[st.idx[0]] + st.w[1] * delta[st.idx[1]] +
                                     st.w[2] * delta[st.idx[2]] + st.w[3] * delta[st.idx[3]];
                    const double wk = rw.nodes[k].weight * d;
                    for (int i = 0; i < n; ++i)
                        for (int j = 0; j < n; ++j) acc(i, j) += wk * rw.w[k](i, j);
                }
                out[r] = std::move(acc);
            });
            return out;
        };
        auto adjoint = [&](const std::vector<Matrix>& per_ray) {
            const int workers = std::max(1, opts.threads);
            std::vector<std::vector<double>> partial(
                static_cast<std::size_t>(workers), std::vector<double>(grid.node_count(), 0.0));
            parallel_for(static_cast<std::size_t>(workers), opts.threads, [&](std::size_t w) {
                std::vector<double>& acc = partial[w];
                for (std::size_t r = w; r < n_rays; r += workers) {
                    const RayScalarWeights& rw = weights[r];
                    for (std::size_t k = 0; k < rw.nodes.size(); ++k) {
                        // Re tr(W* S): the real pairing of the stacked system.
                        double c = 0.0;
                        for (int i = 0; i < n; ++i)
                            for (int j = 0; j < n; ++j)
                                c += (std::conj(rw.w[k](i, j)) * per_ray[r](i, j)).real();
                        const InterpStencil2D& st = rw.stencils[k];
                        for (int s = 0; s < 4; ++s) {
                            acc[st.idx[s]] += rw.nodes[k].weight * st.w[s] * c;
                        }
                    }
                }
            });
            std::vector<double> out(grid.node_count(), 0.0);
            for (int w = 0; w < workers; ++w)
                for (std::size_t i = 0; i < out.size(); ++i) out[i] += partial[w][i];
            return out;
        };

        std::vector<Matrix> target(n_rays, Matrix(n));
        for (std::size_t r = 0; r < n_rays; ++r) target[r] = cplx(0.0, 1.0) * weights[r].residual;

        double lambda_max = 0.0;
        {
            Rng rng(opts.seed + static_cast<std::uint64_t>(outer));
            std::vector<double> v(grid.node_count());
            for (double& x : v) x = rng.gaussian();
            for (int it = 0; it < opts.power_iters; ++it) {
                double nv = 0.0;
                for (double x : v) nv += x * x;
                nv = std::sqrt(nv);
                for (double& x : v) x /= nv;
                v = adjoint(forward(v));
                lambda_max = 0.0;
                for (double x : v) lambda_max += x * x;
                lambda_max = std::sqrt(lambda_max);
            }
        }
        const double step = 0.95 / std::max(lambda_max, 1e-30);

        std::vector<double> delta(grid.node_count(), 0.0);
        for (int it = 0; it < opts.inner_iters; ++it) {
            std::vector<Matrix> fd = forward(delta);
            for (std::size_t r = 0; r < n_rays; ++r) fd[r] -= target[r];
            const std::vector<double> grad = adjoint(fd);
            for (std::size_t i = 0; i < delta.size(); ++i) delta[i] -= step * grad[i];
        }

        auto next = std::make_shared<ScalarGrid>();
        next->spec = grid;
        next->values.resize(grid.node_count());
        for (std::size_t i = 0; i < grid.node_count(); ++i) {
            next->values[i] = iterate->values[i] + delta[i];
        }
        iterate = next;
    }

    result.field = iterate;
    return result;
}

}  // namespace hamtomo
