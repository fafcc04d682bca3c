#include "hamtomo/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hamtomo/parallel.hpp"

namespace hamtomo {

using nlohmann::json;

StateSets StateSets::orthonormal_basis(int n) {
    StateSets s;
    for (int j = 0; j < n; ++j) {
        std::vector<cplx> e(static_cast<std::size_t>(n), cplx(0.0, 0.0));
        e[static_cast<std::size_t>(j)] = 1.0;
        s.initial.push_back(e);
        s.final.push_back(e);
    }
    return s;
}

void StateSets::validate() const {
    if (initial.empty() || final.empty()) throw ConfigError("StateSets: sets must be nonempty");
    for (const auto& v : initial) {
        if (std::abs(vnorm(v) - 1.0) > 1e-12) throw ConfigError("StateSets: initial state not unit");
    }
    for (const auto& v : final) {
        if (std::abs(vnorm(v) - 1.0) > 1e-12) throw ConfigError("StateSets: final state not unit");
    }
}

MeasurementSet measure(const MatrixField& field, const RayFamily& rays, const StateSets& states,
                       MeasureMode mode, double h, Propagation propagation, int threads) {
    const int n = field.state_dim();
    MeasurementSet ms;
    ms.mode = mode;
    ms.state_dim = n;
    if (mode == MeasureMode::Amplitudes) {
        states.validate();
        ms.states = states;
        ms.amplitudes.resize(rays.size());
    } else {
        ms.unitaries.assign(rays.size(), Matrix(n));
    }

    ScalarField trace_part = ScalarField::closed_form(
        [field, n](const Vec3& x) { return field.eval(x).trace().real() / n; });

    parallel_for(rays.size(), threads, [&](std::size_t i) {
        const Ray& ray = rays.rays[i];
        Matrix u = (propagation == Propagation::Ordered) ? evolve(field, ray, h)
                                                         : unordered_evolve(field, ray, h);
        if (mode == MeasureMode::IdealUnitary) {
            // Strip the trace channel: the calibrated data is the special
            // unitary of the traceless part.
            const double phase = line_integral(trace_part, ray, h);
            ms.unitaries[i] = cplx(std::cos(phase), std::sin(phase)) * u;
        } else {
            std::vector<double>& table = ms.amplitudes[i];
            table.reserve(states.final.size() * states.initial.size());
            for (const auto& a : states.final) {
                for (const auto& b : states.initial) {
                    table.push_back(std::abs(vdot(a, u * b)));
                }
            }
        }
    });
    return ms;
}

namespace {

std::vector<cplx> basis_vec(int n, int j) {
    std::vector<cplx> e(static_cast<std::size_t>(n), cplx(0.0, 0.0));
    e[static_cast<std::size_t>(j)] = 1.0;
    return e;
}

// (e_a + coef * e_b) normalized.
std::vector<cplx> mix_vec(int n, int a, int b, cplx coef) {
    std::vector<cplx> v(static_cast<std::size_t>(n), cplx(0.0, 0.0));
    v[static_cast<std::size_t>(a)] += 1.0;
    v[static_cast<std::size_t>(b)] += coef;
    const double s = vnorm(v);
    for (auto& x : v) x /= s;
    return v;
}

}  // namespace

Matrix recover_unitary_up_to_phase(const AmplitudeOracle& oracle, int n) {
    const double z_tol = 1e-9;

    // Entry magnitudes from basis pairs.
    std::vector<std::vector<double>> r(static_cast<std::size_t>(n),
                                       std::vector<double>(static_cast<std::size_t>(n), 0.0));
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
            r[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] =
                oracle(basis_vec(n, j), basis_vec(n, k));

    // In-row phases relative to the row pivot (column 1 whenever it carries
    // weight, otherwise the largest entry).
    Matrix w(n);
    std::vector<int> pivot(static_cast<std::size_t>(n), 0);
    for (int j = 0; j < n; ++j) {
        int p = 0;
        for (int k = 1; k < n; ++k) {
            if (r[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] >
                r[static_cast<std::size_t>(j)][static_cast<std::size_t>(p)])
                p = k;
        }
        if (r[static_cast<std::size_t>(j)][static_cast<std::size_t>(0)] >
            0.5 * r[static_cast<std::size_t>(j)][static_cast<std::size_t>(p)]) {
            p = 0;  // prefer the first column as anchor when it is usable
        }
        const double rp = r[static_cast<std::size_t>(j)][static_cast<std::size_t>(p)];
        if (rp < z_tol) {
            throw DegenerateColumn("recover_unitary_up_to_phase: row " + std::to_string(j) +
                                   " has no usable pivot entry");
        }
        pivot[static_cast<std::size_t>(j)] = p;
        w(j, p) = rp;
        for (int k = 0; k < n; ++k) {
            if (k == p) continue;
            const double rk = r[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
            if (rk <= z_tol) continue;
            const double q1 = oracle(basis_vec(n, j), mix_vec(n, p, k, 1.0));
            const double q2 = oracle(basis_vec(n, j), mix_vec(n, p, k, cplx(0.0, 1.0)));
            const double uu = rp * rp, vv = rk * rk;
            const double re = (2.0 * q1 * q1 - uu - vv) / 2.0;  // Re(conj(u) v)
            const double im = (uu + vv - 2.0 * q2 * q2) / 2.0;  // Im(conj(u) v)
            w(j, k) = cplx(re, im) / rp;
        }
    }

    // Link row phases to row 0 through superposition finals. For each row pick
    // the initial-state probe maximizing the smaller of the two row responses.
    std::vector<double> rho(static_cast<std::size_t>(n), 0.0);
    for (int j = 1; j < n; ++j) {
        double best_score = -1.0;
        std::vector<cplx> best_b;
        cplx best_u_part = 0.0, best_v_part = 0.0;
        for (int c = 0; c < n; ++c) {
            if (r[0][static_cast<std::size_t>(c)] <= z_tol) continue;
            for (int d = 0; d < n; ++d) {
                if (r[static_cast<std::size_t>(j)][static_cast<std::size_t>(d)] <= z_tol) continue;
                const int n_variants = (c == d) ? 1 : 2;
                for (int var = 0; var < n_variants; ++var) {
                    std::vector<cplx> b =
                        (c == d) ? basis_vec(n, c)
                                 : mix_vec(n, c, d, var == 0 ? cplx(1.0, 0.0) : cplx(0.0, 1.0));
                    cplx u_part = 0.0, v_part = 0.0;
                    for (int m = 0; m < n; ++m) {
                        u_part += w(0, m) * b[static_cast<std::size_t>(m)];
                        v_part += w(j, m) * b[static_cast<std::size_t>(m)];
                    }
                    const double score = std::min(std::abs(u_part), std::abs(v_part));
                    if (score > best_score) {
                        best_score = score;
                        best_b = b;
                        best_u_part = u_part;
                        best_v_part = v_part;
                    }
                }
            }
        }
        if (best_score <= z_tol) {
            throw DegenerateColumn("recover_unitary_up_to_phase: cannot link phase of row " +
                                   std::to_string(j));
        }
        const double uu = std::norm(best_u_part);
        const double vv = std::norm(best_v_part);
        const double q1 = oracle(mix_vec(n, 0, j, 1.0), best_b);
        const double q2 = oracle(mix_vec(n, 0, j, cplx(0.0, 1.0)), best_b);
        // Finals conjugate: (e_0 + i e_j)* gives u - i v.
        const double re = (2.0 * q1 * q1 - uu - vv) / 2.0;
        const double im = (2.0 * q2 * q2 - uu - vv) / 2.0;
        const cplx ubar_v(re, im);
        rho[static_cast<std::size_t>(j)] =
            std::arg(ubar_v) - std::arg(std::conj(best_u_part) * best_v_part);
    }

    Matrix v(n);
    for (int j = 0; j < n; ++j) {
        const cplx ph(std::cos(rho[static_cast<std::size_t>(j)]),
                      std::sin(rho[static_cast<std::size_t>(j)]));
        for (int k = 0; k < n; ++k) v(j, k) = ph * w(j, k);
    }

    // Global phase: first nonzero entry of column one made real positive.
    for (int j = 0; j < n; ++j) {
        if (std::abs(v(j, 0)) > z_tol) {
            const cplx ph = std::conj(v(j, 0)) / std::abs(v(j, 0));
            v *= ph;
            break;
        }
    }

    if (!v.is_unitary(1e-6)) {
        throw InconsistentOracle("recover_unitary_up_to_phase: recovered matrix is not unitary");
    }
    return v;
}

Matrix calibrate_su_phase(const Matrix& raw, const Matrix& reference) {
    const int n = raw.dim();
    if (!raw.is_unitary(1e-6)) throw StructureError("calibrate_su_phase: input not unitary");
    const cplx d = raw.det();
    const double base = -std::arg(d) / n;
    Matrix best = raw;
    double best_dist = 1e300;
    for (int m = 0; m < n; ++m) {
        const double a = base + 2.0 * M_PI * m / n;
        const Matrix cand = cplx(std::cos(a), std::sin(a)) * raw;
        const double dist = (cand - reference).frobenius_norm();
        if (dist < best_dist) {
            best_dist = dist;
            best = cand;
        }
    }
    return best;
}

Matrix calibrate_su_phase(const Matrix& raw) {
    return calibrate_su_phase(raw, Matrix::identity(raw.dim()));
}

std::vector<Matrix> calibrate_su_phase_family(const std::vector<Matrix>& raws, double branch_tol) {
    std::vector<Matrix> out;
    out.reserve(raws.size());
    Matrix ref = raws.empty() ? Matrix(0) : Matrix::identity(raws.front().dim());
    for (std::size_t i = 0; i < raws.size(); ++i) {
        Matrix cal = calibrate_su_phase(raws[i], ref);
        if ((cal - ref).frobenius_norm() > branch_tol) {
            throw BranchJump("calibrate_su_phase_family: branch jump at family index " +
                             std::to_string(i) + "; family too coarse");
        }
        ref = cal;
        out.push_back(std::move(cal));
    }
    return out;
}

Matrix apply_gauge_2d(const Matrix& u, const GaugeAngles& g) {
    if (u.dim() != 2) throw DimensionMismatch("apply_gauge_2d: matrix must be 2x2");
    const cplx ea(std::cos(g.alpha), std::sin(g.alpha));
    const cplx eb(std::cos(g.beta), std::sin(g.beta));
    const cplx et(std::cos(g.theta), std::sin(g.theta));
    Matrix da = Matrix::diag({ea, std::conj(ea)});
    Matrix db = Matrix::diag({eb, std::conj(eb)});
    return et * (da * u * db);
}

std::optional<GaugeAngles> gauge_equivalent_2d(const Matrix& u, const Matrix& v, double tol) {
    if (u.dim() != 2 || v.dim() != 2) throw DimensionMismatch("gauge_equivalent_2d: need 2x2");
    if (!u.is_unitary(1e-6) || !v.is_unitary(1e-6)) {
        throw StructureError("gauge_equivalent_2d: inputs must be unitary");
    }

    // The measured data: first-column amplitudes.
    if (std::abs(std::abs(v(0, 0)) - std::abs(u(0, 0))) > tol) return std::nullopt;
    if (std::abs(std::abs(v(1, 0)) - std::abs(u(1, 0))) > tol) return std::nullopt;

    const double z_tol = 1e-9;
    auto ratio_arg = [&](int i, int j, bool& ok) {
        if (std::abs(u(i, j)) <= z_tol || std::abs(v(i, j)) <= z_tol) {
            ok = false;
            return 0.0;
        }
        ok = true;
        return std::arg(v(i, j) / u(i, j));
    };
    bool has_k, has_l, has_m, has_n;
    const double ak = ratio_arg(0, 0, has_k);  // theta + alpha + beta
    const double al = ratio_arg(0, 1, has_l);  // theta + alpha - beta
    const double am = ratio_arg(1, 0, has_m);  // theta - alpha + beta
    const double an = ratio_arg(1, 1, has_n);  // theta - alpha - beta

    const double accept = std::max(1e-9, 10.0 * tol);
    auto verify = [&](const GaugeAngles& g) {
        return (apply_gauge_2d(u, g) - v).frobenius_norm() <= accept;
    };

    std::vector<GaugeAngles> candidates;
    auto add_with_pi_shifts = [&](double theta, double alpha, double beta) {
        for (int st = 0; st < 2; ++st) {
            for (int sa = 0; sa < 2; ++sa) {
                for (int sb = 0; sb < 2; ++sb) {
                    candidates.push_back({alpha + sa * M_PI, beta + sb * M_PI, theta + st * M_PI});
                }
            }
        }
    };

    if (has_k && has_l && has_m) {
        // theta from lambda*mu, then alpha, beta from kappa with lambda.
        const double theta = 0.5 * (al + am);
        add_with_pi_shifts(theta, 0.5 * ((ak - theta) + (al - theta)),
                           0.5 * ((ak - theta) - (al - theta)));
    }
    if (has_k && has_n) {
        const double theta = 0.5 * (ak + an);
        if (has_l) {
            add_with_pi_shifts(theta, 0.5 * ((ak - theta) + (al - theta)),
                               0.5 * ((ak - theta) - (al - theta)));
        } else {
            // Diagonal case: alpha - beta is free, fix beta = 0.
            add_with_pi_shifts(theta, ak - theta, 0.0);
        }
    }
    if (has_l && has_m && !has_k) {
        // Antidiagonal case: alpha + beta is free, fix beta = 0.
        const double theta = 0.5 * (al + am);
        add_with_pi_shifts(theta, al - theta, 0.0);
    }

    for (const GaugeAngles& g : candidates) {
        if (verify(g)) return g;
    }
    return std::nullopt;
}

int symmetry_dimension(const Matrix& u) {
    const int n = u.dim();
    if (!u.is_unitary(1e-6)) throw StructureError("symmetry_dimension: input not unitary");
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (std::abs(u(i, j)) <= 1e-6) {
                throw NonGenericMatrix("symmetry_dimension: entry (" + std::to_string(i) + "," +
                                       std::to_string(j) + ") is numerically zero");
            }
        }
    }

    // Real-linear map Phi -> (U o iPhi) U* + U (U o iPhi)*; columns over the
    // n^2 elementwise phase directions, rows over hermitean coordinates.
    const int m = n * n;
    std::vector<std::vector<double>> map(static_cast<std::size_t>(m),
                                         std::vector<double>(static_cast<std::size_t>(m), 0.0));
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            Matrix x(n);
            x(j, k) = cplx(0.0, 1.0) * u(j, k);
            Matrix kmat = x * u.adjoint() + u * x.adjoint();
            // Flatten: diagonal reals, then off-diagonal (p<q) re and im.
            std::vector<double> col;
            col.reserve(static_cast<std::size_t>(m));
            for (int p = 0; p < n; ++p) col.push_back(kmat(p, p).real());
            for (int p = 0; p < n; ++p) {
                for (int q = p + 1; q < n; ++q) {
                    col.push_back(kmat(p, q).real());
                    col.push_back(kmat(p, q).imag());
                }
            }
            for (int row = 0; row < m; ++row) {
                map[static_cast<std::size_t>(row)][static_cast<std::size_t>(j * n + k)] =
                    col[static_cast<std::size_t>(row)];
            }
        }
    }

    // Singular values by one-sided Jacobi (columns orthogonalized in place);
    // resolves tiny singular values that a Gram-matrix route would wash out.
    std::vector<std::vector<double>> cols(static_cast<std::size_t>(m),
                                          std::vector<double>(static_cast<std::size_t>(m)));
    for (int c = 0; c < m; ++c)
        for (int row = 0; row < m; ++row)
            cols[static_cast<std::size_t>(c)][static_cast<std::size_t>(row)] =
                map[static_cast<std::size_t>(row)][static_cast<std::size_t>(c)];

    for (int sweep = 0; sweep < 60; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < m - 1; ++p) {
            for (int q = p + 1; q < m; ++q) {
                auto& cp = cols[static_cast<std::size_t>(p)];
                auto& cq = cols[static_cast<std::size_t>(q)];
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (int row = 0; row < m; ++row) {
                    app += cp[static_cast<std::size_t>(row)] * cp[static_cast<std::size_t>(row)];
                    aqq += cq[static_cast<std::size_t>(row)] * cq[static_cast<std::size_t>(row)];
                    apq += cp[static_cast<std::size_t>(row)] * cq[static_cast<std::size_t>(row)];
                }
                off = std::max(off, std::abs(apq) / std::max(std::sqrt(app * aqq), 1e-300));
                if (std::abs(apq) <= 1e-30) continue;
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                              : -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int row = 0; row < m; ++row) {
                    const double vp = cp[static_cast<std::size_t>(row)];
                    const double vq = cq[static_cast<std::size_t>(row)];
                    cp[static_cast<std::size_t>(row)] = c * vp - s * vq;
                    cq[static_cast<std::size_t>(row)] = s * vp + c * vq;
                }
            }
        }
        if (off < 1e-14) break;
    }

    double sigma_max = 0.0;
    std::vector<double> sigmas(static_cast<std::size_t>(m), 0.0);
    for (int c = 0; c < m; ++c) {
        double nrm = 0.0;
        for (int row = 0; row < m; ++row) {
            nrm += cols[static_cast<std::size_t>(c)][static_cast<std::size_t>(row)] *
                   cols[static_cast<std::size_t>(c)][static_cast<std::size_t>(row)];
        }
        sigmas[static_cast<std::size_t>(c)] = std::sqrt(nrm);
        sigma_max = std::max(sigma_max, sigmas[static_cast<std::size_t>(c)]);
    }
    int nullity = 0;
    for (double s : sigmas) {
        if (s < 1e-8 * sigma_max) ++nullity;
    }
    return nullity;
}

void save_measurement_set(const std::string& path, const MeasurementSet& ms,
                          const RayFamily& rays) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path + " for writing");

    json j;
    j["format"] = "hamtomo-measure-1";
    j["mode"] = (ms.mode == MeasureMode::IdealUnitary) ? "ideal" : "amplitudes";
    j["N"] = ms.state_dim;
    j["rays"] = json::parse(ray_family_header_json(rays));
    if (ms.mode == MeasureMode::Amplitudes) {
        auto states_to_json = [](const std::vector<std::vector<cplx>>& set) {
            json arr = json::array();
            for (const auto& v : set) {
                json sv = json::array();
                for (const cplx& c : v) sv.push_back({c.real(), c.imag()});
                arr.push_back(sv);
            }
            return arr;
        };
        j["states"]["initial"] = states_to_json(ms.states.initial);
        j["states"]["final"] = states_to_json(ms.states.final);
    }
    os << j.dump() << "\n";

    if (ms.mode == MeasureMode::IdealUnitary) {
        for (const Matrix& m : ms.unitaries) write_matrix(os, m);
    } else {
        os.precision(17);
        const std::size_t nf = ms.states.final.size();
        const std::size_t ni = ms.states.initial.size();
        for (std::size_t ray = 0; ray < ms.amplitudes.size(); ++ray) {
            for (std::size_t a = 0; a < nf; ++a) {
                for (std::size_t b = 0; b < ni; ++b) {
                    os << ray << "," << a << "," << b << "," << ms.amplitudes[ray][a * ni + b]
                       << "\n";
                }
            }
        }
    }
    if (!os) throw IoError("write failed on " + path);
}

MeasurementSet load_measurement_set(const std::string& path, RayFamily* rays_out) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) throw IoError("cannot read header from " + path);
    json j = json::parse(line);

    RayFamily rays = ray_family_from_header_json(j.at("rays").dump());
    if (rays_out) *rays_out = rays;

    MeasurementSet ms;
    ms.state_dim = j.at("N").get<int>();
    if (j.at("mode") == "ideal") {
        ms.mode = MeasureMode::IdealUnitary;
        ms.unitaries.reserve(rays.size());
        for (std::size_t i = 0; i < rays.size(); ++i) ms.unitaries.push_back(read_matrix(is));
    } else {
        ms.mode = MeasureMode::Amplitudes;
        auto states_from_json = [](const json& arr) {
            std::vector<std::vector<cplx>> out;
            for (const auto& sv : arr) {
                std::vector<cplx> v;
                for (const auto& c : sv) v.push_back(cplx(c[0].get<double>(), c[1].get<double>()));
                out.push_back(std::move(v));
            }
            return out;
        };
        ms.states.initial = states_from_json(j.at("states").at("initial"));
        ms.states.final = states_from_json(j.at("states").at("final"));
        const std::size_t ni = ms.states.initial.size();
        const std::size_t nf = ms.states.final.size();
        ms.amplitudes.assign(rays.size(), std::vector<double>(nf * ni, 0.0));
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            std::size_t ray, a, b;
            double value;
            char comma;
            ss >> ray >> comma >> a >> comma >> b >> comma >> value;
            if (!ss) throw IoError(path + ": malformed CSV row '" + line + "'");
            if (ray >= ms.amplitudes.size() || a >= nf || b >= ni) {
                throw IoError(path + ": CSV index out of range");
            }
            ms.amplitudes[ray][a * ni + b] = value;
        }
    }
    return ms;
}

}  // namespace hamtomo
