// main.cpp — Command-line orchestration: phantom/field generation, forward
// simulation, reconstruction, and the verification suites.
//
// Exit codes: 0 success, 2 config error, 3 I/O error, 4 numerical failure.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "config.hpp"
#include "verify_suites.hpp"

#include "hamtomo/field.hpp"
#include "hamtomo/measurement.hpp"
#include "hamtomo/reconstruct.hpp"
#include "hamtomo/xray.hpp"

namespace {

using namespace hamtomo;
using namespace hamtomo::cli;
using nlohmann::json;

namespace fs = std::filesystem;

struct CommonArgs {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    std::string out_dir;
};

json load_with_overrides(CommonArgs& args) {
    json cfg = load_config(args.config_path);
    if (args.seed_set) cfg["seed"] = args.seed;
    if (args.threads > 0) cfg["threads"] = args.threads;
    if (!args.out_dir.empty()) cfg["out"]["dir"] = args.out_dir;
    return cfg;
}

fs::path out_path(const json& cfg, const char* key, const char* fallback) {
    fs::path dir = cfg.contains("out") && cfg["out"].contains("dir")
                       ? fs::path(cfg["out"]["dir"].get<std::string>())
                       : fs::path(".");
    fs::create_directories(dir);
    const std::string name = cfg.contains("out") && cfg["out"].contains(key)
                                 ? cfg["out"][key].get<std::string>()
                                 : std::string(fallback);
    return dir / name;
}

// Binary PGM (P5) with linear min-max scaling; scaling recorded in a JSON
// sidecar so images stay quantitative.
void write_pgm(const fs::path& path, const ScalarGrid& grid) {
    double lo = 1e300, hi = -1e300;
    for (double v : grid.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = (hi > lo) ? hi - lo : 1.0;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path.string());
    os << "P5\n" << grid.spec.nx << " " << grid.spec.ny << "\n255\n";
    // Top row first.
    for (int j = grid.spec.ny - 1; j >= 0; --j) {
        for (int i = 0; i < grid.spec.nx; ++i) {
            const double v = grid.values[grid.spec.node_index(i, j, 0)];
            os.put(static_cast<char>(static_cast<int>(255.0 * (v - lo) / span + 0.5)));
        }
    }
    json meta;
    meta["min"] = lo;
    meta["max"] = hi;
    meta["scaling"] = "linear min-max to [0,255]";
    std::ofstream ms(path.string() + ".json");
    ms << meta.dump(2) << "\n";
}

int cmd_phantom(CommonArgs& args) {
    json cfg = load_with_overrides(args);
    const PhantomField field = phantom_from_json(cfg.at("phantom"));
    const GridSpec grid = grid_from_json(cfg.at("phantom").at("grid"));
    const fs::path path = out_path(cfg, "field", "field.dat");
    if (field.is_matrix) {
        save_matrix_grid(path.string(), *make_matrix_grid(field.matrix_field, grid));
    } else {
        save_scalar_grid(path.string(), *make_scalar_grid(field.scalar_field, grid));
    }
    std::cout << "phantom: wrote " << path.string() << "\n";
    return 0;
}

int cmd_simulate(CommonArgs& args) {
    json cfg = load_with_overrides(args);
    const ConvexDomain domain = domain_from_json(cfg.at("domain"));
    const RayFamily rays = rays_from_json(cfg.at("rays"), domain);

    MatrixField field;
    if (cfg.contains("field_file")) {
        field = MatrixField::from_grid(load_matrix_grid(cfg.at("field_file").get<std::string>()));
    } else {
        const PhantomField pf = phantom_from_json(cfg.at("phantom"));
        if (!pf.is_matrix) throw ConfigError("simulate: phantom must be a matrix field");
        field = pf.matrix_field;
    }

    const json& sim = cfg.at("simulate");
    const double h = sim.value("h", kDefaultStep);
    const MeasureMode mode =
        sim.at("mode") == "ideal" ? MeasureMode::IdealUnitary : MeasureMode::Amplitudes;
    const Propagation prop =
        sim.value("propagation", "ordered") == "unordered" ? Propagation::Unordered
                                                           : Propagation::Ordered;
    const StateSets states = cfg.contains("states")
                                 ? states_from_json(cfg.at("states"), field.state_dim())
                                 : StateSets::orthonormal_basis(field.state_dim());
    const int threads = cfg.value("threads", 1);

    const MeasurementSet ms = measure(field, rays, states, mode, h, prop, threads);

    if (mode == MeasureMode::IdealUnitary) {
        double worst = 0.0;
        for (const Matrix& u : ms.unitaries) {
            worst = std::max(worst,
                             (u.adjoint() * u - Matrix::identity(u.dim())).frobenius_norm());
        }
        std::cout << "simulate: max unitarity residual " << worst << "\n";
    } else {
        double worst = 0.0;
        const std::size_t ni = states.initial.size();
        for (const auto& table : ms.amplitudes) {
            for (std::size_t a = 0; a < states.final.size(); ++a) {
                double row = 0.0;
                for (std::size_t b = 0; b < ni; ++b) row += table[a * ni + b] * table[a * ni + b];
                worst = std::max(worst, std::abs(row - 1.0));
            }
        }
        std::cout << "simulate: max squared-amplitude row-sum deviation " << worst << "\n";
    }

    const fs::path path = out_path(cfg, "data", "data.dat");
    save_measurement_set(path.string(), ms, rays);
    std::cout << "simulate: wrote " << path.string() << " (" << rays.size() << " rays)\n";
    return 0;
}

int cmd_reconstruct(CommonArgs& args) {
    json cfg = load_with_overrides(args);
    const json& rc = cfg.at("reconstruct");
    const std::string data_path = rc.at("data").get<std::string>();
    if (!fs::exists(data_path)) throw IoError("data file not found: " + data_path);

    RayFamily rays;
    const MeasurementSet data = load_measurement_set(data_path, &rays);
    const GridSpec grid = grid_from_json(rc.at("grid"));
    const int threads = cfg.value("threads", 1);
    const std::string method = rc.at("method").get<std::string>();

    ReconstructionReport report;
    std::shared_ptr<MatrixGrid> matrix_out;
    std::shared_ptr<ScalarGrid> scalar_out;

    if (method == "linearized") {
        LinearizedOptions opts;
        opts.h = rc.value("h", opts.h);
        opts.threads = threads;
        const LinearizedResult res =
            reconstruct_linearized(data, matrix_from_json(rc.at("h0")), rays, grid, opts);
        matrix_out = res.field;
        report = res.report;
    } else if (method == "pseudolinear") {
        IterativeOptions opts;
        opts.h = rc.value("h", opts.h);
        opts.max_iters = rc.value("max_iters", opts.max_iters);
        opts.inner_iters = rc.value("inner_iters", opts.inner_iters);
        opts.threads = threads;
        opts.seed = cfg.value("seed", 1);
        MatrixField guess = MatrixField::constant(Matrix(data.state_dim));
        if (rc.contains("initial_guess") && rc.at("initial_guess") != "zero") {
            guess = MatrixField::from_grid(
                load_matrix_grid(rc.at("initial_guess").get<std::string>()));
        }
        const PseudolinearResult res = reconstruct_pseudolinear(data, guess, rays, grid, opts);
        matrix_out = res.field;
        report = res.report;
    } else if (method == "scalar") {
        ScalarCoefficientOptions opts;
        opts.h = rc.value("h", opts.h);
        opts.max_iters = rc.value("max_iters", opts.max_iters);
        opts.inner_iters = rc.value("inner_iters", opts.inner_iters);
        opts.threads = threads;
        opts.seed = cfg.value("seed", 1);
        const PhantomField h0 = phantom_from_json(rc.at("h0_phantom"));
        if (!h0.is_matrix) throw ConfigError("reconstruct: h0_phantom must be a matrix field");
        const MatrixField g = MatrixField::constant(matrix_from_json(rc.at("g")));
        const ScalarCoefficientResult res =
            reconstruct_scalar_coefficient(data, h0.matrix_field, g, rays, grid, opts);
        scalar_out = res.field;
        report = res.report;
    } else {
        throw ConfigError("reconstruct: unknown method '" + method + "'");
    }

    const fs::path field_path = out_path(cfg, "recon", "recon.dat");
    if (matrix_out) {
        save_matrix_grid(field_path.string(), *matrix_out);
    } else {
        save_scalar_grid(field_path.string(), *scalar_out);
    }

    const fs::path report_path = out_path(cfg, "report", "report.json");
    {
        std::ofstream os(report_path);
        os << report.to_json() << "\n";
    }

    if (rc.value("images", false)) {
        if (matrix_out) {
            const auto basis = traceless_hermitean_basis(matrix_out->state_dim);
            for (std::size_t c = 0; c < basis.size(); ++c) {
                ScalarGrid comp;
                comp.spec = grid;
                comp.values.reserve(grid.node_count());
                for (const Matrix& m : matrix_out->values) {
                    comp.values.push_back((basis[c] * m).trace().real());
                }
                write_pgm(out_path(cfg, ("component " + std::to_string(c)).c_str(),
                                   ("recon_c" + std::to_string(c) + ".pgm").c_str()),
                          comp);
            }
        } else {
            write_pgm(out_path(cfg, "image", "recon.pgm"), *scalar_out);
        }
    }

    std::cout << "reconstruct: " << method << " finished after " << report.iterations
              << " iterations; wrote " << field_path.string() << "\n";
    if (!report.residuals.empty()) {
        std::cout << "reconstruct: residual " << report.residuals.front() << " -> "
                  << report.residuals.back() << "\n";
    }
    return 0;
}

int cmd_verify(const std::string& suite, double tolerance_scale, int threads) {
    const auto results = run_verify_suite(suite, tolerance_scale, threads);
    bool all_pass = true;
    json summary = json::array();
    for (const auto& r : results) {
        all_pass = all_pass && r.pass;
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.suite << ": " << r.name << " ("
                  << r.detail << ")\n";
        summary.push_back({{"suite", r.suite}, {"name", r.name}, {"pass", r.pass},
                           {"detail", r.detail}});
    }
    std::cout << "verify: " << summary.size() << " checks, "
              << (all_pass ? "all passed" : "FAILURES present") << "\n";
    std::cout << summary.dump() << "\n";
    return all_pass ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hamtomo: matrix-Hamiltonian ray tomography toolkit"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string suite = "all";
    double tolerance_scale = 1.0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", args.config_path, "experiment config (JSON)")->required();
        sub->add_option("--seed", args.seed, "override config seed")
            ->each([&](const std::string&) { args.seed_set = true; });
        sub->add_option("--threads", args.threads, "worker threads");
        sub->add_option("--out", args.out_dir, "output directory override");
    };

    CLI::App* phantom = app.add_subcommand("phantom", "generate a field file from a phantom");
    add_common(phantom);
    CLI::App* simulate = app.add_subcommand("simulate", "forward-simulate measurement data");
    add_common(simulate);
    CLI::App* reconstruct = app.add_subcommand("reconstruct", "run an inverse solver");
    add_common(reconstruct);

    CLI::App* verify = app.add_subcommand("verify", "run seeded property suites");
    verify->add_option("suite", suite,
                       "matrix|expcalc|propagator|gauge|xray|reconstruction|all");
    verify->add_option("--tolerance-scale", tolerance_scale,
                       "scale all pass thresholds (testing hook)");
    int verify_threads = 1;
    verify->add_option("--threads", verify_threads, "worker threads");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(phantom)) return cmd_phantom(args);
        if (app.got_subcommand(simulate)) return cmd_simulate(args);
        if (app.got_subcommand(reconstruct)) return cmd_reconstruct(args);
        if (app.got_subcommand(verify)) return cmd_verify(suite, tolerance_scale, verify_threads);
    } catch (const hamtomo::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const hamtomo::UnknownPhantom& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const hamtomo::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const hamtomo::Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
