#include <doctest.h>

#include <cmath>

#include "hamtomo/propagator.hpp"
#include "hamtomo/reconstruct.hpp"
#include "hamtomo/xray.hpp"

using namespace hamtomo;

namespace {

const ConvexDomain kDisk = ConvexDomain::ball(2, {}, 1.0);

Matrix sigma1() {
    Matrix m(2);
    m(0, 1) = 1.0;
    m(1, 0) = 1.0;
    return m;
}

Matrix sigma3() { return Matrix::diag_real({1.0, -1.0}); }

double deviation_error(const MatrixGrid& rec, const MatrixField& truth, const Matrix& base_rec,
                       const MatrixField& base_truth, double r_max) {
    double num = 0.0, den = 0.0;
    for (int j = 0; j < rec.spec.ny; ++j) {
        for (int i = 0; i < rec.spec.nx; ++i) {
            const Vec3 x = rec.spec.node_pos(i, j, 0);
            if (norm(x) > r_max) continue;
            const Matrix rec_dev = rec.values[rec.spec.node_index(i, j, 0)] - base_rec;
            const Matrix true_dev = truth.eval(x) - base_truth.eval(x);
            num += std::pow((rec_dev - true_dev).frobenius_norm(), 2);
            den += std::pow(true_dev.frobenius_norm(), 2);
        }
    }
    return std::sqrt(num / den);
}

double field_error(const MatrixGrid& rec, const MatrixField& truth, double r_max) {
    double num = 0.0, den = 0.0;
    for (int j = 0; j < rec.spec.ny; ++j) {
        for (int i = 0; i < rec.spec.nx; ++i) {
            const Vec3 x = rec.spec.node_pos(i, j, 0);
            if (norm(x) > r_max) continue;
            const Matrix t = traceless_split(truth.eval(x)).first;
            num += std::pow((rec.values[rec.spec.node_index(i, j, 0)] - t).frobenius_norm(), 2);
            den += std::pow(t.frobenius_norm(), 2);
        }
    }
    return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("traceless_hermitean_basis") {
    for (int n : {2, 3, 4}) {
        const auto basis = traceless_hermitean_basis(n);
        REQUIRE(static_cast<int>(basis.size()) == n * n - 1);
        for (std::size_t a = 0; a < basis.size(); ++a) {
            CHECK(basis[a].is_hermitean(1e-14));
            CHECK(std::abs(basis[a].trace()) < 1e-14);
            for (std::size_t b = 0; b < basis.size(); ++b) {
                const double ip = (basis[a] * basis[b]).trace().real();
                CHECK(ip == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("reconstruct_linearized") {
    const Matrix h0 = Matrix::diag_real({0.0, 1.0});
    const Matrix a0 = traceless_split(h0).first;
    const RayFamily fam = parallel_beam(kDisk, 90, 65);
    const double h = 1.0 / 64.0;
    const GridSpec grid = GridSpec::square2d(48, 1.0);

    SUBCASE("zero perturbation recovers the constant traceless background") {
        const MeasurementSet data = measure(MatrixField::constant(h0), fam,
                                            StateSets::orthonormal_basis(2),
                                            MeasureMode::IdealUnitary, h);
        LinearizedOptions opts;
        opts.h = h;
        const LinearizedResult res = reconstruct_linearized(data, h0, fam, grid, opts);
        CHECK(res.report.residuals[0] < 1e-10);
        for (const Matrix& m : res.field->values) {
            CHECK((m - a0).frobenius_norm() < 1e-9);
        }
    }

    SUBCASE("small sigma_3 bump round trip") {
        const double eps = 1e-3;
        const MatrixField truth =
            phantom_gaussian_bump(h0, GaussianBump{eps, {0.2, -0.1, 0.0}, 0.25}, sigma3());
        const MeasurementSet data = measure(truth, fam, StateSets::orthonormal_basis(2),
                                            MeasureMode::IdealUnitary, h);
        LinearizedOptions opts;
        opts.h = h;
        opts.threads = 2;
        const LinearizedResult res = reconstruct_linearized(data, h0, fam, grid, opts);
        CHECK(res.report.skipped_rays.empty());  // all chords shorter than 2 pi
        CHECK(deviation_error(*res.field, truth, a0, MatrixField::constant(h0), 0.9) <= 0.08);
        CHECK(field_error(*res.field, truth, 0.9) <= 0.01);  // background dominates
    }

    SUBCASE("amplitude-mode data is rejected") {
        const MeasurementSet data = measure(MatrixField::constant(h0), fam,
                                            StateSets::orthonormal_basis(2),
                                            MeasureMode::Amplitudes, h);
        CHECK_THROWS_AS(reconstruct_linearized(data, h0, fam, grid), ConfigError);
    }

    SUBCASE("skipped rays appear exactly at singular chord lengths") {
        const Matrix big = Matrix::diag_real({0.0, 4.0});  // singular length 2 pi / 4 ~ 1.57
        const MeasurementSet data = measure(MatrixField::constant(big), fam,
                                            StateSets::orthonormal_basis(2),
                                            MeasureMode::IdealUnitary, h);
        LinearizedOptions opts;
        opts.h = h;
        const LinearizedResult res = reconstruct_linearized(data, big, fam, grid, opts);
        CHECK(!res.report.skipped_rays.empty());
        const auto singular =
            singular_lengths(cplx(0.0, -1.0) * traceless_split(big).first, 2.5);
        std::vector<bool> skipped(fam.size(), false);
        for (const auto& s : res.report.skipped_rays) skipped[s.index] = true;
        for (std::size_t r = 0; r < fam.size(); ++r) {
            bool near = false;
            for (double s : singular) {
                if (std::abs(fam.rays[r].length - s) < opts.sing_margin) near = true;
            }
            CHECK(skipped[r] == near);
        }
    }

    SUBCASE("dense singular set raises TooManySkipped") {
        const Matrix wild = Matrix::diag_real({0.0, 150.0});  // singular spacing ~0.042
        const MeasurementSet data = measure(MatrixField::constant(h0), fam,
                                            StateSets::orthonormal_basis(2),
                                            MeasureMode::IdealUnitary, h);
        CHECK_THROWS_AS(reconstruct_linearized(data, wild, fam, grid), TooManySkipped);
    }
}

TEST_CASE("reconstruct_linearized_slices") {
    // 3D ball handled as a stack of 2D slice problems along the z axis.
    const ConvexDomain ball = ConvexDomain::ball(3, {}, 1.0);
    const Matrix h0 = Matrix::diag_real({0.0, 1.0});
    const Matrix a0 = traceless_split(h0).first;
    const double eps = 1e-3;
    const Matrix dir = sigma3();
    const MatrixField truth = MatrixField::closed_form(2, [h0, dir, eps](const Vec3& x) {
        const Vec3 c{0.15, -0.1, 0.0};
        const Vec3 d = x - c;
        const double bump = eps * std::exp(-dot(d, d) / (2.0 * 0.3 * 0.3));
        return h0 + cplx(bump, 0.0) * dir;
    });
    const RayFamily fam = beam_3d(ball, 5, 60, 49, {2});
    const double h = 1.0 / 32.0;
    const MeasurementSet data = measure(truth, fam, StateSets::orthonormal_basis(2),
                                        MeasureMode::IdealUnitary, h, Propagation::Ordered, 2);
    LinearizedOptions opts;
    opts.h = h;
    opts.threads = 2;
    const GridSpec slice_grid = GridSpec::square2d(32, 1.0);
    const auto slices = reconstruct_linearized_slices(data, h0, fam, slice_grid, 2, opts);
    REQUIRE(slices.size() == 5);

    for (int plane = 0; plane < 5; ++plane) {
        const double z = ((plane + 0.5) / 5.0 - 0.5) * 2.0;
        const double cross_r = std::sqrt(1.0 - z * z);
        double num = 0.0, den = 0.0;
        for (int j = 0; j < slice_grid.ny; ++j) {
            for (int i = 0; i < slice_grid.nx; ++i) {
                const Vec3 uv = slice_grid.node_pos(i, j, 0);
                if (norm(uv) > 0.75 * cross_r) continue;
                const Matrix rec =
                    slices[plane].field->values[slice_grid.node_index(i, j, 0)] - a0;
                const Matrix tru = truth.eval({uv.x, uv.y, z}) - h0;
                num += std::pow((rec - tru).frobenius_norm(), 2);
                den += std::pow(tru.frobenius_norm(), 2);
            }
        }
        // Central slices see most of the bump; all slices must be consistent.
        CHECK(std::sqrt(num / den) <= 0.25);
    }
}

TEST_CASE("reconstruct_pseudolinear") {
    const RayFamily fam = parallel_beam(kDisk, 60, 49);
    const GridSpec grid = GridSpec::square2d(32, 1.0);
    IterativeOptions opts;
    opts.h = 1.0 / 24.0;
    opts.max_iters = 5;
    opts.inner_iters = 30;
    opts.threads = 2;

    SUBCASE("data from the initial guess yields zero update") {
        auto truth_grid = make_matrix_grid(
            phantom_two_bumps(Matrix(2), GaussianBump{0.25, {0.2, 0.1, 0.0}, 0.3}, sigma1(),
                              GaussianBump{0.2, {-0.2, -0.1, 0.0}, 0.3}, sigma3()),
            grid);
        const MatrixField truth = MatrixField::from_grid(truth_grid);
        const MeasurementSet data = measure(truth, fam, StateSets::orthonormal_basis(2),
                                            MeasureMode::IdealUnitary, opts.h);
        const PseudolinearResult res = reconstruct_pseudolinear(data, truth, fam, grid, opts);
        CHECK(res.report.iterations == 0);
        CHECK(res.report.residuals[0] < 1e-9);
        for (std::size_t i = 0; i < grid.node_count(); ++i) {
            CHECK((res.field->values[i] - truth_grid->values[i]).frobenius_norm() < 1e-12);
        }
    }

    SUBCASE("two-bump round trip from a zero guess") {
        const MatrixField truth =
            phantom_two_bumps(Matrix(2), GaussianBump{0.3, {0.25, 0.1, 0.0}, 0.3}, sigma1(),
                              GaussianBump{0.25, {-0.2, -0.15, 0.0}, 0.25}, sigma3());
        const MeasurementSet data = measure(truth, fam, StateSets::orthonormal_basis(2),
                                            MeasureMode::IdealUnitary, opts.h);
        const PseudolinearResult res = reconstruct_pseudolinear(
            data, MatrixField::constant(Matrix(2)), fam, grid, opts);
        REQUIRE(res.report.residuals.size() >= 2);
        // Residual strictly decreasing until the stall criterion.
        for (std::size_t i = 1; i < res.report.residuals.size(); ++i) {
            CHECK(res.report.residuals[i] < res.report.residuals[i - 1]);
        }
        CHECK(res.report.residuals.back() < 0.2 * res.report.residuals.front());
        CHECK(field_error(*res.field, truth, 0.9) <= 0.2);
    }

    SUBCASE("a stalled-or-growing residual raises Diverged") {
        const MatrixField truth =
            phantom_gaussian_bump(Matrix(2), GaussianBump{0.3, {0.1, 0.0, 0.0}, 0.35}, sigma1());
        const MeasurementSet data = measure(truth, fam, StateSets::orthonormal_basis(2),
                                            MeasureMode::IdealUnitary, opts.h);
        IterativeOptions stuck = opts;
        stuck.inner_iters = 0;  // no update steps, so the residual cannot move
        CHECK_THROWS_AS(reconstruct_pseudolinear(data, MatrixField::constant(Matrix(2)), fam,
                                                 grid, stuck),
                        Diverged);
    }

    SUBCASE("gauge blindness: identity shifts of the truth change nothing") {
        const MatrixField truth =
            phantom_gaussian_bump(Matrix(2), GaussianBump{0.3, {0.1, 0.0, 0.0}, 0.35}, sigma1());
        ScalarField shift = scalar_gaussian_bump(0.4, {0.5, {0.0, 0.1, 0.0}, 0.3});
        const MatrixField shifted = MatrixField::closed_form(2, [truth, shift](const Vec3& x) {
            Matrix m = truth.eval(x);
            const double v = shift.eval(x);
            for (int i = 0; i < 2; ++i) m(i, i) += v;
            return m;
        });
        IterativeOptions quick = opts;
        quick.max_iters = 2;
        const MeasurementSet d1 = measure(truth, fam, StateSets::orthonormal_basis(2),
                                          MeasureMode::IdealUnitary, opts.h);
        const MeasurementSet d2 = measure(shifted, fam, StateSets::orthonormal_basis(2),
                                          MeasureMode::IdealUnitary, opts.h);
        double data_gap = 0.0;
        for (std::size_t r = 0; r < fam.size(); ++r) {
            data_gap = std::max(data_gap, (d1.unitaries[r] - d2.unitaries[r]).frobenius_norm());
        }
        CHECK(data_gap <= 1e-9);
        const PseudolinearResult r1 = reconstruct_pseudolinear(
            d1, MatrixField::constant(Matrix(2)), fam, grid, quick);
        const PseudolinearResult r2 = reconstruct_pseudolinear(
            d2, MatrixField::constant(Matrix(2)), fam, grid, quick);
        for (std::size_t i = 0; i < grid.node_count(); ++i) {
            CHECK((r1.field->values[i] - r2.field->values[i]).frobenius_norm() <= 1e-7);
        }
    }
}

TEST_CASE("reconstruct_scalar_coefficient") {
    const RayFamily fam = parallel_beam(kDisk, 60, 49);
    const GridSpec grid = GridSpec::square2d(32, 1.0);
    ScalarCoefficientOptions opts;
    opts.h = 1.0 / 24.0;
    opts.max_iters = 8;
    opts.inner_iters = 30;
    opts.threads = 2;

    // Mass-structured background and a charged-current-like direction.
    const Matrix u = random_unitary(3, 404);
    const Matrix h0 = u * Matrix::diag_real({0.0, 0.03, 1.0}) * u.adjoint();
    Matrix g = Matrix::diag_real({1.0, 0.0, 0.0});
    g = traceless_split(g).first;  // diag(2/3, -1/3, -1/3)
    const MatrixField h0_field = MatrixField::constant(h0);
    const MatrixField g_field = MatrixField::constant(g);

    SUBCASE("zero truth, zero guess: zero update") {
        const MeasurementSet data = measure(h0_field, fam, StateSets::orthonormal_basis(3),
                                            MeasureMode::IdealUnitary, opts.h);
        const ScalarCoefficientResult res =
            reconstruct_scalar_coefficient(data, h0_field, g_field, fam, grid, opts);
        CHECK(res.report.iterations == 0);
        for (double v : res.field->values) CHECK(std::abs(v) < 1e-10);
    }

    SUBCASE("gaussian coefficient round trip") {
        ScalarField f_true = scalar_gaussian_bump(0.0, {0.5, {0.15, -0.1, 0.0}, 0.3});
        const MatrixField truth = MatrixField::closed_form(3, [&](const Vec3& x) {
            Matrix m = h0;
            const double f = f_true.eval(x);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) m(i, j) += f * g(i, j);
            return m;
        });
        const MeasurementSet data = measure(truth, fam, StateSets::orthonormal_basis(3),
                                            MeasureMode::IdealUnitary, opts.h);
        const ScalarCoefficientResult res =
            reconstruct_scalar_coefficient(data, h0_field, g_field, fam, grid, opts);
        CHECK(res.report.residuals.back() < 0.2 * res.report.residuals.front());
        double num = 0.0, den = 0.0;
        for (int j = 0; j < grid.ny; ++j) {
            for (int i = 0; i < grid.nx; ++i) {
                const Vec3 x = grid.node_pos(i, j, 0);
                if (norm(x) > 0.9) continue;
                const double rec = res.field->values[grid.node_index(i, j, 0)];
                const double t = f_true.eval(x);
                num += (rec - t) * (rec - t);
                den += t * t;
            }
        }
        CHECK(std::sqrt(num / den) <= 0.2);
    }

    SUBCASE("identity-multiple G is degenerate") {
        const MeasurementSet data = measure(h0_field, fam, StateSets::orthonormal_basis(3),
                                            MeasureMode::IdealUnitary, opts.h);
        CHECK_THROWS_AS(reconstruct_scalar_coefficient(data, h0_field,
                                                       MatrixField::constant(Matrix::identity(3)),
                                                       fam, grid, opts),
                        WeightDegenerate);
    }
}

TEST_CASE("report serialization") {
    ReconstructionReport rep;
    rep.iterations = 3;
    rep.residuals = {1.0, 0.1, 0.01};
    rep.skipped_rays.push_back({7, "chord length near singular set"});
    const std::string j = rep.to_json();
    CHECK(j.find("\"iterations\":3") != std::string::npos);
    CHECK(j.find("singular") != std::string::npos);
}
