#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "hamtomo/field.hpp"

using namespace hamtomo;

TEST_CASE("grid interpolation") {
    GridSpec spec;
    spec.dim = 2;
    spec.nx = spec.ny = 5;
    spec.nz = 1;
    spec.origin = {0.0, 0.0, 0.0};
    spec.spacing = 0.25;

    SUBCASE("reproduces nodes exactly and is exact on linear data") {
        ScalarGrid g;
        g.spec = spec;
        for (int k = 0; k < 1; ++k)
            for (int j = 0; j < 5; ++j)
                for (int i = 0; i < 5; ++i) g.values.push_back(2.0 * i * 0.25 + 0.3);
        for (int j = 0; j < 5; ++j)
            for (int i = 0; i < 5; ++i)
                CHECK(g.eval(spec.node_pos(i, j, 0)) ==
                      doctest::Approx(g.values[spec.node_index(i, j, 0)]));
        CHECK(g.eval({0.125, 0.125, 0.0}) == doctest::Approx(2.0 * 0.125 + 0.3));
    }

    SUBCASE("matrix grid stays hermitean under interpolation") {
        MatrixGrid g;
        g.spec = spec;
        g.state_dim = 2;
        for (std::size_t i = 0; i < spec.node_count(); ++i) {
            g.values.push_back(random_hermitean(2, 40 + i));
        }
        Rng rng(3);
        for (int t = 0; t < 1000; ++t) {
            const Vec3 p{rng.uniform(), rng.uniform(), 0.0};
            CHECK(g.eval(p).is_hermitean(1e-12));
        }
    }

    SUBCASE("half-cell margin clamps, beyond is out of domain") {
        ScalarGrid g;
        g.spec = spec;
        g.values.assign(spec.node_count(), 1.5);
        CHECK(g.eval({-0.1, 0.5, 0.0}) == doctest::Approx(1.5));
        CHECK_THROWS_AS(g.eval({-0.2, 0.5, 0.0}), OutOfDomain);
    }

    SUBCASE("3D trilinear") {
        GridSpec s3;
        s3.dim = 3;
        s3.nx = s3.ny = s3.nz = 3;
        s3.origin = {0.0, 0.0, 0.0};
        s3.spacing = 0.5;
        ScalarGrid g;
        g.spec = s3;
        for (int k = 0; k < 3; ++k)
            for (int j = 0; j < 3; ++j)
                for (int i = 0; i < 3; ++i) g.values.push_back(i + 2.0 * j + 4.0 * k);
        CHECK(g.eval({0.25, 0.25, 0.25}) == doctest::Approx(0.5 * (1.0 + 2.0 + 4.0)));
    }
}

TEST_CASE("constant and closed-form fields") {
    const Matrix m = random_hermitean(3, 5);
    MatrixField f = MatrixField::constant(m);
    CHECK((f.eval({0.3, -0.2, 0.0}) - m).frobenius_norm() < 1e-15);

    Rng rng(8);
    MatrixField g = phantom_gaussian_bump(m, GaussianBump{0.5, {0.1, 0.2, 0.0}, 0.3},
                                          random_hermitean(3, 6));
    for (int t = 0; t < 1000; ++t) {
        const Vec3 p{rng.gaussian(), rng.gaussian(), 0.0};
        CHECK(g.eval(p).is_hermitean(1e-12));
    }
}

TEST_CASE("neutrino hamiltonian") {
    NeutrinoParameters params;
    params.pmns = random_unitary(3, 17);
    params.mass_squares = {0.0, 7.5e-5, 2.5e-3};
    params.energy = 1.0e-2;
    params.fermi_constant = 1.0;

    SUBCASE("vacuum eigenvalues are m_i^2 / 2E") {
        MatrixField h = neutrino_hamiltonian(params, ScalarField::constant(0.0));
        const EigenDecomposition ed = eigh(h.eval({0.0, 0.0, 0.0}));
        for (int i = 0; i < 3; ++i) {
            CHECK(ed.eigenvalues[i] ==
                  doctest::Approx(params.mass_squares[i] / (2.0 * params.energy))
                      .epsilon(1e-10));
        }
    }
    SUBCASE("identity mixing keeps the field diagonal") {
        NeutrinoParameters p2 = params;
        p2.pmns = Matrix::identity(3);
        MatrixField h = neutrino_hamiltonian(p2, ScalarField::constant(0.0));
        const Matrix v = h.eval({0.2, 0.1, 0.0});
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (i != j) CHECK(std::abs(v(i, j)) < 1e-15);
    }
    SUBCASE("matter term sits on the (1,1) entry with the charged-current scale") {
        const double ne = 0.37;
        MatrixField h0 = neutrino_hamiltonian(params, ScalarField::constant(0.0));
        MatrixField h = neutrino_hamiltonian(params, ScalarField::constant(ne));
        const Matrix diff = h.eval({0.0, 0.0, 0.0}) - h0.eval({0.0, 0.0, 0.0});
        CHECK(diff(0, 0).real() ==
              doctest::Approx(2.0 * std::sqrt(2.0) * params.energy * params.fermi_constant * ne));
        double off = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (!(i == 0 && j == 0)) off += std::abs(diff(i, j));
        CHECK(off < 1e-15);
    }
    SUBCASE("antineutrinos flip the potential sign") {
        NeutrinoParameters anti = params;
        anti.antineutrino = true;
        MatrixField h = neutrino_hamiltonian(params, ScalarField::constant(1.0));
        MatrixField hbar = neutrino_hamiltonian(anti, ScalarField::constant(1.0));
        MatrixField vac = neutrino_hamiltonian(params, ScalarField::constant(0.0));
        const Matrix dv = h.eval({}) - vac.eval({});
        const Matrix dvbar = hbar.eval({}) - vac.eval({});
        CHECK((dv + dvbar).frobenius_norm() < 1e-15);
    }
    SUBCASE("matter part is supported on the (1,1) flavour entry everywhere") {
        ScalarField density = scalar_gaussian_bump(0.1, {0.5, {0.0, 0.0, 0.0}, 0.4});
        MatrixField h = neutrino_hamiltonian(params, density);
        MatrixField vac = neutrino_hamiltonian(params, ScalarField::constant(0.0));
        Rng rng(21);
        for (int t = 0; t < 100; ++t) {
            const Vec3 p{rng.gaussian(), rng.gaussian(), 0.0};
            const Matrix diff = h.eval(p) - vac.eval(p);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    if (!(i == 0 && j == 0)) CHECK(std::abs(diff(i, j)) < 1e-15);
        }
    }
}

TEST_CASE("phantoms") {
    SUBCASE("zero amplitude gives the base field") {
        MatrixField f = phantom_gaussian_bump(Matrix(2), GaussianBump{0.0, {}, 1.0},
                                              Matrix::identity(2));
        CHECK(f.eval({0.4, 0.1, 0.0}).frobenius_norm() < 1e-15);
    }
    SUBCASE("gaussian bump peak sits at the center") {
        const Matrix d = Matrix::diag_real({1.0, -1.0});
        MatrixField f =
            phantom_gaussian_bump(Matrix(2), GaussianBump{0.7, {0.2, -0.1, 0.0}, 0.3}, d);
        CHECK((f.eval({0.2, -0.1, 0.0}) - cplx(0.7, 0.0) * d).frobenius_norm() < 1e-14);
    }
    SUBCASE("two bumps integrate to the sum of 1D gaussian integrals") {
        // Line through both centers; refinement-checked quadrature as oracle.
        const GaussianBump b1{0.8, {-0.4, 0.0, 0.0}, 0.2};
        const GaussianBump b2{0.5, {0.4, 0.0, 0.0}, 0.15};
        ScalarField f = scalar_two_bumps(0.0, b1, b2);
        auto integrate = [&](int steps) {
            double acc = 0.0;
            const double a = -5.0, b = 5.0;
            const double w = (b - a) / steps;
            for (int i = 0; i < steps; ++i) acc += w * f.eval({a + (i + 0.5) * w, 0.0, 0.0});
            return acc;
        };
        const double coarse = integrate(1 << 12);
        const double fine = integrate(1 << 14);
        CHECK(std::abs(coarse - fine) < 1e-10);
        const double expected = b1.amplitude * b1.sigma * std::sqrt(2.0 * M_PI) +
                                b2.amplitude * b2.sigma * std::sqrt(2.0 * M_PI);
        CHECK(fine == doctest::Approx(expected).epsilon(1e-9));
    }
    SUBCASE("layered sphere: shell plateaus away from interfaces") {
        ScalarField f = phantom_layered_sphere({}, {0.3, 0.6, 1.0}, {3.0, 2.0, 1.0}, 0.01);
        CHECK(f.eval({0.1, 0.0, 0.0}) == doctest::Approx(3.0).epsilon(1e-6));
        CHECK(f.eval({0.45, 0.0, 0.0}) == doctest::Approx(2.0).epsilon(1e-6));
        CHECK(f.eval({0.8, 0.0, 0.0}) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(f.eval({1.5, 0.0, 0.0}) == doctest::Approx(0.0).epsilon(1e-6));
    }
    SUBCASE("layered sphere validates its shells") {
        CHECK_THROWS_AS(phantom_layered_sphere({}, {0.5, 0.3}, {1.0, 2.0}, 0.1), ConfigError);
    }
}

TEST_CASE("traceless_field") {
    SUBCASE("identity-multiple field splits to zero plus its trace") {
        MatrixField f = MatrixField::closed_form(2, [](const Vec3& x) {
            Matrix m = Matrix::identity(2);
            m *= cplx(x.x + 2.0, 0.0);
            return m;
        });
        auto [a, tr] = traceless_field(f);
        CHECK(a.eval({0.3, 0.0, 0.0}).frobenius_norm() < 1e-14);
        CHECK(tr.eval({0.3, 0.0, 0.0}) == doctest::Approx(2.3));
    }
    SUBCASE("already traceless passes through") {
        MatrixField f = MatrixField::constant(Matrix::diag_real({1.0, -1.0}));
        auto [a, tr] = traceless_field(f);
        CHECK((a.eval({}) - f.eval({})).frobenius_norm() < 1e-14);
        CHECK(std::abs(tr.eval({})) < 1e-14);
    }
    SUBCASE("grid backend keeps grid structure and reassembles") {
        const GridSpec spec = GridSpec::square2d(8, 1.0);
        auto grid = make_matrix_grid(
            phantom_gaussian_bump(random_hermitean(2, 31), GaussianBump{0.4, {0.1, 0.1, 0.0}, 0.5},
                                  random_hermitean(2, 32)),
            spec);
        MatrixField f = MatrixField::from_grid(grid);
        auto [a, tr] = traceless_field(f);
        CHECK(a.is_grid());
        Rng rng(33);
        for (int t = 0; t < 50; ++t) {
            const Vec3 p{0.9 * (2.0 * rng.uniform() - 1.0), 0.9 * (2.0 * rng.uniform() - 1.0),
                         0.0};
            Matrix re = a.eval(p);
            const double tv = tr.eval(p);
            for (int i = 0; i < 2; ++i) re(i, i) += tv;
            CHECK((re - f.eval(p)).frobenius_norm() < 1e-12);
        }
    }
}

TEST_CASE("grid file round trips") {
    const GridSpec spec = GridSpec::square2d(6, 1.0);
    SUBCASE("matrix grid") {
        auto grid = make_matrix_grid(
            phantom_gaussian_bump(random_hermitean(2, 50), GaussianBump{0.3, {0.0, 0.1, 0.0}, 0.4},
                                  random_hermitean(2, 51)),
            spec);
        const char* path = "test_grid_matrix.dat";
        save_matrix_grid(path, *grid);
        auto back = load_matrix_grid(path);
        REQUIRE(back->values.size() == grid->values.size());
        for (std::size_t i = 0; i < grid->values.size(); ++i) {
            CHECK((back->values[i] - grid->values[i]).frobenius_norm() == 0.0);
        }
        std::remove(path);
    }
    SUBCASE("scalar grid") {
        auto grid = make_scalar_grid(scalar_gaussian_bump(0.2, {1.0, {0.0, 0.0, 0.0}, 0.3}), spec);
        const char* path = "test_grid_scalar.dat";
        save_scalar_grid(path, *grid);
        auto back = load_scalar_grid(path);
        REQUIRE(back->values.size() == grid->values.size());
        for (std::size_t i = 0; i < grid->values.size(); ++i) {
            CHECK(back->values[i] == grid->values[i]);
        }
        std::remove(path);
    }
}
