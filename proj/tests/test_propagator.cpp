#include <doctest.h>

#include <cmath>

#include "hamtomo/propagator.hpp"

using namespace hamtomo;

namespace {

Ray diameter() {
    Ray r;
    r.entry = {-1.0, 0.0, 0.0};
    r.direction = {1.0, 0.0, 0.0};
    r.length = 2.0;
    return r;
}

// Smooth noncommuting test field: two bumps in different Pauli directions.
MatrixField noncommuting_field() {
    Matrix sigma1(2);
    sigma1(0, 1) = 1.0;
    sigma1(1, 0) = 1.0;
    const Matrix sigma3 = Matrix::diag_real({1.0, -1.0});
    return phantom_two_bumps(Matrix(2), GaussianBump{0.9, {-0.25, 0.05, 0.0}, 0.3}, sigma1,
                             GaussianBump{0.7, {0.3, -0.1, 0.0}, 0.25}, sigma3);
}

}  // namespace

TEST_CASE("evolve basics") {
    SUBCASE("zero field gives the identity") {
        const Matrix u = evolve(MatrixField::constant(Matrix(2)), diameter(), 0.01);
        CHECK((u - Matrix::identity(2)).frobenius_norm() < 1e-13);
    }
    SUBCASE("constant field reduces to the matrix exponential") {
        const Matrix h = random_hermitean(3, 3);
        const Matrix u = evolve(MatrixField::constant(h), diameter(), 0.01);
        CHECK((u - mat_exp(cplx(0.0, -2.0) * h)).frobenius_norm() < 1e-12);
    }
    SUBCASE("order-2 convergence under step halving") {
        const MatrixField f = noncommuting_field();
        const Matrix u1 = evolve(f, diameter(), 1.0 / 32.0);
        const Matrix u2 = evolve(f, diameter(), 1.0 / 64.0);
        const Matrix u3 = evolve(f, diameter(), 1.0 / 128.0);
        const double r = (u1 - u2).frobenius_norm() / (u2 - u3).frobenius_norm();
        CHECK(r > 3.5);
        CHECK(r < 4.5);
    }
    SUBCASE("unitarity at default step") {
        const Matrix u = evolve(noncommuting_field(), diameter());
        CHECK((u.adjoint() * u - Matrix::identity(2)).frobenius_norm() <= 1e-9);
    }
}

TEST_CASE("evolve_interval") {
    const MatrixField f = noncommuting_field();
    const Ray ray = diameter();
    const double h = 1.0 / 64.0;
    SUBCASE("empty interval is the identity") {
        const Matrix u = evolve_interval(f, ray, 0.7, 0.7, h);
        CHECK((u - Matrix::identity(2)).frobenius_norm() < 1e-14);
    }
    SUBCASE("whole interval equals evolve") {
        CHECK((evolve_interval(f, ray, 0.0, ray.length, h) - evolve(f, ray, h)).frobenius_norm() <
              1e-12);
    }
    SUBCASE("semigroup composition at s = T/3") {
        const double s = ray.length / 3.0;
        const Matrix mid = evolve_interval(f, ray, s, ray.length, h) *
                           evolve_interval(f, ray, 0.0, s, h);
        CHECK((mid - evolve(f, ray, h)).frobenius_norm() < 1e-10);
    }
    SUBCASE("reversal: U U* = I") {
        const Matrix u = evolve_interval(f, ray, 0.3, 1.4, h);
        CHECK((u * u.adjoint() - Matrix::identity(2)).frobenius_norm() < 1e-10);
    }
    SUBCASE("t1 > t2 is an error") {
        CHECK_THROWS_AS(evolve_interval(f, ray, 1.0, 0.5, h), InvalidInterval);
    }
}

TEST_CASE("unordered_evolve") {
    const Ray ray = diameter();
    SUBCASE("constant field matches evolve") {
        const MatrixField f = MatrixField::constant(random_hermitean(2, 5));
        CHECK((unordered_evolve(f, ray, 0.01) - evolve(f, ray, 0.01)).frobenius_norm() < 1e-12);
    }
    SUBCASE("pointwise commuting (diagonal) field matches evolve") {
        MatrixField f = MatrixField::closed_form(2, [](const Vec3& x) {
            return Matrix::diag_real({std::exp(-x.x * x.x), 0.3 * x.x});
        });
        CHECK((unordered_evolve(f, ray, 1.0 / 256.0) - evolve(f, ray, 1.0 / 256.0))
                  .frobenius_norm() < 1e-8);
    }
    SUBCASE("noncommuting field differs from the ordered evolution") {
        const MatrixField f = noncommuting_field();
        CHECK((unordered_evolve(f, ray, 1.0 / 128.0) - evolve(f, ray, 1.0 / 128.0))
                  .frobenius_norm() > 1e-3);
    }
}

TEST_CASE("phase gauge and special unitarity") {
    const Ray ray = diameter();
    const double h = 1.0 / 128.0;
    const MatrixField a = noncommuting_field();  // traceless by construction

    SUBCASE("traceless field evolves to a special unitary") {
        CHECK(std::abs(evolve(a, ray, h).det() - cplx(1.0, 0.0)) <= 1e-9);
    }
    SUBCASE("adding f I multiplies by a phase") {
        ScalarField f = scalar_gaussian_bump(0.2, {0.6, {0.1, 0.0, 0.0}, 0.3});
        MatrixField shifted = MatrixField::closed_form(2, [a, f](const Vec3& x) {
            Matrix m = a.eval(x);
            const double v = f.eval(x);
            for (int i = 0; i < 2; ++i) m(i, i) += v;
            return m;
        });
        const double phase = line_integral(f, ray, h);
        const Matrix expected = cplx(std::cos(phase), -std::sin(phase)) * evolve(a, ray, h);
        CHECK((evolve(shifted, ray, h) - expected).frobenius_norm() <= 1e-9);
    }
}

TEST_CASE("pseudolinearization identity at quadrature level") {
    const Ray ray = diameter();
    Matrix sigma2(2);
    sigma2(0, 1) = cplx(0.0, -1.0);
    sigma2(1, 0) = cplx(0.0, 1.0);
    const MatrixField h1 = noncommuting_field();
    const MatrixField h2 = phantom_gaussian_bump(Matrix(2), GaussianBump{0.6, {0.1, 0.2, 0.0}, 0.35},
                                                 sigma2);
    for (double h : {1.0 / 32.0, 1.0 / 64.0}) {
        const RayPropagation rp1 = propagate_with_cache(h1, ray, h);
        const RayPropagation rp2 = propagate_with_cache(h2, ray, h);
        Matrix integral(2);
        for (std::size_t k = 0; k < rp1.nodes.size(); ++k) {
            const Matrix diff = h1.eval(rp1.nodes[k].point) - h2.eval(rp1.nodes[k].point);
            const Matrix term = rp1.left_at(k) * diff * rp2.right_at(k);
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    integral(i, j) += cplx(0.0, rp1.nodes[k].weight) * term(i, j);
        }
        const double residual = (rp2.total - rp1.total - integral).frobenius_norm();
        CHECK(residual <= 4.0 * h * h);  // c h^2 on smooth phantoms
    }
}

TEST_CASE("linearized_response") {
    const Ray ray = diameter();
    const double h = 1.0 / 128.0;
    const MatrixField h0 = noncommuting_field();

    SUBCASE("zero direction gives zero") {
        CHECK(linearized_response(h0, MatrixField::constant(Matrix(2)), ray, h)
                  .frobenius_norm() < 1e-14);
    }
    SUBCASE("finite differences converge to the response at rate O(s)") {
        const MatrixField dir = phantom_gaussian_bump(
            Matrix(2), GaussianBump{0.8, {0.0, 0.12, 0.0}, 0.4}, Matrix::diag_real({1.0, -1.0}));
        const Matrix lr = linearized_response(h0, dir, ray, h);
        double errs[2];
        int idx = 0;
        for (double s : {1e-3, 1e-4}) {
            MatrixField pert = MatrixField::closed_form(2, [h0, dir, s](const Vec3& x) {
                Matrix m = h0.eval(x);
                const Matrix d = dir.eval(x);
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j) m(i, j) += s * d(i, j);
                return m;
            });
            Matrix fd = evolve(pert, ray, h) - evolve(h0, ray, h);
            fd *= cplx(1.0 / s, 0.0);
            errs[idx++] = (fd - lr).frobenius_norm();
        }
        CHECK(errs[0] < 5e-3);
        CHECK(errs[1] < 5e-4);
    }
    SUBCASE("identity direction on a constant background") {
        const Matrix hconst = random_hermitean(2, 77);
        const MatrixField base = MatrixField::constant(hconst);
        const MatrixField dir = MatrixField::constant(Matrix::identity(2));
        const Matrix lr = linearized_response(base, dir, ray, 0.005);
        // d/ds exp(-i T (H + s I)) = -i T exp(-i T H).
        Matrix expected = mat_exp(cplx(0.0, -ray.length) * hconst);
        expected *= cplx(0.0, -ray.length);
        CHECK((lr - expected).frobenius_norm() < 1e-11);
    }
}

TEST_CASE("propagation cache partial products") {
    const MatrixField f = noncommuting_field();
    const Ray ray = diameter();
    const RayPropagation rp = propagate_with_cache(f, ray, 1.0 / 32.0);
    REQUIRE(!rp.nodes.empty());
    // U(T, t_k) U(t_k, 0) = U(T, 0) at every midpoint.
    for (std::size_t k = 0; k < rp.nodes.size(); k += 7) {
        CHECK((rp.left_at(k) * rp.right_at(k) - rp.total).frobenius_norm() < 1e-12);
    }
    // right_at matches evolve_interval at the midpoint.
    const std::size_t mid = rp.nodes.size() / 2;
    const Matrix direct = evolve_interval(f, ray, 0.0, rp.nodes[mid].t, 1.0 / 32.0);
    CHECK((rp.right_at(mid) - direct).frobenius_norm() < 1e-12);
}
