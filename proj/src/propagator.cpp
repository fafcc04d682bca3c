#include "hamtomo/propagator.hpp"

#include <algorithm>
#include <cmath>

namespace hamtomo {

namespace {

// exp(-i s H) from the eigensystem of hermitean H.
Matrix step_exponential(const EigenDecomposition& ed, double s) {
    const int n = ed.eigenvectors.dim();
    Matrix d(n);
    for (int k = 0; k < n; ++k) {
        const double a = -s * ed.eigenvalues[static_cast<std::size_t>(k)];
        d(k, k) = cplx(std::cos(a), std::sin(a));
    }
    return ed.eigenvectors * d * ed.eigenvectors.adjoint();
}

}  // namespace

Matrix evolve(const MatrixField& field, const Ray& ray, double h) {
    const auto nodes = sample(ray, h);
    Matrix u = Matrix::identity(field.state_dim());
    for (const SampleNode& node : nodes) {
        const EigenDecomposition ed = eigh(field.eval(node.point), 1e-6);
        u = step_exponential(ed, node.weight) * u;
    }
    return u;
}

Matrix evolve_interval(const MatrixField& field, const Ray& ray, double t1, double t2, double h) {
    if (t1 > t2) throw InvalidInterval("evolve_interval: t1 > t2");
    const auto nodes = sample(ray, h);
    Matrix u = Matrix::identity(field.state_dim());
    for (const SampleNode& node : nodes) {
        const double a = node.t - 0.5 * node.weight;
        const double b = node.t + 0.5 * node.weight;
        const double overlap = std::min(b, t2) - std::max(a, t1);
        if (overlap <= 0.0) continue;
        const EigenDecomposition ed = eigh(field.eval(node.point), 1e-6);
        u = step_exponential(ed, overlap) * u;
    }
    return u;
}

Matrix unordered_evolve(const MatrixField& field, const Ray& ray, double h) {
    const auto nodes = sample(ray, h);
    Matrix m(field.state_dim());
    for (const SampleNode& node : nodes) {
        const Matrix v = field.eval(node.point);
        for (int i = 0; i < m.dim(); ++i)
            for (int j = 0; j < m.dim(); ++j) m(i, j) += node.weight * v(i, j);
    }
    return mat_exp(cplx(0.0, -1.0) * m, 1e-6);
}

RayPropagation propagate_with_cache(const MatrixField& field, const Ray& ray, double h) {
    RayPropagation rp;
    rp.nodes = sample(ray, h);
    const std::size_t K = rp.nodes.size();
    const int n = field.state_dim();

    rp.half_step.reserve(K);
    rp.prefix.reserve(K + 1);
    rp.prefix.push_back(Matrix::identity(n));
    std::vector<Matrix> steps;
    steps.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
        const SampleNode& node = rp.nodes[k];
        const EigenDecomposition ed = eigh(field.eval(node.point), 1e-6);
        steps.push_back(step_exponential(ed, node.weight));
        rp.half_step.push_back(step_exponential(ed, 0.5 * node.weight));
        rp.prefix.push_back(steps.back() * rp.prefix.back());
    }
    rp.total = rp.prefix.back();

    rp.suffix.assign(K + 1, Matrix::identity(n));
    for (std::size_t k = K; k-- > 0;) {
        rp.suffix[k] = rp.suffix[k + 1] * steps[k];
    }
    return rp;
}

Matrix linearized_response(const MatrixField& h0, const MatrixField& hprime, const Ray& ray,
                           double h) {
    if (h0.state_dim() != hprime.state_dim()) {
        throw DimensionMismatch("linearized_response: state dimension mismatch");
    }
    const RayPropagation rp = propagate_with_cache(h0, ray, h);
    Matrix acc(h0.state_dim());
    for (std::size_t k = 0; k < rp.nodes.size(); ++k) {
        const Matrix term = rp.left_at(k) * hprime.eval(rp.nodes[k].point) * rp.right_at(k);
        for (int i = 0; i < acc.dim(); ++i)
            for (int j = 0; j < acc.dim(); ++j) acc(i, j) += rp.nodes[k].weight * term(i, j);
    }
    return cplx(0.0, -1.0) * acc;
}

double line_integral(const ScalarField& f, const Ray& ray, double h) {
    double acc = 0.0;
    for (const SampleNode& node : sample(ray, h)) acc += node.weight * f.eval(node.point);
    return acc;
}

}  // namespace hamtomo
