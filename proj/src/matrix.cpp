#include "hamtomo/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>

namespace hamtomo {

Matrix::Matrix(int n, std::vector<cplx> entries) : n_(n), a_(std::move(entries)) {
    if (a_.size() != static_cast<std::size_t>(n) * n) {
        throw DimensionMismatch("Matrix: entry count does not match dimension");
    }
}

Matrix Matrix::identity(int n) {
    Matrix m(n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diag(const std::vector<cplx>& d) {
    Matrix m(static_cast<int>(d.size()));
    for (int i = 0; i < m.dim(); ++i) m(i, i) = d[static_cast<std::size_t>(i)];
    return m;
}

Matrix Matrix::diag_real(const std::vector<double>& d) {
    Matrix m(static_cast<int>(d.size()));
    for (int i = 0; i < m.dim(); ++i) m(i, i) = d[static_cast<std::size_t>(i)];
    return m;
}

Matrix& Matrix::operator+=(const Matrix& rhs) {
    if (n_ != rhs.n_) throw DimensionMismatch("Matrix +=: dimension mismatch");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += rhs.a_[k];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& rhs) {
    if (n_ != rhs.n_) throw DimensionMismatch("Matrix -=: dimension mismatch");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= rhs.a_[k];
    return *this;
}

Matrix& Matrix::operator*=(cplx s) {
    for (auto& v : a_) v *= s;
    return *this;
}

Matrix Matrix::adjoint() const {
    Matrix m(n_);
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) m(j, i) = std::conj((*this)(i, j));
    return m;
}

Matrix Matrix::transpose() const {
    Matrix m(n_);
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) m(j, i) = (*this)(i, j);
    return m;
}

Matrix Matrix::conj() const {
    Matrix m(n_);
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) m(i, j) = std::conj((*this)(i, j));
    return m;
}

cplx Matrix::trace() const {
    cplx t = 0.0;
    for (int i = 0; i < n_; ++i) t += (*this)(i, i);
    return t;
}

double Matrix::frobenius_norm() const {
    double s = 0.0;
    for (const auto& v : a_) s += std::norm(v);
    return std::sqrt(s);
}

double Matrix::max_abs() const {
    double s = 0.0;
    for (const auto& v : a_) s = std::max(s, std::abs(v));
    return s;
}

cplx Matrix::det() const {
    Matrix lu = *this;
    const int n = n_;
    cplx d = 1.0;
    for (int c = 0; c < n; ++c) {
        int piv = c;
        double best = std::abs(lu(c, c));
        for (int r = c + 1; r < n; ++r) {
            if (std::abs(lu(r, c)) > best) {
                best = std::abs(lu(r, c));
                piv = r;
            }
        }
        if (best == 0.0) return 0.0;
        if (piv != c) {
            for (int j = 0; j < n; ++j) std::swap(lu(c, j), lu(piv, j));
            d = -d;
        }
        d *= lu(c, c);
        for (int r = c + 1; r < n; ++r) {
            const cplx f = lu(r, c) / lu(c, c);
            for (int j = c; j < n; ++j) lu(r, j) -= f * lu(c, j);
        }
    }
    return d;
}

bool Matrix::is_hermitean(double tol) const { return (*this - adjoint()).frobenius_norm() <= tol; }

bool Matrix::is_unitary(double tol) const {
    return (adjoint() * (*this) - identity(n_)).frobenius_norm() <= tol;
}

bool Matrix::is_skew_hermitean(double tol) const {
    return (*this + adjoint()).frobenius_norm() <= tol;
}

bool Matrix::is_traceless(double tol) const { return std::abs(trace()) <= tol; }

Matrix operator+(Matrix lhs, const Matrix& rhs) {
    lhs += rhs;
    return lhs;
}

Matrix operator-(Matrix lhs, const Matrix& rhs) {
    lhs -= rhs;
    return lhs;
}

Matrix operator*(const Matrix& lhs, const Matrix& rhs) {
    if (lhs.dim() != rhs.dim()) throw DimensionMismatch("Matrix *: dimension mismatch");
    const int n = lhs.dim();
    Matrix out(n);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            const cplx f = lhs(i, k);
            if (f == cplx(0.0, 0.0)) continue;
            for (int j = 0; j < n; ++j) out(i, j) += f * rhs(k, j);
        }
    }
    return out;
}

Matrix operator*(cplx s, Matrix m) {
    m *= s;
    return m;
}

Matrix operator*(Matrix m, cplx s) {
    m *= s;
    return m;
}

std::vector<cplx> operator*(const Matrix& m, const std::vector<cplx>& v) {
    if (v.size() != static_cast<std::size_t>(m.dim())) {
        throw DimensionMismatch("Matrix * vector: dimension mismatch");
    }
    std::vector<cplx> out(v.size(), cplx(0.0, 0.0));
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j) out[static_cast<std::size_t>(i)] += m(i, j) * v[static_cast<std::size_t>(j)];
    return out;
}

cplx vdot(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    if (a.size() != b.size()) throw DimensionMismatch("vdot: size mismatch");
    cplx s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += std::conj(a[k]) * b[k];
    return s;
}

double vnorm(const std::vector<cplx>& a) {
    double s = 0.0;
    for (const auto& v : a) s += std::norm(v);
    return std::sqrt(s);
}

Matrix EigenDecomposition::reconstruct() const {
    Matrix lam = Matrix::diag_real(eigenvalues);
    return eigenvectors * lam * eigenvectors.adjoint();
}

EigenDecomposition eigh(const Matrix& m, double tol) {
    const int n = m.dim();
    if (n == 0) throw DimensionMismatch("eigh: empty matrix");
    if (!m.is_hermitean(tol * std::max(1.0, m.frobenius_norm()))) {
        throw StructureError("eigh: input is not hermitean");
    }

    // Work on the hermitized copy so tiny asymmetries cannot bias the sweep.
    Matrix a = m;
    {
        Matrix ah = m.adjoint();
        a += ah;
        a *= 0.5;
    }
    Matrix v = Matrix::identity(n);

    const double scale = std::max(a.frobenius_norm(), 1e-300);
    const double stop = 1e-15 * scale;
    const int max_sweeps = 60;

    auto off_norm = [&]() {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) s += std::norm(a(i, j));
        return std::sqrt(s);
    };

    for (int sweep = 0; sweep < max_sweeps && off_norm() > stop; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const cplx apq = a(p, q);
                const double mag = std::abs(apq);
                if (mag <= 1e-18 * scale) continue;

                // Phase that turns the (p,q) entry real, then a real rotation.
                const cplx u = apq / mag;
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const double tau = (aqq - app) / (2.0 * mag);
                const double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                              : -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                // Plane transform J: J(p,p)=c, J(p,q)=s, J(q,p)=-conj(u)s, J(q,q)=conj(u)c.
                const cplx jqp = -std::conj(u) * s;
                const cplx jqq = std::conj(u) * c;

                // A <- J* A J, columns first then rows.
                for (int i = 0; i < n; ++i) {
                    const cplx aip = a(i, p), aiq = a(i, q);
                    a(i, p) = aip * c + aiq * jqp;
                    a(i, q) = aip * s + aiq * jqq;
                }
                for (int j = 0; j < n; ++j) {
                    const cplx apj = a(p, j), aqj = a(q, j);
                    a(p, j) = std::conj(c) * apj + std::conj(jqp) * aqj;
                    a(q, j) = std::conj(cplx(s)) * apj + std::conj(jqq) * aqj;
                }
                a(p, q) = std::conj(a(q, p));  // keep exactly hermitean
                a(p, p) = cplx(a(p, p).real(), 0.0);
                a(q, q) = cplx(a(q, q).real(), 0.0);

                for (int i = 0; i < n; ++i) {
                    const cplx vip = v(i, p), viq = v(i, q);
                    v(i, p) = vip * c + viq * jqp;
                    v(i, q) = vip * s + viq * jqq;
                }
            }
        }
    }

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int i, int j) { return a(i, i).real() < a(j, j).real(); });

    EigenDecomposition out;
    out.eigenvalues.resize(static_cast<std::size_t>(n));
    out.eigenvectors = Matrix(n);
    for (int k = 0; k < n; ++k) {
        const int src = order[static_cast<std::size_t>(k)];
        out.eigenvalues[static_cast<std::size_t>(k)] = a(src, src).real();
        for (int i = 0; i < n; ++i) out.eigenvectors(i, k) = v(i, src);
    }
    return out;
}

Matrix mat_exp(const Matrix& a, double tol) {
    if (!a.is_skew_hermitean(tol * std::max(1.0, a.frobenius_norm()))) {
        throw StructureError("mat_exp: input is not skew-hermitean");
    }
    // -iA is hermitean; exp(A) = V diag(e^{i l}) V*.
    Matrix h = cplx(0.0, -1.0) * a;
    EigenDecomposition ed = eigh(h, 1e-6);
    const int n = a.dim();
    std::vector<cplx> phases(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double l = ed.eigenvalues[static_cast<std::size_t>(k)];
        phases[static_cast<std::size_t>(k)] = cplx(std::cos(l), std::sin(l));
    }
    return ed.eigenvectors * Matrix::diag(phases) * ed.eigenvectors.adjoint();
}

std::pair<Matrix, double> traceless_split(const Matrix& h, double tol) {
    if (!h.is_hermitean(tol * std::max(1.0, h.frobenius_norm()))) {
        throw StructureError("traceless_split: input is not hermitean");
    }
    const double f = h.trace().real() / h.dim();
    Matrix a = h;
    for (int i = 0; i < h.dim(); ++i) a(i, i) -= f;
    return {a, f};
}

std::uint64_t Rng::next_u64() {
    // splitmix64
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

cplx Rng::gaussian_cplx() {
    const double re = gaussian();
    const double im = gaussian();
    return cplx(re, im);
}

Matrix random_hermitean(int n, Rng& rng) {
    Matrix g(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = rng.gaussian_cplx();
    Matrix h = g + g.adjoint();
    h *= 0.5;
    return h;
}

Matrix random_unitary(int n, Rng& rng) {
    Matrix g(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = rng.gaussian_cplx();

    // Gram-Schmidt QR. Classical GS makes the R diagonal real positive by
    // construction, which is exactly the phase convention giving Haar measure.
    Matrix q(n);
    for (int j = 0; j < n; ++j) {
        std::vector<cplx> col(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = g(i, j);
        // Two passes keep Q unitary to machine precision.
        for (int pass = 0; pass < 2; ++pass) {
            for (int j2 = 0; j2 < j; ++j2) {
                cplx proj = 0.0;
                for (int i = 0; i < n; ++i) proj += std::conj(q(i, j2)) * col[static_cast<std::size_t>(i)];
                for (int i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] -= proj * q(i, j2);
            }
        }
        const double nrm = vnorm(col);
        for (int i = 0; i < n; ++i) q(i, j) = col[static_cast<std::size_t>(i)] / nrm;
    }
    return q;
}

Matrix random_hermitean(int n, std::uint64_t seed) {
    Rng rng(seed);
    return random_hermitean(n, rng);
}

Matrix random_unitary(int n, std::uint64_t seed) {
    Rng rng(seed);
    return random_unitary(n, rng);
}

namespace {

void write_u32_le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF),
                          static_cast<unsigned char>((v >> 16) & 0xFF),
                          static_cast<unsigned char>((v >> 24) & 0xFF)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32_le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw IoError("read_matrix: truncated dimension field");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f64_le(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64_le(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw IoError("read_matrix: truncated payload");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

void write_matrix(std::ostream& os, const Matrix& m) {
    write_u32_le(os, static_cast<std::uint32_t>(m.dim()));
    for (int i = 0; i < m.dim(); ++i) {
        for (int j = 0; j < m.dim(); ++j) {
            write_f64_le(os, m(i, j).real());
            write_f64_le(os, m(i, j).imag());
        }
    }
}

Matrix read_matrix(std::istream& is) {
    const int n = static_cast<int>(read_u32_le(is));
    if (n <= 0 || n > 1024) throw IoError("read_matrix: implausible dimension");
    Matrix m(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double re = read_f64_le(is);
            const double im = read_f64_le(is);
            m(i, j) = cplx(re, im);
        }
    }
    return m;
}

}  // namespace hamtomo
