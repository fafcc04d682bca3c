// matrix.hpp — Dense complex N×N matrices for small N: arithmetic, structure
// predicates, hermitean eigendecomposition (cyclic Jacobi), matrix exponential,
// trace split, and seeded random samplers.
#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "hamtomo/errors.hpp"

namespace hamtomo {

using cplx = std::complex<double>;

// Default tolerance for all structure predicates.
inline constexpr double kStructTol = 1e-9;

class Matrix {
  public:
    Matrix() = default;
    explicit Matrix(int n) : n_(n), a_(static_cast<std::size_t>(n) * n, cplx(0.0, 0.0)) {}
    Matrix(int n, std::vector<cplx> entries);

    static Matrix identity(int n);
    static Matrix zero(int n) { return Matrix(n); }
    static Matrix diag(const std::vector<cplx>& d);
    static Matrix diag_real(const std::vector<double>& d);

    int dim() const { return n_; }

    cplx& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * n_ + j]; }
    const cplx& operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * n_ + j]; }

    const std::vector<cplx>& entries() const { return a_; }

    Matrix& operator+=(const Matrix& rhs);
    Matrix& operator-=(const Matrix& rhs);
    Matrix& operator*=(cplx s);

    Matrix adjoint() const;
    Matrix transpose() const;
    Matrix conj() const;

    cplx trace() const;
    double frobenius_norm() const;
    double max_abs() const;

    // Determinant by LU with partial pivoting; fine for the small N used here.
    cplx det() const;

    bool is_hermitean(double tol = kStructTol) const;
    bool is_unitary(double tol = kStructTol) const;
    bool is_skew_hermitean(double tol = kStructTol) const;
    bool is_traceless(double tol = kStructTol) const;

  private:
    int n_ = 0;
    std::vector<cplx> a_;
};

Matrix operator+(Matrix lhs, const Matrix& rhs);
Matrix operator-(Matrix lhs, const Matrix& rhs);
Matrix operator*(const Matrix& lhs, const Matrix& rhs);
Matrix operator*(cplx s, Matrix m);
Matrix operator*(Matrix m, cplx s);

std::vector<cplx> operator*(const Matrix& m, const std::vector<cplx>& v);
cplx vdot(const std::vector<cplx>& a, const std::vector<cplx>& b);  // a* b
double vnorm(const std::vector<cplx>& a);

struct EigenDecomposition {
    std::vector<double> eigenvalues;  // ascending
    Matrix eigenvectors;              // unitary, columns matching eigenvalues

    Matrix reconstruct() const;  // V diag(lambda) V*
};

// Hermitean eigendecomposition via cyclic Jacobi rotations. Throws
// StructureError if the input fails the hermitean predicate.
EigenDecomposition eigh(const Matrix& m, double tol = kStructTol);

// exp(A) for skew-hermitean A, evaluated spectrally: with -iA = V diag(l) V*,
// exp(A) = V diag(e^{il}) V*. Result is unitary.
Matrix mat_exp(const Matrix& a, double tol = kStructTol);

// H = A + f*I with tr(A) = 0, f = tr(H)/N.
std::pair<Matrix, double> traceless_split(const Matrix& h, double tol = kStructTol);

// splitmix64 PRNG. Hand-rolled so streams are identical across platforms.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();
    double uniform();       // [0, 1)
    double gaussian();      // standard normal via Box-Muller
    cplx gaussian_cplx();   // re and im independent N(0, 1)

  private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// (G + G*)/2 of an i.i.d. standard complex Gaussian matrix G.
Matrix random_hermitean(int n, Rng& rng);
// Haar unitary via QR of a Gaussian matrix with the R diagonal phase-fixed.
Matrix random_unitary(int n, Rng& rng);

// Convenience seeded one-shot versions.
Matrix random_hermitean(int n, std::uint64_t seed);
Matrix random_unitary(int n, std::uint64_t seed);

// Binary serialization: 4-byte little-endian dimension, then row-major
// interleaved (re, im) 64-bit little-endian floats. Shared by all file formats.
void write_matrix(std::ostream& os, const Matrix& m);
Matrix read_matrix(std::istream& is);

}  // namespace hamtomo
