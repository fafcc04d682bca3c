// expcalc.hpp — Calculus around the matrix exponential on skew-hermitean
// matrices: ad, Ad, phi(ad), dexp and its inverse, periodic eigenspaces,
// same-exponential decision, and singular chord lengths.
#pragma once

#include <vector>

#include "hamtomo/matrix.hpp"

namespace hamtomo {

// Default tolerances; see module tests for how they interact.
inline constexpr double kClusterTol = 1e-7;
inline constexpr double kSingTol = 1e-6;

// ad_A(B) = AB - BA.
Matrix ad(const Matrix& a, const Matrix& b);

// Ad_U(A) = U A U^{-1} with U^{-1} = U*.
Matrix Ad(const Matrix& u, const Matrix& a, double tol = kStructTol);

// phi(z) = (1 - e^{-z})/z, phi(0) = 1. Series fallback near zero avoids
// cancellation.
cplx phi(cplx z);

// phi(ad_A) applied to B, evaluated spectrally in the eigenbasis of -iA:
// entry (j,k) of V* B V is scaled by phi(i(l_j - l_k)).
Matrix phi_ad(const Matrix& a, const Matrix& b, double tol = kStructTol);

// dexp_A(B) = e^A phi(ad_A)(B).
Matrix dexp(const Matrix& a, const Matrix& b, double tol = kStructTol);

// Solve dexp_A(B) = C for B. Throws SingularDerivative when an eigenvalue gap
// g of -iA has |phi(ig)| <= sing_tol (the gap is in 2*pi*Z).
Matrix dexp_invert(const Matrix& a, const Matrix& c, double sing_tol = kSingTol,
                   double tol = kStructTol);

// Eigenvalues of a hermitean matrix reduced mod 2*pi with one orthogonal
// projector per mod-2*pi cluster. These determine e^{iA}.
struct PeriodicSpectralData {
    std::vector<double> representatives;  // ascending, in [0, 2*pi)
    std::vector<Matrix> projectors;       // hermitean idempotent, sum to I
    double cluster_tol = kClusterTol;
};

PeriodicSpectralData periodic_eigenspaces(const Matrix& a, double cluster_tol = kClusterTol,
                                          double tol = kStructTol);

// True iff e^{iA} = e^{iB}, decided by comparing periodic spectral data.
bool same_exponential(const Matrix& a, const Matrix& b, double tol,
                      double cluster_tol = kClusterTol);

// All lengths t in (0, t_max] at which dexp_{tA} fails to be bijective:
// 2*pi*z/(l - m) over distinct eigenvalue pairs of the generator and nonzero
// integers z. Sorted, deduplicated.
std::vector<double> singular_lengths(const Matrix& a, double t_max, double tol = kStructTol);

}  // namespace hamtomo
