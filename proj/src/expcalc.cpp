#include "hamtomo/expcalc.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hamtomo {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Eigensystem of -iA for skew-hermitean A, shared by the spectral routines.
EigenDecomposition generator_eigensystem(const Matrix& a, double tol) {
    if (!a.is_skew_hermitean(tol * std::max(1.0, a.frobenius_norm()))) {
        throw StructureError("expcalc: input is not skew-hermitean");
    }
    return eigh(cplx(0.0, -1.0) * a, 1e-6);
}

double circular_distance(double x, double y) {
    double d = std::abs(x - y);
    d = std::fmod(d, kTwoPi);
    return std::min(d, kTwoPi - d);
}

}  // namespace

Matrix ad(const Matrix& a, const Matrix& b) {
    if (a.dim() != b.dim()) throw DimensionMismatch("ad: dimension mismatch");
    return a * b - b * a;
}

Matrix Ad(const Matrix& u, const Matrix& a, double tol) {
    if (u.dim() != a.dim()) throw DimensionMismatch("Ad: dimension mismatch");
    if (!u.is_unitary(tol * std::max(1.0, u.frobenius_norm()))) {
        throw StructureError("Ad: conjugator is not unitary");
    }
    return u * a * u.adjoint();
}

cplx phi(cplx z) {
    if (std::abs(z) < 1e-4) {
        // sum_k (-z)^k / (k+1)!
        cplx sum = 1.0;
        cplx term = 1.0;
        for (int k = 1; k <= 8; ++k) {
            term *= -z / static_cast<double>(k + 1);
            sum += term;
        }
        return sum;
    }
    return (1.0 - std::exp(-z)) / z;
}

Matrix phi_ad(const Matrix& a, const Matrix& b, double tol) {
    if (a.dim() != b.dim()) throw DimensionMismatch("phi_ad: dimension mismatch");
    EigenDecomposition ed = generator_eigensystem(a, tol);
    const int n = a.dim();
    Matrix bt = ed.eigenvectors.adjoint() * b * ed.eigenvectors;
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            const double gap = ed.eigenvalues[static_cast<std::size_t>(j)] -
                               ed.eigenvalues[static_cast<std::size_t>(k)];
            bt(j, k) *= phi(cplx(0.0, gap));
        }
    }
    return ed.eigenvectors * bt * ed.eigenvectors.adjoint();
}

Matrix dexp(const Matrix& a, const Matrix& b, double tol) {
    if (!b.is_skew_hermitean(tol * std::max(1.0, b.frobenius_norm()))) {
        throw StructureError("dexp: direction is not skew-hermitean");
    }
    return mat_exp(a, tol) * phi_ad(a, b, tol);
}

Matrix dexp_invert(const Matrix& a, const Matrix& c, double sing_tol, double tol) {
    if (a.dim() != c.dim()) throw DimensionMismatch("dexp_invert: dimension mismatch");
    EigenDecomposition ed = generator_eigensystem(a, tol);
    const int n = a.dim();

    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            const double gap = ed.eigenvalues[static_cast<std::size_t>(j)] -
                               ed.eigenvalues[static_cast<std::size_t>(k)];
            if (std::abs(phi(cplx(0.0, gap))) <= sing_tol) {
                std::ostringstream msg;
                msg << "dexp_invert: singular derivative, eigenvalue gap " << gap
                    << " of the generator lies in 2*pi*Z";
                throw SingularDerivative(msg.str(), gap);
            }
        }
    }

    // e^{-A} C in the eigenbasis, then divide entrywise by phi(i gap).
    std::vector<cplx> inv_phases(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double l = ed.eigenvalues[static_cast<std::size_t>(k)];
        inv_phases[static_cast<std::size_t>(k)] = cplx(std::cos(l), -std::sin(l));
    }
    Matrix ct = ed.eigenvectors.adjoint() * c * ed.eigenvectors;
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) ct(j, k) = inv_phases[static_cast<std::size_t>(j)] * ct(j, k);
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            const double gap = ed.eigenvalues[static_cast<std::size_t>(j)] -
                               ed.eigenvalues[static_cast<std::size_t>(k)];
            ct(j, k) /= phi(cplx(0.0, gap));
        }
    }
    return ed.eigenvectors * ct * ed.eigenvectors.adjoint();
}

PeriodicSpectralData periodic_eigenspaces(const Matrix& a, double cluster_tol, double tol) {
    if (!a.is_hermitean(tol * std::max(1.0, a.frobenius_norm()))) {
        throw StructureError("periodic_eigenspaces: input is not hermitean");
    }
    EigenDecomposition ed = eigh(a, 1e-6);
    const int n = a.dim();

    struct Entry {
        double value;  // eigenvalue mod 2*pi in [0, 2*pi)
        int index;     // eigenvector column
    };
    std::vector<Entry> entries;
    for (int k = 0; k < n; ++k) {
        double v = std::fmod(ed.eigenvalues[static_cast<std::size_t>(k)], kTwoPi);
        if (v < 0.0) v += kTwoPi;
        if (v >= kTwoPi) v = 0.0;
        entries.push_back({v, k});
    }
    std::sort(entries.begin(), entries.end(),
              [](const Entry& x, const Entry& y) { return x.value < y.value; });

    // Single-link clustering on the sorted circle, wraparound-aware.
    std::vector<std::vector<Entry>> clusters;
    for (const Entry& e : entries) {
        if (!clusters.empty() && e.value - clusters.back().back().value <= cluster_tol) {
            clusters.back().push_back(e);
        } else {
            clusters.push_back({e});
        }
    }
    if (clusters.size() >= 2) {
        const double wrap_gap = entries.front().value + kTwoPi - entries.back().value;
        if (wrap_gap <= cluster_tol) {
            // Merge the last cluster into the first, shifting values below zero.
            for (Entry e : clusters.back()) {
                e.value -= kTwoPi;
                clusters.front().push_back(e);
            }
            clusters.pop_back();
        }
    }

    PeriodicSpectralData out;
    out.cluster_tol = cluster_tol;
    for (const auto& cluster : clusters) {
        double mean = 0.0;
        for (const Entry& e : cluster) mean += e.value;
        mean /= static_cast<double>(cluster.size());
        if (mean < 0.0) mean += kTwoPi;
        if (mean >= kTwoPi) mean -= kTwoPi;

        Matrix p(n);
        for (const Entry& e : cluster) {
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    p(i, j) += ed.eigenvectors(i, e.index) * std::conj(ed.eigenvectors(j, e.index));
                }
            }
        }
        out.representatives.push_back(mean);
        out.projectors.push_back(p);
    }

    // Sort clusters by representative (the wraparound merge can disorder them).
    std::vector<std::size_t> order(out.representatives.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return out.representatives[i] < out.representatives[j];
    });
    PeriodicSpectralData sorted;
    sorted.cluster_tol = cluster_tol;
    for (std::size_t i : order) {
        sorted.representatives.push_back(out.representatives[i]);
        sorted.projectors.push_back(out.projectors[i]);
    }

    // Misclustering silently breaks the same-exponential decision, so clusters
    // that are separated but not clearly separated are an error.
    const std::size_t m = sorted.representatives.size();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const double d = circular_distance(sorted.representatives[i], sorted.representatives[j]);
            if (d > cluster_tol && d < 3.0 * cluster_tol) {
                throw AmbiguousClustering(
                    "periodic_eigenspaces: cluster representatives separated by less than "
                    "3*cluster_tol");
            }
        }
    }
    return sorted;
}

bool same_exponential(const Matrix& a, const Matrix& b, double tol, double cluster_tol) {
    if (a.dim() != b.dim()) throw DimensionMismatch("same_exponential: dimension mismatch");
    PeriodicSpectralData da = periodic_eigenspaces(a, cluster_tol);
    PeriodicSpectralData db = periodic_eigenspaces(b, cluster_tol);
    if (da.representatives.size() != db.representatives.size()) return false;

    const std::size_t m = da.representatives.size();
    std::vector<bool> used(m, false);
    for (std::size_t i = 0; i < m; ++i) {
        bool matched = false;
        for (std::size_t j = 0; j < m; ++j) {
            if (used[j]) continue;
            if (circular_distance(da.representatives[i], db.representatives[j]) > tol) continue;
            if ((da.projectors[i] - db.projectors[j]).frobenius_norm() > tol) continue;
            used[j] = true;
            matched = true;
            break;
        }
        if (!matched) return false;
    }
    return true;
}

std::vector<double> singular_lengths(const Matrix& a, double t_max, double tol) {
    if (t_max <= 0.0) throw InvalidInterval("singular_lengths: t_max must be positive");
    EigenDecomposition ed = generator_eigensystem(a, tol);
    const int n = a.dim();
    const double eig_tol = 1e-12 * std::max(1.0, a.frobenius_norm());

    std::vector<double> lengths;
    for (int j = 0; j < n; ++j) {
        for (int k = j + 1; k < n; ++k) {
            const double gap = std::abs(ed.eigenvalues[static_cast<std::size_t>(j)] -
                                        ed.eigenvalues[static_cast<std::size_t>(k)]);
            if (gap <= eig_tol) continue;
            for (int z = 1;; ++z) {
                const double t = kTwoPi * z / gap;
                if (t > t_max) break;
                lengths.push_back(t);
            }
        }
    }
    std::sort(lengths.begin(), lengths.end());
    std::vector<double> dedup;
    for (double t : lengths) {
        if (dedup.empty() || t - dedup.back() > 1e-12) dedup.push_back(t);
    }
    return dedup;
}

}  // namespace hamtomo
