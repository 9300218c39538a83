#pragma once

/// @file linalg.hpp
/// Symmetric banded matrices, a banded Cholesky direct solver with diagonal
/// scaling and iterative refinement, and a Jacobi-preconditioned conjugate
/// gradient minimiser.  Assembled beam stiffness matrices are SPD with a
/// small fixed bandwidth, so these cover every solve in the library.

#include <cmath>
#include <cstddef>
#include <vector>

#include "core.hpp"

namespace defectbeam {

/// Symmetric banded matrix; only the lower band (j <= i <= j + kd) is stored.
class BandedMatrix {
public:
    BandedMatrix() = default;
    BandedMatrix(int n, int kd)
        : n_(n), kd_(kd), band_(static_cast<std::size_t>(n) * (kd + 1), 0.0) {
        if (n < 1 || kd < 0) throw ConfigError("invalid banded matrix shape");
    }

    int size() const { return n_; }
    int bandwidth() const { return kd_; }

    double at(int i, int j) const {
        if (i < j) std::swap(i, j);
        if (i - j > kd_) return 0.0;
        return band_[idx(i, j)];
    }

    void add(int i, int j, double v) {
        if (i < j) std::swap(i, j);
        if (i - j > kd_) throw ConfigError("entry outside band");
        band_[idx(i, j)] += v;
    }

    void set(int i, int j, double v) {
        if (i < j) std::swap(i, j);
        if (i - j > kd_) throw ConfigError("entry outside band");
        band_[idx(i, j)] = v;
    }

    std::vector<double> diagonal() const {
        std::vector<double> d(static_cast<std::size_t>(n_));
        for (int i = 0; i < n_; ++i) d[static_cast<std::size_t>(i)] = at(i, i);
        return d;
    }

    /// y = K x with symmetric fill-in of the upper triangle.
    std::vector<double> matvec(const std::vector<double>& x) const {
        std::vector<double> y(static_cast<std::size_t>(n_), 0.0);
        for (int j = 0; j < n_; ++j) {
            const double xj = x[static_cast<std::size_t>(j)];
            y[static_cast<std::size_t>(j)] += band_[idx(j, j)] * xj;
            const int imax = std::min(n_ - 1, j + kd_);
            for (int i = j + 1; i <= imax; ++i) {
                const double v = band_[idx(i, j)];
                y[static_cast<std::size_t>(i)] += v * xj;
                y[static_cast<std::size_t>(j)] += v * x[static_cast<std::size_t>(i)];
            }
        }
        return y;
    }

    /// 0.5 * x' K x, the quadratic part of a discrete energy.
    double quadratic_form_half(const std::vector<double>& x) const {
        const std::vector<double> y = matvec(x);
        double s = 0.0;
        for (int i = 0; i < n_; ++i) s += x[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
        return 0.5 * s;
    }

private:
    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(j) * (kd_ + 1) + static_cast<std::size_t>(i - j);
    }

    int n_ = 0;
    int kd_ = 0;
    std::vector<double> band_;
};

/// Banded Cholesky factorisation K = L L'.  Throws NotSpdError when a pivot
/// drops below a relative floor, which is how singular constrained systems
/// surface to callers.
class BandedCholesky {
public:
    explicit BandedCholesky(const BandedMatrix& K) : L_(K), kd_(K.bandwidth()) {
        const int n = K.size();
        double max_diag = 0.0;
        for (int i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(K.at(i, i)));
        const double floor = max_diag * 1e-14;
        for (int j = 0; j < n; ++j) {
            double s = L_.at(j, j);
            for (int k = std::max(0, j - kd_); k < j; ++k) s -= L_.at(j, k) * L_.at(j, k);
            if (!(s > floor))
                throw NotSpdError("matrix is not positive definite (pivot " +
                                  std::to_string(s) + " at row " + std::to_string(j) + ")");
            const double ljj = std::sqrt(s);
            L_.set(j, j, ljj);
            const int imax = std::min(n - 1, j + kd_);
            for (int i = j + 1; i <= imax; ++i) {
                double v = L_.at(i, j);
                for (int k = std::max(0, i - kd_); k < j; ++k) v -= L_.at(i, k) * L_.at(j, k);
                L_.set(i, j, v / ljj);
            }
        }
    }

    std::vector<double> solve(const std::vector<double>& rhs) const {
        const int n = L_.size();
        std::vector<double> y(rhs);
        for (int i = 0; i < n; ++i) {  // L y = rhs
            double s = y[static_cast<std::size_t>(i)];
            for (int k = std::max(0, i - kd_); k < i; ++k) s -= L_.at(i, k) * y[static_cast<std::size_t>(k)];
            y[static_cast<std::size_t>(i)] = s / L_.at(i, i);
        }
        for (int i = n - 1; i >= 0; --i) {  // L' x = y
            double s = y[static_cast<std::size_t>(i)];
            const int kmax = std::min(n - 1, i + kd_);
            for (int k = i + 1; k <= kmax; ++k) s -= L_.at(k, i) * y[static_cast<std::size_t>(k)];
            y[static_cast<std::size_t>(i)] = s / L_.at(i, i);
        }
        return y;
    }

private:
    BandedMatrix L_;
    int kd_ = 0;
};

inline double vector_norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

/// Direct solve of an SPD banded system.  Symmetric diagonal scaling keeps
/// the factorisation well conditioned across mixed derivative-order DOFs, and
/// a few rounds of iterative refinement pin the relative residual near
/// round-off (well inside the 1e-10 contract).
struct BandedSolveResult {
    std::vector<double> x;
    double relative_residual = 0.0;
};

inline BandedSolveResult solve_banded_spd(const BandedMatrix& K, const std::vector<double>& f) {
    const int n = K.size();
    if (static_cast<int>(f.size()) != n) throw ConfigError("rhs size does not match matrix");

    std::vector<double> scale(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double dii = K.at(i, i);
        if (!(dii > 0.0))
            throw NotSpdError("matrix is not positive definite (non-positive diagonal at row " +
                              std::to_string(i) + ")");
        scale[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(dii);
    }
    BandedMatrix Ks(n, K.bandwidth());
    for (int j = 0; j < n; ++j)
        for (int i = j; i <= std::min(n - 1, j + K.bandwidth()); ++i)
            Ks.set(i, j, K.at(i, j) * scale[static_cast<std::size_t>(i)] * scale[static_cast<std::size_t>(j)]);
    const BandedCholesky chol(Ks);

    auto scaled_solve = [&](const std::vector<double>& rhs) {
        std::vector<double> r(rhs);
        for (int i = 0; i < n; ++i) r[static_cast<std::size_t>(i)] *= scale[static_cast<std::size_t>(i)];
        r = chol.solve(r);
        for (int i = 0; i < n; ++i) r[static_cast<std::size_t>(i)] *= scale[static_cast<std::size_t>(i)];
        return r;
    };

    BandedSolveResult out;
    out.x = scaled_solve(f);
    const double fnorm = vector_norm2(f);
    for (int round = 0; round < 4; ++round) {
        std::vector<double> r = K.matvec(out.x);
        for (int i = 0; i < n; ++i) r[static_cast<std::size_t>(i)] = f[static_cast<std::size_t>(i)] - r[static_cast<std::size_t>(i)];
        out.relative_residual = fnorm > 0.0 ? vector_norm2(r) / fnorm : vector_norm2(r);
        if (out.relative_residual < 1e-13) break;
        const std::vector<double> dx = scaled_solve(r);
        for (int i = 0; i < n; ++i) out.x[static_cast<std::size_t>(i)] += dx[static_cast<std::size_t>(i)];
    }
    return out;
}

/// Jacobi-preconditioned conjugate gradient on E(v) = 0.5 v'Kv - f'v,
/// equivalent to plain CG on the diagonally scaled energy.  Used as the
/// independent energy-descent route next to the direct factorisation.
struct CgResult {
    std::vector<double> x;
    int iterations = 0;
    double relative_residual = 0.0;
};

inline CgResult minimize_energy_cg(const BandedMatrix& K, const std::vector<double>& f,
                                   double tol = 1e-14, int max_iterations = 0) {
    const int n = K.size();
    if (max_iterations <= 0) max_iterations = 200 * n + 200;
    std::vector<double> invd(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double dii = K.at(i, i);
        if (!(dii > 0.0)) throw NotSpdError("CG needs a positive diagonal");
        invd[static_cast<std::size_t>(i)] = 1.0 / dii;
    }

    CgResult out;
    out.x.assign(static_cast<std::size_t>(n), 0.0);
    std::vector<double> r(f);
    std::vector<double> z(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = invd[static_cast<std::size_t>(i)] * r[static_cast<std::size_t>(i)];
    std::vector<double> p(z);
    double rz = 0.0;
    for (int i = 0; i < n; ++i) rz += r[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(i)];
    const double fnorm = vector_norm2(f);
    if (fnorm == 0.0) return out;

    for (int it = 0; it < max_iterations; ++it) {
        const std::vector<double> Kp = K.matvec(p);
        double pKp = 0.0;
        for (int i = 0; i < n; ++i) pKp += p[static_cast<std::size_t>(i)] * Kp[static_cast<std::size_t>(i)];
        if (!(pKp > 0.0)) break;  // descent exhausted at round-off
        const double alpha = rz / pKp;
        for (int i = 0; i < n; ++i) {
            out.x[static_cast<std::size_t>(i)] += alpha * p[static_cast<std::size_t>(i)];
            r[static_cast<std::size_t>(i)] -= alpha * Kp[static_cast<std::size_t>(i)];
        }
        out.iterations = it + 1;
        out.relative_residual = vector_norm2(r) / fnorm;
        if (out.relative_residual < tol) break;
        double rz_next = 0.0;
        for (int i = 0; i < n; ++i) {
            z[static_cast<std::size_t>(i)] = invd[static_cast<std::size_t>(i)] * r[static_cast<std::size_t>(i)];
            rz_next += r[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(i)];
        }
        const double beta = rz_next / rz;
        rz = rz_next;
        for (int i = 0; i < n; ++i)
            p[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)] + beta * p[static_cast<std::size_t>(i)];
    }
    return out;
}

}  // namespace defectbeam
