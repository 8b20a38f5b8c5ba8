#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "varqqa/error.hpp"
#include "varqqa/qcircuit.hpp"

namespace varqqa {

/// Number of free real parameters of a traceless d x d Hermitian generator.
inline constexpr int generator_param_count(int d) { return d * d - 1; }

/// Real coordinates of a Hermitian generator H = A + A^T + i(B - B^T).
///
/// `a` holds the upper triangle of A including the diagonal in row-major
/// order, minus the final diagonal entry A[d-1][d-1], which is fixed to the
/// negated sum of the other diagonal entries so that tr(A) = 0. `b` holds the
/// strict upper triangle of B in row-major order. The flat layout used by the
/// optimizer is `a` followed by `b`.
struct HermitianParams {
    int d = 1;
    std::vector<double> a;
    std::vector<double> b;

    static HermitianParams zeros(int d) {
        return {d, std::vector<double>(static_cast<std::size_t>(d * (d + 1) / 2 - 1), 0.0),
                std::vector<double>(static_cast<std::size_t>(d * (d - 1) / 2), 0.0)};
    }

    static HermitianParams from_flat(int d, std::span<const double> flat) {
        if (d < 1 || flat.size() != static_cast<std::size_t>(generator_param_count(d)))
            throw ShapeError("expected " + std::to_string(generator_param_count(d)) + " parameters for d=" +
                             std::to_string(d) + ", got " + std::to_string(flat.size()));
        const auto na = static_cast<std::size_t>(d * (d + 1) / 2 - 1);
        return {d, std::vector<double>(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(na)),
                std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(na), flat.end())};
    }

    std::vector<double> flat() const {
        std::vector<double> out(a);
        out.insert(out.end(), b.begin(), b.end());
        return out;
    }
};

namespace detail {

// Walks the row-major upper triangle (k <= l) except the last diagonal entry,
// yielding the index into `a` for each (k, l).
template <class Visit>
void for_each_a_entry(int d, Visit&& visit) {
    std::size_t idx = 0;
    for (int k = 0; k < d; ++k)
        for (int l = k; l < d; ++l) {
            if (k == d - 1 && l == d - 1) return;
            visit(idx++, k, l);
        }
}

template <class Visit>
void for_each_b_entry(int d, Visit&& visit) {
    std::size_t idx = 0;
    for (int k = 0; k < d; ++k)
        for (int l = k + 1; l < d; ++l) visit(idx++, k, l);
}

} // namespace detail

inline CMatrix build_hermitian(const HermitianParams& p) {
    const int d = p.d;
    if (d < 1 || p.a.size() != static_cast<std::size_t>(d * (d + 1) / 2 - 1) ||
        p.b.size() != static_cast<std::size_t>(d * (d - 1) / 2))
        throw ShapeError("HermitianParams counts do not match d=" + std::to_string(d));
    CMatrix h = CMatrix::Zero(d, d);
    double trace = 0.0;
    detail::for_each_a_entry(d, [&](std::size_t idx, int k, int l) {
        if (k == l) {
            h(k, k) = 2.0 * p.a[idx];
            trace += p.a[idx];
        } else {
            h(k, l) += p.a[idx];
            h(l, k) += p.a[idx];
        }
    });
    h(d - 1, d - 1) = -2.0 * trace;
    detail::for_each_b_entry(d, [&](std::size_t idx, int k, int l) {
        h(k, l) += Complex(0.0, p.b[idx]);
        h(l, k) -= Complex(0.0, p.b[idx]);
    });
    return h;
}

inline CMatrix build_hermitian(int d, std::span<const double> flat) {
    return build_hermitian(HermitianParams::from_flat(d, flat));
}

/// Inverse of build_hermitian on traceless Hermitian matrices. A trace, if
/// present, is projected out.
inline HermitianParams params_from_hermitian(const CMatrix& h) {
    const int d = static_cast<int>(h.rows());
    if (h.rows() != h.cols() || d < 1) throw ShapeError("generator must be square");
    HermitianParams p = HermitianParams::zeros(d);
    const double mean_diag = h.diagonal().real().sum() / d;
    detail::for_each_a_entry(d, [&](std::size_t idx, int k, int l) {
        p.a[idx] = (k == l) ? 0.5 * (h(k, k).real() - mean_diag) : 0.5 * (h(k, l).real() + h(l, k).real());
    });
    detail::for_each_b_entry(d, [&](std::size_t idx, int k, int l) {
        p.b[idx] = 0.5 * (h(k, l).imag() - h(l, k).imag());
    });
    return p;
}

/// Eigendecomposition H = V diag(lambda) V^H kept alongside U = exp(iH).
struct ExpmCache {
    CMatrix u;
    CMatrix v;
    RVector lambda;
};

inline ExpmCache expm_hermitian(const CMatrix& h) {
    if (h.rows() != h.cols()) throw ShapeError("generator must be square");
    const double asym = (h - h.adjoint()).norm();
    if (!(asym < 1e-10)) throw NumericalError("generator is not Hermitian: ||H - H^H||_F = " + std::to_string(asym));
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(h);
    if (eig.info() != Eigen::Success) throw NumericalError("Hermitian eigendecomposition failed");
    ExpmCache cache{CMatrix(), eig.eigenvectors(), eig.eigenvalues()};
    Eigen::VectorXcd phases(cache.lambda.size());
    for (Eigen::Index k = 0; k < phases.size(); ++k) phases(k) = std::polar(1.0, cache.lambda(k));
    cache.u = cache.v * phases.asDiagonal() * cache.v.adjoint();
    return cache;
}

/// Eigenvalue gaps below this use the analytic limit of the divided difference.
inline constexpr double kDegenerateGap = 1e-12;

/// First divided differences of exp(i*lambda) over the spectrum.
inline CMatrix expm_divided_differences(const RVector& lambda) {
    const Eigen::Index d = lambda.size();
    CMatrix phi(d, d);
    const Complex i_unit(0.0, 1.0);
    for (Eigen::Index k = 0; k < d; ++k)
        for (Eigen::Index l = 0; l < d; ++l) {
            const double gap = lambda(k) - lambda(l);
            if (std::abs(gap) < kDegenerateGap) {
                phi(k, l) = i_unit * std::polar(1.0, lambda(k));
            } else {
                // (e^{ia} - e^{ib}) / (a - b) = i e^{i(a+b)/2} sin((a-b)/2) / ((a-b)/2)
                const double half = 0.5 * gap;
                phi(k, l) = i_unit * std::polar(1.0, 0.5 * (lambda(k) + lambda(l))) * (std::sin(half) / half);
            }
        }
    return phi;
}

/// Pulls a cotangent G of U back to the generator: for a real scalar L with
/// dL = Re tr(G^H dU), returns K with dL = Re tr(K^H dH).
inline CMatrix expm_generator_cotangent(const ExpmCache& cache, const CMatrix& g) {
    const CMatrix inner = cache.v.adjoint() * g * cache.v;
    const CMatrix phi = expm_divided_differences(cache.lambda);
    const CMatrix k = phi.conjugate().cwiseProduct(inner);
    return cache.v * k * cache.v.adjoint();
}

/// Maps a generator cotangent K (dL = Re tr(K^H dH)) to the flat parameter
/// gradient, writing d^2 - 1 values into `out`.
inline void generator_cotangent_to_params(const CMatrix& k_mat, std::span<double> out) {
    const int d = static_cast<int>(k_mat.rows());
    if (out.size() != static_cast<std::size_t>(generator_param_count(d)))
        throw ShapeError("gradient buffer has the wrong size");
    const auto na = static_cast<std::size_t>(d * (d + 1) / 2 - 1);
    const double last = k_mat(d - 1, d - 1).real();
    detail::for_each_a_entry(d, [&](std::size_t idx, int k, int l) {
        out[idx] = (k == l) ? 2.0 * (k_mat(k, k).real() - last) : k_mat(k, l).real() + k_mat(l, k).real();
    });
    detail::for_each_b_entry(d, [&](std::size_t idx, int k, int l) {
        out[na + idx] = k_mat(k, l).imag() - k_mat(l, k).imag();
    });
}

/// Gradient with respect to the flat parameters of a real scalar L whose
/// differential is dL = Re tr(G^H dU) at U = exp(iH).
inline RVector expm_vjp(const ExpmCache& cache, const CMatrix& g) {
    const int d = static_cast<int>(cache.v.rows());
    RVector grad(generator_param_count(d));
    generator_cotangent_to_params(expm_generator_cotangent(cache, g), std::span<double>(grad.data(), grad.size()));
    return grad;
}

/// i.i.d. uniform draws from [-scale, scale].
template <class Rng>
std::vector<double> random_parameters(std::size_t count, double scale, Rng& rng) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    std::vector<double> out(count);
    for (auto& v : out) v = dist(rng);
    return out;
}

} // namespace varqqa
