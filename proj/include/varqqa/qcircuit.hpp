#pragma once

#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "varqqa/boolfn.hpp"
#include "varqqa/error.hpp"

namespace varqqa {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Unitarity tolerance enforced when a matrix is applied to a state.
inline constexpr double kUnitaryTolerance = 1e-10;

/// Geometry of a t-query circuit on the accessible space H_Q (x) H_W.
///
/// Basis index a = i * d_w + w for query index i in [0, n] and workspace
/// index w in [0, d_w). Output class c owns the contiguous block of
/// `partition[c]` rows starting at the sum of the preceding entries; rows past
/// the last block belong to no class.
struct CircuitConfig {
    int n = 1;
    int t = 0;
    int d_w = 1;
    std::vector<int> partition;

    int d_q() const { return n + 1; }
    int d_a() const { return d_q() * d_w; }

    /// Throws ParameterError or ShapeError naming the first violated invariant.
    void validate(std::size_t num_classes) const {
        if (n < 1 || n > kMaxInputBits) throw ParameterError("n must be in 1.." + std::to_string(kMaxInputBits));
        if (t < 0) throw ParameterError("query count t must be non-negative, got " + std::to_string(t));
        if (d_w < 1) throw ParameterError("workspace dimension d_w must be >= 1, got " + std::to_string(d_w));
        if (partition.size() != num_classes)
            throw ShapeError("partition has " + std::to_string(partition.size()) + " blocks but the function has " +
                             std::to_string(num_classes) + " output labels");
        long total = 0;
        for (int p : partition) {
            if (p < 1) throw ParameterError("partition entries must be >= 1");
            total += p;
        }
        if (total > d_a())
            throw ParameterError("partition sums to " + std::to_string(total) + " which exceeds d_A=" +
                                 std::to_string(d_a()));
    }
};

/// Accessible-space amplitudes for every domain input: column x is the state
/// for the x-th input in domain order.
struct BatchState {
    CMatrix amplitudes;

    Eigen::Index dim() const { return amplitudes.rows(); }
    Eigen::Index columns() const { return amplitudes.cols(); }
};

/// Contiguous basis-aligned output blocks derived from a partition.
class ProjectorPartition {
public:
    ProjectorPartition(int d_a, std::vector<int> partition) : d_a_(d_a), sizes_(std::move(partition)) {
        offsets_.resize(sizes_.size());
        int offset = 0;
        for (std::size_t c = 0; c < sizes_.size(); ++c) {
            if (sizes_[c] < 1) throw ParameterError("partition entries must be >= 1");
            offsets_[c] = offset;
            offset += sizes_[c];
        }
        if (offset > d_a_) throw ParameterError("partition exceeds the accessible dimension");
    }

    explicit ProjectorPartition(const CircuitConfig& config) : ProjectorPartition(config.d_a(), config.partition) {}

    int dim() const { return d_a_; }
    std::size_t num_blocks() const { return sizes_.size(); }
    int offset(std::size_t c) const { return offsets_[c]; }
    int size(std::size_t c) const { return sizes_[c]; }
    /// Rows assigned to no class.
    int leftover() const { return d_a_ - (sizes_.empty() ? 0 : offsets_.back() + sizes_.back()); }

    /// Dense diagonal projector onto the block of class c.
    RMatrix projector(std::size_t c) const {
        RMatrix p = RMatrix::Zero(d_a_, d_a_);
        for (int r = 0; r < sizes_[c]; ++r) p(offsets_[c] + r, offsets_[c] + r) = 1.0;
        return p;
    }

    /// d_A x |S| mask holding 1 where a row lies outside the block of that
    /// column's class, i.e. the diagonal of the complement projector per input.
    RMatrix error_mask(const BooleanFunction& f) const {
        RMatrix mask = RMatrix::Ones(d_a_, static_cast<Eigen::Index>(f.domain_size()));
        for (std::size_t x = 0; x < f.domain_size(); ++x) {
            const auto c = static_cast<std::size_t>(f.class_at(x));
            if (c >= sizes_.size()) throw ShapeError("function class has no projector block");
            mask.col(static_cast<Eigen::Index>(x)).segment(offsets_[c], sizes_[c]).setZero();
        }
        return mask;
    }

private:
    int d_a_;
    std::vector<int> sizes_;
    std::vector<int> offsets_;
};

inline BatchState initial_batch(const CircuitConfig& config, std::size_t domain_size) {
    if (domain_size < 1) throw ParameterError("domain size must be >= 1");
    BatchState s{CMatrix::Zero(config.d_a(), static_cast<Eigen::Index>(domain_size))};
    s.amplitudes.row(0).setOnes();
    return s;
}

/// Diagonal of the oracle O_x on the query register: entry i is (-1)^{x_i}
/// with x_0 fixed to 0.
inline std::vector<int> oracle_signs(Bits x, int n) {
    std::vector<int> s(static_cast<std::size_t>(n + 1), 1);
    for (int i = 1; i <= n; ++i)
        if (bit_at(x, n, i)) s[static_cast<std::size_t>(i)] = -1;
    return s;
}

/// Oracle layer for all inputs at once: a d_A x |S| matrix of +-1 applied
/// element-wise.
inline RMatrix oracle_sign_matrix(const BooleanFunction& f, int d_w) {
    const int n = f.n();
    RMatrix signs(static_cast<Eigen::Index>((n + 1) * d_w), static_cast<Eigen::Index>(f.domain_size()));
    for (std::size_t x = 0; x < f.domain_size(); ++x) {
        const auto s = oracle_signs(f.domain()[x], n);
        for (int i = 0; i <= n; ++i)
            signs.col(static_cast<Eigen::Index>(x)).segment(i * d_w, d_w).setConstant(s[static_cast<std::size_t>(i)]);
    }
    return signs;
}

inline BatchState apply_oracle(const BatchState& state, const BooleanFunction& f) {
    if (state.columns() != static_cast<Eigen::Index>(f.domain_size()))
        throw ShapeError("state has " + std::to_string(state.columns()) + " columns, function domain has " +
                         std::to_string(f.domain_size()));
    const Eigen::Index d_q = f.n() + 1;
    if (state.dim() % d_q != 0)
        throw ShapeError("state dimension " + std::to_string(state.dim()) + " is not a multiple of n+1=" +
                         std::to_string(d_q));
    const RMatrix signs = oracle_sign_matrix(f, static_cast<int>(state.dim() / d_q));
    return BatchState{state.amplitudes.cwiseProduct(signs.cast<Complex>())};
}

/// Frobenius norm of U^H U - I.
inline double unitarity_defect(const CMatrix& u) {
    if (u.rows() != u.cols()) return std::numeric_limits<double>::infinity();
    return (u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols())).norm();
}

inline BatchState apply_unitary(const BatchState& state, const CMatrix& u, double tolerance = kUnitaryTolerance) {
    if (u.rows() != u.cols() || u.cols() != state.dim())
        throw ShapeError("unitary is " + std::to_string(u.rows()) + "x" + std::to_string(u.cols()) +
                         " but the state dimension is " + std::to_string(state.dim()));
    const double defect = unitarity_defect(u);
    if (!(defect < tolerance))
        throw NumericalError("matrix is not unitary: ||U^H U - I||_F = " + std::to_string(defect));
    return BatchState{u * state.amplitudes};
}

/// States after each U_j, j = 0..t, for all inputs.
inline std::vector<BatchState> forward_trajectory(const CircuitConfig& config, const BooleanFunction& f,
                                                  const std::vector<CMatrix>& unitaries,
                                                  double tolerance = kUnitaryTolerance) {
    if (unitaries.size() != static_cast<std::size_t>(config.t + 1))
        throw ShapeError("expected " + std::to_string(config.t + 1) + " unitaries, got " +
                         std::to_string(unitaries.size()));
    if (config.n != f.n()) throw ShapeError("circuit n does not match the function's input length");
    const RMatrix signs = oracle_sign_matrix(f, config.d_w);
    std::vector<BatchState> states;
    states.reserve(unitaries.size());
    BatchState s = initial_batch(config, f.domain_size());
    for (std::size_t j = 0; j < unitaries.size(); ++j) {
        if (j > 0) s.amplitudes = s.amplitudes.cwiseProduct(signs.cast<Complex>());
        s = apply_unitary(s, unitaries[j], tolerance);
        states.push_back(s);
    }
    return states;
}

/// U_t O_x ... O_x U_0 |0>|0> for every input.
inline BatchState forward(const CircuitConfig& config, const BooleanFunction& f, const std::vector<CMatrix>& unitaries,
                          double tolerance = kUnitaryTolerance) {
    return forward_trajectory(config, f, unitaries, tolerance).back();
}

/// Per-input error 1 - ||Pi_{f(x)} psi_x||^2, computed as the mass outside the
/// target block so that leftover rows count as error.
inline RVector error_vector(const BatchState& state, const BooleanFunction& f, const ProjectorPartition& proj) {
    if (state.dim() != proj.dim() || state.columns() != static_cast<Eigen::Index>(f.domain_size()))
        throw ShapeError("state shape does not match the projector partition and domain");
    return (proj.error_mask(f).array() * state.amplitudes.cwiseAbs2().array()).colwise().sum().transpose();
}

/// M[x, y] = <psi_x | psi_y>.
inline CMatrix gram(const BatchState& state) { return state.amplitudes.adjoint() * state.amplitudes; }

/// Gram matrix of the rows belonging to query index i.
inline CMatrix gram_by_query_index(const BatchState& state, const CircuitConfig& config, int i) {
    if (i < 0 || i > config.n)
        throw ParameterError("query index " + std::to_string(i) + " outside 0.." + std::to_string(config.n));
    if (state.dim() != config.d_a()) throw ShapeError("state dimension does not match the circuit");
    const auto block = state.amplitudes.middleRows(static_cast<Eigen::Index>(i) * config.d_w, config.d_w);
    return block.adjoint() * block;
}

/// Symmetric row/column permutation of a square matrix.
inline CMatrix permute_symmetric(const CMatrix& m, const std::vector<std::size_t>& order) {
    const auto size = static_cast<Eigen::Index>(order.size());
    CMatrix out(size, size);
    for (Eigen::Index r = 0; r < size; ++r)
        for (Eigen::Index c = 0; c < size; ++c)
            out(r, c) = m(static_cast<Eigen::Index>(order[static_cast<std::size_t>(r)]),
                          static_cast<Eigen::Index>(order[static_cast<std::size_t>(c)]));
    return out;
}

} // namespace varqqa
