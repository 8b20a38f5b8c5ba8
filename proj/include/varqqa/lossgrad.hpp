#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "varqqa/boolfn.hpp"
#include "varqqa/qcircuit.hpp"
#include "varqqa/uparam.hpp"

namespace varqqa {

/// Flat trainable vector: t+1 generator blocks of d_A^2 - 1 values each.
using ParameterVector = RVector;

/// How per-input errors are reduced to the scalar that is optimized.
enum class Reduction { Mean, Max };

struct LossReport {
    double mean_error = 0.0;
    double max_error = 0.0;
    RVector per_input;
    std::optional<RVector> gradient;
};

/// A (config, function) pair with the per-input tables the loss needs
/// precomputed. Evaluations are const and may run concurrently.
class CircuitProblem {
public:
    CircuitProblem(CircuitConfig config, BooleanFunction f)
        : config_(std::move(config)), f_(std::move(f)), proj_(config_) {
        config_.validate(f_.num_classes());
        if (config_.n != f_.n()) throw ShapeError("circuit n does not match the function's input length");
        mask_ = proj_.error_mask(f_);
        signs_ = oracle_sign_matrix(f_, config_.d_w).cast<Complex>();
    }

    const CircuitConfig& config() const { return config_; }
    const BooleanFunction& function() const { return f_; }
    const ProjectorPartition& projectors() const { return proj_; }

    int block_size() const { return generator_param_count(config_.d_a()); }
    Eigen::Index param_count() const { return static_cast<Eigen::Index>(config_.t + 1) * block_size(); }

    std::span<const double> block(const ParameterVector& params, int j) const {
        return {params.data() + static_cast<std::ptrdiff_t>(j) * block_size(), static_cast<std::size_t>(block_size())};
    }

    std::vector<CMatrix> unitaries(const ParameterVector& params) const {
        check_shape(params);
        std::vector<CMatrix> us;
        us.reserve(static_cast<std::size_t>(config_.t + 1));
        for (int j = 0; j <= config_.t; ++j)
            us.push_back(expm_hermitian(build_hermitian(config_.d_a(), block(params, j))).u);
        return us;
    }

    LossReport loss(const ParameterVector& params) const {
        check_shape(params);
        CMatrix state = initial_batch(config_, f_.domain_size()).amplitudes;
        for (int j = 0; j <= config_.t; ++j) {
            if (j > 0) state = state.cwiseProduct(signs_);
            state = expm_hermitian(build_hermitian(config_.d_a(), block(params, j))).u * state;
        }
        return summarize(state);
    }

    /// Loss plus the exact gradient of the reduced error by a reverse sweep
    /// through the stored pre-unitary states.
    LossReport loss_and_grad(const ParameterVector& params, Reduction reduction = Reduction::Mean) const {
        check_shape(params);
        const int steps = config_.t + 1;
        std::vector<ExpmCache> caches;
        std::vector<CMatrix> inputs; // state entering U_j
        caches.reserve(static_cast<std::size_t>(steps));
        inputs.reserve(static_cast<std::size_t>(steps));

        CMatrix state = initial_batch(config_, f_.domain_size()).amplitudes;
        for (int j = 0; j < steps; ++j) {
            if (j > 0) state = state.cwiseProduct(signs_);
            inputs.push_back(state);
            caches.push_back(expm_hermitian(build_hermitian(config_.d_a(), block(params, j))));
            state = caches.back().u * state;
        }
        LossReport report = summarize(state);

        const auto columns = static_cast<double>(f_.domain_size());
        CMatrix adjoint;
        if (reduction == Reduction::Mean) {
            adjoint = (2.0 / columns) * mask_.cast<Complex>().cwiseProduct(state);
        } else {
            Eigen::Index worst = 0;
            report.per_input.maxCoeff(&worst);
            adjoint = CMatrix::Zero(state.rows(), state.cols());
            adjoint.col(worst) = 2.0 * mask_.col(worst).cast<Complex>().cwiseProduct(state.col(worst));
        }

        RVector grad(param_count());
        for (int j = steps - 1; j >= 0; --j) {
            const auto& cache = caches[static_cast<std::size_t>(j)];
            const CMatrix cot_u = adjoint * inputs[static_cast<std::size_t>(j)].adjoint();
            generator_cotangent_to_params(
                expm_generator_cotangent(cache, cot_u),
                std::span<double>(grad.data() + static_cast<std::ptrdiff_t>(j) * block_size(),
                                  static_cast<std::size_t>(block_size())));
            if (j > 0) adjoint = (cache.u.adjoint() * adjoint).cwiseProduct(signs_);
        }
        report.gradient = std::move(grad);
        return report;
    }

private:
    void check_shape(const ParameterVector& params) const {
        if (params.size() != param_count())
            throw ShapeError("parameter vector has " + std::to_string(params.size()) + " entries, circuit needs " +
                             std::to_string(param_count()));
    }

    LossReport summarize(const CMatrix& final_state) const {
        LossReport r;
        r.per_input = (mask_.array() * final_state.cwiseAbs2().array()).colwise().sum().transpose();
        r.mean_error = r.per_input.mean();
        r.max_error = r.per_input.maxCoeff();
        return r;
    }

    CircuitConfig config_;
    BooleanFunction f_;
    ProjectorPartition proj_;
    RMatrix mask_;
    CMatrix signs_;
};

inline LossReport loss(const CircuitConfig& config, const BooleanFunction& f, const ParameterVector& params) {
    return CircuitProblem(config, f).loss(params);
}

inline LossReport loss_and_grad(const CircuitConfig& config, const BooleanFunction& f, const ParameterVector& params,
                                Reduction reduction = Reduction::Mean) {
    return CircuitProblem(config, f).loss_and_grad(params, reduction);
}

} // namespace varqqa
