#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "varqqa/error.hpp"
#include "varqqa/lossgrad.hpp"

namespace varqqa {

struct OptimizerSettings {
    int memory_pairs = 10;
    int max_iterations = 5000;
    double grad_tolerance = 1e-9;
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.9;
    int restarts = 5;
    std::uint64_t seed = 0;
    /// Early-stop threshold on the stop metric (max_error for circuits).
    double target_loss = 1e-5;
    /// Initial parameters are uniform on [-init_scale, init_scale].
    double init_scale = 1.0;
    Reduction reduction = Reduction::Mean;
    /// "Converged" also means: relative decrease below stall_tolerance over
    /// stall_window accepted iterations.
    int stall_window = 20;
    double stall_tolerance = 1e-12;
    int max_line_search_evals = 40;
    /// Restarts evaluated concurrently; 1 keeps everything on the caller's thread.
    int threads = 1;

    void validate() const {
        if (!(0.0 < wolfe_c1 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0))
            throw ParameterError("Wolfe constants must satisfy 0 < c1 < c2 < 1");
        if (memory_pairs < 1) throw ParameterError("memory_pairs must be >= 1");
        if (restarts < 1) throw ParameterError("restarts must be >= 1");
        if (max_iterations < 0) throw ParameterError("max_iterations must be >= 0");
        if (!(init_scale > 0.0)) throw ParameterError("init_scale must be positive");
        if (threads < 1) throw ParameterError("threads must be >= 1");
        if (stall_window < 1) throw ParameterError("stall_window must be >= 1");
        if (max_line_search_evals < 2) throw ParameterError("max_line_search_evals must be >= 2");
    }
};

enum class StopReason { TargetReached, GradientSmall, ObjectiveStalled, IterationCap, LineSearchFailure, Cancelled };

inline const char* to_string(StopReason r) {
    switch (r) {
    case StopReason::TargetReached: return "target-reached";
    case StopReason::GradientSmall: return "gradient-small";
    case StopReason::ObjectiveStalled: return "objective-stalled";
    case StopReason::IterationCap: return "iteration-cap";
    case StopReason::LineSearchFailure: return "line-search-failure";
    case StopReason::Cancelled: return "cancelled";
    }
    return "unknown";
}

/// Value and gradient of a smooth objective. `stop_metric` is compared with
/// the target; plain objectives set it equal to `value`.
struct Evaluation {
    double value = 0.0;
    RVector gradient;
    double stop_metric = 0.0;
};

struct IterationInfo {
    int iteration = 0;
    double value = 0.0;
    double stop_metric = 0.0;
    double grad_inf_norm = 0.0;
};

struct MinimizeResult {
    RVector x;
    Evaluation eval;
    int iterations = 0;
    int evaluations = 0;
    StopReason reason = StopReason::IterationCap;
    /// Objective after each accepted step, starting with the value at x0.
    std::vector<double> accepted_values;
};

/// Called after every accepted step; returning false cancels the run.
using IterationObserver = std::function<bool(const IterationInfo&)>;

namespace detail {

inline void check_finite(const Evaluation& e, const RVector& x) {
    if (!std::isfinite(e.value) || !e.gradient.allFinite())
        throw NumericalError("objective returned a non-finite value or gradient (value=" + std::to_string(e.value) +
                             ", |x|_inf=" + std::to_string(x.cwiseAbs().maxCoeff()) + ")");
}

// Minimizer of the cubic interpolating (a, fa, ga) and (b, fb, gb), or the
// midpoint if the cubic has no usable minimizer.
inline double cubic_minimizer(double a, double fa, double ga, double b, double fb, double gb) {
    const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - ga * gb;
    if (disc < 0.0) return 0.5 * (a + b);
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double denom = gb - ga + 2.0 * d2;
    if (denom == 0.0) return 0.5 * (a + b);
    const double step = b - (b - a) * (gb + d2 - d1) / denom;
    return std::isfinite(step) ? step : 0.5 * (a + b);
}

struct LinePoint {
    double alpha = 0.0;
    double value = 0.0;
    double slope = 0.0;
    RVector x;
    Evaluation eval;
};

} // namespace detail

/// Limited-memory BFGS (two-loop recursion) with a strong-Wolfe line search.
///
/// `objective` maps x to an Evaluation and must be deterministic.
template <class Objective>
MinimizeResult lbfgs_minimize(Objective&& objective, RVector x0, const OptimizerSettings& settings,
                              const IterationObserver& observer = {}) {
    settings.validate();
    MinimizeResult res;
    res.x = std::move(x0);
    res.eval = objective(res.x);
    res.evaluations = 1;
    detail::check_finite(res.eval, res.x);
    res.accepted_values.push_back(res.eval.value);

    if (res.eval.stop_metric < settings.target_loss) {
        res.reason = StopReason::TargetReached;
        return res;
    }
    if (res.eval.gradient.size() == 0 || res.eval.gradient.cwiseAbs().maxCoeff() < settings.grad_tolerance) {
        res.reason = StopReason::GradientSmall;
        return res;
    }

    std::deque<RVector> s_hist, y_hist;
    std::deque<double> rho_hist;
    const double c1 = settings.wolfe_c1;
    const double c2 = settings.wolfe_c2;

    auto eval_at = [&](const RVector& x, double alpha, const RVector& dir) {
        detail::LinePoint p;
        p.alpha = alpha;
        p.x = x + alpha * dir;
        p.eval = objective(p.x);
        ++res.evaluations;
        detail::check_finite(p.eval, p.x);
        p.value = p.eval.value;
        p.slope = p.eval.gradient.dot(dir);
        return p;
    };

    for (int iter = 0; iter < settings.max_iterations; ++iter) {
        const RVector& g = res.eval.gradient;

        // Two-loop recursion: dir = -H g.
        RVector q = g;
        std::vector<double> alphas(s_hist.size());
        for (std::size_t k = s_hist.size(); k-- > 0;) {
            alphas[k] = rho_hist[k] * s_hist[k].dot(q);
            q -= alphas[k] * y_hist[k];
        }
        if (!s_hist.empty()) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
        for (std::size_t k = 0; k < s_hist.size(); ++k) {
            const double beta = rho_hist[k] * y_hist[k].dot(q);
            q += (alphas[k] - beta) * s_hist[k];
        }
        RVector dir = -q;
        double slope0 = g.dot(dir);
        if (!(slope0 < 0.0)) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            dir = -g;
            slope0 = -g.squaredNorm();
        }

        const double f0 = res.eval.value;
        double alpha = s_hist.empty() ? std::min(1.0, 1.0 / dir.norm()) : 1.0;

        // Strong-Wolfe bracketing followed by zoom.
        detail::LinePoint prev{0.0, f0, slope0, res.x, res.eval};
        std::optional<detail::LinePoint> accepted;
        std::optional<detail::LinePoint> lo, hi;
        int evals = 0;
        while (evals < settings.max_line_search_evals) {
            detail::LinePoint cur = eval_at(res.x, alpha, dir);
            ++evals;
            if (cur.value > f0 + c1 * alpha * slope0 || (prev.alpha > 0.0 && cur.value >= prev.value)) {
                lo = prev;
                hi = cur;
                break;
            }
            if (std::abs(cur.slope) <= -c2 * slope0) {
                accepted = std::move(cur);
                break;
            }
            if (cur.slope >= 0.0) {
                lo = cur;
                hi = prev;
                break;
            }
            prev = std::move(cur);
            alpha *= 2.0;
        }
        if (!accepted && lo && hi) {
            while (evals < settings.max_line_search_evals) {
                const double a = lo->alpha, b = hi->alpha;
                double trial = detail::cubic_minimizer(a, lo->value, lo->slope, b, hi->value, hi->slope);
                const double left = std::min(a, b), right = std::max(a, b), width = right - left;
                if (!(trial > left + 0.1 * width && trial < right - 0.1 * width)) trial = 0.5 * (a + b);
                if (width <= std::numeric_limits<double>::epsilon() * std::max(1.0, right)) break;
                detail::LinePoint cur = eval_at(res.x, trial, dir);
                ++evals;
                if (cur.value > f0 + c1 * trial * slope0 || cur.value >= lo->value) {
                    hi = std::move(cur);
                } else {
                    if (std::abs(cur.slope) <= -c2 * slope0) {
                        accepted = std::move(cur);
                        break;
                    }
                    if (cur.slope * (hi->alpha - lo->alpha) >= 0.0) hi = lo;
                    lo = std::move(cur);
                }
            }
            // Out of budget: keep the best sufficient-decrease point found.
            if (!accepted && lo && lo->alpha > 0.0) accepted = lo;
        }
        if (!accepted && prev.alpha > 0.0) accepted = prev;
        if (!accepted) {
            res.reason = StopReason::LineSearchFailure;
            res.iterations = iter;
            return res;
        }

        RVector s = accepted->x - res.x;
        RVector y = accepted->eval.gradient - g;
        const double sy = s.dot(y);
        res.x = std::move(accepted->x);
        res.eval = std::move(accepted->eval);
        res.accepted_values.push_back(res.eval.value);
        res.iterations = iter + 1;
        if (sy > 1e-300 && sy > std::numeric_limits<double>::epsilon() * y.squaredNorm()) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > settings.memory_pairs) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }

        const double ginf = res.eval.gradient.cwiseAbs().maxCoeff();
        if (observer && !observer({res.iterations, res.eval.value, res.eval.stop_metric, ginf})) {
            res.reason = StopReason::Cancelled;
            return res;
        }
        if (res.eval.stop_metric < settings.target_loss) {
            res.reason = StopReason::TargetReached;
            return res;
        }
        if (ginf < settings.grad_tolerance) {
            res.reason = StopReason::GradientSmall;
            return res;
        }
        const auto n_acc = res.accepted_values.size();
        if (n_acc > static_cast<std::size_t>(settings.stall_window)) {
            const double old = res.accepted_values[n_acc - 1 - static_cast<std::size_t>(settings.stall_window)];
            const double now = res.accepted_values.back();
            if (old - now <= settings.stall_tolerance * std::abs(old)) {
                res.reason = StopReason::ObjectiveStalled;
                return res;
            }
        }
    }
    res.reason = StopReason::IterationCap;
    return res;
}

struct RestartSummary {
    int restart_index = 0;
    std::uint64_t seed = 0;
    int iterations = 0;
    double mean_error = 0.0;
    double max_error = 0.0;
    StopReason reason = StopReason::IterationCap;
};

struct OptimizeOutcome {
    ParameterVector best_params;
    LossReport best_report;
    int iterations_used = 0;
    int restart_index = 0;
    StopReason converged_reason = StopReason::IterationCap;
    bool certified = false;
    /// One entry per restart that ran to completion, in restart order.
    std::vector<RestartSummary> restarts;
};

/// Progress sink: (restart index, iteration info) after every accepted step.
using ProgressSink = std::function<void(int, const IterationInfo&)>;

/// Runs one seeded L-BFGS restart on a circuit problem.
inline MinimizeResult run_restart(const CircuitProblem& problem, const OptimizerSettings& settings, int restart,
                                  const IterationObserver& observer = {}) {
    std::mt19937_64 rng(settings.seed + static_cast<std::uint64_t>(restart));
    const auto init = random_parameters(static_cast<std::size_t>(problem.param_count()), settings.init_scale, rng);
    RVector x0 = Eigen::Map<const RVector>(init.data(), static_cast<Eigen::Index>(init.size()));
    auto objective = [&](const RVector& x) {
        LossReport r = problem.loss_and_grad(x, settings.reduction);
        const double value = settings.reduction == Reduction::Mean ? r.mean_error : r.max_error;
        return Evaluation{value, std::move(*r.gradient), r.max_error};
    };
    return lbfgs_minimize(objective, std::move(x0), settings, observer);
}

/// Multi-restart variational search for one fixed circuit shape.
///
/// Restart k starts from seed + k. Restarts stop once one certifies
/// (max_error < target_loss); the reported outcome is the lowest-index
/// certified restart, or the lowest mean error when none certifies. With
/// threads > 1 the same outcome is produced, restarts running concurrently.
inline OptimizeOutcome optimize_circuit(const CircuitProblem& problem, const OptimizerSettings& settings,
                                        const ProgressSink& progress = {}) {
    settings.validate();
    const int total = settings.restarts;
    std::vector<std::optional<MinimizeResult>> results(static_cast<std::size_t>(total));
    std::atomic<int> first_certified{total};
    std::atomic<int> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;

    auto worker = [&] {
        for (;;) {
            const int k = next.fetch_add(1);
            if (k >= total || k > first_certified.load()) return;
            try {
                auto observer = [&, k](const IterationInfo& info) {
                    if (progress) progress(k, info);
                    return k <= first_certified.load();
                };
                MinimizeResult r = run_restart(problem, settings, k, observer);
                if (r.reason == StopReason::Cancelled) continue;
                const bool certified = r.eval.stop_metric < settings.target_loss;
                results[static_cast<std::size_t>(k)] = std::move(r);
                if (certified) {
                    int cur = first_certified.load();
                    while (k < cur && !first_certified.compare_exchange_weak(cur, k)) {
                    }
                }
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                first_certified.store(-1);
                return;
            }
        }
    };

    const int threads = std::min(settings.threads, total);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);

    const int last = std::min(first_certified.load(), total - 1);
    OptimizeOutcome out;
    int best = -1;
    for (int k = 0; k <= last; ++k) {
        const auto& r = results[static_cast<std::size_t>(k)];
        if (!r) continue;
        out.restarts.push_back({k, settings.seed + static_cast<std::uint64_t>(k), r->iterations, 0.0,
                                r->eval.stop_metric, r->reason});
        const bool certified = r->eval.stop_metric < settings.target_loss;
        if (certified) {
            best = k;
            break;
        }
        if (best < 0 || r->eval.value < results[static_cast<std::size_t>(best)]->eval.value) best = k;
    }
    if (best < 0) throw NumericalError("no restart completed");

    const MinimizeResult& winner = *results[static_cast<std::size_t>(best)];
    out.best_params = winner.x;
    out.best_report = problem.loss(winner.x);
    for (auto& summary : out.restarts) {
        const auto& r = *results[static_cast<std::size_t>(summary.restart_index)];
        summary.mean_error = problem.loss(r.x).mean_error;
    }
    out.iterations_used = winner.iterations;
    out.restart_index = best;
    out.converged_reason = winner.reason;
    out.certified = out.best_report.max_error < settings.target_loss;
    return out;
}

} // namespace varqqa
