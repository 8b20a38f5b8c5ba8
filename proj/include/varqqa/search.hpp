#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "varqqa/boolfn.hpp"
#include "varqqa/error.hpp"
#include "varqqa/lossgrad.hpp"
#include "varqqa/optimizer.hpp"
#include "varqqa/qcircuit.hpp"
#include "varqqa/version.hpp"

namespace varqqa {

/// Tolerance on ||U^H U - I||_F for stored unitaries.
inline constexpr double kRecordUnitaryTolerance = 1e-8;

/// Default exactness threshold on the worst-case per-input error.
inline constexpr double kExactThreshold = 1e-5;

struct OptimizerTrace {
    int iterations = 0;
    int restart_index = 0;
    StopReason reason = StopReason::IterationCap;
    std::vector<RestartSummary> restarts;
};

/// A circuit together with everything needed to replay and audit it.
struct SolutionRecord {
    BooleanFunction function;
    CircuitConfig config;
    double epsilon = kExactThreshold;
    std::vector<CMatrix> unitaries{};
    RVector per_input{};
    double mean_error = 0.0;
    double max_error = 0.0;
    /// Gram matrices of the states after U_1 .. U_t.
    std::vector<CMatrix> grams{};
    double wall_time_seconds = 0.0;
    OptimizerTrace trace{};
    std::string version = kVersion;
    std::uint64_t seed = 0;
};

inline SolutionRecord make_record(const CircuitProblem& problem, const OptimizeOutcome& outcome, double epsilon,
                                  std::uint64_t seed, double seconds) {
    SolutionRecord rec{.function = problem.function(), .config = problem.config()};
    rec.epsilon = epsilon;
    rec.unitaries = problem.unitaries(outcome.best_params);
    const auto states = forward_trajectory(rec.config, rec.function, rec.unitaries);
    rec.per_input = error_vector(states.back(), rec.function, problem.projectors());
    rec.mean_error = rec.per_input.mean();
    rec.max_error = rec.per_input.maxCoeff();
    for (std::size_t j = 1; j < states.size(); ++j) rec.grams.push_back(gram(states[j]));
    rec.wall_time_seconds = seconds;
    rec.trace = {outcome.iterations_used, outcome.restart_index, outcome.converged_reason, outcome.restarts};
    rec.seed = seed;
    return rec;
}

struct CertifyReport {
    bool certified = false;
    double mean_error = 1.0;
    double max_error = 1.0;
    double max_unitarity_defect = 0.0;
    std::string message;
};

/// Re-simulates a record from its stored unitaries. Certified iff every
/// unitary passes the unitarity tolerance and the recomputed worst-case error
/// is below `epsilon`.
inline CertifyReport certify(const SolutionRecord& record, double epsilon) {
    const CircuitConfig& cfg = record.config;
    try {
        cfg.validate(record.function.num_classes());
    } catch (const Error& e) {
        throw FormatError(std::string("record configuration is invalid: ") + e.what());
    }
    if (record.unitaries.size() != static_cast<std::size_t>(cfg.t + 1))
        throw FormatError("record holds " + std::to_string(record.unitaries.size()) + " unitaries, expected " +
                          std::to_string(cfg.t + 1));
    CertifyReport rep;
    for (const auto& u : record.unitaries) {
        if (u.rows() != cfg.d_a() || u.cols() != cfg.d_a())
            throw FormatError("stored unitary has the wrong dimension");
        rep.max_unitarity_defect = std::max(rep.max_unitarity_defect, unitarity_defect(u));
    }
    if (!(rep.max_unitarity_defect < kRecordUnitaryTolerance)) {
        rep.message = "stored matrix is not unitary (||U^H U - I||_F = " + std::to_string(rep.max_unitarity_defect) + ")";
        return rep;
    }
    const BatchState out = forward(cfg, record.function, record.unitaries, kRecordUnitaryTolerance);
    const RVector err = error_vector(out, record.function, ProjectorPartition(cfg));
    rep.mean_error = err.mean();
    rep.max_error = err.maxCoeff();
    rep.certified = rep.max_error < epsilon;
    rep.message = rep.certified ? "certified" : "max_error " + std::to_string(rep.max_error) + " >= epsilon " +
                                                    std::to_string(epsilon);
    return rep;
}

enum class PartitionMode { Given, Balanced, Sweep };

inline constexpr int kDefaultSweepLimit = 200;

/// Near-equal split, remainder going to the lowest class indices.
inline std::vector<int> balanced_partition(int d_a, int classes) {
    std::vector<int> p(static_cast<std::size_t>(classes), d_a / classes);
    for (int c = 0; c < d_a % classes; ++c) ++p[static_cast<std::size_t>(c)];
    return p;
}

namespace detail {

// Compositions of `remaining` into `slots` parts, each >= floor, visited in
// lexicographically descending order until `emit` returns false.
inline bool descending_compositions(int remaining, int slots, int floor, std::vector<int>& prefix,
                                    const std::function<bool(const std::vector<int>&)>& emit) {
    if (slots == 1) {
        prefix.push_back(remaining);
        const bool more = emit(prefix);
        prefix.pop_back();
        return more;
    }
    for (int part = remaining - floor * (slots - 1); part >= floor; --part) {
        prefix.push_back(part);
        const bool more = descending_compositions(remaining - part, slots - 1, floor, prefix, emit);
        prefix.pop_back();
        if (!more) return false;
    }
    return true;
}

} // namespace detail

/// Candidate output partitions for an accessible space of dimension d_a.
///
/// Sweep order: the balanced split, then every composition of d_a into
/// `classes` positive parts by decreasing smallest part, ties broken
/// lexicographically descending, capped at `limit` candidates.
inline std::vector<std::vector<int>> partition_candidates(int d_a, int classes, PartitionMode mode,
                                                          const std::vector<std::vector<int>>& given = {},
                                                          int limit = kDefaultSweepLimit) {
    if (classes < 1) throw ParameterError("at least one output class is required");
    if (d_a < classes)
        throw ParameterError("accessible dimension " + std::to_string(d_a) + " is smaller than the " +
                             std::to_string(classes) + " output classes");
    switch (mode) {
    case PartitionMode::Given:
        return given;
    case PartitionMode::Balanced:
        return {balanced_partition(d_a, classes)};
    case PartitionMode::Sweep: {
        std::vector<std::vector<int>> out{balanced_partition(d_a, classes)};
        if (limit < 1) return out;
        std::vector<int> prefix;
        for (int min_part = d_a / classes; min_part >= 1 && static_cast<int>(out.size()) < limit; --min_part) {
            detail::descending_compositions(d_a, classes, min_part, prefix, [&](const std::vector<int>& p) {
                if (*std::min_element(p.begin(), p.end()) != min_part || p == out.front()) return true;
                out.push_back(p);
                return static_cast<int>(out.size()) < limit;
            });
        }
        return out;
    }
    }
    return {};
}

struct SearchPlan {
    int t_min = 1;
    int t_max = 1;
    /// Workspace dimensions in the order tried. Empty means 1..2^n.
    std::vector<int> dw_list;
    PartitionMode partition_mode = PartitionMode::Balanced;
    std::vector<std::vector<int>> partitions;
    double epsilon_target = kExactThreshold;
    int sweep_limit = kDefaultSweepLimit;
    /// Required to use the default 1..2^n workspace range when n > 8.
    bool allow_large_workspace = false;

    void validate() const {
        if (t_min < 0) throw ParameterError("plan.t_min must be >= 0");
        if (t_min > t_max) throw ParameterError("plan has an empty query range (t_min > t_max)");
        for (int dw : dw_list)
            if (dw < 1) throw ParameterError("plan.dw_list entries must be >= 1");
        if (partition_mode == PartitionMode::Given && partitions.empty())
            throw ParameterError("partition_mode 'given' requires plan.partitions");
        if (!(epsilon_target > 0.0)) throw ParameterError("plan.epsilon_target must be positive");
    }

    std::vector<int> workspace_dims(int n) const {
        if (!dw_list.empty()) return dw_list;
        if (n > 8 && !allow_large_workspace)
            throw ParameterError("default workspace range 1..2^n is refused for n > 8; set plan.dw_list or "
                                 "plan.allow_large_workspace");
        std::vector<int> dims(static_cast<std::size_t>(1) << n);
        for (std::size_t k = 0; k < dims.size(); ++k) dims[k] = static_cast<int>(k) + 1;
        return dims;
    }
};

/// One evaluated (t, d_w, partition) cell of the sweep.
struct SearchCell {
    int t = 0;
    int d_w = 0;
    std::vector<int> partition;
    double mean_error = 1.0;
    double max_error = 1.0;
    bool certified = false;
    double seconds = 0.0;
};

struct SearchResult {
    /// Smallest certified t, absent when the plan was exhausted. Absence is a
    /// heuristic failure, never a lower bound.
    std::optional<int> q_estimate;
    /// Certified record, or the lowest-mean-error record when none certified.
    std::optional<SolutionRecord> record;
    std::vector<SearchCell> cells;
};

/// Called after each cell finishes.
using CellSink = std::function<void(const SearchCell&)>;

/// Sweeps t (outer), d_w, then partition in plan order and stops at the first
/// cell whose worst-case error falls below plan.epsilon_target.
inline SearchResult search_qe(const BooleanFunction& f, const SearchPlan& plan, OptimizerSettings settings,
                              const ProgressSink& progress = {}, const CellSink& on_cell = {}) {
    plan.validate();
    settings.target_loss = plan.epsilon_target;
    settings.validate();
    const auto dims = plan.workspace_dims(f.n());
    const int classes = static_cast<int>(f.num_classes());

    SearchResult result;
    for (int t = plan.t_min; t <= plan.t_max; ++t) {
        for (int dw : dims) {
            const int d_a = (f.n() + 1) * dw;
            if (d_a < classes) continue;
            for (const auto& partition :
                 partition_candidates(d_a, classes, plan.partition_mode, plan.partitions, plan.sweep_limit)) {
                CircuitConfig cfg{f.n(), t, dw, partition};
                try {
                    cfg.validate(f.num_classes());
                } catch (const ParameterError&) {
                    continue; // a given partition that does not fit this d_A
                }
                const auto start = std::chrono::steady_clock::now();
                CircuitProblem problem(cfg, f);
                OptimizeOutcome outcome = optimize_circuit(problem, settings, progress);
                const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

                SearchCell cell{t, dw, partition, outcome.best_report.mean_error, outcome.best_report.max_error,
                                outcome.certified, secs};
                result.cells.push_back(cell);
                if (on_cell) on_cell(cell);

                if (outcome.certified || !result.record || outcome.best_report.mean_error < result.record->mean_error)
                    result.record = make_record(problem, outcome, plan.epsilon_target, settings.seed, secs);
                if (outcome.certified) {
                    result.q_estimate = t;
                    return result;
                }
            }
        }
    }
    return result;
}

} // namespace varqqa
