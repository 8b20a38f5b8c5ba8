#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>

#include "varqqa/record_io.hpp"
#include "varqqa/search.hpp"

namespace varqqa::cli {

/// Stable process exit codes.
enum ExitCode : int { kCertified = 0, kInternalError = 1, kInputError = 2, kUncertified = 3 };

/// Fixed circuit shape for `solve` and `sdp-export`.
struct CircuitSpec {
    int t = 0;
    int d_w = 1;
    std::optional<std::vector<int>> partition;
};

struct RunConfig {
    BooleanFunction function;
    std::optional<CircuitSpec> circuit{};
    std::optional<SearchPlan> plan{};
    OptimizerSettings optimizer{};
    double epsilon_target = kExactThreshold;
    std::string output_dir = "varqqa_out";
    int progress_every = 100;
};

/// Command-line overrides shared by every subcommand.
struct Options {
    std::string config_path;
    std::string record_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<int> t;
    bool quiet = false;
};

namespace detail {

template <class T>
void read_optional(const Json& j, const char* key, T& target, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        target = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw FormatError(where + "." + key + " has the wrong type");
    }
}

inline PartitionMode parse_partition_mode(const std::string& s) {
    if (s == "given") return PartitionMode::Given;
    if (s == "balanced") return PartitionMode::Balanced;
    if (s == "sweep") return PartitionMode::Sweep;
    throw FormatError("plan.partition_mode must be one of given, balanced, sweep (got '" + s + "')");
}

inline OptimizerSettings parse_optimizer(const Json& j) {
    OptimizerSettings s;
    if (!j.is_object()) throw FormatError("optimizer must be an object");
    read_optional(j, "memory_pairs", s.memory_pairs, "optimizer");
    read_optional(j, "max_iterations", s.max_iterations, "optimizer");
    read_optional(j, "grad_tolerance", s.grad_tolerance, "optimizer");
    read_optional(j, "wolfe_c1", s.wolfe_c1, "optimizer");
    read_optional(j, "wolfe_c2", s.wolfe_c2, "optimizer");
    read_optional(j, "restarts", s.restarts, "optimizer");
    read_optional(j, "init_scale", s.init_scale, "optimizer");
    read_optional(j, "stall_window", s.stall_window, "optimizer");
    read_optional(j, "stall_tolerance", s.stall_tolerance, "optimizer");
    read_optional(j, "max_line_search_evals", s.max_line_search_evals, "optimizer");
    if (j.contains("reduction")) {
        std::string r;
        read_optional(j, "reduction", r, "optimizer");
        if (r == "mean")
            s.reduction = Reduction::Mean;
        else if (r == "max")
            s.reduction = Reduction::Max;
        else
            throw FormatError("optimizer.reduction must be 'mean' or 'max'");
    }
    return s;
}

inline SearchPlan parse_plan(const Json& j) {
    if (!j.is_object()) throw FormatError("plan must be an object");
    SearchPlan p;
    read_optional(j, "t_min", p.t_min, "plan");
    if (!j.contains("t_max")) throw FormatError("plan.t_max is required");
    read_optional(j, "t_max", p.t_max, "plan");
    read_optional(j, "dw_list", p.dw_list, "plan");
    if (j.contains("dw_max") && p.dw_list.empty()) {
        int dw_max = 0;
        read_optional(j, "dw_max", dw_max, "plan");
        if (dw_max < 1) throw ParameterError("plan.dw_max must be >= 1");
        for (int dw = 1; dw <= dw_max; ++dw) p.dw_list.push_back(dw);
    }
    std::string mode = "balanced";
    read_optional(j, "partition_mode", mode, "plan");
    p.partition_mode = parse_partition_mode(mode);
    read_optional(j, "partitions", p.partitions, "plan");
    read_optional(j, "epsilon_target", p.epsilon_target, "plan");
    read_optional(j, "sweep_limit", p.sweep_limit, "plan");
    read_optional(j, "allow_large_workspace", p.allow_large_workspace, "plan");
    return p;
}

} // namespace detail

/// Parses and validates a run configuration. Every nested invariant is
/// checked here, before any computation starts.
inline RunConfig parse_run_config(const Json& j) {
    if (!j.is_object()) throw FormatError("config: top level must be an object");
    if (!j.contains("function")) throw FormatError("config: missing field 'function'");
    BooleanFunction f = [&] {
        try {
            return function_from_json(j.at("function"));
        } catch (const ParameterError& e) {
            throw ParameterError(std::string("function: ") + e.what());
        }
    }();
    RunConfig rc{.function = std::move(f)};
    if (j.contains("optimizer")) rc.optimizer = detail::parse_optimizer(j.at("optimizer"));
    detail::read_optional(j, "epsilon_target", rc.epsilon_target, "config");
    detail::read_optional(j, "output_dir", rc.output_dir, "config");
    detail::read_optional(j, "seed", rc.optimizer.seed, "config");
    detail::read_optional(j, "threads", rc.optimizer.threads, "config");
    detail::read_optional(j, "progress_every", rc.progress_every, "config");
    if (!(rc.epsilon_target > 0.0)) throw ParameterError("epsilon_target must be positive");

    if (j.contains("circuit")) {
        const Json& c = j.at("circuit");
        if (!c.is_object()) throw FormatError("circuit must be an object");
        CircuitSpec spec;
        if (!c.contains("t")) throw FormatError("circuit.t is required");
        detail::read_optional(c, "t", spec.t, "circuit");
        detail::read_optional(c, "d_w", spec.d_w, "circuit");
        if (c.contains("partition")) {
            std::vector<int> p;
            detail::read_optional(c, "partition", p, "circuit");
            spec.partition = std::move(p);
        }
        if (spec.t < 0) throw ParameterError("circuit.t must be non-negative");
        if (spec.d_w < 1) throw ParameterError("circuit.d_w must be >= 1");
        rc.circuit = spec;
    }
    if (j.contains("plan")) {
        rc.plan = detail::parse_plan(j.at("plan"));
        if (!j.at("plan").contains("epsilon_target")) rc.plan->epsilon_target = rc.epsilon_target;
        rc.plan->validate();
    }
    rc.optimizer.target_loss = rc.epsilon_target;
    rc.optimizer.validate();
    return rc;
}

inline CircuitConfig circuit_config(const RunConfig& rc) {
    const CircuitSpec& c = *rc.circuit;
    CircuitConfig cfg{rc.function.n(), c.t, c.d_w, {}};
    cfg.partition = c.partition ? *c.partition
                                : balanced_partition(cfg.d_a(), static_cast<int>(rc.function.num_classes()));
    try {
        cfg.validate(rc.function.num_classes());
    } catch (const Error& e) {
        throw ParameterError(std::string("circuit: ") + e.what());
    }
    return cfg;
}

namespace detail {

inline RunConfig load_config(const Options& opt) {
    if (opt.config_path.empty()) throw FormatError("--config is required");
    RunConfig rc = parse_run_config(read_json_file(opt.config_path));
    if (opt.out_dir) rc.output_dir = *opt.out_dir;
    if (opt.seed) rc.optimizer.seed = *opt.seed;
    if (opt.threads) {
        if (*opt.threads < 1) throw ParameterError("--threads must be >= 1");
        rc.optimizer.threads = *opt.threads;
    }
    return rc;
}

inline std::filesystem::path prepare_output(const std::string& dir) {
    std::filesystem::path p(dir);
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec) throw FormatError("cannot create output directory '" + dir + "': " + ec.message());
    return p;
}

inline ProgressSink progress_printer(const Options& opt, int every, std::ostream& err) {
    if (opt.quiet || every <= 0) return {};
    auto mutex = std::make_shared<std::mutex>();
    return [mutex, every, &err](int restart, const IterationInfo& info) {
        if (info.iteration != 1 && info.iteration % every != 0) return;
        char line[160];
        std::snprintf(line, sizeof line, "PROG restart=%d iter=%d mean_error=%.6e max_error=%.6e grad_inf=%.3e\n",
                      restart, info.iteration, info.value, info.stop_metric, info.grad_inf_norm);
        std::lock_guard lock(*mutex);
        err << line << std::flush;
    };
}

inline std::string record_summary(const SolutionRecord& rec, bool certified) {
    std::ostringstream os;
    os << "function: " << function_to_json(rec.function).dump() << '\n'
       << "t=" << rec.config.t << " d_w=" << rec.config.d_w << " d_A=" << rec.config.d_a()
       << " partition=" << format_partition(rec.config.partition) << '\n'
       << std::setprecision(6) << std::scientific << "mean_error=" << rec.mean_error
       << " max_error=" << rec.max_error << " epsilon=" << rec.epsilon << '\n'
       << std::defaultfloat << "certified=" << (certified ? "true" : "false") << " restart=" << rec.trace.restart_index
       << " iterations=" << rec.trace.iterations << " reason=" << to_string(rec.trace.reason)
       << " seconds=" << rec.wall_time_seconds << " seed=" << rec.seed << '\n';
    return os.str();
}

template <class Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const FormatError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const ParameterError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const ShapeError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternalError;
    }
}

} // namespace detail

/// Optimizes one fixed circuit shape and writes record.json + summary.txt.
inline int cmd_solve(const Options& opt, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return detail::guarded(err, [&] {
        RunConfig rc = detail::load_config(opt);
        if (!rc.circuit) throw FormatError("solve requires a 'circuit' block with t, d_w and partition");
        const CircuitConfig cfg = circuit_config(rc);
        const auto dir = detail::prepare_output(rc.output_dir);

        const auto start = std::chrono::steady_clock::now();
        CircuitProblem problem(cfg, rc.function);
        const OptimizeOutcome outcome =
            optimize_circuit(problem, rc.optimizer, detail::progress_printer(opt, rc.progress_every, err));
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        const SolutionRecord rec = make_record(problem, outcome, rc.epsilon_target, rc.optimizer.seed, secs);
        const bool certified = certify(rec, rc.epsilon_target).certified;
        save_record(rec, (dir / "record.json").string());
        const std::string summary = detail::record_summary(rec, certified);
        write_text_file((dir / "summary.txt").string(), summary);
        out << summary;
        return certified ? kCertified : kUncertified;
    });
}

/// Sweeps (t, d_w, partition) and writes search_summary.csv, record.json and summary.txt.
inline int cmd_search(const Options& opt, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return detail::guarded(err, [&] {
        RunConfig rc = detail::load_config(opt);
        if (!rc.plan) throw FormatError("search requires a 'plan' block");
        const auto dir = detail::prepare_output(rc.output_dir);

        std::vector<SearchCell> cells;
        auto on_cell = [&](const SearchCell& c) {
            if (!opt.quiet)
                err << "CELL t=" << c.t << " d_w=" << c.d_w << " partition=" << format_partition(c.partition)
                    << " mean_error=" << c.mean_error << " max_error=" << c.max_error
                    << " certified=" << (c.certified ? "true" : "false") << '\n';
        };
        const SearchResult res = search_qe(rc.function, *rc.plan, rc.optimizer,
                                           detail::progress_printer(opt, rc.progress_every, err), on_cell);
        write_text_file((dir / "search_summary.csv").string(), search_summary_csv(res.cells));
        std::string summary;
        if (res.record) {
            save_record(*res.record, (dir / "record.json").string());
            summary = detail::record_summary(*res.record, res.q_estimate.has_value());
        }
        summary += res.q_estimate ? "q_estimate=" + std::to_string(*res.q_estimate) + "\n"
                                  : std::string("q_estimate=not-found (heuristic: no certified circuit within the "
                                                "plan; this is not a lower bound)\n");
        write_text_file((dir / "summary.txt").string(), summary);
        out << summary;
        return res.q_estimate ? kCertified : kUncertified;
    });
}

/// Writes gram_<j>.csv (absolute values) for j = 1..t and gram.json (complex).
inline int cmd_gram(const Options& opt, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return detail::guarded(err, [&] {
        if (opt.record_path.empty()) throw FormatError("a record file is required");
        const SolutionRecord rec = load_record(opt.record_path);
        const auto dir = detail::prepare_output(opt.out_dir.value_or("."));
        const auto order = gram_display_order(rec.function);
        Json all = Json::array();
        for (std::size_t j = 0; j < rec.grams.size(); ++j) {
            const auto path = dir / ("gram_" + std::to_string(j + 1) + ".csv");
            write_text_file(path.string(), gram_csv(rec.grams[j], order));
            all.push_back({{"step", j + 1}, {"matrix", matrix_to_json(rec.grams[j])}});
            out << "wrote " << path.string() << '\n';
        }
        // Matrices stay in domain order; "display_order" is the CSV permutation.
        Json doc = {{"display_order", order}, {"gram", std::move(all)}};
        write_text_file((dir / "gram.json").string(), doc.dump(1) + "\n");
        return kCertified;
    });
}

/// Re-simulates a record at its stored epsilon.
inline int cmd_verify(const Options& opt, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return detail::guarded(err, [&] {
        if (opt.record_path.empty()) throw FormatError("a record file is required");
        const SolutionRecord rec = load_record(opt.record_path);
        const CertifyReport rep = certify(rec, rec.epsilon);
        out << std::setprecision(6) << std::scientific << "max_error=" << rep.max_error
            << " mean_error=" << rep.mean_error << " unitarity_defect=" << rep.max_unitarity_defect
            << " epsilon=" << rec.epsilon << '\n'
            << (rep.certified ? "VERIFIED" : "NOT VERIFIED: " + rep.message) << '\n';
        return rep.certified ? kCertified : kUncertified;
    });
}

/// Writes sdp_instance.json: the function table, t, and the query matrices E_i.
inline int cmd_sdp_export(const Options& opt, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return detail::guarded(err, [&] {
        RunConfig rc = detail::load_config(opt);
        int t = -1;
        if (opt.t)
            t = *opt.t;
        else if (rc.circuit)
            t = rc.circuit->t;
        else
            throw FormatError("sdp-export needs --t or a 'circuit' block with t");
        const auto dir = detail::prepare_output(rc.output_dir);
        const auto path = dir / "sdp_instance.json";
        write_text_file(path.string(), sdp_export_json(rc.function, t).dump() + "\n");
        out << "wrote " << path.string() << '\n';
        return kCertified;
    });
}

} // namespace varqqa::cli
