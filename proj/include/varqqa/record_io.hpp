#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "varqqa/boolfn.hpp"
#include "varqqa/error.hpp"
#include "varqqa/search.hpp"

namespace varqqa {

using Json = nlohmann::json;

inline constexpr const char* kBasisConvention = "i*d_w+w";
inline constexpr const char* kRecordFormat = "varqqa-solution";
inline constexpr const char* kSdpFormat = "varqqa-sdp-instance";

// ---------------------------------------------------------------------------
// Function specs

inline Json function_to_json(const BooleanFunction& f) {
    switch (f.family()) {
    case Family::Mod:
        return {{"family", "mod"}, {"n", f.n()}, {"m", f.family_args().first}};
    case Family::Exact:
        return {{"family", "exact"}, {"n", f.n()}, {"k", f.family_args().first}, {"l", f.family_args().second}};
    case Family::Table: {
        Json entries = Json::array();
        for (std::size_t x = 0; x < f.domain_size(); ++x)
            entries.push_back(Json::array({format_bits(f.domain()[x], f.n()),
                                           f.labels()[static_cast<std::size_t>(f.class_at(x))]}));
        return {{"family", "table"}, {"n", f.n()}, {"entries", std::move(entries)}};
    }
    }
    return {};
}

namespace detail {

template <class T>
T require(const Json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw FormatError(where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw FormatError(where + ": field '" + key + "' has the wrong type");
    }
}

} // namespace detail

/// Parses {"family":"mod"|"exact"|"table", ...}. Family preconditions surface
/// as ParameterError, structural problems as FormatError.
inline BooleanFunction function_from_json(const Json& j) {
    const auto family = detail::require<std::string>(j, "family", "function");
    const int n = detail::require<int>(j, "n", "function");
    if (family == "mod") return make_mod(n, detail::require<int>(j, "m", "function"));
    if (family == "exact")
        return make_exact(n, detail::require<int>(j, "k", "function"), detail::require<int>(j, "l", "function"));
    if (family == "table") {
        const auto& entries = j.contains("entries") ? j.at("entries") : Json();
        if (!entries.is_array()) throw FormatError("function: field 'entries' must be an array");
        std::vector<std::pair<Bits, BooleanFunction::Label>> table;
        for (const auto& e : entries) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_number_integer())
                throw FormatError("function: each entry must be [\"bits\", integer-label]");
            const auto bits = e[0].get<std::string>();
            if (bits.size() != static_cast<std::size_t>(n))
                throw FormatError("function: entry '" + bits + "' does not have n=" + std::to_string(n) + " bits");
            table.emplace_back(parse_bits(bits), e[1].get<BooleanFunction::Label>());
        }
        return BooleanFunction::from_table(n, std::move(table));
    }
    throw FormatError("function: unknown family '" + family + "'");
}

// ---------------------------------------------------------------------------
// Complex matrices: row-major nested arrays of [re, im]

inline Json matrix_to_json(const CMatrix& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(Json::array({m(r, c).real(), m(r, c).imag()}));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline CMatrix matrix_from_json(const Json& j, const std::string& where) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) throw FormatError(where + ": expected a nested matrix array");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    CMatrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw FormatError(where + ": ragged matrix rows");
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& z = row[static_cast<std::size_t>(c)];
            if (!z.is_array() || z.size() != 2 || !z[0].is_number() || !z[1].is_number())
                throw FormatError(where + ": matrix entries must be [re, im]");
            m(r, c) = Complex(z[0].get<double>(), z[1].get<double>());
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Solution records

inline Json record_to_json(const SolutionRecord& rec) {
    Json unitaries = Json::array();
    for (const auto& u : rec.unitaries) unitaries.push_back(matrix_to_json(u));
    Json grams = Json::array();
    for (const auto& g : rec.grams) grams.push_back(matrix_to_json(g));
    Json restarts = Json::array();
    for (const auto& r : rec.trace.restarts)
        restarts.push_back({{"restart", r.restart_index},
                            {"seed", r.seed},
                            {"iterations", r.iterations},
                            {"mean_error", r.mean_error},
                            {"max_error", r.max_error},
                            {"reason", to_string(r.reason)}});
    return {
        {"format", kRecordFormat},
        {"version", rec.version},
        {"function", function_to_json(rec.function)},
        {"config",
         {{"n", rec.config.n},
          {"t", rec.config.t},
          {"d_q", rec.config.d_q()},
          {"d_w", rec.config.d_w},
          {"d_A", rec.config.d_a()},
          {"partition", rec.config.partition}}},
        {"basis_convention", kBasisConvention},
        {"epsilon", rec.epsilon},
        {"seed", rec.seed},
        {"unitaries", std::move(unitaries)},
        {"per_input_error", std::vector<double>(rec.per_input.data(), rec.per_input.data() + rec.per_input.size())},
        {"mean_error", rec.mean_error},
        {"max_error", rec.max_error},
        {"gram", std::move(grams)},
        {"wall_time_seconds", rec.wall_time_seconds},
        {"optimizer",
         {{"iterations", rec.trace.iterations},
          {"restart_index", rec.trace.restart_index},
          {"converged_reason", to_string(rec.trace.reason)},
          {"restarts", std::move(restarts)}}},
    };
}

inline StopReason stop_reason_from_string(const std::string& s) {
    for (auto r : {StopReason::TargetReached, StopReason::GradientSmall, StopReason::ObjectiveStalled,
                   StopReason::IterationCap, StopReason::LineSearchFailure, StopReason::Cancelled})
        if (s == to_string(r)) return r;
    throw FormatError("unknown optimizer stop reason '" + s + "'");
}

inline SolutionRecord record_from_json(const Json& j) {
    if (!j.is_object()) throw FormatError("record: top level must be an object");
    if (detail::require<std::string>(j, "format", "record") != kRecordFormat)
        throw FormatError("record: not a solution record");
    if (detail::require<std::string>(j, "basis_convention", "record") != kBasisConvention)
        throw FormatError("record: unsupported basis convention");

    BooleanFunction f = [&] {
        try {
            return function_from_json(detail::require<Json>(j, "function", "record"));
        } catch (const ParameterError& e) {
            throw FormatError(std::string("record: invalid function: ") + e.what());
        }
    }();
    const Json cfg = detail::require<Json>(j, "config", "record");
    CircuitConfig config{detail::require<int>(cfg, "n", "record.config"), detail::require<int>(cfg, "t", "record.config"),
                         detail::require<int>(cfg, "d_w", "record.config"),
                         detail::require<std::vector<int>>(cfg, "partition", "record.config")};
    try {
        config.validate(f.num_classes());
    } catch (const Error& e) {
        throw FormatError(std::string("record: invalid config: ") + e.what());
    }
    if (config.n != f.n()) throw FormatError("record: config n does not match the function");

    SolutionRecord rec{.function = std::move(f), .config = std::move(config)};
    rec.version = detail::require<std::string>(j, "version", "record");
    rec.epsilon = detail::require<double>(j, "epsilon", "record");
    rec.seed = detail::require<std::uint64_t>(j, "seed", "record");
    const Json us = detail::require<Json>(j, "unitaries", "record");
    if (!us.is_array()) throw FormatError("record: 'unitaries' must be an array");
    for (std::size_t k = 0; k < us.size(); ++k)
        rec.unitaries.push_back(matrix_from_json(us[k], "record.unitaries[" + std::to_string(k) + "]"));
    const auto errs = detail::require<std::vector<double>>(j, "per_input_error", "record");
    rec.per_input = Eigen::Map<const RVector>(errs.data(), static_cast<Eigen::Index>(errs.size()));
    if (rec.per_input.size() != static_cast<Eigen::Index>(rec.function.domain_size()))
        throw FormatError("record: per_input_error length does not match the domain");
    rec.mean_error = detail::require<double>(j, "mean_error", "record");
    rec.max_error = detail::require<double>(j, "max_error", "record");
    const Json grams = detail::require<Json>(j, "gram", "record");
    if (!grams.is_array()) throw FormatError("record: 'gram' must be an array");
    for (std::size_t k = 0; k < grams.size(); ++k)
        rec.grams.push_back(matrix_from_json(grams[k], "record.gram[" + std::to_string(k) + "]"));
    rec.wall_time_seconds = j.value("wall_time_seconds", 0.0);
    if (j.contains("optimizer")) {
        const Json& opt = j.at("optimizer");
        rec.trace.iterations = opt.value("iterations", 0);
        rec.trace.restart_index = opt.value("restart_index", 0);
        rec.trace.reason = stop_reason_from_string(opt.value("converged_reason", std::string("iteration-cap")));
        for (const auto& r : opt.value("restarts", Json::array()))
            rec.trace.restarts.push_back({r.value("restart", 0), r.value("seed", std::uint64_t{0}),
                                          r.value("iterations", 0), r.value("mean_error", 0.0),
                                          r.value("max_error", 0.0),
                                          stop_reason_from_string(r.value("reason", std::string("iteration-cap")))});
    }
    return rec;
}

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("'" + path + "' is not valid JSON: " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write '" + path + "'");
    out << text;
    if (!out) throw FormatError("failed writing '" + path + "'");
}

inline void save_record(const SolutionRecord& rec, const std::string& path) {
    write_text_file(path, record_to_json(rec).dump(1) + "\n");
}

inline SolutionRecord load_record(const std::string& path) { return record_from_json(read_json_file(path)); }

// ---------------------------------------------------------------------------
// Tables

/// Absolute values of a square matrix as CSV, rows and columns in `order`.
inline std::string gram_csv(const CMatrix& m, const std::vector<std::size_t>& order) {
    std::ostringstream os;
    os << std::setprecision(17);
    const CMatrix p = permute_symmetric(m, order);
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
        for (Eigen::Index c = 0; c < p.cols(); ++c) {
            if (c) os << ',';
            os << std::abs(p(r, c));
        }
        os << '\n';
    }
    return os.str();
}

/// Gram display order: clustered by class for MOD functions, domain order otherwise.
inline std::vector<std::size_t> gram_display_order(const BooleanFunction& f) {
    if (f.family() == Family::Mod) return class_sorted_order(f);
    std::vector<std::size_t> order(f.domain_size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    return order;
}

inline std::string format_partition(const std::vector<int>& p) {
    std::string s = "[";
    for (std::size_t k = 0; k < p.size(); ++k) s += (k ? "," : "") + std::to_string(p[k]);
    return s + "]";
}

inline std::string search_summary_csv(const std::vector<SearchCell>& cells) {
    std::ostringstream os;
    os << "t,d_w,partition,mean_error,max_error,certified,seconds\n";
    os << std::setprecision(10);
    for (const auto& c : cells)
        os << c.t << ',' << c.d_w << ",\"" << format_partition(c.partition) << "\"," << c.mean_error << ','
           << c.max_error << ',' << (c.certified ? "true" : "false") << ',' << c.seconds << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// SDP instance export

/// E_0 is all ones; E_i[x, y] = (-1)^{x_i + y_i} for 1 <= i <= n.
inline std::vector<Eigen::MatrixXi> sdp_query_matrices(const BooleanFunction& f) {
    const auto size = static_cast<Eigen::Index>(f.domain_size());
    std::vector<Eigen::MatrixXi> es;
    for (int i = 0; i <= f.n(); ++i) {
        Eigen::MatrixXi e(size, size);
        for (Eigen::Index x = 0; x < size; ++x)
            for (Eigen::Index y = 0; y < size; ++y)
                e(x, y) = ((bit_at(f.domain()[static_cast<std::size_t>(x)], f.n(), i) +
                            bit_at(f.domain()[static_cast<std::size_t>(y)], f.n(), i)) % 2)
                              ? -1
                              : 1;
        es.push_back(std::move(e));
    }
    return es;
}

inline Json sdp_export_json(const BooleanFunction& f, int t) {
    if (t < 0) throw ParameterError("t must be non-negative");
    Json domain = Json::array(), table = Json::array(), classes = Json::array(), es = Json::array();
    for (std::size_t x = 0; x < f.domain_size(); ++x) {
        domain.push_back(format_bits(f.domain()[x], f.n()));
        table.push_back(f.labels()[static_cast<std::size_t>(f.class_at(x))]);
        classes.push_back(f.class_at(x));
    }
    for (const auto& e : sdp_query_matrices(f)) {
        Json rows = Json::array();
        for (Eigen::Index r = 0; r < e.rows(); ++r) {
            Json row = Json::array();
            for (Eigen::Index c = 0; c < e.cols(); ++c) row.push_back(e(r, c));
            rows.push_back(std::move(row));
        }
        es.push_back(std::move(rows));
    }
    return {{"format", kSdpFormat},
            {"version", kVersion},
            {"n", f.n()},
            {"t", t},
            {"function", function_to_json(f)},
            {"domain", std::move(domain)},
            {"outputs", f.labels()},
            {"table", std::move(table)},
            {"classes", std::move(classes)},
            {"E", std::move(es)}};
}

} // namespace varqqa
