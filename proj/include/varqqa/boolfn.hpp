#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "varqqa/error.hpp"

namespace varqqa {

/// Largest supported input length. Total functions at this size already have
/// 2^24 columns, far beyond desk-scale simulation.
inline constexpr int kMaxInputBits = 24;

/// Bitstrings are stored as integers whose binary expansion, most significant
/// bit first, reads x_1 x_2 ... x_n. Ascending integer order is therefore the
/// same as lexicographic order of the written string.
using Bits = std::uint64_t;

/// Bit x_i of `x` for 1 <= i <= n. Index 0 is the constant-zero query slot.
inline int bit_at(Bits x, int n, int i) {
    if (i == 0) return 0;
    return static_cast<int>((x >> (n - i)) & 1U);
}

inline int hamming_weight(Bits x) { return std::popcount(x); }

inline Bits parse_bits(std::string_view s) {
    if (s.empty() || s.size() > static_cast<std::size_t>(kMaxInputBits))
        throw FormatError("bitstring length must be in 1.." + std::to_string(kMaxInputBits) +
                          ", got '" + std::string(s) + "'");
    Bits x = 0;
    for (char c : s) {
        if (c != '0' && c != '1') throw FormatError("bitstring contains non-binary character: '" + std::string(s) + "'");
        x = (x << 1) | static_cast<Bits>(c - '0');
    }
    return x;
}

inline std::string format_bits(Bits x, int n) {
    std::string s(static_cast<std::size_t>(n), '0');
    for (int i = 1; i <= n; ++i)
        if (bit_at(x, n, i)) s[static_cast<std::size_t>(i - 1)] = '1';
    return s;
}

enum class Family { Mod, Exact, Table };

/// A Boolean function f: S -> T with S a subset of {0,1}^n.
///
/// The domain is kept in ascending binary order and output labels are
/// canonicalized: class c is the c-th smallest original label. Every
/// downstream matrix indexes columns by domain position and projector blocks
/// by class, so both orders are fixed here once.
///
/// Immutable after construction.
class BooleanFunction {
public:
    using Label = std::int64_t;

    /// Builds a function from (input, label) pairs. Duplicate inputs are
    /// rejected, as are inputs wider than `n`.
    static BooleanFunction from_table(int n, std::vector<std::pair<Bits, Label>> entries) {
        check_width(n);
        if (entries.size() < 2) throw ParameterError("a Boolean function needs at least two domain points");
        std::sort(entries.begin(), entries.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        const Bits limit = Bits{1} << n;
        for (std::size_t k = 0; k < entries.size(); ++k) {
            if (entries[k].first >= limit)
                throw ParameterError("input " + std::to_string(entries[k].first) + " does not fit in n=" +
                                     std::to_string(n) + " bits");
            if (k > 0 && entries[k].first == entries[k - 1].first)
                throw ParameterError("duplicate table entry for input " + format_bits(entries[k].first, n));
        }

        BooleanFunction f;
        f.n_ = n;
        f.family_ = Family::Table;
        for (const auto& e : entries) f.labels_.push_back(e.second);
        std::sort(f.labels_.begin(), f.labels_.end());
        f.labels_.erase(std::unique(f.labels_.begin(), f.labels_.end()), f.labels_.end());

        f.domain_.reserve(entries.size());
        f.classes_.reserve(entries.size());
        for (const auto& [x, label] : entries) {
            f.domain_.push_back(x);
            f.classes_.push_back(f.class_of_label(label));
        }
        return f;
    }

    int n() const { return n_; }
    Family family() const { return family_; }
    /// Family arguments: (m, 0) for MOD, (k, l) for EXACT, (0, 0) otherwise.
    std::pair<int, int> family_args() const { return family_args_; }

    std::size_t domain_size() const { return domain_.size(); }
    const std::vector<Bits>& domain() const { return domain_; }
    bool is_total() const { return domain_.size() == (std::size_t{1} << n_); }

    /// Original labels in ascending order; class c corresponds to labels()[c].
    const std::vector<Label>& labels() const { return labels_; }
    std::size_t num_classes() const { return labels_.size(); }

    /// Canonical class of the input at domain position `column`.
    int class_at(std::size_t column) const { return classes_[column]; }
    const std::vector<int>& classes() const { return classes_; }

    /// Domain position of `x`, or throws DomainError outside the promise.
    std::size_t column_of(Bits x) const {
        auto it = std::lower_bound(domain_.begin(), domain_.end(), x);
        if (it == domain_.end() || *it != x)
            throw DomainError("input " + format_bits(x, n_) + " is outside the function's domain");
        return static_cast<std::size_t>(it - domain_.begin());
    }

    bool contains(Bits x) const { return std::binary_search(domain_.begin(), domain_.end(), x); }

    Label evaluate(Bits x) const { return labels_[static_cast<std::size_t>(classes_[column_of(x)])]; }

    Label evaluate(std::string_view x) const {
        if (x.size() != static_cast<std::size_t>(n_))
            throw DomainError("input '" + std::string(x) + "' has length " + std::to_string(x.size()) +
                              ", expected " + std::to_string(n_));
        return evaluate(parse_bits(x));
    }

    /// Number of domain inputs per canonical class.
    std::vector<std::size_t> class_sizes() const {
        std::vector<std::size_t> sizes(labels_.size(), 0);
        for (int c : classes_) ++sizes[static_cast<std::size_t>(c)];
        return sizes;
    }

private:
    friend BooleanFunction make_mod(int n, int m);
    friend BooleanFunction make_exact(int n, int k, int l);

    BooleanFunction() = default;

    static void check_width(int n) {
        if (n < 1 || n > kMaxInputBits)
            throw ParameterError("input length n must be in 1.." + std::to_string(kMaxInputBits) + ", got " +
                                 std::to_string(n));
    }

    int class_of_label(Label label) const {
        auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
        return static_cast<int>(it - labels_.begin());
    }

    template <class Rule>
    static BooleanFunction make_symmetric(int n, Family family, std::pair<int, int> args, Rule rule) {
        check_width(n);
        std::vector<std::pair<Bits, Label>> entries;
        const Bits size = Bits{1} << n;
        entries.reserve(size);
        for (Bits x = 0; x < size; ++x) entries.emplace_back(x, rule(hamming_weight(x)));
        BooleanFunction f = from_table(n, std::move(entries));
        f.family_ = family;
        f.family_args_ = args;
        return f;
    }

    int n_ = 0;
    Family family_ = Family::Table;
    std::pair<int, int> family_args_{0, 0};
    std::vector<Bits> domain_;
    std::vector<int> classes_;
    std::vector<Label> labels_;
};

/// MOD_m^n: the Hamming weight of x modulo m.
inline BooleanFunction make_mod(int n, int m) {
    if (m <= 1 || m > n)
        throw ParameterError("MOD requires 1 < m <= n, got n=" + std::to_string(n) + ", m=" + std::to_string(m));
    return BooleanFunction::make_symmetric(n, Family::Mod, {m, 0}, [m](int w) { return w % m; });
}

/// EXACT_{k,l}^n: 1 iff the Hamming weight of x is k or l.
inline BooleanFunction make_exact(int n, int k, int l) {
    if (!(0 <= k && k < l && l <= n))
        throw ParameterError("EXACT requires 0 <= k < l <= n, got n=" + std::to_string(n) + ", k=" +
                             std::to_string(k) + ", l=" + std::to_string(l));
    return BooleanFunction::make_symmetric(n, Family::Exact, {k, l},
                                           [k, l](int w) { return (w == k || w == l) ? 1 : 0; });
}

/// Column permutation that groups inputs by output class, keeping ascending
/// binary order inside each class. For MOD functions this is the
/// weight-modulo clustering used to display Gram matrices.
inline std::vector<std::size_t> class_sorted_order(const BooleanFunction& f) {
    std::vector<std::size_t> order(f.domain_size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&f](std::size_t a, std::size_t b) { return f.class_at(a) < f.class_at(b); });
    return order;
}

} // namespace varqqa
