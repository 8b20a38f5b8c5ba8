#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "varqqa/boolfn.hpp"
#include "varqqa/qcircuit.hpp"
#include "oracles.hpp"

namespace testing_support {

using varqqa::CMatrix;

/// Haar-ish random unitary from the QR factorization of a Gaussian matrix.
inline CMatrix random_unitary(int d, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    CMatrix z(d, d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) z(r, c) = {g(rng), g(rng)};
    Eigen::HouseholderQR<CMatrix> qr(z);
    CMatrix q = qr.householderQ();
    return q;
}

/// Random total or partial function with 2..3 labels.
inline varqqa::BooleanFunction random_function(int n, std::mt19937_64& rng, bool partial = false) {
    for (;;) {
        std::vector<std::pair<varqqa::Bits, varqqa::BooleanFunction::Label>> entries;
        const int labels = 2 + static_cast<int>(rng() % 2);
        for (varqqa::Bits x = 0; x < (varqqa::Bits{1} << n); ++x)
            if (!partial || rng() % 4 != 0) entries.emplace_back(x, static_cast<int>(rng() % labels));
        if (entries.size() < 2) continue;
        auto f = varqqa::BooleanFunction::from_table(n, entries);
        if (f.num_classes() >= 2) return f;
    }
}

/// Random valid partition of at most d_a rows into `classes` blocks.
inline std::vector<int> random_partition(int d_a, int classes, std::mt19937_64& rng) {
    std::vector<int> p(static_cast<std::size_t>(classes), 1);
    int spare = d_a - classes;
    // Leave some rows unassigned now and then.
    if (spare > 0 && rng() % 3 == 0) --spare;
    while (spare-- > 0) ++p[rng() % p.size()];
    return p;
}

inline oracle::Instance to_instance(const varqqa::BooleanFunction& f, const varqqa::CircuitConfig& cfg) {
    oracle::Instance inst;
    inst.n = f.n();
    inst.d_w = cfg.d_w;
    inst.domain = f.domain();
    inst.classes = f.classes();
    int off = 0;
    for (int s : cfg.partition) {
        inst.blocks.emplace_back(off, s);
        off += s;
    }
    return inst;
}

} // namespace testing_support
