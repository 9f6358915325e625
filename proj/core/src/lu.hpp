// Small dense linear solver used by the traffic-equation module.
// Row-major storage; partial pivoting. Sized for routing systems
// (tens to a few hundred unknowns), not general numerics.
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace qnet::detail {

struct LuResult {
    bool singular = false;
    double min_pivot = 0.0; // smallest |pivot| encountered
};

// Solves A x = b in place: a is n*n row-major and is destroyed; b becomes x.
inline LuResult lu_solve(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
    LuResult res;
    res.min_pivot = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;

    for (std::size_t col = 0; col < n; ++col) {
        // Pick the largest-magnitude pivot in this column.
        std::size_t best = col;
        double best_mag = std::abs(a[perm[col] * n + col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double mag = std::abs(a[perm[r] * n + col]);
            if (mag > best_mag) {
                best = r;
                best_mag = mag;
            }
        }
        if (best != col) std::swap(perm[col], perm[best]);
        const double pivot = a[perm[col] * n + col];
        if (best_mag < res.min_pivot) res.min_pivot = best_mag;
        if (best_mag == 0.0) {
            res.singular = true;
            return res;
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[perm[r] * n + col] / pivot;
            if (f == 0.0) continue;
            a[perm[r] * n + col] = 0.0;
            for (std::size_t c = col + 1; c < n; ++c)
                a[perm[r] * n + c] -= f * a[perm[col] * n + c];
            b[perm[r]] -= f * b[perm[col]];
        }
    }

    // Back substitution into a scratch vector, then undo the permutation.
    std::vector<double> x(n, 0.0);
    for (std::size_t ri = n; ri-- > 0;) {
        double acc = b[perm[ri]];
        for (std::size_t c = ri + 1; c < n; ++c) acc -= a[perm[ri] * n + c] * x[c];
        x[ri] = acc / a[perm[ri] * n + ri];
    }
    b = std::move(x);
    return res;
}

} // namespace qnet::detail
