#pragma once

#include <cstdint>
#include <vector>

#include "rwre/environment.hpp"

namespace rwre {

// Companion matrix of a site law: top row a_i = (omega(-i)+...+omega(-L)) /
// omega(1), unit subdiagonal, zero elsewhere. Only the top row is stored;
// applying the matrix to a vector is O(L).
struct CompanionMatrix {
    int L = 1;
    std::vector<double> a;  // a[i-1] = a_i

    // Row-major L x L materialization for small dense oracles.
    std::vector<double> dense() const;
};

CompanionMatrix build_matrix(const SiteLaw& law);

// Log-renormalized product state v = A(x_m)...A(x_1) e_1 / scale. The
// working vector is renormalized by its sup norm after every factor, so
// products of any length stay in range. Extended precision internally.
class ProductAccumulator {
public:
    explicit ProductAccumulator(int L);

    void apply(const CompanionMatrix& m);

    // log of the first coordinate of the un-renormalized product vector,
    // i.e. log delta when started from e_1. Throws UndefinedDelta on an
    // exactly-zero coordinate.
    double log_first() const;
    long double log_first_ext() const;

    int count() const { return count_; }
    double log_scale() const { return static_cast<double>(log_scale_); }
    std::vector<double> vec() const;  // renormalized working vector

private:
    int L_;
    int count_ = 0;
    long double log_scale_ = 0.0L;
    std::vector<long double> v_;
};

// log delta(k, l) = log <e_1, A(k)...A(l) e_1>; by convention 0 for
// k == l - 1 (empty product).
double log_delta(const EnvView& env, std::int64_t k, std::int64_t l);

// All prefixes in one pass: returns log delta(j, base) for j = base-1 .. j_hi
// (index j - base + 1; entry 0 is the empty product, 0.0).
std::vector<double> log_delta_prefix(const EnvView& env, std::int64_t base,
                                     std::int64_t j_hi);

// Extended-precision variant for ratio computations whose tolerance is
// tighter than double rounding of the individual logs.
std::vector<long double> log_delta_prefix_ext(const EnvView& env, std::int64_t base,
                                              std::int64_t j_hi);

// log sum_{j=j_lo}^{j_hi} delta(j, base), streaming log-sum-exp over the
// shared prefix pass. Requires j_lo >= base - 1.
double log_delta_sum(const EnvView& env, std::int64_t j_lo, std::int64_t j_hi,
                     std::int64_t base);

}  // namespace rwre
