#include "rwre/matrix.hpp"

#include <cmath>

namespace rwre {

std::vector<double> CompanionMatrix::dense() const {
    const auto n = static_cast<std::size_t>(L);
    std::vector<double> m(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) m[j] = a[j];
    for (std::size_t i = 1; i < n; ++i) m[i * n + (i - 1)] = 1.0;
    return m;
}

CompanionMatrix build_matrix(const SiteLaw& law) {
    LawVerdict v = validate_site_law(law, 0.0);
    if (!v.ok()) throw InvalidInput("build_matrix: " + v.describe());
    CompanionMatrix m;
    m.L = law.L;
    m.a.resize(static_cast<std::size_t>(law.L));
    // a_i = (omega(-i) + ... + omega(-L)) / omega(1): nested tail sums, so
    // accumulate from the far left.
    double tail = 0.0;
    for (int i = law.L; i >= 1; --i) {
        tail += law.prob(-i);
        m.a[static_cast<std::size_t>(i - 1)] = tail / law.prob(1);
    }
    return m;
}

ProductAccumulator::ProductAccumulator(int L)
    : L_(L), v_(static_cast<std::size_t>(L), 0.0L) {
    v_[0] = 1.0L;  // e_1
}

void ProductAccumulator::apply(const CompanionMatrix& m) {
    // (A v)_1 = sum_i a_i v_i, (A v)_{i+1} = v_i
    long double top = 0.0L;
    for (int i = 0; i < L_; ++i)
        top += static_cast<long double>(m.a[static_cast<std::size_t>(i)]) *
               v_[static_cast<std::size_t>(i)];
    for (int i = L_ - 1; i >= 1; --i)
        v_[static_cast<std::size_t>(i)] = v_[static_cast<std::size_t>(i - 1)];
    v_[0] = top;

    long double scale = 0.0L;
    for (int i = 0; i < L_; ++i)
        scale = std::max(scale, v_[static_cast<std::size_t>(i)]);
    if (scale > 0.0L) {
        for (int i = 0; i < L_; ++i) v_[static_cast<std::size_t>(i)] /= scale;
        log_scale_ += logl(scale);
    }
    ++count_;
}

double ProductAccumulator::log_first() const {
    return static_cast<double>(log_first_ext());
}

long double ProductAccumulator::log_first_ext() const {
    if (count_ == 0) return 0.0L;  // empty product, delta = 1
    if (v_[0] <= 0.0L)
        throw UndefinedDelta("product has zero (1,1) entry after " +
                             std::to_string(count_) + " factors");
    return logl(v_[0]) + log_scale_;
}

std::vector<double> ProductAccumulator::vec() const {
    std::vector<double> out(v_.size());
    for (std::size_t i = 0; i < v_.size(); ++i) out[i] = static_cast<double>(v_[i]);
    return out;
}

namespace {

// Companion matrices per atom, built once per traversal.
std::vector<CompanionMatrix> atom_matrices(const EnvironmentSpec& spec) {
    std::vector<CompanionMatrix> ms;
    ms.reserve(spec.atoms.size());
    for (const Atom& atom : spec.atoms) ms.push_back(build_matrix(atom.law));
    return ms;
}

}  // namespace

double log_delta(const EnvView& env, std::int64_t k, std::int64_t l) {
    if (k < l - 1) throw InvalidInput("log_delta: k < l - 1");
    if (k == l - 1) return 0.0;
    const auto ms = atom_matrices(env.spec());
    ProductAccumulator acc(env.spec().L);
    for (std::int64_t x = l; x <= k; ++x) acc.apply(ms[env.atom(x)]);
    return acc.log_first();
}

std::vector<double> log_delta_prefix(const EnvView& env, std::int64_t base,
                                     std::int64_t j_hi) {
    const auto ext = log_delta_prefix_ext(env, base, j_hi);
    std::vector<double> out(ext.size());
    for (std::size_t i = 0; i < ext.size(); ++i) out[i] = static_cast<double>(ext[i]);
    return out;
}

std::vector<long double> log_delta_prefix_ext(const EnvView& env, std::int64_t base,
                                              std::int64_t j_hi) {
    if (j_hi < base - 1) throw InvalidInput("log_delta_prefix: j_hi < base - 1");
    const auto ms = atom_matrices(env.spec());
    std::vector<long double> out;
    out.reserve(static_cast<std::size_t>(j_hi - base + 2));
    out.push_back(0.0L);
    ProductAccumulator acc(env.spec().L);
    for (std::int64_t j = base; j <= j_hi; ++j) {
        acc.apply(ms[env.atom(j)]);
        out.push_back(acc.log_first_ext());
    }
    return out;
}

double log_delta_sum(const EnvView& env, std::int64_t j_lo, std::int64_t j_hi,
                     std::int64_t base) {
    if (j_lo > j_hi) throw InvalidInput("log_delta_sum: empty range");
    if (base > j_lo + 1) throw InvalidInput("log_delta_sum: base > j_lo + 1");
    const auto ms = atom_matrices(env.spec());
    ProductAccumulator acc(env.spec().L);
    // Streaming log-sum-exp with a running maximum; terms can span hundreds
    // of orders of magnitude.
    long double running_sum = 0.0L;
    long double running_max = 0.0L;
    bool any = false;
    auto add_term = [&](double log_term) {
        const auto lt = static_cast<long double>(log_term);
        if (!any) {
            running_max = lt;
            running_sum = 1.0L;
            any = true;
        } else if (lt > running_max) {
            running_sum = running_sum * expl(running_max - lt) + 1.0L;
            running_max = lt;
        } else {
            running_sum += expl(lt - running_max);
        }
    };
    if (j_lo == base - 1) add_term(0.0);
    for (std::int64_t j = base; j <= j_hi; ++j) {
        acc.apply(ms[env.atom(j)]);
        if (j >= j_lo) add_term(acc.log_first());
    }
    return static_cast<double>(running_max + logl(running_sum));
}

}  // namespace rwre
