#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rwre/errors.hpp"
#include "rwre/rng.hpp"

namespace rwre {

// One-dimensional random walk in random environment with bounded jumps:
// jump set {-L,...,0,1}, per-site law omega_x drawn i.i.d. from a finite
// list of atoms. Ellipticity: omega(z)/omega(1) > kappa for z != 0.

// Probability vector over jumps -L..1, stored densely (index z + L).
struct SiteLaw {
    int L = 1;
    std::vector<double> p;  // size L + 2

    SiteLaw() = default;
    SiteLaw(int L_, std::vector<double> probs) : L(L_), p(std::move(probs)) {}
    static SiteLaw from_map(int L, const std::map<int, double>& probs);

    double prob(int z) const { return p[static_cast<std::size_t>(z + L)]; }

    // Inverse-CDF jump draw, scanning z = -L..1. u in [0,1).
    int sample_jump(double u) const {
        double c = 0.0;
        for (int z = -L; z <= 1; ++z) {
            c += prob(z);
            if (u < c) return z;
        }
        return 1;
    }
};

enum class LawViolation { NotNormalized, ZeroRightJump, EllipticityViolated, OutOfRange };

struct LawVerdict {
    std::vector<std::pair<LawViolation, std::string>> violations;
    bool ok() const { return violations.empty(); }
    std::string describe() const;
};

// Checks: probabilities in [0,1] summing to 1 (tol 1e-12), omega(1) > 0,
// omega(z)/omega(1) > kappa for z in {-L..-1}. z = 0 is exempt and z = 1 is
// vacuous for kappa < 1.
LawVerdict validate_site_law(const SiteLaw& law, double kappa);

struct Atom {
    SiteLaw law;
    double weight = 1.0;
};

// The i.i.d. site-law distribution mu: finite support only, so that exact
// enumeration oracles stay available downstream.
struct EnvironmentSpec {
    int L = 1;
    double kappa = 0.0;
    std::vector<Atom> atoms;

    std::vector<double> cumulative_weights() const;
};

// All violations, empty when valid. Requires kappa in (0,1); kappa >= 1 is
// rejected because the z = 1 ratio is identically 1. With full = false only
// the structure is checked (normalized laws, weights summing to 1): that is
// all the walk and linear-system paths need, and it admits degenerate
// fixtures like a deterministic right drift. Matrix-product paths insist on
// the full check.
std::vector<std::string> validate_spec(const EnvironmentSpec& spec, bool full = true);
void require_valid(const EnvironmentSpec& spec);      // throws InvalidInput
void require_structure(const EnvironmentSpec& spec);  // normalization only

std::string spec_to_json(const EnvironmentSpec& spec);
EnvironmentSpec spec_from_json(const std::string& text);  // validates
EnvironmentSpec load_spec_file(const std::string& path);

// A realized environment over an integer interval. The atom at site x is a
// pure function of (seed, x), so realization order, window extension and
// concurrent lookups can never disagree; the stored range is just the fast
// path for window-sweeping kernels.
class EnvironmentWindow {
public:
    EnvironmentWindow(EnvironmentSpec spec, std::int64_t lo, std::int64_t hi,
                      std::uint64_t seed);

    // No pre-realized range; every lookup goes through the pure function.
    static EnvironmentWindow lazy(EnvironmentSpec spec, std::uint64_t seed);

    std::uint32_t atom_at(std::int64_t x) const;
    const SiteLaw& law_at(std::int64_t x) const {
        return spec_.atoms[atom_at(x)].law;
    }

    // Grow the stored range to cover [lo, hi]; already-realized sites keep
    // their atoms (they are recomputed from the same pure function).
    void extend(std::int64_t lo, std::int64_t hi);

    const EnvironmentSpec& spec() const { return spec_; }
    std::uint64_t seed() const { return seed_; }
    std::int64_t lo() const { return lo_; }
    std::int64_t hi() const { return hi_; }

private:
    std::uint32_t atom_pure(std::int64_t x) const;

    EnvironmentSpec spec_;
    std::vector<double> cum_;
    std::uint64_t seed_ = 0;
    std::int64_t lo_ = 0, hi_ = -1;  // empty when lo_ > hi_
    std::vector<std::uint32_t> atoms_;
};

// Shift view: site x of the view resolves to site x + shift of the base
// window, i.e. the environment T^shift omega. Non-owning.
class EnvView {
public:
    explicit EnvView(const EnvironmentWindow& env, std::int64_t shift = 0)
        : env_(&env), shift_(shift) {}

    std::uint32_t atom(std::int64_t x) const { return env_->atom_at(x + shift_); }
    const SiteLaw& law(std::int64_t x) const { return env_->law_at(x + shift_); }
    EnvView shifted(std::int64_t k) const { return EnvView(*env_, shift_ + k); }
    std::int64_t shift() const { return shift_; }
    const EnvironmentSpec& spec() const { return env_->spec(); }
    const EnvironmentWindow& window() const { return *env_; }

private:
    const EnvironmentWindow* env_;
    std::int64_t shift_;
};

EnvironmentWindow sample_environment(const EnvironmentSpec& spec, std::int64_t lo,
                                     std::int64_t hi, std::uint64_t seed);

inline EnvView shifted_view(const EnvironmentWindow& env, std::int64_t k) {
    return EnvView(env, k);
}

}  // namespace rwre
