#include "rwre/environment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rwre {

namespace {

constexpr double kSumTol = 1e-12;

}  // namespace

SiteLaw SiteLaw::from_map(int L, const std::map<int, double>& probs) {
    SiteLaw law;
    law.L = L;
    law.p.assign(static_cast<std::size_t>(L) + 2, 0.0);
    for (const auto& [z, pz] : probs) {
        if (z < -L || z > 1)
            throw InvalidInput("jump " + std::to_string(z) + " outside {-" +
                               std::to_string(L) + ",...,1}");
        law.p[static_cast<std::size_t>(z + L)] = pz;
    }
    return law;
}

std::string LawVerdict::describe() const {
    std::string out;
    for (const auto& [code, msg] : violations) {
        if (!out.empty()) out += "; ";
        out += msg;
    }
    return out.empty() ? "OK" : out;
}

LawVerdict validate_site_law(const SiteLaw& law, double kappa) {
    LawVerdict v;
    if (law.L < 1 || law.p.size() != static_cast<std::size_t>(law.L) + 2) {
        v.violations.emplace_back(LawViolation::OutOfRange,
                                  "malformed law: need L >= 1 and L+2 probabilities");
        return v;
    }
    double sum = 0.0;
    for (double pz : law.p) {
        sum += pz;
        if (pz < 0.0 || pz > 1.0) {
            v.violations.emplace_back(LawViolation::OutOfRange,
                                      "OutOfRange: probability outside [0,1]");
            break;
        }
    }
    if (std::abs(sum - 1.0) > kSumTol)
        v.violations.emplace_back(
            LawViolation::NotNormalized,
            "NotNormalized: probabilities sum to " + std::to_string(sum));
    if (law.prob(1) <= 0.0) {
        v.violations.emplace_back(LawViolation::ZeroRightJump,
                                  "ZeroRightJump: omega(1) must be positive");
        return v;  // ratios below are undefined
    }
    for (int z = -law.L; z <= -1; ++z) {
        if (law.prob(z) / law.prob(1) <= kappa) {
            std::ostringstream msg;
            msg << "EllipticityViolated: omega(" << z << ")/omega(1) = "
                << law.prob(z) / law.prob(1) << " <= kappa = " << kappa;
            v.violations.emplace_back(LawViolation::EllipticityViolated, msg.str());
        }
    }
    return v;
}

std::vector<double> EnvironmentSpec::cumulative_weights() const {
    std::vector<double> cum(atoms.size());
    double c = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        c += atoms[i].weight;
        cum[i] = c;
    }
    if (!cum.empty()) cum.back() = std::max(cum.back(), 1.0);
    return cum;
}

std::vector<std::string> validate_spec(const EnvironmentSpec& spec, bool full) {
    std::vector<std::string> problems;
    if (spec.L < 1) problems.push_back("L must be >= 1");
    if (!(spec.kappa > 0.0) || spec.kappa >= 1.0)
        problems.push_back("kappa must lie in (0,1)");
    if (spec.atoms.empty()) problems.push_back("at least one atom required");
    double wsum = 0.0;
    for (std::size_t i = 0; i < spec.atoms.size(); ++i) {
        const Atom& atom = spec.atoms[i];
        if (atom.weight < 0.0)
            problems.push_back("atom " + std::to_string(i) + ": negative weight");
        wsum += atom.weight;
        if (atom.law.L != spec.L ||
            atom.law.p.size() != static_cast<std::size_t>(spec.L) + 2) {
            problems.push_back("atom " + std::to_string(i) + ": L mismatch");
            continue;
        }
        if (full) {
            LawVerdict v = validate_site_law(atom.law, spec.kappa);
            if (!v.ok())
                problems.push_back("atom " + std::to_string(i) + ": " + v.describe());
        } else {
            double sum = 0.0;
            bool in_range = true;
            for (double pz : atom.law.p) {
                sum += pz;
                in_range &= pz >= 0.0 && pz <= 1.0;
            }
            if (!in_range || std::abs(sum - 1.0) > kSumTol)
                problems.push_back("atom " + std::to_string(i) +
                                   ": probabilities malformed");
        }
    }
    if (!spec.atoms.empty() && std::abs(wsum - 1.0) > kSumTol)
        problems.push_back("atom weights sum to " + std::to_string(wsum));
    return problems;
}

namespace {

void throw_if_invalid(const EnvironmentSpec& spec, bool full) {
    auto problems = validate_spec(spec, full);
    if (problems.empty()) return;
    std::string msg = "invalid environment spec:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw InvalidInput(msg);
}

}  // namespace

void require_valid(const EnvironmentSpec& spec) { throw_if_invalid(spec, true); }

void require_structure(const EnvironmentSpec& spec) { throw_if_invalid(spec, false); }

std::string spec_to_json(const EnvironmentSpec& spec) {
    nlohmann::ordered_json j;
    j["L"] = spec.L;
    j["kappa"] = spec.kappa;
    j["atoms"] = nlohmann::ordered_json::array();
    for (const Atom& atom : spec.atoms) {
        nlohmann::ordered_json ja;
        ja["weight"] = atom.weight;
        nlohmann::ordered_json probs;
        for (int z = -spec.L; z <= 1; ++z)
            probs[std::to_string(z)] = atom.law.prob(z);
        ja["probs"] = probs;
        j["atoms"].push_back(ja);
    }
    return j.dump(2) + "\n";
}

EnvironmentSpec spec_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("spec JSON parse error: ") + e.what());
    }
    EnvironmentSpec spec;
    try {
        spec.L = j.at("L").get<int>();
        spec.kappa = j.at("kappa").get<double>();
        for (const auto& ja : j.at("atoms")) {
            Atom atom;
            atom.weight = ja.at("weight").get<double>();
            std::map<int, double> probs;
            for (const auto& [key, val] : ja.at("probs").items())
                probs[std::stoi(key)] = val.get<double>();
            atom.law = SiteLaw::from_map(spec.L, probs);
            spec.atoms.push_back(std::move(atom));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("spec JSON shape error: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw InvalidInput("spec JSON: probs keys must be decimal jump values");
    }
    require_valid(spec);
    return spec;
}

EnvironmentSpec load_spec_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open spec file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return spec_from_json(buf.str());
}

EnvironmentWindow::EnvironmentWindow(EnvironmentSpec spec, std::int64_t lo,
                                     std::int64_t hi, std::uint64_t seed)
    : spec_(std::move(spec)), seed_(seed) {
    require_structure(spec_);
    cum_ = spec_.cumulative_weights();
    if (lo > hi) throw InvalidInput("environment window: lo > hi");
    extend(lo, hi);
}

EnvironmentWindow EnvironmentWindow::lazy(EnvironmentSpec spec, std::uint64_t seed) {
    EnvironmentWindow w(std::move(spec), 0, 0, seed);
    w.lo_ = 0;
    w.hi_ = -1;
    w.atoms_.clear();
    return w;
}

std::uint32_t EnvironmentWindow::atom_pure(std::int64_t x) const {
    const double u = unit_double(derive(seed_, static_cast<std::uint64_t>(x)));
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    const auto idx = static_cast<std::size_t>(it - cum_.begin());
    return static_cast<std::uint32_t>(std::min(idx, cum_.size() - 1));
}

std::uint32_t EnvironmentWindow::atom_at(std::int64_t x) const {
    if (x >= lo_ && x <= hi_ && !atoms_.empty())
        return atoms_[static_cast<std::size_t>(x - lo_)];
    return atom_pure(x);
}

void EnvironmentWindow::extend(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) return;
    if (lo_ <= hi_) {
        lo = std::min(lo, lo_);
        hi = std::max(hi, hi_);
        if (lo == lo_ && hi == hi_) return;
    }
    std::vector<std::uint32_t> next(static_cast<std::size_t>(hi - lo + 1));
    for (std::int64_t x = lo; x <= hi; ++x)
        next[static_cast<std::size_t>(x - lo)] = atom_pure(x);
    atoms_ = std::move(next);
    lo_ = lo;
    hi_ = hi;
}

EnvironmentWindow sample_environment(const EnvironmentSpec& spec, std::int64_t lo,
                                     std::int64_t hi, std::uint64_t seed) {
    if (lo > hi) throw InvalidInput("sample_environment: lo > hi");
    return EnvironmentWindow(spec, lo, hi, seed);
}

}  // namespace rwre
