#ifndef ADAPTEST_RESPONSE_MODEL_HPP
#define ADAPTEST_RESPONSE_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "adaptest/errors.hpp"
#include "adaptest/optimize.hpp"

namespace adaptest {

// Probabilities are pulled away from {0,1} by this margin before any log is
// taken. Response functions are strictly interior, so the clamp only matters
// for pathological user-supplied models.
inline constexpr double kProbClamp = 1e-12;

/**
 * Bernoulli Kullback-Leibler divergence d(q | r).
 *
 * q may sit on the boundary (0 ln 0 = 0 convention); the alternative r must
 * be interior, otherwise the divergence is infinite and the caller has a
 * modeling bug worth surfacing.
 */
inline double kl_bernoulli(double q, double r) {
    if (!(r > 0.0) || !(r < 1.0)) {
        std::ostringstream oss;
        oss << "kl_bernoulli: degenerate alternative r=" << r;
        throw DegenerateAlternativeError(oss.str());
    }
    const double rc = std::clamp(r, kProbClamp, 1.0 - kProbClamp);
    double out = 0.0;
    if (q > 0.0) out += q * std::log(q / rc);
    if (q < 1.0) out += (1.0 - q) * std::log((1.0 - q) / (1.0 - rc));
    return out;
}

// Closed ability interval [p_lo, p_hi] with p_lo > 0.
struct AbilityDomain {
    double p_lo;
    double p_hi;

    AbilityDomain(double lo, double hi) : p_lo(lo), p_hi(hi) {
        if (!(lo > 0.0) || !(hi > lo))
            throw ConfigError("AbilityDomain requires 0 < p_lo < p_hi");
    }

    bool contains(double p) const { return p >= p_lo && p <= p_hi; }
};

// Question levels: either an explicit sorted list or a compact interval.
class QuestionBank {
public:
    static QuestionBank finite(std::vector<double> levels) {
        if (levels.empty())
            throw ConfigError("QuestionBank: empty level list");
        for (std::size_t i = 0; i < levels.size(); ++i) {
            if (!(levels[i] > 0.0))
                throw ConfigError("QuestionBank: levels must be positive");
            if (i > 0 && !(levels[i] > levels[i - 1]))
                throw ConfigError("QuestionBank: levels must be strictly increasing");
        }
        QuestionBank b;
        b.finite_ = true;
        b.levels_ = std::move(levels);
        b.lo_ = b.levels_.front();
        b.hi_ = b.levels_.back();
        return b;
    }

    static QuestionBank interval(double lo, double hi) {
        if (!(lo > 0.0) || !(hi >= lo))
            throw ConfigError("QuestionBank: requires 0 < x_lo <= x_hi");
        QuestionBank b;
        b.finite_ = false;
        b.lo_ = lo;
        b.hi_ = hi;
        return b;
    }

    bool is_finite() const { return finite_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    const std::vector<double>& levels() const { return levels_; }

    // Level in the bank closest to x.
    double nearest(double x) const {
        if (!finite_) return std::clamp(x, lo_, hi_);
        auto it = std::lower_bound(levels_.begin(), levels_.end(), x);
        if (it == levels_.begin()) return *it;
        if (it == levels_.end()) return levels_.back();
        return (*it - x < x - *(it - 1)) ? *it : *(it - 1);
    }

private:
    QuestionBank() = default;

    bool finite_ = false;
    double lo_ = 0.0;
    double hi_ = 0.0;
    std::vector<double> levels_;
};

/**
 * Strictly increasing scalar map with optional inverse and derivative.
 * The closed-form peak needs the inverse; the analytic index derivative
 * needs the derivative. Missing pieces trigger numeric fallbacks.
 */
struct MonotoneMap {
    std::function<double(double)> fwd;
    std::function<double(double)> inv;    // may be empty
    std::function<double(double)> deriv;  // may be empty

    static MonotoneMap identity() {
        MonotoneMap m;
        m.fwd = [](double v) { return v; };
        m.inv = [](double v) { return v; };
        m.deriv = [](double) { return 1.0; };
        return m;
    }

    bool is_identity = false;
};

enum class ModelKind { Ratio, Logit, Custom };

inline const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::Ratio: return "ratio";
        case ModelKind::Logit: return "logit";
        case ModelKind::Custom: return "custom";
    }
    return "?";
}

/**
 * Response probability model h(x, p): chance that ability p answers a
 * difficulty-x question correctly. Strictly decreasing in x, strictly
 * increasing in p, valued in (0,1).
 *
 *  - Ratio:  h = g(p) / (g(p) + k(x)) with strictly increasing g, k.
 *            Defaults to the identity pair, h = p / (p + x).
 *  - Logit:  h = e^{bp} / (e^{bp} + e^{ax+c}).
 *  - Custom: arbitrary callable; closed forms are unavailable and every
 *            derived quantity falls back to numeric routines.
 */
class ResponseModel {
public:
    static ResponseModel ratio() {
        ResponseModel m;
        m.kind_ = ModelKind::Ratio;
        m.g_ = MonotoneMap::identity();
        m.k_ = MonotoneMap::identity();
        m.g_.is_identity = m.k_.is_identity = true;
        return m;
    }

    // Ratio model with user-supplied maps. Monotonicity is spot-checked by
    // sampling over the given ranges, since a decreasing map silently breaks
    // every closed form downstream.
    static ResponseModel ratio(MonotoneMap g, MonotoneMap k,
                               std::pair<double, double> ability_range,
                               std::pair<double, double> difficulty_range) {
        check_increasing(g.fwd, ability_range, "g");
        check_increasing(k.fwd, difficulty_range, "k");
        ResponseModel m;
        m.kind_ = ModelKind::Ratio;
        m.g_ = std::move(g);
        m.k_ = std::move(k);
        return m;
    }

    static ResponseModel logit(double a, double b, double c) {
        if (!(a >= 0.0) || !(b >= 0.0))
            throw ConfigError("logit model requires a >= 0 and b >= 0");
        ResponseModel m;
        m.kind_ = ModelKind::Logit;
        m.a_ = a;
        m.b_ = b;
        m.c_ = c;
        return m;
    }

    static ResponseModel custom(std::function<double(double, double)> h_fn) {
        ResponseModel m;
        m.kind_ = ModelKind::Custom;
        m.custom_h_ = std::move(h_fn);
        return m;
    }

    ModelKind kind() const { return kind_; }

    // Ratio and Logit share the g/(g+k) structure; the structural
    // guarantees (single-question optimality, quasi-concavity,
    // score-equation MLE) apply to both.
    bool is_ratio_family() const { return kind_ != ModelKind::Custom; }

    double h(double x, double p) const {
        switch (kind_) {
            case ModelKind::Ratio: {
                const double gp = g_.fwd(p);
                const double kx = k_.fwd(x);
                return gp / (gp + kx);
            }
            case ModelKind::Logit: {
                // Stable logistic of (bp - ax - c).
                const double z = b_ * p - a_ * x - c_;
                if (z >= 0.0) {
                    const double e = std::exp(-z);
                    return 1.0 / (1.0 + e);
                }
                const double e = std::exp(z);
                return e / (1.0 + e);
            }
            case ModelKind::Custom:
                return custom_h_(x, p);
        }
        return 0.5;  // unreachable
    }

    // g(p) and k(x) of the ratio-family representation.
    double g_of(double p) const {
        return kind_ == ModelKind::Logit ? std::exp(b_ * p) : g_.fwd(p);
    }
    double k_of(double x) const {
        return kind_ == ModelKind::Logit ? std::exp(a_ * x + c_) : k_.fwd(x);
    }

    bool has_k_inverse() const {
        if (kind_ == ModelKind::Logit) return a_ > 0.0;
        return kind_ == ModelKind::Ratio && static_cast<bool>(k_.inv);
    }

    double k_inverse(double y) const {
        if (kind_ == ModelKind::Logit) return (std::log(y) - c_) / a_;
        return k_.inv(y);
    }

    double k_derivative(double x) const {
        if (kind_ == ModelKind::Logit) return a_ * std::exp(a_ * x + c_);
        if (k_.deriv) return k_.deriv(x);
        const double step = 1e-6 * std::max(std::abs(x), 1.0);
        return (k_.fwd(x + step) - k_.fwd(x - step)) / (2.0 * step);
    }

    double logit_a() const { return a_; }
    double logit_b() const { return b_; }
    double logit_c() const { return c_; }

private:
    ResponseModel() = default;

    static void check_increasing(const std::function<double(double)>& fn,
                                 std::pair<double, double> range,
                                 const char* name) {
        const int n = 64;
        double prev = fn(range.first);
        for (int i = 1; i <= n; ++i) {
            const double t = range.first + (range.second - range.first) * i / n;
            const double cur = fn(t);
            if (!(cur > prev)) {
                std::ostringstream oss;
                oss << "ratio model: map " << name
                    << " is not strictly increasing near t=" << t;
                throw ConfigError(oss.str());
            }
            prev = cur;
        }
    }

    ModelKind kind_ = ModelKind::Ratio;
    MonotoneMap g_;
    MonotoneMap k_;
    double a_ = 1.0, b_ = 1.0, c_ = 0.0;
    std::function<double(double, double)> custom_h_;
};

inline double h(const ResponseModel& model, double x, double p) {
    return model.h(x, p);
}

// Index function f(x) = d(h(x,p) | h(x,u)): the per-question information
// separating ability p from the alternative u.
inline double f(const ResponseModel& model, double x, double p, double u) {
    if (p == u)
        throw ZeroSeparationError("f: alternative u equals ability p");
    return kl_bernoulli(model.h(x, p), model.h(x, u));
}

namespace detail {

// Linear coefficients of the transformed index derivative for the ratio
// family: with pt = g(p), ut = g(u), kappa = k(x),
//   d f / d kappa = (a * kappa + b) / ((pt + kappa)^2 (ut + kappa)).
struct RatioDerivCoeffs {
    double a;
    double b;
};

inline RatioDerivCoeffs ratio_deriv_coeffs(double pt, double ut) {
    const double L = std::log(ut / pt);
    return {pt - ut + pt * L, pt * pt + ut * pt * (L - 1.0)};
}

}  // namespace detail

/**
 * Derivative of f in the difficulty argument.
 *
 * Ratio kind: analytic expression in the transformed variable kappa = k(x),
 * scaled by k'(x). Other kinds: central difference with relative step 1e-6.
 */
inline double f_prime(const ResponseModel& model, double x, double p, double u) {
    if (p == u)
        throw ZeroSeparationError("f_prime: alternative u equals ability p");
    if (model.kind() == ModelKind::Ratio) {
        const double pt = model.g_of(p);
        const double ut = model.g_of(u);
        const double kappa = model.k_of(x);
        const auto c = detail::ratio_deriv_coeffs(pt, ut);
        const double denom =
            (pt + kappa) * (pt + kappa) * (ut + kappa);
        return (c.a * kappa + c.b) / denom * model.k_derivative(x);
    }
    const double step = 1e-6 * std::max(std::abs(x), 1.0);
    return (f(model, x + step, p, u) - f(model, x - step, p, u)) / (2.0 * step);
}

/**
 * Peak x*(p, u) of the index function over [x_lo, x_hi].
 *
 * Ratio-family models with an invertible k admit the closed form
 *   k(x*) = (pt*ut - pt^2 - pt*ut*log(ut/pt)) / (pt - ut + pt*log(ut/pt));
 * the result is clamped to the bank. Without an inverse the peak is located
 * numerically (golden section for the quasi-concave family, dense grid
 * otherwise). Nondecreasing in both p and u.
 */
inline double x_star(const ResponseModel& model, double p, double u,
                     double x_lo, double x_hi) {
    if (p == u)
        throw ZeroSeparationError("x_star: alternative u equals ability p");
    if (model.kind() == ModelKind::Ratio && model.has_k_inverse()) {
        const double pt = model.g_of(p);
        const double ut = model.g_of(u);
        // Near-coincident abilities: the closed form is 0/0 with limit pt.
        if (std::abs(ut / pt - 1.0) < 1e-7)
            return std::clamp(model.k_inverse(pt), x_lo, x_hi);
        const auto c = detail::ratio_deriv_coeffs(pt, ut);
        const double kappa_star = -c.b / c.a;
        return std::clamp(model.k_inverse(kappa_star), x_lo, x_hi);
    }
    auto obj = [&](double x) { return f(model, x, p, u); };
    if (model.is_ratio_family()) return golden_max(obj, x_lo, x_hi);
    return grid_then_golden_max(obj, x_lo, x_hi);
}

inline double x_star(const ResponseModel& model, double p, double u,
                     const QuestionBank& bank) {
    return x_star(model, p, u, bank.lo(), bank.hi());
}

// One verification item of the model-assumption report.
struct AssumptionCheck {
    AssumptionCheck() = default;
    explicit AssumptionCheck(std::string check_name)
        : name(std::move(check_name)) {}

    std::string name;
    bool pass = true;
    std::string witness;  // grid point that broke the check, empty on pass
};

struct AssumptionReport {
    std::vector<AssumptionCheck> checks;

    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }

    const AssumptionCheck* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

/**
 * Numeric verification of the regularity assumptions on a grid:
 * h interior and strictly monotone, both supermodularity signs, and a single
 * sign change of f' (discrete quasi-concavity of the index functions).
 * Failures carry the witnessing grid point; nothing throws.
 */
inline AssumptionReport check_assumptions(const ResponseModel& model,
                                          const QuestionBank& bank,
                                          const AbilityDomain& domain) {
    AssumptionReport report;
    const int nx = 41, np = 41;
    auto xg = [&](int i) {
        return bank.lo() + (bank.hi() - bank.lo()) * i / (nx - 1);
    };
    auto pg = [&](int j) {
        return domain.p_lo + (domain.p_hi - domain.p_lo) * j / (np - 1);
    };

    AssumptionCheck range("h_in_unit_interval");
    AssumptionCheck mono_x("h_decreasing_in_x");
    AssumptionCheck mono_p("h_increasing_in_p");
    for (int j = 0; j < np; ++j) {
        for (int i = 0; i < nx; ++i) {
            const double v = model.h(xg(i), pg(j));
            if (!(v > 0.0 && v < 1.0) && range.pass) {
                range.pass = false;
                std::ostringstream oss;
                oss << "h(" << xg(i) << ", " << pg(j) << ") = " << v;
                range.witness = oss.str();
            }
            if (i > 0 && !(v < model.h(xg(i - 1), pg(j))) && mono_x.pass) {
                mono_x.pass = false;
                std::ostringstream oss;
                oss << "h not decreasing between x=" << xg(i - 1) << " and x="
                    << xg(i) << " at p=" << pg(j);
                mono_x.witness = oss.str();
            }
            if (j > 0 && !(v > model.h(xg(i), pg(j - 1))) && mono_p.pass) {
                mono_p.pass = false;
                std::ostringstream oss;
                oss << "h not increasing between p=" << pg(j - 1) << " and p="
                    << pg(j) << " at x=" << xg(i);
                mono_p.witness = oss.str();
            }
        }
    }
    report.checks.push_back(range);
    report.checks.push_back(mono_x);
    report.checks.push_back(mono_p);

    // Mixed second differences of log h and log(1-h); both must be >= 0 up
    // to finite-difference noise.
    auto supermod = [&](bool complement) {
        AssumptionCheck check(complement ? "supermodular_log_1mh"
                                         : "supermodular_log_h");
        if (!range.pass) {
            check.pass = false;
            check.witness = "skipped: h leaves (0,1)";
            return check;
        }
        auto logv = [&](double x, double p) {
            const double v = model.h(x, p);
            return std::log(complement ? (1.0 - v) : v);
        };
        const int n = 21;
        for (int j = 0; j < n && check.pass; ++j) {
            for (int i = 0; i < n && check.pass; ++i) {
                const double x = bank.lo() + (bank.hi() - bank.lo()) * i / (n - 1);
                const double p =
                    domain.p_lo + (domain.p_hi - domain.p_lo) * j / (n - 1);
                // Near-saturated probabilities drown the finite difference
                // in rounding noise; the stencil is only meaningful where
                // both outcomes retain mass.
                const double hv = model.h(x, p);
                if (std::min(hv, 1.0 - hv) < 1e-4) continue;
                const double dx = 1e-4 * std::max(std::abs(x), 1.0);
                const double dp = 1e-4 * std::max(std::abs(p), 1.0);
                const double mixed =
                    (logv(x + dx, p + dp) - logv(x + dx, p - dp) -
                     logv(x - dx, p + dp) + logv(x - dx, p - dp)) /
                    (4.0 * dx * dp);
                if (mixed < -1e-7) {
                    check.pass = false;
                    std::ostringstream oss;
                    oss << "mixed difference " << mixed << " at x=" << x
                        << ", p=" << p;
                    check.witness = oss.str();
                }
            }
        }
        return check;
    };
    report.checks.push_back(supermod(false));
    report.checks.push_back(supermod(true));

    // Discrete quasi-concavity of f for a few (p, u) pairs: at most one
    // ascent after a descent on a fine difficulty grid.
    AssumptionCheck single_peak("f_single_peak");
    if (range.pass) {
        const double qs[] = {0.2, 0.5, 0.8};
        for (double qp : qs) {
            for (double qu : qs) {
                if (qp == qu) continue;
                const double p =
                    domain.p_lo + (domain.p_hi - domain.p_lo) * qp;
                const double u =
                    domain.p_lo + (domain.p_hi - domain.p_lo) * qu;
                const int n = 2000;
                double prev = f(model, bank.lo(), p, u);
                bool descended = false;
                for (int i = 1; i <= n; ++i) {
                    const double x =
                        bank.lo() + (bank.hi() - bank.lo()) * i / n;
                    const double cur = f(model, x, p, u);
                    if (cur < prev - 1e-13) descended = true;
                    if (descended && cur > prev + 1e-13) {
                        single_peak.pass = false;
                        std::ostringstream oss;
                        oss << "second ascent of f at x=" << x << " (p=" << p
                            << ", u=" << u << ")";
                        single_peak.witness = oss.str();
                        break;
                    }
                    prev = cur;
                }
                if (!single_peak.pass) break;
            }
            if (!single_peak.pass) break;
        }
    } else {
        single_peak.pass = false;
        single_peak.witness = "skipped: h leaves (0,1)";
    }
    report.checks.push_back(single_peak);
    return report;
}

}  // namespace adaptest

#endif  // ADAPTEST_RESPONSE_MODEL_HPP
