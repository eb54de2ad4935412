#ifndef ADAPTEST_GRADES_HPP
#define ADAPTEST_GRADES_HPP

#include <algorithm>
#include <cstddef>
#include <vector>

#include "adaptest/errors.hpp"
#include "adaptest/response_model.hpp"

namespace adaptest {

/**
 * Ordered grade thresholds u_1 < ... < u_J inside the ability domain.
 * Bracket i is the half-open interval [e_i, e_{i+1}) of the edge sequence
 * e = (p_lo, u_1, ..., u_J, p_hi), so there are J+1 brackets indexed from 0.
 * The domain edges stand in for the missing alternatives of the extreme
 * brackets.
 */
class GradeScheme {
public:
    explicit GradeScheme(std::vector<double> thresholds)
        : thresholds_(std::move(thresholds)) {
        if (thresholds_.empty())
            throw ConfigError("GradeScheme: needs at least one threshold");
        for (std::size_t i = 1; i < thresholds_.size(); ++i)
            if (!(thresholds_[i] > thresholds_[i - 1]))
                throw ConfigError("GradeScheme: thresholds must be strictly increasing");
    }

    const std::vector<double>& thresholds() const { return thresholds_; }
    std::size_t num_brackets() const { return thresholds_.size() + 1; }

    void validate_against(const AbilityDomain& domain) const {
        if (!(thresholds_.front() > domain.p_lo) ||
            !(thresholds_.back() < domain.p_hi))
            throw ConfigError("GradeScheme: thresholds must lie strictly inside the ability domain");
    }

    std::size_t bracket_index(double p, const AbilityDomain& domain) const {
        if (p < domain.p_lo || p > domain.p_hi)
            throw DegenerateAbilityError("bracket_index: ability outside domain");
        std::size_t i = 0;
        while (i < thresholds_.size() && p >= thresholds_[i]) ++i;
        return i;
    }

    double lower_edge(std::size_t bracket, const AbilityDomain& domain) const {
        return bracket == 0 ? domain.p_lo : thresholds_[bracket - 1];
    }

    double upper_edge(std::size_t bracket, const AbilityDomain& domain) const {
        return bracket == thresholds_.size() ? domain.p_hi : thresholds_[bracket];
    }

    // The two alternative hypotheses tested against an ability in `bracket`.
    std::pair<double, double> alternatives(std::size_t bracket,
                                           const AbilityDomain& domain) const {
        return {lower_edge(bracket, domain), upper_edge(bracket, domain)};
    }

    // Grade threshold closest to p (domain edges excluded).
    double nearest_threshold(double p) const {
        double best = thresholds_.front();
        for (double u : thresholds_)
            if (std::abs(u - p) < std::abs(best - p)) best = u;
        return best;
    }

private:
    std::vector<double> thresholds_;
};

}  // namespace adaptest

#endif  // ADAPTEST_GRADES_HPP
