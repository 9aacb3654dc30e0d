#ifndef RBCOUNT_THEORY_HPP
#define RBCOUNT_THEORY_HPP

// Closed-form quantities for Model RB: critical points, first and second
// moments of the solution count, the interval estimator and the h(s) exponent.
// Every formula consumes the realized tightness p_eff = t_nogoods / d^k.

#include "rbcount/bigint.hpp"
#include "rbcount/rb_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace rbcount {

/// The divisor t of the threshold d^(n/t); infinity recovers plain satisfiability.
class Divisor {
public:
    constexpr explicit Divisor(std::uint32_t value) : value_(value) {
        if (value < 2) throw std::invalid_argument("threshold divisor must be >= 2");
    }
    static constexpr Divisor infinite() { return Divisor(); }

    constexpr bool is_infinite() const { return value_ == 0; }
    constexpr std::uint32_t value() const { return value_; }
    /// 1 - 1/t, or 1 for t = infinity.
    constexpr double factor() const { return is_infinite() ? 1.0 : 1.0 - 1.0 / value_; }

private:
    constexpr Divisor() = default;
    std::uint32_t value_ = 0;
};

inline double critical_tightness(double alpha, double r, Divisor divisor) {
    return -std::expm1(-(alpha / r) * divisor.factor());
}

inline double critical_density(double alpha, double p, Divisor divisor) {
    return -alpha * divisor.factor() / std::log1p(-p);
}

struct ExpectedCount {
    double log_expected = 0;
    double expected = 0;
    bool overflow = false;
};

namespace detail {

inline double log_one_minus(double p) { return p == 0 ? 0.0 : std::log1p(-p); }

inline double log_sum_exp(const std::vector<double>& terms) {
    double peak = -std::numeric_limits<double>::infinity();
    for (double t : terms) peak = std::max(peak, t);
    if (!std::isfinite(peak)) return peak;
    double total = 0;
    for (double t : terms) total += std::exp(t - peak);
    return peak + std::log(total);
}

inline double log_choose(double n, double k) {
    if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
    return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1);
}

inline ExpectedCount from_log(double log_value) {
    ExpectedCount out;
    out.log_expected = log_value;
    out.expected = std::exp(log_value);
    out.overflow = std::isinf(out.expected);
    return out;
}

}  // namespace detail

/// E(X) = d^n (1 - p_eff)^m, the exact mean solution count of the generator.
inline ExpectedCount expected_count(std::uint64_t n, std::uint64_t d, std::uint64_t m, double p_eff) {
    return detail::from_log(static_cast<double>(n) * std::log(static_cast<double>(d)) +
                            static_cast<double>(m) * detail::log_one_minus(p_eff));
}

/// Markov bound Pr[X >= theta] <= E(X) / theta, capped at 1.
inline double markov_upper_bound(double log_expected, double log_theta) {
    return std::min(1.0, std::exp(log_expected - log_theta));
}

enum class Prediction { yes, no, critical };

inline std::string_view to_string(Prediction p) {
    switch (p) {
        case Prediction::yes: return "YES";
        case Prediction::no: return "NO";
        case Prediction::critical: return "CRITICAL";
    }
    return "?";
}

struct Estimate {
    double log_expected = 0;
    double expected = 0;
    bool overflow = false;
    double delta = 0;
    double interval_low = 0;
    double interval_high = 0;
    double log_interval_low = 0;
    double log_interval_high = 0;
    std::uint32_t divisor = 2;
    DerivedSizes sizes;
    double p_eff = 0;
    double p_cr = 0;
    double r_cr = 0;
    Prediction predicted = Prediction::critical;
};

inline constexpr double default_critical_band = 0.005;

/// AE-count: E(X) with its (1 -/+ delta) interval and the predicted side of p_cr.
inline Estimate ae_count(const RbParams& params, double delta, Divisor divisor,
                         double critical_band = default_critical_band) {
    if (!(delta > 0 && delta <= 1)) throw std::invalid_argument("delta must lie in (0, 1]");
    if (divisor.is_infinite()) throw std::invalid_argument("ae_count needs a finite divisor");
    const DerivedSizes sizes = derive_sizes(params);
    const ExpectedCount moment = expected_count(params.n, sizes.d, sizes.m, sizes.p_eff());

    Estimate est;
    est.log_expected = moment.log_expected;
    est.expected = moment.expected;
    est.overflow = moment.overflow;
    est.delta = delta;
    est.log_interval_low = std::log1p(-delta) + moment.log_expected;
    est.log_interval_high = std::log1p(delta) + moment.log_expected;
    est.interval_low = (1 - delta) * moment.expected;
    est.interval_high = (1 + delta) * moment.expected;
    est.divisor = divisor.value();
    est.sizes = sizes;
    est.p_eff = sizes.p_eff();
    est.p_cr = critical_tightness(params.alpha, params.r, divisor);
    est.r_cr = critical_density(params.alpha, est.p_eff, divisor);
    if (std::abs(est.p_eff - est.p_cr) <= critical_band) {
        est.predicted = Prediction::critical;
    } else {
        est.predicted = est.p_eff < est.p_cr ? Prediction::yes : Prediction::no;
    }
    return est;
}

struct Threshold {
    double value = 0;
    double log_value = 0;
    BigCount total;  // d^n
    std::uint32_t divisor = 2;
    /// ceil(d^(n/divisor)), the least count that answers YES.
    BigCount least_count;
};

inline Threshold threshold(std::uint32_t d, std::uint32_t n, Divisor divisor) {
    if (divisor.is_infinite()) throw std::invalid_argument("threshold needs a finite divisor");
    Threshold th;
    th.log_value = static_cast<double>(n) * std::log(static_cast<double>(d)) / divisor.value();
    th.value = std::exp(th.log_value);
    th.total = pow_big(d, n);
    th.divisor = divisor.value();
    th.least_count = integer_root_ceil(th.total, divisor.value());
    return th;
}

struct SimilarityStats {
    std::uint32_t similarity_number = 0;
    double similarity_degree = 0;
    std::uint32_t hamming = 0;
};

/// Hamming distance counts differing coordinates, so S = n - ham is the
/// number of agreements.
inline SimilarityStats similarity(const Assignment& a, const Assignment& b) {
    if (a.values.size() != b.values.size()) throw std::invalid_argument("similarity: assignment lengths differ");
    SimilarityStats stats;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        if (a.values[i] != b.values[i]) ++stats.hamming;
    }
    const auto n = static_cast<std::uint32_t>(a.values.size());
    stats.similarity_number = n - stats.hamming;
    stats.similarity_degree = n == 0 ? 1.0 : static_cast<double>(stats.similarity_number) / n;
    return stats;
}

struct PairProbabilities {
    double joint_per_constraint = 0;
    double conditional_per_constraint = 0;
};

/// Exact per-constraint probabilities for two assignments agreeing on S
/// coordinates. w = C(S,k)/C(n,k) is the chance the scope lies inside the
/// agreement set; otherwise b's tuple differs from a's and survives the
/// nogood draw with probability q = ((1-p)D - 1)/(D - 1), D = d^k.
inline PairProbabilities pair_probabilities(std::uint32_t S, std::uint32_t n, std::uint32_t k, std::uint32_t d,
                                            double p_eff) {
    if (S > n) throw std::invalid_argument("pair_probabilities: S exceeds n");
    double w = 0;
    if (S >= k) {
        w = 1;
        for (std::uint32_t i = 0; i < k; ++i) w *= static_cast<double>(S - i) / static_cast<double>(n - i);
    }
    const double tuples = std::pow(static_cast<double>(d), k);
    const double q = ((1 - p_eff) * tuples - 1) / (tuples - 1);
    PairProbabilities out;
    out.conditional_per_constraint = w + (1 - w) * q;
    out.joint_per_constraint = w * (1 - p_eff) + (1 - w) * (1 - p_eff) * q;
    return out;
}

/// log E(X | a is a solution) = log sum_S C(n,S) (d-1)^(n-S) cond(S)^m.
inline double conditional_expected_count(std::uint32_t n, std::uint32_t k, std::uint32_t d, std::uint64_t m,
                                         double p_eff) {
    std::vector<double> terms;
    terms.reserve(n + 1);
    const double log_others = d > 1 ? std::log(static_cast<double>(d - 1)) : -std::numeric_limits<double>::infinity();
    for (std::uint32_t S = 0; S <= n; ++S) {
        const double cond = pair_probabilities(S, n, k, d, p_eff).conditional_per_constraint;
        double term = detail::log_choose(n, S);
        if (S < n) term += (n - S) * log_others;
        if (m > 0) term += static_cast<double>(m) * std::log(cond);
        terms.push_back(term);
    }
    return detail::log_sum_exp(terms);
}

/// E(X) / E(X | a=1), the second-moment lower bound on Pr[X >= theta].
inline double second_moment_ratio(std::uint32_t n, std::uint32_t k, std::uint32_t d, std::uint64_t m, double p_eff) {
    if (m == 0 || p_eff == 0) return 1.0;
    const double log_mean = expected_count(n, d, m, p_eff).log_expected;
    const double log_conditional = conditional_expected_count(n, k, d, m, p_eff);
    return std::min(1.0, std::exp(log_mean - log_conditional));
}

/// h(s) = [r ln(1 + p s^k / (1-p)) - alpha s] n ln n.
inline double h_eval(double s, std::uint32_t n, std::uint32_t k, double alpha, double r, double p) {
    const double nn = static_cast<double>(n);
    return (r * std::log1p(p * std::pow(s, k) / (1 - p)) - alpha * s) * nn * std::log(nn);
}

}  // namespace rbcount

#endif  // RBCOUNT_THEORY_HPP
