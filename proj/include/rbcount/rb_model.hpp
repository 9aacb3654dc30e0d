#ifndef RBCOUNT_RB_MODEL_HPP
#define RBCOUNT_RB_MODEL_HPP

#include "rbcount/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace rbcount {

using Var = std::uint32_t;
using Value = std::uint32_t;
using Tuple = std::vector<Value>;

/// Raised for parameter sets or instances that break a structural invariant.
class InvalidModel : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The Model RB coordinates (k, n, alpha, r, p) plus the generator seed.
struct RbParams {
    int k = 2;
    int n = 2;
    double alpha = 1.0;
    double r = 1.0;
    double p = 0.25;
    std::uint64_t seed = 0;

    bool operator==(const RbParams&) const = default;
};

struct DerivedSizes {
    std::uint32_t d = 0;
    std::uint64_t m = 0;
    std::uint64_t t_nogoods = 0;
    /// d^k, the number of value tuples per constraint.
    std::uint64_t tuples = 0;

    double p_eff() const { return static_cast<double>(t_nogoods) / static_cast<double>(tuples); }

    bool operator==(const DerivedSizes&) const = default;
};

struct Constraint {
    std::vector<Var> scope;
    std::vector<Tuple> nogoods;

    bool operator==(const Constraint&) const = default;
};

struct Provenance {
    RbParams params;
    DerivedSizes sizes;

    bool operator==(const Provenance&) const = default;
};

struct Instance {
    std::uint32_t n = 0;
    std::uint32_t d = 0;
    std::uint32_t k = 0;
    std::vector<Constraint> constraints;
    std::optional<Provenance> provenance;

    bool operator==(const Instance&) const = default;
};

struct Assignment {
    std::vector<Value> values;

    bool operator==(const Assignment&) const = default;
};

/// Round half up. Decimal inputs such as 0.3 * 25 sit a few ulps below the
/// half; the 1e-9 slack puts them back on it.
inline std::uint64_t round_half_up(double x) {
    return static_cast<std::uint64_t>(std::floor(x + 0.5 + 1e-9));
}

/// d^k with overflow detection; throws past 2^62.
inline std::uint64_t checked_power(std::uint64_t base, std::uint32_t exponent) {
    constexpr std::uint64_t limit = std::uint64_t{1} << 62;
    std::uint64_t result = 1;
    for (std::uint32_t i = 0; i < exponent; ++i) {
        if (base != 0 && result > limit / base) {
            throw InvalidModel("value tuple space d^k exceeds 2^62");
        }
        result *= base;
    }
    return result;
}

inline void check_params(const RbParams& params) {
    std::vector<std::string> problems;
    if (params.k < 2) problems.emplace_back("k must be >= 2");
    if (params.n < 2) problems.emplace_back("n must be >= 2");
    if (!(params.alpha > 0)) problems.emplace_back("alpha must be > 0");
    if (!(params.r > 0)) problems.emplace_back("r must be > 0");
    if (!(params.p > 0 && params.p < 1)) problems.emplace_back("p must lie in (0, 1)");
    if (params.k > params.n) problems.emplace_back("k must not exceed n");
    if (!problems.empty()) {
        std::string message = "invalid Model RB parameters:";
        for (const auto& item : problems) message += " " + item + ";";
        throw InvalidModel(message);
    }
}

/// Rounded domain size, constraint count and nogoods per constraint.
inline DerivedSizes derive_sizes(const RbParams& params) {
    check_params(params);
    const double n = params.n;
    DerivedSizes sizes;
    sizes.d = static_cast<std::uint32_t>(std::max<std::uint64_t>(2, round_half_up(std::pow(n, params.alpha))));
    sizes.m = std::max<std::uint64_t>(1, round_half_up(params.r * n * std::log(n)));
    sizes.tuples = checked_power(sizes.d, static_cast<std::uint32_t>(params.k));
    const auto raw_t = round_half_up(params.p * static_cast<double>(sizes.tuples));
    sizes.t_nogoods = std::clamp<std::uint64_t>(raw_t, 1, sizes.tuples - 1);
    return sizes;
}

/// Mixed-radix code of a value tuple, first position most significant.
inline std::uint64_t tuple_code(std::span<const Value> tuple, std::uint32_t d) {
    std::uint64_t code = 0;
    for (Value v : tuple) code = code * d + v;
    return code;
}

inline Tuple decode_tuple(std::uint64_t code, std::uint32_t d, std::uint32_t k) {
    Tuple tuple(k);
    for (std::uint32_t i = k; i-- > 0;) {
        tuple[i] = static_cast<Value>(code % d);
        code /= d;
    }
    return tuple;
}

/// Generates an instance with explicit sizes. Constraint i draws its scope from
/// stream 2i and its nogoods from stream 2i+1 of `seed`, so the output does not
/// depend on generation order.
inline Instance generate_sized(std::uint32_t n, std::uint32_t d, std::uint32_t k, std::uint64_t m,
                               std::uint64_t t_nogoods, std::uint64_t seed) {
    if (k < 1 || k > n) throw InvalidModel("arity must lie in [1, n]");
    if (d < 1) throw InvalidModel("domain size must be positive");
    const std::uint64_t tuples = checked_power(d, k);
    if (t_nogoods >= tuples) throw InvalidModel("t_nogoods must be below d^k");

    Instance instance;
    instance.n = n;
    instance.d = d;
    instance.k = k;
    instance.constraints.resize(m);
    for (std::uint64_t i = 0; i < m; ++i) {
        Constraint& c = instance.constraints[i];
        DrawStream scope_rng(seed, 2 * i);
        c.scope = sample_subset(scope_rng, n, k);

        DrawStream nogood_rng(seed, 2 * i + 1);
        std::unordered_set<std::uint64_t> seen;
        std::vector<std::uint64_t> codes;
        codes.reserve(t_nogoods);
        while (codes.size() < t_nogoods) {
            const std::uint64_t code = nogood_rng.below(tuples);
            if (seen.insert(code).second) codes.push_back(code);
        }
        std::sort(codes.begin(), codes.end());
        c.nogoods.reserve(codes.size());
        for (auto code : codes) c.nogoods.push_back(decode_tuple(code, d, k));
    }
    return instance;
}

inline Instance generate(const RbParams& params) {
    const DerivedSizes sizes = derive_sizes(params);
    Instance instance = generate_sized(static_cast<std::uint32_t>(params.n), sizes.d,
                                       static_cast<std::uint32_t>(params.k), sizes.m, sizes.t_nogoods,
                                       params.seed);
    instance.provenance = Provenance{params, sizes};
    return instance;
}

/// Throws InvalidModel describing the first broken invariant.
inline void validate(const Instance& instance) {
    const auto fail = [](std::size_t index, const std::string& what) {
        throw InvalidModel("constraint " + std::to_string(index) + ": " + what);
    };
    if (instance.d < 1) throw InvalidModel("domain size must be positive");
    for (std::size_t ci = 0; ci < instance.constraints.size(); ++ci) {
        const Constraint& c = instance.constraints[ci];
        if (c.scope.size() != instance.k) fail(ci, "scope arity differs from k");
        for (std::size_t j = 0; j < c.scope.size(); ++j) {
            if (c.scope[j] >= instance.n) fail(ci, "scope index out of range");
            if (j > 0 && c.scope[j] <= c.scope[j - 1]) fail(ci, "scope not strictly increasing");
        }
        std::unordered_set<std::uint64_t> seen;
        for (const Tuple& tuple : c.nogoods) {
            if (tuple.size() != instance.k) fail(ci, "nogood arity differs from k");
            for (Value v : tuple) {
                if (v >= instance.d) fail(ci, "nogood value out of range");
            }
            if (!seen.insert(tuple_code(tuple, instance.d)).second) fail(ci, "duplicate nogood");
        }
    }
}

inline bool satisfies(const Constraint& constraint, const Assignment& assignment) {
    Tuple projection(constraint.scope.size());
    for (std::size_t j = 0; j < constraint.scope.size(); ++j) {
        projection[j] = assignment.values[constraint.scope[j]];
    }
    return std::find(constraint.nogoods.begin(), constraint.nogoods.end(), projection) ==
           constraint.nogoods.end();
}

inline bool satisfies(const Instance& instance, const Assignment& assignment) {
    if (assignment.values.size() != instance.n) {
        throw InvalidModel("assignment length differs from n");
    }
    return std::all_of(instance.constraints.begin(), instance.constraints.end(),
                       [&](const Constraint& c) { return satisfies(c, assignment); });
}

struct Applicability {
    bool alpha_above_inverse_k = false;     // alpha > 1/k
    bool density_condition = false;         // k * exp(-alpha / r) >= 1
    bool tightness_condition = false;       // k >= 1 / (1 - p)
    double density_value = 0;               // k * exp(-alpha / r)
    double tightness_bound = 0;             // 1 / (1 - p)
    bool tightness_theorem = false;         // hypotheses of the p_cr threshold
    bool density_theorem = false;           // hypotheses of the r_cr threshold
    bool estimator_theorem = false;         // hypotheses of the interval estimate
};

inline Applicability theorem_applicability(const RbParams& params) {
    Applicability report;
    report.alpha_above_inverse_k = params.alpha > 1.0 / params.k;
    report.density_value = params.k * std::exp(-params.alpha / params.r);
    report.density_condition = report.density_value >= 1.0;
    report.tightness_bound = 1.0 / (1.0 - params.p);
    report.tightness_condition = params.k >= report.tightness_bound;
    report.tightness_theorem = report.alpha_above_inverse_k && report.density_condition;
    report.density_theorem = report.alpha_above_inverse_k && report.tightness_condition;
    report.estimator_theorem = report.tightness_theorem || report.density_theorem;
    return report;
}

struct ModelBCheck {
    std::vector<std::string> violations;
    std::uint64_t m = 0;
    std::uint64_t t = 0;

    bool ok() const { return violations.empty(); }
};

/// Checks a Model B tuple (k, n, d, p1, p2) and reports its derived m and t.
/// Model B instances themselves are never generated.
inline ModelBCheck validate_model_b(int k, int n, int d, double p1, double p2) {
    ModelBCheck check;
    if (k < 2) check.violations.emplace_back("k >= 2");
    if (n < 2) check.violations.emplace_back("n >= 2");
    if (d < 2) check.violations.emplace_back("d >= 2");
    if (!(p1 > 0 && p1 <= 1)) check.violations.emplace_back("1 >= p1 > 0");
    if (!(p2 > 0 && p2 < 1)) check.violations.emplace_back("1 > p2 > 0");
    if (k > n && k >= 2 && n >= 2) check.violations.emplace_back("k <= n");
    if (k >= 1 && n >= k && d >= 1) {
        double scopes = 1;
        for (int i = 0; i < k; ++i) scopes = scopes * (n - i) / (i + 1);
        check.m = round_half_up(p1 * scopes);
        check.t = round_half_up(p2 * std::pow(static_cast<double>(d), k));
    }
    return check;
}

}  // namespace rbcount

#endif  // RBCOUNT_RB_MODEL_HPP
