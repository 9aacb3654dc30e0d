#ifndef RBCOUNT_BIGINT_HPP
#define RBCOUNT_BIGINT_HPP

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

namespace rbcount {

/// Exact non-negative solution counts. d^n outgrows 64 bits at desk scale.
using BigCount = boost::multiprecision::cpp_int;

inline BigCount pow_big(std::uint64_t base, std::uint64_t exponent) {
    return boost::multiprecision::pow(BigCount(base), static_cast<unsigned>(exponent));
}

/// Natural log of a non-negative big integer; -inf for zero.
inline double log_big(const BigCount& x) {
    if (x <= 0) {
        return -std::numeric_limits<double>::infinity();
    }
    const auto top = static_cast<long>(boost::multiprecision::msb(x));
    if (top < 1000) {
        return std::log(x.convert_to<double>());
    }
    const long shift = top - 62;
    const BigCount head = x >> shift;
    return std::log(head.convert_to<double>()) + static_cast<double>(shift) * std::log(2.0);
}

inline double to_double(const BigCount& x) {
    if (x <= 0) {
        return 0.0;
    }
    if (boost::multiprecision::msb(x) >= 1024) {
        return std::numeric_limits<double>::infinity();
    }
    return x.convert_to<double>();
}

inline std::string to_decimal(const BigCount& x) { return x.str(); }

/// Smallest c with c^t >= x (for x >= 0, t >= 1).
inline BigCount integer_root_ceil(const BigCount& x, unsigned t) {
    if (t == 0) {
        throw std::invalid_argument("integer_root_ceil: exponent must be positive");
    }
    if (x <= 1) {
        return x < 0 ? BigCount(0) : x;
    }
    // c^t >= x holds at hi = 2^(ceil(bits/t)).
    const auto bits = static_cast<unsigned>(boost::multiprecision::msb(x)) + 1;
    BigCount lo = 0;
    BigCount hi = BigCount(1) << ((bits + t - 1) / t);
    while (lo + 1 < hi) {
        BigCount mid = (lo + hi) >> 1;
        if (boost::multiprecision::pow(mid, t) >= x) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

}  // namespace rbcount

#endif  // RBCOUNT_BIGINT_HPP
