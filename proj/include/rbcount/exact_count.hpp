#ifndef RBCOUNT_EXACT_COUNT_HPP
#define RBCOUNT_EXACT_COUNT_HPP

#include "rbcount/bigint.hpp"
#include "rbcount/rb_model.hpp"
#include "rbcount/theory.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rbcount {

class CapExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class CountMethod { brute, backtrack };

inline std::string_view to_string(CountMethod method) {
    return method == CountMethod::brute ? "brute" : "backtrack";
}

struct CountResult {
    BigCount count;
    std::uint64_t nodes_visited = 0;
    CountMethod method = CountMethod::backtrack;
};

struct Decision {
    bool answer = false;
    CountResult count;
    std::uint32_t threshold_divisor = 2;
};

inline constexpr std::uint64_t default_enumeration_cap = 100'000'000;

/// Nogood membership for one constraint: a flat bitmap over tuple codes when
/// d^k is small, a sorted code list with binary search otherwise.
class NogoodTable {
public:
    static constexpr std::uint64_t bitmap_limit = std::uint64_t{1} << 24;

    NogoodTable(const Constraint& constraint, std::uint32_t d) {
        const std::uint64_t tuples = checked_power(d, static_cast<std::uint32_t>(constraint.scope.size()));
        std::vector<std::uint64_t> codes;
        codes.reserve(constraint.nogoods.size());
        for (const Tuple& t : constraint.nogoods) codes.push_back(tuple_code(t, d));
        if (tuples <= bitmap_limit) {
            bitmap_.assign((tuples + 63) / 64, 0);
            for (auto code : codes) bitmap_[code >> 6] |= std::uint64_t{1} << (code & 63);
        } else {
            std::sort(codes.begin(), codes.end());
            sorted_ = std::move(codes);
        }
    }

    bool contains(std::uint64_t code) const {
        if (!bitmap_.empty()) return (bitmap_[code >> 6] >> (code & 63)) & 1;
        return std::binary_search(sorted_.begin(), sorted_.end(), code);
    }

private:
    std::vector<std::uint64_t> bitmap_;
    std::vector<std::uint64_t> sorted_;
};

/// Enumerates all d^n assignments. Independent oracle for count_backtrack.
inline CountResult count_brute(const Instance& instance, std::uint64_t cap = default_enumeration_cap) {
    const BigCount total = pow_big(instance.d, instance.n);
    if (total > cap) {
        throw CapExceeded("brute-force enumeration of " + total.str() + " assignments exceeds cap " +
                          std::to_string(cap));
    }
    std::vector<NogoodTable> tables;
    tables.reserve(instance.constraints.size());
    for (const Constraint& c : instance.constraints) tables.emplace_back(c, instance.d);

    CountResult result;
    result.method = CountMethod::brute;
    std::uint64_t solutions = 0;
    std::vector<Value> values(instance.n, 0);
    const auto limit = total.convert_to<std::uint64_t>();
    for (std::uint64_t index = 0; index < limit; ++index) {
        bool ok = true;
        for (std::size_t ci = 0; ci < instance.constraints.size() && ok; ++ci) {
            std::uint64_t code = 0;
            for (Var v : instance.constraints[ci].scope) code = code * instance.d + values[v];
            ok = !tables[ci].contains(code);
        }
        if (ok) ++solutions;
        ++result.nodes_visited;
        for (std::uint32_t i = 0; i < instance.n; ++i) {
            if (++values[i] < instance.d) break;
            values[i] = 0;
        }
    }
    result.count = solutions;
    return result;
}

namespace detail {

/// Depth-first counter over a static variable order (degree descending,
/// index ascending). Live domains are bitsets. When a constraint drops to one
/// unassigned variable, the values it forbids are removed from that variable's
/// domain, so a constraint is settled no later than the moment its scope is
/// fully assigned. Once no constraint has two or more unassigned variables,
/// the remaining variables are independent and the subtree contributes the
/// product of their domain sizes (d^#unassigned when nothing was filtered).
class Backtracker {
public:
    Backtracker(const Instance& instance, std::uint64_t node_cap)
        : inst_(instance), node_cap_(node_cap), words_((instance.d + 63) / 64) {
        const std::uint32_t n = inst_.n;
        const std::size_t mcount = inst_.constraints.size();
        incident_.assign(n, {});
        for (std::uint32_t ci = 0; ci < mcount; ++ci) {
            const auto& scope = inst_.constraints[ci].scope;
            for (std::uint32_t j = 0; j < scope.size(); ++j) incident_[scope[j]].push_back({ci, j});
        }
        order_.resize(n);
        std::iota(order_.begin(), order_.end(), 0u);
        std::stable_sort(order_.begin(), order_.end(),
                         [&](Var a, Var b) { return incident_[a].size() > incident_[b].size(); });

        domains_.assign(static_cast<std::size_t>(n) * words_, 0);
        for (std::uint32_t v = 0; v < n; ++v) {
            for (std::uint32_t val = 0; val < inst_.d; ++val) word(v, val) |= bit(val);
        }
        assigned_.assign(n, false);
        values_.assign(n, 0);
        unassigned_.resize(mcount);
        for (std::uint32_t ci = 0; ci < mcount; ++ci) {
            unassigned_[ci] = static_cast<std::uint32_t>(inst_.constraints[ci].scope.size());
            if (unassigned_[ci] >= 2) ++coupled_;
        }
        build_forbid_tables();
    }

    CountResult run() {
        CountResult result;
        result.method = CountMethod::backtrack;
        bool consistent = true;
        // Unary constraints filter before the search starts.
        for (std::uint32_t ci = 0; ci < unassigned_.size() && consistent; ++ci) {
            if (unassigned_[ci] == 1) consistent = filter(ci);
        }
        trail_.clear();
        trail_vars_.clear();
        if (consistent) {
            search(0);
        } else {
            ++nodes_;
        }
        flush();
        result.count = total_;
        result.nodes_visited = nodes_;
        return result;
    }

private:
    struct Incidence {
        std::uint32_t constraint;
        std::uint32_t position;
    };

    static std::uint64_t bit(std::uint32_t val) { return std::uint64_t{1} << (val & 63); }
    std::uint64_t& word(Var v, std::uint32_t val) { return domains_[static_cast<std::size_t>(v) * words_ + (val >> 6)]; }
    std::uint64_t* domain(Var v) { return domains_.data() + static_cast<std::size_t>(v) * words_; }

    std::uint64_t domain_size(Var v) {
        const std::uint64_t* dom = domain(v);
        std::uint64_t size = 0;
        for (std::uint32_t w = 0; w < words_; ++w) size += std::popcount(dom[w]);
        return size;
    }

    // Per constraint and scope position, the forbidden-value bitset for each
    // combination of the other positions' values. Skipped when too large; the
    // nogood list is scanned instead.
    void build_forbid_tables() {
        constexpr std::uint64_t table_limit = 1u << 14;
        forbid_.resize(inst_.constraints.size());
        for (std::size_t ci = 0; ci < inst_.constraints.size(); ++ci) {
            const Constraint& c = inst_.constraints[ci];
            const auto arity = static_cast<std::uint32_t>(c.scope.size());
            std::uint64_t rest = 1;
            bool small = true;
            for (std::uint32_t i = 1; i < arity && small; ++i) {
                rest *= inst_.d;
                small = rest <= table_limit;
            }
            if (!small) continue;
            forbid_[ci].assign(arity, std::vector<std::uint64_t>(rest * words_, 0));
            for (const Tuple& t : c.nogoods) {
                for (std::uint32_t j = 0; j < arity; ++j) {
                    std::uint64_t code = 0;
                    for (std::uint32_t i = 0; i < arity; ++i) {
                        if (i != j) code = code * inst_.d + t[i];
                    }
                    forbid_[ci][j][code * words_ + (t[j] >> 6)] |= bit(t[j]);
                }
            }
        }
    }

    void save(Var v) {
        trail_vars_.push_back(v);
        const std::uint64_t* dom = domain(v);
        trail_.insert(trail_.end(), dom, dom + words_);
    }

    void restore(std::size_t mark) {
        while (trail_vars_.size() > mark) {
            const Var v = trail_vars_.back();
            trail_vars_.pop_back();
            std::copy(trail_.end() - words_, trail_.end(), domain(v));
            trail_.resize(trail_.size() - words_);
        }
    }

    // Removes from the single unassigned variable of constraint ci the values
    // its nogoods forbid. Returns false on a wipe-out.
    bool filter(std::uint32_t ci) {
        const Constraint& c = inst_.constraints[ci];
        const auto arity = static_cast<std::uint32_t>(c.scope.size());
        std::uint32_t free_pos = 0;
        while (assigned_[c.scope[free_pos]]) ++free_pos;
        const Var target = c.scope[free_pos];
        save(target);
        std::uint64_t* dom = domain(target);
        if (!forbid_[ci].empty()) {
            std::uint64_t code = 0;
            for (std::uint32_t i = 0; i < arity; ++i) {
                if (i != free_pos) code = code * inst_.d + values_[c.scope[i]];
            }
            const std::uint64_t* mask = forbid_[ci][free_pos].data() + code * words_;
            for (std::uint32_t w = 0; w < words_; ++w) dom[w] &= ~mask[w];
        } else {
            for (const Tuple& t : c.nogoods) {
                bool match = true;
                for (std::uint32_t i = 0; i < arity && match; ++i) {
                    if (i != free_pos) match = t[i] == values_[c.scope[i]];
                }
                if (match) dom[t[free_pos] >> 6] &= ~bit(t[free_pos]);
            }
        }
        for (std::uint32_t w = 0; w < words_; ++w) {
            if (dom[w] != 0) return true;
        }
        return false;
    }

    void add_product(std::size_t depth) {
        std::uint64_t small = 1;
        bool fits = true;
        BigCount big = 1;
        for (std::size_t i = depth; i < order_.size(); ++i) {
            const std::uint64_t size = domain_size(order_[i]);
            if (size == 0) return;
            std::uint64_t next = 0;
            if (!fits) {
                big *= size;
            } else if (__builtin_mul_overflow(small, size, &next)) {
                fits = false;
                big = BigCount(small) * size;
            } else {
                small = next;
            }
        }
        if (fits) {
            accumulator_ += small;
            if (accumulator_ >> 120) flush();
        } else {
            total_ += big;
        }
    }

    void flush() {
        if (accumulator_ == 0) return;
        BigCount high = static_cast<std::uint64_t>(accumulator_ >> 64);
        total_ += (high << 64) + static_cast<std::uint64_t>(accumulator_);
        accumulator_ = 0;
    }

    void search(std::size_t depth) {
        ++nodes_;
        if (node_cap_ != 0 && nodes_ > node_cap_) {
            throw CapExceeded("backtracking exceeded node cap " + std::to_string(node_cap_));
        }
        if (coupled_ == 0) {
            add_product(depth);
            return;
        }
        const Var x = order_[depth];
        const auto& touching = incident_[x];
        // x is assigned from here on, so filtering never targets its domain.
        assigned_[x] = true;
        for (std::uint32_t w = 0; w < words_; ++w) {
            std::uint64_t bits = domain(x)[w];
            while (bits != 0) {
                const auto val = static_cast<Value>(w * 64 + std::countr_zero(bits));
                bits &= bits - 1;
                values_[x] = val;
                const std::size_t mark = trail_vars_.size();
                std::size_t touched = 0;
                bool ok = true;
                for (; touched < touching.size() && ok; ++touched) {
                    const std::uint32_t ci = touching[touched].constraint;
                    const std::uint32_t left = --unassigned_[ci];
                    if (left == 1) {
                        --coupled_;
                        ok = filter(ci);
                    }
                }
                if (ok) search(depth + 1);
                for (std::size_t i = 0; i < touched; ++i) {
                    const std::uint32_t ci = touching[i].constraint;
                    if (unassigned_[ci]++ == 1) ++coupled_;
                }
                restore(mark);
            }
        }
        assigned_[x] = false;
    }

    const Instance& inst_;
    std::uint64_t node_cap_;
    std::uint32_t words_;
    std::vector<std::vector<Incidence>> incident_;
    std::vector<Var> order_;
    std::vector<std::uint64_t> domains_;
    std::vector<bool> assigned_;
    std::vector<Value> values_;
    std::vector<std::uint32_t> unassigned_;
    std::uint64_t coupled_ = 0;
    std::vector<std::vector<std::vector<std::uint64_t>>> forbid_;
    std::vector<std::uint64_t> trail_;
    std::vector<Var> trail_vars_;
    std::uint64_t nodes_ = 0;
    unsigned __int128 accumulator_ = 0;
    BigCount total_ = 0;
};

}  // namespace detail

/// Exact count by pruned depth-first search. node_cap = 0 means unlimited.
inline CountResult count_backtrack(const Instance& instance, std::uint64_t node_cap = 0) {
    detail::Backtracker engine(instance, node_cap);
    return engine.run();
}

/// Exact test of count >= d^(n/divisor) as count^divisor >= d^n.
inline Decision decide_at_least(const CountResult& count, std::uint32_t d, std::uint32_t n, Divisor divisor) {
    if (divisor.is_infinite()) throw std::invalid_argument("decide_at_least needs a finite divisor");
    Decision decision;
    decision.count = count;
    decision.threshold_divisor = divisor.value();
    decision.answer = boost::multiprecision::pow(count.count, divisor.value()) >= pow_big(d, n);
    return decision;
}

inline Decision decide_at_least(const Instance& instance, Divisor divisor) {
    return decide_at_least(count_backtrack(instance), instance.d, instance.n, divisor);
}

}  // namespace rbcount

#endif  // RBCOUNT_EXACT_COUNT_HPP
