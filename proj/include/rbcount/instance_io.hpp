#ifndef RBCOUNT_INSTANCE_IO_HPP
#define RBCOUNT_INSTANCE_IO_HPP

// Line-oriented instance format:
//
//   rbcsp 1
//   n <n> d <d> k <k> m <m>
//   c <v1> ... <vk>        one per constraint, sorted 0-based variables
//   g <a1> ... <ak>        its nogoods, 0-based values
//
// Lines starting with '#' are comments.

#include "rbcount/rb_model.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace rbcount {

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

inline void write_instance(const Instance& instance, std::ostream& out) {
    out << "rbcsp 1\n";
    if (instance.provenance) {
        const RbParams& p = instance.provenance->params;
        const DerivedSizes& s = instance.provenance->sizes;
        out << "# model-rb k=" << p.k << " n=" << p.n << " alpha=" << p.alpha << " r=" << p.r
            << " p=" << p.p << " seed=" << p.seed << "\n";
        out << "# derived d=" << s.d << " m=" << s.m << " t_nogoods=" << s.t_nogoods
            << " p_eff=" << s.p_eff() << "\n";
    }
    out << "n " << instance.n << " d " << instance.d << " k " << instance.k << " m "
        << instance.constraints.size() << "\n";
    for (const Constraint& c : instance.constraints) {
        out << 'c';
        for (Var v : c.scope) out << ' ' << v;
        out << '\n';
        for (const Tuple& tuple : c.nogoods) {
            out << 'g';
            for (Value v : tuple) out << ' ' << v;
            out << '\n';
        }
    }
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) fields.push_back(line.substr(i, j - i));
        i = j;
    }
    return fields;
}

inline std::uint64_t parse_uint(std::string_view field, std::size_t line) {
    std::uint64_t value = 0;
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw ParseError(line, "expected a non-negative integer, got '" + std::string(field) + "'");
    }
    return value;
}

}  // namespace detail

inline Instance read_instance(std::istream& in) {
    Instance instance;
    std::string raw;
    std::size_t line_no = 0;
    bool have_magic = false;
    bool have_header = false;
    std::uint64_t declared_m = 0;
    std::unordered_set<std::uint64_t> seen;

    while (std::getline(in, raw)) {
        ++line_no;
        const auto fields = detail::split_fields(raw);
        if (fields.empty() || fields[0].front() == '#') continue;

        if (!have_magic) {
            if (fields.size() != 2 || fields[0] != "rbcsp") throw ParseError(line_no, "missing 'rbcsp' magic line");
            if (fields[1] != "1") throw ParseError(line_no, "unsupported format version " + std::string(fields[1]));
            have_magic = true;
            continue;
        }
        if (!have_header) {
            if (fields.size() != 8 || fields[0] != "n" || fields[2] != "d" || fields[4] != "k" || fields[6] != "m") {
                throw ParseError(line_no, "expected 'n <n> d <d> k <k> m <m>'");
            }
            instance.n = static_cast<std::uint32_t>(detail::parse_uint(fields[1], line_no));
            instance.d = static_cast<std::uint32_t>(detail::parse_uint(fields[3], line_no));
            instance.k = static_cast<std::uint32_t>(detail::parse_uint(fields[5], line_no));
            declared_m = detail::parse_uint(fields[7], line_no);
            if (instance.d < 1) throw ParseError(line_no, "domain size must be positive");
            if (instance.k < 1 || instance.k > instance.n) throw ParseError(line_no, "k must lie in [1, n]");
            try {
                checked_power(instance.d, instance.k);
            } catch (const InvalidModel& e) {
                throw ParseError(line_no, e.what());
            }
            have_header = true;
            continue;
        }

        const std::size_t arity = fields.size() - 1;
        if (fields[0] == "c") {
            if (arity != instance.k) throw ParseError(line_no, "scope has wrong arity");
            Constraint c;
            for (std::size_t j = 1; j < fields.size(); ++j) {
                const auto v = detail::parse_uint(fields[j], line_no);
                if (v >= instance.n) throw ParseError(line_no, "variable index out of range");
                if (!c.scope.empty() && v <= c.scope.back()) throw ParseError(line_no, "scope not strictly increasing");
                c.scope.push_back(static_cast<Var>(v));
            }
            instance.constraints.push_back(std::move(c));
            seen.clear();
        } else if (fields[0] == "g") {
            if (instance.constraints.empty()) throw ParseError(line_no, "nogood before any constraint");
            if (arity != instance.k) throw ParseError(line_no, "nogood has wrong arity");
            Tuple tuple;
            for (std::size_t j = 1; j < fields.size(); ++j) {
                const auto v = detail::parse_uint(fields[j], line_no);
                if (v >= instance.d) throw ParseError(line_no, "value index out of range");
                tuple.push_back(static_cast<Value>(v));
            }
            if (!seen.insert(tuple_code(tuple, instance.d)).second) throw ParseError(line_no, "duplicate nogood");
            instance.constraints.back().nogoods.push_back(std::move(tuple));
        } else {
            throw ParseError(line_no, "unknown record '" + std::string(fields[0]) + "'");
        }
    }
    if (!have_magic) throw ParseError(line_no, "empty input");
    if (!have_header) throw ParseError(line_no, "missing size header");
    if (instance.constraints.size() != declared_m) {
        throw ParseError(line_no, "header declares " + std::to_string(declared_m) + " constraints, found " +
                                      std::to_string(instance.constraints.size()));
    }
    return instance;
}

}  // namespace rbcount

#endif  // RBCOUNT_INSTANCE_IO_HPP
