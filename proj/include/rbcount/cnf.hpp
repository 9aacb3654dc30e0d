#ifndef RBCOUNT_CNF_HPP
#define RBCOUNT_CNF_HPP

#include "rbcount/rb_model.hpp"

#include <cstdint>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rbcount {

using Literal = std::int32_t;
using Clause = std::vector<Literal>;

struct Cnf {
    std::uint32_t num_vars = 0;
    std::vector<Clause> clauses;

    bool operator==(const Cnf&) const = default;
};

class DimacsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Boolean variable for "variable i takes value v".
inline Literal direct_literal(Var i, Value v, std::uint32_t d) {
    return static_cast<Literal>(static_cast<std::uint64_t>(i) * d + v + 1);
}

/// Direct encoding: at-least-one and pairwise at-most-one clauses per CSP
/// variable, one blocking clause per nogood. CNF models correspond one to one
/// with CSP solutions.
inline Cnf encode_direct(const Instance& instance) {
    const std::uint64_t vars = static_cast<std::uint64_t>(instance.n) * instance.d;
    if (vars > static_cast<std::uint64_t>(INT32_MAX)) throw InvalidModel("n*d exceeds the DIMACS literal range");
    Cnf cnf;
    cnf.num_vars = static_cast<std::uint32_t>(vars);
    const std::uint32_t d = instance.d;
    for (Var i = 0; i < instance.n; ++i) {
        Clause at_least_one;
        for (Value v = 0; v < d; ++v) at_least_one.push_back(direct_literal(i, v, d));
        cnf.clauses.push_back(std::move(at_least_one));
    }
    for (Var i = 0; i < instance.n; ++i) {
        for (Value v = 0; v < d; ++v) {
            for (Value w = v + 1; w < d; ++w) {
                cnf.clauses.push_back({-direct_literal(i, v, d), -direct_literal(i, w, d)});
            }
        }
    }
    for (const Constraint& c : instance.constraints) {
        for (const Tuple& t : c.nogoods) {
            Clause block;
            for (std::size_t j = 0; j < c.scope.size(); ++j) block.push_back(-direct_literal(c.scope[j], t[j], d));
            cnf.clauses.push_back(std::move(block));
        }
    }
    return cnf;
}

inline void write_dimacs(const Cnf& cnf, std::ostream& out, const std::vector<std::string>& comments = {}) {
    for (const auto& line : comments) out << "c " << line << '\n';
    out << "p cnf " << cnf.num_vars << ' ' << cnf.clauses.size() << '\n';
    for (const Clause& clause : cnf.clauses) {
        for (Literal lit : clause) out << lit << ' ';
        out << "0\n";
    }
}

inline Cnf read_dimacs(std::istream& in) {
    Cnf cnf;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::uint64_t declared = 0;
    Clause current;
    const auto fail = [&](const std::string& what) {
        throw DimacsError("line " + std::to_string(line_no) + ": " + what);
    };

    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string token;
        if (!(fields >> token)) continue;
        if (token == "c") continue;
        if (!have_header) {
            std::string format;
            long long vars = -1;
            long long count = -1;
            std::string extra;
            if (token != "p" || !(fields >> format >> vars >> count) || format != "cnf" || vars < 0 || count < 0 ||
                vars > INT32_MAX || (fields >> extra)) {
                fail("malformed header, expected 'p cnf <vars> <clauses>'");
            }
            cnf.num_vars = static_cast<std::uint32_t>(vars);
            declared = static_cast<std::uint64_t>(count);
            have_header = true;
            continue;
        }
        if (token == "p") fail("duplicate header");
        do {
            char* end = nullptr;
            const long long lit = std::strtoll(token.c_str(), &end, 10);
            if (end == token.c_str() || *end != '\0') fail("bad literal '" + token + "'");
            if (lit == 0) {
                if (current.empty()) fail("empty clause");
                for (std::size_t i = 0; i < current.size(); ++i) {
                    for (std::size_t j = i + 1; j < current.size(); ++j) {
                        if (current[i] == -current[j]) fail("clause contains a literal and its negation");
                    }
                }
                cnf.clauses.push_back(std::move(current));
                current.clear();
            } else {
                if (std::llabs(lit) > cnf.num_vars) fail("literal " + token + " out of range");
                current.push_back(static_cast<Literal>(lit));
            }
        } while (fields >> token);
    }
    if (!have_header) throw DimacsError("missing 'p cnf' header");
    if (!current.empty()) throw DimacsError("last clause is missing its 0 terminator");
    if (cnf.clauses.size() != declared) {
        throw DimacsError("header declares " + std::to_string(declared) + " clauses, found " +
                          std::to_string(cnf.clauses.size()));
    }
    return cnf;
}

}  // namespace rbcount

#endif  // RBCOUNT_CNF_HPP
