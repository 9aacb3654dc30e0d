#ifndef RBCOUNT_EXPERIMENTS_HPP
#define RBCOUNT_EXPERIMENTS_HPP

// Phase-transition sweeps, interval-estimator coverage and estimator-vs-exact
// comparisons over seeded Model RB ensembles.
//
// Instance j of grid point (or table row) i is generated with seed
// mix_seed(base_seed, i, j). Results are stored by (i, j) before aggregation,
// so the number of worker threads never changes the output.

#include "rbcount/bigint.hpp"
#include "rbcount/exact_count.hpp"
#include "rbcount/rb_model.hpp"
#include "rbcount/random.hpp"
#include "rbcount/theory.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace rbcount {

inline constexpr std::string_view version = "1.0.0";

struct GridSpec {
    double start = 0.05;
    double stop = 0.45;
    double step = 0.02;

    /// start, start + step, ... up to stop inclusive; values rounded to 1e-10
    /// so decimal steps do not drift.
    std::vector<double> values() const {
        if (!(step > 0)) throw std::invalid_argument("grid step must be positive");
        if (stop < start) throw std::invalid_argument("grid stop must not precede start");
        std::vector<double> out;
        for (std::size_t i = 0;; ++i) {
            const double raw = start + static_cast<double>(i) * step;
            if (raw > stop + 1e-9) break;
            out.push_back(std::round(raw * 1e10) / 1e10);
        }
        return out;
    }
};

enum class SweepAxis { tightness, density };

struct SweepConfig {
    int k = 2;
    int n = 7;
    double alpha = 0.8;
    /// Fixed density for a tightness sweep.
    double r = 1.7;
    /// Fixed tightness for a density sweep.
    double p = 0.2;
    SweepAxis axis = SweepAxis::tightness;
    GridSpec grid;
    std::uint32_t divisor = 2;
    std::uint32_t instances_per_point = 100;
    std::uint64_t base_seed = 1;
    /// Backtracking node cap per instance; 0 means unlimited.
    std::uint64_t node_cap = 0;
    unsigned jobs = 1;
};

struct SweepRow {
    double value = 0;  // p or r, per the sweep axis
    double p_eff = 0;
    double yes_fraction = 0;
    double mean_count_log = 0;
    double median_count_log = 0;
    double mean_nodes = 0;
    double wall_ms = 0;
    // Not serialized.
    std::uint32_t d = 0;
    std::uint64_t m = 0;
    std::uint64_t t_nogoods = 0;
    std::uint32_t instances = 0;
    std::uint32_t yes_count = 0;
    std::uint32_t capped = 0;
};

/// Runs fn(i) for i in [0, count) on up to `jobs` threads.
inline void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (jobs == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& worker : workers) worker.join();
    if (failure) std::rethrow_exception(failure);
}

struct InstanceOutcome {
    BigCount count;
    std::uint64_t nodes = 0;
    bool capped = false;
};

namespace detail {

inline std::vector<InstanceOutcome> count_ensemble(const RbParams& base, std::uint64_t point_index,
                                                   std::uint32_t instances, std::uint64_t base_seed,
                                                   std::uint64_t node_cap, unsigned jobs) {
    std::vector<InstanceOutcome> outcomes(instances);
    parallel_for(instances, jobs, [&](std::size_t j) {
        RbParams params = base;
        params.seed = mix_seed(base_seed, point_index, j);
        const Instance instance = generate(params);
        try {
            const CountResult result = count_backtrack(instance, node_cap);
            outcomes[j].count = result.count;
            outcomes[j].nodes = result.nodes_visited;
        } catch (const CapExceeded&) {
            outcomes[j].capped = true;
        }
    });
    return outcomes;
}

inline double log_mean(const std::vector<BigCount>& counts) {
    if (counts.empty()) return std::numeric_limits<double>::quiet_NaN();
    BigCount sum = 0;
    for (const auto& c : counts) sum += c;
    return log_big(sum) - std::log(static_cast<double>(counts.size()));
}

inline double log_median(std::vector<BigCount> counts) {
    if (counts.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(counts.begin(), counts.end());
    const std::size_t mid = counts.size() / 2;
    if (counts.size() % 2 == 1) return log_big(counts[mid]);
    return log_big(counts[mid - 1] + counts[mid]) - std::log(2.0);
}

}  // namespace detail

inline std::vector<SweepRow> sweep(const SweepConfig& config,
                                   const std::function<void(const SweepRow&)>& on_row = {}) {
    if (config.instances_per_point < 1) throw std::invalid_argument("instances_per_point must be >= 1");
    const Divisor divisor(config.divisor);
    const auto grid = config.grid.values();
    if (config.axis == SweepAxis::tightness) {
        for (double p : grid) {
            if (!(p > 0 && p < 1)) throw std::invalid_argument("tightness grid must lie inside (0, 1)");
        }
    }
    std::vector<SweepRow> rows;
    rows.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto started = std::chrono::steady_clock::now();
        RbParams params{config.k, config.n, config.alpha, config.r, config.p, 0};
        if (config.axis == SweepAxis::tightness) {
            params.p = grid[i];
        } else {
            params.r = grid[i];
        }
        const DerivedSizes sizes = derive_sizes(params);
        const auto outcomes = detail::count_ensemble(params, i, config.instances_per_point, config.base_seed,
                                                     config.node_cap, config.jobs);
        SweepRow row;
        row.value = grid[i];
        row.p_eff = sizes.p_eff();
        row.d = sizes.d;
        row.m = sizes.m;
        row.t_nogoods = sizes.t_nogoods;
        row.instances = config.instances_per_point;
        const BigCount total = pow_big(sizes.d, static_cast<std::uint64_t>(config.n));
        std::vector<BigCount> counts;
        double nodes = 0;
        for (const auto& outcome : outcomes) {
            if (outcome.capped) {
                ++row.capped;
                continue;
            }
            counts.push_back(outcome.count);
            nodes += static_cast<double>(outcome.nodes);
            if (boost::multiprecision::pow(outcome.count, divisor.value()) >= total) ++row.yes_count;
        }
        row.yes_fraction = static_cast<double>(row.yes_count) / config.instances_per_point;
        row.mean_count_log = detail::log_mean(counts);
        row.median_count_log = detail::log_median(counts);
        row.mean_nodes = counts.empty() ? 0.0 : nodes / static_cast<double>(counts.size());
        row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
        if (on_row) on_row(row);
        rows.push_back(row);
    }
    return rows;
}

/// Grid value where yes_fraction first falls below `level`, linearly
/// interpolated between the bracketing points.
inline std::optional<double> crossing_point(const std::vector<SweepRow>& rows, double level = 0.5) {
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const SweepRow& a = rows[i - 1];
        const SweepRow& b = rows[i];
        if (a.yes_fraction >= level && b.yes_fraction < level) {
            const double span = a.yes_fraction - b.yes_fraction;
            return a.value + (a.yes_fraction - level) / span * (b.value - a.value);
        }
    }
    if (!rows.empty() && rows.front().yes_fraction < level) return rows.front().value;
    return std::nullopt;
}

struct ParamRow {
    double alpha = 0.8;
    double r = 1.5;
    double p = 0.3;
    int n = 7;
};

/// Reference parameter rows for the accuracy table.
inline std::vector<ParamRow> accuracy_table_rows() {
    return {{0.7, 2.3, 0.2, 13}, {0.7, 2.3, 0.2, 14}, {0.7, 2.3, 0.2, 15},  {0.7, 2.3, 0.2, 16},
            {0.8, 1.5, 0.3, 7},  {0.8, 1.5, 0.3, 9},  {0.8, 1.5, 0.3, 11},  {0.8, 1.5, 0.3, 13},
            {0.9, 2.1, 0.3, 11}, {0.9, 2.1, 0.3, 12}, {0.9, 2.1, 0.3, 13},  {0.9, 2.1, 0.3, 14},
            {1.0, 2.0, 0.35, 11}, {1.0, 2.0, 0.35, 13}, {1.0, 2.0, 0.35, 15}, {1.0, 2.0, 0.35, 17}};
}

/// Reference parameter columns for the estimator comparison.
inline std::vector<ParamRow> comparison_table_rows() {
    return {{0.6, 1.8, 0.21, 17}, {0.7, 2.3, 0.2, 16}, {0.8, 1.5, 0.3, 9}, {1.0, 2.0, 0.31, 17}};
}

struct TableConfig {
    int k = 2;
    std::vector<ParamRow> rows;
    std::uint32_t instances = 300;
    std::uint64_t base_seed = 1;
    /// Rows with a larger n are run at max_n instead; 0 disables substitution.
    int max_n = 0;
    std::uint64_t node_cap = 0;
    unsigned jobs = 1;
};

struct RowContext {
    ParamRow requested;
    int n = 0;  // n actually used
    bool substituted = false;
    DerivedSizes sizes;
    ExpectedCount expected;
};

namespace detail {

inline RowContext row_context(const TableConfig& config, const ParamRow& row) {
    RowContext ctx;
    ctx.requested = row;
    ctx.n = row.n;
    if (config.max_n > 0 && row.n > config.max_n) {
        ctx.n = config.max_n;
        ctx.substituted = true;
    }
    ctx.sizes = derive_sizes(RbParams{config.k, ctx.n, row.alpha, row.r, row.p, 0});
    ctx.expected = expected_count(ctx.n, ctx.sizes.d, ctx.sizes.m, ctx.sizes.p_eff());
    return ctx;
}

}  // namespace detail

struct CoverageRow {
    RowContext context;
    std::vector<double> deltas;
    /// Fraction of instances with (1-delta)E < X < (1+delta)E, per delta.
    std::vector<double> coverage;
    std::uint32_t instances = 0;
    std::uint32_t capped = 0;
};

/// For each delta, the fraction of `population` counts X with
/// (1-delta)E < X < (1+delta)E, compared in log space.
inline std::vector<double> interval_coverage(const std::vector<BigCount>& counts, double log_expected,
                                             const std::vector<double>& deltas, std::size_t population) {
    std::vector<double> coverage;
    for (double delta : deltas) {
        const double log_low = std::log1p(-delta) + log_expected;
        const double log_high = std::log1p(delta) + log_expected;
        std::size_t hits = 0;
        for (const auto& count : counts) {
            const double log_x = log_big(count);
            if (log_x > log_low && log_x < log_high) ++hits;
        }
        coverage.push_back(static_cast<double>(hits) / static_cast<double>(population));
    }
    return coverage;
}

inline std::vector<CoverageRow> accuracy_table(const TableConfig& config, const std::vector<double>& deltas) {
    for (double delta : deltas) {
        if (!(delta > 0 && delta <= 1)) throw std::invalid_argument("delta must lie in (0, 1]");
    }
    if (config.instances < 1) throw std::invalid_argument("instances must be >= 1");
    std::vector<CoverageRow> out;
    for (std::size_t i = 0; i < config.rows.size(); ++i) {
        CoverageRow row;
        row.context = detail::row_context(config, config.rows[i]);
        row.deltas = deltas;
        row.instances = config.instances;
        const ParamRow& pr = config.rows[i];
        const auto outcomes = detail::count_ensemble(RbParams{config.k, row.context.n, pr.alpha, pr.r, pr.p, 0}, i,
                                                     config.instances, config.base_seed, config.node_cap,
                                                     config.jobs);
        std::vector<BigCount> counts;
        for (const auto& outcome : outcomes) {
            if (outcome.capped) {
                ++row.capped;
            } else {
                counts.push_back(outcome.count);
            }
        }
        row.coverage = interval_coverage(counts, row.context.expected.log_expected, deltas, config.instances);
        out.push_back(std::move(row));
    }
    return out;
}

struct ComparisonRow {
    RowContext context;
    double mean_exact = 0;
    double mean_exact_log = 0;
    double standard_error = 0;
    std::uint32_t instances = 0;
    std::uint32_t capped = 0;
};

inline std::vector<ComparisonRow> estimator_comparison(const TableConfig& config) {
    if (config.instances < 1) throw std::invalid_argument("instances must be >= 1");
    std::vector<ComparisonRow> out;
    for (std::size_t i = 0; i < config.rows.size(); ++i) {
        ComparisonRow row;
        row.context = detail::row_context(config, config.rows[i]);
        row.instances = config.instances;
        const ParamRow& pr = config.rows[i];
        const auto outcomes = detail::count_ensemble(RbParams{config.k, row.context.n, pr.alpha, pr.r, pr.p, 0}, i,
                                                     config.instances, config.base_seed, config.node_cap,
                                                     config.jobs);
        std::vector<BigCount> counts;
        for (const auto& outcome : outcomes) {
            if (outcome.capped) {
                ++row.capped;
            } else {
                counts.push_back(outcome.count);
            }
        }
        row.mean_exact_log = detail::log_mean(counts);
        row.mean_exact = std::exp(row.mean_exact_log);
        if (counts.size() > 1) {
            double sq = 0;
            for (const auto& c : counts) {
                const double diff = to_double(c) - row.mean_exact;
                sq += diff * diff;
            }
            row.standard_error = std::sqrt(sq / static_cast<double>(counts.size() - 1) / counts.size());
        }
        out.push_back(std::move(row));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Output

inline constexpr std::string_view sweep_csv_header = "p,p_eff,yes_fraction,mean_count_log,median_count_log,mean_nodes,wall_ms";

namespace detail {

inline std::string format_real(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::ostringstream out;
    out << std::setprecision(17) << x;
    return out.str();
}

inline double parse_real(const std::string& field) {
    if (field == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (field == "inf") return std::numeric_limits<double>::infinity();
    if (field == "-inf") return -std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    const double value = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument("bad number '" + field + "'");
    return value;
}

}  // namespace detail

/// Writes the sweep CSV. A density sweep labels its first column "r".
inline void emit_csv(const std::vector<SweepRow>& rows, std::ostream& out, SweepAxis axis = SweepAxis::tightness) {
    if (axis == SweepAxis::tightness) {
        out << sweep_csv_header << '\n';
    } else {
        out << 'r' << sweep_csv_header.substr(1) << '\n';
    }
    for (const SweepRow& row : rows) {
        out << detail::format_real(row.value) << ',' << detail::format_real(row.p_eff) << ','
            << detail::format_real(row.yes_fraction) << ',' << detail::format_real(row.mean_count_log) << ','
            << detail::format_real(row.median_count_log) << ',' << detail::format_real(row.mean_nodes) << ','
            << detail::format_real(row.wall_ms) << '\n';
    }
}

inline std::vector<SweepRow> parse_sweep_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || (line != sweep_csv_header && line != "r" + std::string(sweep_csv_header.substr(1)))) {
        throw std::invalid_argument("sweep CSV: unexpected header");
    }
    std::vector<SweepRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 7) throw std::invalid_argument("sweep CSV: expected 7 fields");
        SweepRow row;
        row.value = detail::parse_real(fields[0]);
        row.p_eff = detail::parse_real(fields[1]);
        row.yes_fraction = detail::parse_real(fields[2]);
        row.mean_count_log = detail::parse_real(fields[3]);
        row.median_count_log = detail::parse_real(fields[4]);
        row.mean_nodes = detail::parse_real(fields[5]);
        row.wall_ms = detail::parse_real(fields[6]);
        rows.push_back(row);
    }
    return rows;
}

inline void emit_accuracy_csv(const std::vector<CoverageRow>& rows, std::ostream& out) {
    out << "alpha,r,p,n_requested,n,substituted,d,m,t_nogoods,p_eff,expected_log,delta,coverage,instances,capped\n";
    for (const CoverageRow& row : rows) {
        const RowContext& c = row.context;
        for (std::size_t j = 0; j < row.deltas.size(); ++j) {
            out << detail::format_real(c.requested.alpha) << ',' << detail::format_real(c.requested.r) << ','
                << detail::format_real(c.requested.p) << ',' << c.requested.n << ',' << c.n << ','
                << (c.substituted ? 1 : 0) << ',' << c.sizes.d << ',' << c.sizes.m << ',' << c.sizes.t_nogoods << ','
                << detail::format_real(c.sizes.p_eff()) << ',' << detail::format_real(c.expected.log_expected) << ','
                << detail::format_real(row.deltas[j]) << ',' << detail::format_real(row.coverage[j]) << ','
                << row.instances << ',' << row.capped << '\n';
        }
    }
}

inline void emit_comparison_csv(const std::vector<ComparisonRow>& rows, std::ostream& out) {
    out << "alpha,r,p,n_requested,n,substituted,d,m,t_nogoods,p_eff,mean_exact,mean_exact_log,standard_error,"
           "ae_expected,ae_expected_log,instances,capped\n";
    for (const ComparisonRow& row : rows) {
        const RowContext& c = row.context;
        out << detail::format_real(c.requested.alpha) << ',' << detail::format_real(c.requested.r) << ','
            << detail::format_real(c.requested.p) << ',' << c.requested.n << ',' << c.n << ','
            << (c.substituted ? 1 : 0) << ',' << c.sizes.d << ',' << c.sizes.m << ',' << c.sizes.t_nogoods << ','
            << detail::format_real(c.sizes.p_eff()) << ',' << detail::format_real(row.mean_exact) << ','
            << detail::format_real(row.mean_exact_log) << ',' << detail::format_real(row.standard_error) << ','
            << detail::format_real(c.expected.expected) << ',' << detail::format_real(c.expected.log_expected) << ','
            << row.instances << ',' << row.capped << '\n';
    }
}

/// Step plot of yes_fraction against the swept parameter, with a dashed
/// vertical marker at the critical value.
inline void emit_svg_plot(const std::vector<SweepRow>& rows, std::ostream& out, std::optional<double> critical,
                          const std::string& x_label = "p") {
    constexpr double width = 640, height = 400, left = 60, right = 20, top = 20, bottom = 50;
    double lo = 0, hi = 1;
    if (!rows.empty()) {
        lo = rows.front().value;
        hi = rows.back().value;
        if (critical) {
            lo = std::min(lo, *critical);
            hi = std::max(hi, *critical);
        }
        if (hi <= lo) hi = lo + 1;
    }
    const auto sx = [&](double x) { return left + (x - lo) / (hi - lo) * (width - left - right); };
    const auto sy = [&](double y) { return top + (1 - y) * (height - top - bottom); };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << sy(0) << "\" x2=\"" << width - right << "\" y2=\"" << sy(0)
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << sy(0) << "\" x2=\"" << left << "\" y2=\"" << sy(1)
        << "\" stroke=\"black\"/>\n";
    for (double y : {0.0, 0.5, 1.0}) {
        out << "<text x=\"" << left - 8 << "\" y=\"" << sy(y) + 4 << "\" font-size=\"12\" text-anchor=\"end\">" << y
            << "</text>\n";
    }
    out << "<text x=\"" << sx(lo) << "\" y=\"" << height - 30 << "\" font-size=\"12\" text-anchor=\"middle\">" << lo
        << "</text>\n";
    out << "<text x=\"" << sx(hi) << "\" y=\"" << height - 30 << "\" font-size=\"12\" text-anchor=\"middle\">" << hi
        << "</text>\n";
    out << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 10
        << "\" font-size=\"14\" text-anchor=\"middle\">" << x_label << "</text>\n";
    if (critical) {
        out << "<line x1=\"" << sx(*critical) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(*critical) << "\" y2=\""
            << sy(1) << "\" stroke=\"red\" stroke-dasharray=\"6,4\"/>\n";
    }
    if (!rows.empty()) {
        out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
        for (const SweepRow& row : rows) out << sx(row.value) << ',' << sy(row.yes_fraction) << ' ';
        out << "\"/>\n";
    }
    out << "</svg>\n";
}

/// Plain-text key=value record of everything needed to rerun an experiment.
inline void write_manifest(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& entries) {
    out << "tool=rbcount\n";
    out << "version=" << version << '\n';
    out << "seed_derivation=mix_seed(base_seed, point_index, instance_index)\n";
    for (const auto& [key, value] : entries) out << key << '=' << value << '\n';
}

inline std::vector<std::pair<std::string, std::string>> manifest_entries(const SweepConfig& c) {
    return {{"experiment", c.axis == SweepAxis::tightness ? "sweep-tightness" : "sweep-density"},
            {"k", std::to_string(c.k)},
            {"n", std::to_string(c.n)},
            {"alpha", detail::format_real(c.alpha)},
            {"r", detail::format_real(c.r)},
            {"p", detail::format_real(c.p)},
            {"grid_start", detail::format_real(c.grid.start)},
            {"grid_stop", detail::format_real(c.grid.stop)},
            {"grid_step", detail::format_real(c.grid.step)},
            {"divisor", std::to_string(c.divisor)},
            {"instances_per_point", std::to_string(c.instances_per_point)},
            {"base_seed", std::to_string(c.base_seed)},
            {"node_cap", std::to_string(c.node_cap)}};
}

inline std::vector<std::pair<std::string, std::string>> manifest_entries(const TableConfig& c,
                                                                        const std::string& experiment) {
    std::vector<std::pair<std::string, std::string>> entries{{"experiment", experiment},
                                                             {"k", std::to_string(c.k)},
                                                             {"instances", std::to_string(c.instances)},
                                                             {"base_seed", std::to_string(c.base_seed)},
                                                             {"max_n", std::to_string(c.max_n)},
                                                             {"node_cap", std::to_string(c.node_cap)}};
    for (std::size_t i = 0; i < c.rows.size(); ++i) {
        const ParamRow& r = c.rows[i];
        std::string value = detail::format_real(r.alpha) + "," + detail::format_real(r.r) + "," +
                            detail::format_real(r.p) + "," + std::to_string(r.n);
        if (c.max_n > 0 && r.n > c.max_n) value += " (n substituted by " + std::to_string(c.max_n) + ")";
        entries.emplace_back("row" + std::to_string(i), value);
    }
    return entries;
}

}  // namespace rbcount

#endif  // RBCOUNT_EXPERIMENTS_HPP
