#ifndef RBCOUNT_TOOLS_CLI_HPP
#define RBCOUNT_TOOLS_CLI_HPP

#include "rbcount/rbcount.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace rbcount::cli {

enum ExitCode : int { success = 0, usage_error = 1, runtime_error = 2, decided_no = 3 };

struct ParamFlags {
    int k = 2;
    int n = 10;
    double alpha = 0.8;
    double r = 1.7;
    double p = 0.2;
    std::uint64_t seed = 1;

    RbParams params() const { return RbParams{k, n, alpha, r, p, seed}; }
};

struct TableFlags {
    int k = 2;
    std::vector<std::string> rows;
    bool reference = false;
    std::uint32_t instances = 300;
    std::uint64_t seed = 1;
    int max_n = 0;
    std::uint64_t node_cap = 0;
    unsigned jobs = 1;
    std::string output;
    std::string manifest;
};

/// Carries a flag-level usage problem detected after CLI11 parsing.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline const CLI::Validator open_unit_interval(
    [](std::string& text) -> std::string {
        double v = 0;
        try {
            v = std::stod(text);
        } catch (...) {
            return "value " + text + " is not a number";
        }
        return (v > 0 && v < 1) ? std::string() : "value " + text + " not in (0, 1)";
    },
    "in (0,1)");

inline const CLI::Validator half_open_unit_interval(
    [](std::string& text) -> std::string {
        double v = 0;
        try {
            v = std::stod(text);
        } catch (...) {
            return "value " + text + " is not a number";
        }
        return (v > 0 && v <= 1) ? std::string() : "value " + text + " not in (0, 1]";
    },
    "in (0,1]");

inline void add_param_flags(CLI::App& cmd, ParamFlags& flags, bool with_seed) {
    cmd.add_option("-k,--arity", flags.k, "constraint arity k >= 2")->check(CLI::Range(2, 1 << 20))->capture_default_str();
    cmd.add_option("-n,--variables", flags.n, "number of variables n >= 2")->check(CLI::Range(2, 1 << 24))->capture_default_str();
    cmd.add_option("-a,--alpha", flags.alpha, "domain exponent, d = round(n^alpha)")->check(CLI::PositiveNumber)->capture_default_str();
    cmd.add_option("-r,--density", flags.r, "constraint density, m = round(r n ln n)")->check(CLI::PositiveNumber)->capture_default_str();
    cmd.add_option("-p,--tightness", flags.p, "nominal tightness, t = round(p d^k)")->check(open_unit_interval)->capture_default_str();
    if (with_seed) cmd.add_option("--seed", flags.seed, "generator seed")->capture_default_str();
}

inline Instance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open instance file '" + path + "'");
    Instance instance = read_instance(in);
    return instance;
}

/// Opens `path` for writing, or returns nullptr to mean standard output.
inline std::unique_ptr<std::ofstream> open_output(const std::string& path) {
    if (path.empty() || path == "-") return nullptr;
    auto file = std::make_unique<std::ofstream>(path);
    if (!*file) throw std::runtime_error("cannot open output file '" + path + "'");
    return file;
}

inline RbParams checked(const ParamFlags& flags) {
    const RbParams params = flags.params();
    try {
        check_params(params);
        derive_sizes(params);
    } catch (const InvalidModel& e) {
        throw UsageError(std::string(e.what()) + " (flags --arity/--variables/--alpha/--density/--tightness)");
    }
    return params;
}

inline std::vector<ParamRow> parse_rows(const TableFlags& flags, const std::vector<ParamRow>& reference) {
    std::vector<ParamRow> rows;
    if (flags.reference) rows = reference;
    for (const auto& text : flags.rows) {
        ParamRow row;
        char c1 = 0, c2 = 0, c3 = 0;
        std::istringstream in(text);
        std::string rest;
        if (!(in >> row.alpha >> c1 >> row.r >> c2 >> row.p >> c3 >> row.n) || c1 != ',' || c2 != ',' || c3 != ',' ||
            (in >> rest)) {
            throw UsageError("--row: expected 'alpha,r,p,n', got '" + text + "'");
        }
        if (!(row.alpha > 0) || !(row.r > 0) || !(row.p > 0 && row.p < 1) || row.n < flags.k) {
            throw UsageError("--row: out-of-range values in '" + text + "'");
        }
        rows.push_back(row);
    }
    if (rows.empty()) throw UsageError("--row or --table: no parameter rows given");
    return rows;
}

inline TableConfig table_config(const TableFlags& flags, const std::vector<ParamRow>& reference) {
    TableConfig config;
    config.k = flags.k;
    config.rows = parse_rows(flags, reference);
    config.instances = flags.instances;
    config.base_seed = flags.seed;
    config.max_n = flags.max_n;
    config.node_cap = flags.node_cap;
    config.jobs = flags.jobs;
    return config;
}

inline void add_table_flags(CLI::App& cmd, TableFlags& flags) {
    cmd.add_option("-k,--arity", flags.k, "constraint arity k >= 2")->check(CLI::Range(2, 64))->capture_default_str();
    cmd.add_option("--row", flags.rows, "parameter row 'alpha,r,p,n' (repeatable)");
    cmd.add_flag("--table", flags.reference, "include the reference parameter rows");
    cmd.add_option("--instances", flags.instances, "instances per row")->check(CLI::Range(1u, 1u << 30))->capture_default_str();
    cmd.add_option("--seed", flags.seed, "base seed")->capture_default_str();
    cmd.add_option("--max-n", flags.max_n, "run rows with larger n at this n (0 = never)")->check(CLI::NonNegativeNumber)->capture_default_str();
    cmd.add_option("--node-cap", flags.node_cap, "per-instance search node cap (0 = unlimited)")->capture_default_str();
    cmd.add_option("--jobs", flags.jobs, "worker threads")->check(CLI::Range(1u, 1024u))->capture_default_str();
    cmd.add_option("-o,--output", flags.output, "CSV output path (default stdout)");
    cmd.add_option("--manifest", flags.manifest, "manifest path (default <output>.manifest)");
}

inline void write_manifest_file(const std::string& manifest, const std::string& output,
                                const std::vector<std::pair<std::string, std::string>>& entries) {
    std::string path = manifest;
    if (path.empty() && !output.empty() && output != "-") path = output + ".manifest";
    if (path.empty()) return;
    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot open manifest file '" + path + "'");
    write_manifest(file, entries);
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Model RB solution-counting laboratory", "rbcount"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(version));

    // gen
    ParamFlags gen_flags;
    std::string gen_output;
    auto* gen = app.add_subcommand("gen", "generate a Model RB instance");
    detail::add_param_flags(*gen, gen_flags, true);
    gen->add_option("-o,--output", gen_output, "instance output path (default stdout)");

    // count
    std::string count_input;
    std::string count_method = "backtrack";
    std::uint64_t count_cap = default_enumeration_cap;
    std::uint64_t count_node_cap = 0;
    auto* count = app.add_subcommand("count", "count the solutions of an instance exactly");
    count->add_option("instance", count_input, "instance file")->required();
    count->add_option("--method", count_method, "counting method")->check(CLI::IsMember({"backtrack", "brute"}))->capture_default_str();
    count->add_option("--cap", count_cap, "brute-force enumeration cap on d^n")->capture_default_str();
    count->add_option("--node-cap", count_node_cap, "backtracking node cap (0 = unlimited)")->capture_default_str();

    // decide
    std::string decide_input;
    std::uint32_t decide_divisor = 2;
    bool decide_exit_code = false;
    std::string decide_method = "backtrack";
    auto* decide = app.add_subcommand("decide", "decide whether an instance has at least d^(n/T) solutions");
    decide->add_option("instance", decide_input, "instance file")->required();
    decide->add_option("--divisor", decide_divisor, "threshold divisor T >= 2")->check(CLI::Range(2u, 1u << 20))->capture_default_str();
    decide->add_flag("--exit-code", decide_exit_code, "exit 0 on YES and 3 on NO");
    decide->add_option("--method", decide_method, "counting method")->check(CLI::IsMember({"backtrack", "brute"}))->capture_default_str();

    // estimate
    ParamFlags est_flags;
    est_flags.n = 13;
    double est_delta = 0.9;
    std::uint32_t est_divisor = 2;
    double est_band = default_critical_band;
    auto* estimate = app.add_subcommand("estimate", "AE-count estimate and threshold diagnostics");
    detail::add_param_flags(*estimate, est_flags, false);
    estimate->add_option("--delta", est_delta, "relative interval half-width")->check(detail::half_open_unit_interval)->capture_default_str();
    estimate->add_option("--divisor", est_divisor, "threshold divisor T >= 2")->check(CLI::Range(2u, 1u << 20))->capture_default_str();
    estimate->add_option("--band", est_band, "half-width of the CRITICAL band around p_cr")->check(CLI::NonNegativeNumber)->capture_default_str();

    // encode
    std::string encode_input;
    std::string encode_output;
    auto* encode = app.add_subcommand("encode", "write the direct CNF encoding in DIMACS format");
    encode->add_option("instance", encode_input, "instance file")->required();
    encode->add_option("-o,--output", encode_output, "DIMACS output path (default stdout)");

    // sweep
    ParamFlags sweep_flags;
    sweep_flags.n = 7;
    std::string sweep_axis = "p";
    SweepConfig sweep_config;
    std::string sweep_output;
    std::string sweep_svg;
    std::string sweep_manifest;
    auto* sweep_cmd = app.add_subcommand("sweep", "phase-transition sweep over p (or r)");
    detail::add_param_flags(*sweep_cmd, sweep_flags, false);
    sweep_cmd->add_option("--axis", sweep_axis, "swept parameter")->check(CLI::IsMember({"p", "r"}))->capture_default_str();
    sweep_cmd->add_option("--start", sweep_config.grid.start, "grid start")->check(CLI::PositiveNumber)->capture_default_str();
    sweep_cmd->add_option("--stop", sweep_config.grid.stop, "grid stop (inclusive)")->check(CLI::PositiveNumber)->capture_default_str();
    sweep_cmd->add_option("--step", sweep_config.grid.step, "grid step")->check(CLI::PositiveNumber)->capture_default_str();
    sweep_cmd->add_option("--divisor", sweep_config.divisor, "threshold divisor T >= 2")->check(CLI::Range(2u, 1u << 20))->capture_default_str();
    sweep_cmd->add_option("--instances", sweep_config.instances_per_point, "instances per grid point")->check(CLI::Range(1u, 1u << 30))->capture_default_str();
    sweep_cmd->add_option("--seed", sweep_config.base_seed, "base seed")->capture_default_str();
    sweep_cmd->add_option("--node-cap", sweep_config.node_cap, "per-instance search node cap (0 = unlimited)")->capture_default_str();
    sweep_cmd->add_option("--jobs", sweep_config.jobs, "worker threads")->check(CLI::Range(1u, 1024u))->capture_default_str();
    sweep_cmd->add_option("-o,--output", sweep_output, "CSV output path (default stdout)");
    sweep_cmd->add_option("--svg", sweep_svg, "also write an SVG plot here");
    sweep_cmd->add_option("--manifest", sweep_manifest, "manifest path (default <output>.manifest)");

    // accuracy / compare
    TableFlags acc_flags;
    std::vector<double> acc_deltas{0.5, 0.6, 0.7, 0.8, 0.9};
    auto* accuracy = app.add_subcommand("accuracy", "coverage of the (1 -/+ delta) E interval by exact counts");
    detail::add_table_flags(*accuracy, acc_flags);
    accuracy->add_option("--deltas", acc_deltas, "interval half-widths")->delimiter(',')->check(detail::half_open_unit_interval)->capture_default_str();

    TableFlags cmp_flags;
    auto* compare = app.add_subcommand("compare", "mean exact count against the AE-count point estimate");
    detail::add_table_flags(*compare, cmp_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return success;
    } catch (const CLI::CallForVersion& e) {
        out << e.what() << '\n';
        return success;
    } catch (const CLI::ParseError& e) {
        err << "rbcount: " << e.what() << '\n';
        return usage_error;
    }

    try {
        if (*gen) {
            const RbParams params = detail::checked(gen_flags);
            const Instance instance = generate(params);
            auto file = detail::open_output(gen_output);
            write_instance(instance, file ? *file : out);
        } else if (*count) {
            const Instance instance = detail::load_instance(count_input);
            const CountResult result = count_method == "brute" ? count_brute(instance, count_cap)
                                                               : count_backtrack(instance, count_node_cap);
            out << "count " << to_decimal(result.count) << '\n';
            out << "method " << to_string(result.method) << '\n';
            out << "nodes " << result.nodes_visited << '\n';
            out << "n " << instance.n << " d " << instance.d << " k " << instance.k << " m "
                << instance.constraints.size() << '\n';
        } else if (*decide) {
            const Instance instance = detail::load_instance(decide_input);
            const CountResult result = decide_method == "brute" ? count_brute(instance) : count_backtrack(instance);
            const Divisor divisor(decide_divisor);
            const Decision decision = decide_at_least(result, instance.d, instance.n, divisor);
            const Threshold th = threshold(instance.d, instance.n, divisor);
            out << (decision.answer ? "YES" : "NO") << '\n';
            out << "count " << to_decimal(result.count) << '\n';
            out << "threshold " << std::setprecision(10) << th.value << '\n';
            out << "least_count " << to_decimal(th.least_count) << '\n';
            out << "divisor " << decide_divisor << '\n';
            if (decide_exit_code && !decision.answer) return decided_no;
        } else if (*estimate) {
            const RbParams params = detail::checked(est_flags);
            const Estimate est = ae_count(params, est_delta, Divisor(est_divisor), est_band);
            const Applicability app_report = theorem_applicability(params);
            const Threshold th = threshold(est.sizes.d, static_cast<std::uint32_t>(params.n), Divisor(est_divisor));
            const auto yes_no = [](bool b) { return b ? "true" : "false"; };
            out << std::setprecision(10);
            out << "params k=" << params.k << " n=" << params.n << " alpha=" << params.alpha << " r=" << params.r
                << " p=" << params.p << '\n';
            out << "sizes d=" << est.sizes.d << " m=" << est.sizes.m << " t_nogoods=" << est.sizes.t_nogoods << '\n';
            out << "p_eff " << est.p_eff << '\n';
            out << "expected " << est.expected << '\n';
            out << "log_expected " << est.log_expected << '\n';
            out << "delta " << est.delta << '\n';
            out << "interval_low " << est.interval_low << '\n';
            out << "interval_high " << est.interval_high << '\n';
            out << "log_interval " << est.log_interval_low << ' ' << est.log_interval_high << '\n';
            out << "threshold " << th.value << " (least count " << to_decimal(th.least_count) << ")\n";
            out << "p_cr " << est.p_cr << '\n';
            out << "r_cr " << est.r_cr << '\n';
            out << "p_sat " << critical_tightness(params.alpha, params.r, Divisor::infinite()) << '\n';
            out << "markov_bound " << markov_upper_bound(est.log_expected, th.log_value) << '\n';
            out << "second_moment_ratio "
                << second_moment_ratio(static_cast<std::uint32_t>(params.n), static_cast<std::uint32_t>(params.k),
                                       est.sizes.d, est.sizes.m, est.p_eff)
                << '\n';
            out << "prediction " << to_string(est.predicted) << '\n';
            out << "applicability alpha>1/k=" << yes_no(app_report.alpha_above_inverse_k)
                << " k*exp(-alpha/r)>=1=" << yes_no(app_report.density_condition) << " ("
                << app_report.density_value << ") k>=1/(1-p)=" << yes_no(app_report.tightness_condition) << " ("
                << app_report.tightness_bound << ")\n";
            out << "hypotheses tightness_threshold=" << yes_no(app_report.tightness_theorem)
                << " density_threshold=" << yes_no(app_report.density_theorem)
                << " interval_estimate=" << yes_no(app_report.estimator_theorem) << '\n';
        } else if (*encode) {
            const Instance instance = detail::load_instance(encode_input);
            const Cnf cnf = encode_direct(instance);
            std::vector<std::string> comments{"rbcount direct encoding n=" + std::to_string(instance.n) +
                                              " d=" + std::to_string(instance.d) + " k=" +
                                              std::to_string(instance.k) + " m=" +
                                              std::to_string(instance.constraints.size())};
            bool uniform = !instance.constraints.empty();
            for (const auto& c : instance.constraints) {
                uniform = uniform && c.nogoods.size() == instance.constraints.front().nogoods.size();
            }
            if (uniform) {
                const double tuples = std::pow(static_cast<double>(instance.d), instance.k);
                const double p_eff = static_cast<double>(instance.constraints.front().nogoods.size()) / tuples;
                std::ostringstream line;
                line << std::setprecision(10) << "expected_count "
                     << expected_count(instance.n, instance.d, instance.constraints.size(), p_eff).expected
                     << " p_eff " << p_eff;
                comments.push_back(line.str());
            }
            auto file = detail::open_output(encode_output);
            write_dimacs(cnf, file ? *file : out, comments);
        } else if (*sweep_cmd) {
            const RbParams params = detail::checked(sweep_flags);
            sweep_config.k = params.k;
            sweep_config.n = params.n;
            sweep_config.alpha = params.alpha;
            sweep_config.r = params.r;
            sweep_config.p = params.p;
            sweep_config.axis = sweep_axis == "p" ? SweepAxis::tightness : SweepAxis::density;
            if (sweep_config.axis == SweepAxis::tightness && !(sweep_config.grid.stop < 1)) {
                throw UsageError("--stop: tightness grid must stay below 1");
            }
            if (sweep_config.grid.stop < sweep_config.grid.start) throw UsageError("--stop: must not precede --start");
            auto file = detail::open_output(sweep_output);
            const auto rows = sweep(sweep_config, [&](const SweepRow& row) {
                err << sweep_axis << '=' << row.value << " p_eff=" << row.p_eff << " yes=" << row.yes_fraction
                    << " capped=" << row.capped << " ms=" << static_cast<long>(row.wall_ms) << '\n';
            });
            emit_csv(rows, file ? *file : out, sweep_config.axis);
            const Divisor divisor(sweep_config.divisor);
            const double critical = sweep_config.axis == SweepAxis::tightness
                                        ? critical_tightness(params.alpha, params.r, divisor)
                                        : critical_density(params.alpha, params.p, divisor);
            if (!sweep_svg.empty()) {
                std::ofstream svg(sweep_svg);
                if (!svg) throw std::runtime_error("cannot open SVG file '" + sweep_svg + "'");
                emit_svg_plot(rows, svg, critical, sweep_axis);
            }
            auto entries = manifest_entries(sweep_config);
            entries.emplace_back("critical_value", std::to_string(critical));
            detail::write_manifest_file(sweep_manifest, sweep_output, entries);
        } else if (*accuracy) {
            const TableConfig config = detail::table_config(acc_flags, accuracy_table_rows());
            auto file = detail::open_output(acc_flags.output);
            emit_accuracy_csv(accuracy_table(config, acc_deltas), file ? *file : out);
            detail::write_manifest_file(acc_flags.manifest, acc_flags.output, manifest_entries(config, "accuracy"));
        } else if (*compare) {
            const TableConfig config = detail::table_config(cmp_flags, comparison_table_rows());
            auto file = detail::open_output(cmp_flags.output);
            emit_comparison_csv(estimator_comparison(config), file ? *file : out);
            detail::write_manifest_file(cmp_flags.manifest, cmp_flags.output, manifest_entries(config, "compare"));
        }
    } catch (const UsageError& e) {
        err << "rbcount: " << e.what() << '\n';
        return usage_error;
    } catch (const std::exception& e) {
        err << "rbcount: " << e.what() << '\n';
        return runtime_error;
    }
    return success;
}

}  // namespace rbcount::cli

#endif  // RBCOUNT_TOOLS_CLI_HPP
