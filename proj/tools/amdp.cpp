// amdp: run adversarial-MDP experiments, fit regret scaling, run the
// property suites and validate instance files.

#include "amdp/harness/config.hpp"
#include "amdp/harness/errors.hpp"
#include "amdp/harness/experiment.hpp"
#include "amdp/harness/mdp_file.hpp"
#include "amdp/harness/verify.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

int cmd_run(const std::string& config_path, const std::string& out_override) {
    auto config = amdp::load_config(config_path);
    if (!out_override.empty()) config.out_dir = out_override;
    const auto run = amdp::resolve(config);
    if (run.eta_warning)
        std::cerr << "warning: eta = " << run.eta << " exceeds H^-2; outside the regime the FPOP analysis covers\n";
    if (config.debug_collapse) std::cerr << "note: debug_collapse is on; the agent sees the true kernel\n";

    const auto result = amdp::run_experiment(run);
    amdp::write_outputs(result, config.out_dir);
    amdp::write_summary_csv(std::cout, result);
    for (const auto& s : result.seeds)
        if (s.failed) std::cerr << "seed " << s.seed << " failed: " << s.error << '\n';
    return result.any_failed() ? amdp::kExitCheckFailure : amdp::kExitOk;
}

int cmd_scaling(const std::string& config_path, const std::string& t_list) {
    const auto config = amdp::load_config(config_path);
    const auto horizons = amdp::parse_size_list(t_list, "--T");
    const auto res = amdp::scaling(config, horizons);
    std::cout << "T,eta,mean_regret,stderr\n";
    for (const auto& p : res.points)
        std::cout << p.T << ',' << amdp::format_real(p.eta) << ',' << amdp::format_real(p.mean_regret) << ','
                  << amdp::format_real(p.stderr_regret) << '\n';
    if (res.slope) {
        std::cout << "slope," << amdp::format_real(*res.slope) << '\n';
    } else {
        std::cout << "slope,undefined\n";
        std::cerr << res.note << '\n';
    }
    return amdp::kExitOk;
}

int cmd_verify(const std::string& suite) {
    const auto rows = amdp::verify::run_suite(suite);
    amdp::verify::write_rows(std::cout, rows);
    return amdp::verify::all_pass(rows) ? amdp::kExitOk : amdp::kExitCheckFailure;
}

int cmd_validate(const std::string& path) {
    const auto spec = amdp::load_mdp(path);
    const auto issues = amdp::validate(spec);
    if (issues.empty()) {
        std::cout << "ok: " << amdp::to_string(spec.dims()) << " s1=" << spec.initial_state << '\n';
        return amdp::kExitOk;
    }
    for (const auto& v : issues) std::cout << "violation: " << v.message << '\n';
    return amdp::kExitCheckFailure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adversarial MDP workbench: FPL, FPOP, regret accounting and verification"};
    app.require_subcommand(1);

    std::string config_path, out_dir, t_list, suite = "all", mdp_path;

    auto* run = app.add_subcommand("run", "Run an experiment from a config file");
    run->add_option("--config", config_path, "Config file")->required();
    run->add_option("--out", out_dir, "Output directory (overrides 'out' in the config)");

    auto* scaling = app.add_subcommand("scaling", "Fit the log-log slope of mean regret against T");
    scaling->add_option("--config", config_path, "Config file")->required();
    scaling->add_option("--T", t_list, "Comma-separated episode counts")->required();

    auto* verify = app.add_subcommand("verify", "Run property suites");
    verify->add_option("--suite", suite, "Suite name: " + amdp::verify::suite_names());

    auto* validate = app.add_subcommand("validate", "Check an MDP instance file");
    validate->add_option("--mdp", mdp_path, "MDP file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : amdp::kExitConfigError;
    }

    try {
        if (*run) return cmd_run(config_path, out_dir);
        if (*scaling) return cmd_scaling(config_path, t_list);
        if (*verify) return cmd_verify(suite);
        if (*validate) return cmd_validate(mdp_path);
    } catch (const amdp::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return amdp::kExitConfigError;
    } catch (const amdp::IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return amdp::kExitIoError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return amdp::kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return amdp::kExitCheckFailure;
    }
    return amdp::kExitOk;
}
