// detcomm: simulator and security analyzer for the deterministic
// publicly-known-key communication protocol over single-photon two-qubit
// states. Human-readable output goes to stderr, machine output (CSV, hex,
// check reports) to stdout.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "detcomm/analysis.hpp"
#include "detcomm/protocol.hpp"
#include "detcomm/transport.hpp"

namespace {

using namespace detcomm;

std::uint64_t fallback_seed() {
    if (const char* env = std::getenv("DETCOMM_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw std::invalid_argument("DETCOMM_SEED is not a valid integer");
        }
    }
    return 1;
}

SchemeParams parse_scheme_name(const std::string& name) {
    if (name == "optimal") {
        return SchemeParams::optimal();
    }
    if (name == "simple") {
        return SchemeParams::simple();
    }
    std::array<double, 3> a{};
    std::stringstream ss(name);
    std::string part;
    std::size_t i = 0;
    while (std::getline(ss, part, ',')) {
        if (i >= 3) {
            throw std::invalid_argument("scheme: expected optimal, simple, or a1,a2,a3");
        }
        a[i++] = std::stod(part);
    }
    if (i != 3) {
        throw std::invalid_argument("scheme: expected optimal, simple, or a1,a2,a3");
    }
    SchemeParams params{a[0], a[1], a[2]};
    params.validate();
    return params;
}

struct SessionSetup {
    SessionConfig config;
    EveStrategy eve;
    BasisPair bases;
};

SessionSetup load_session(const std::string& config_path, std::optional<std::uint64_t> seed_flag,
                          const std::string& eve_flag) {
    ParsedConfig parsed = load_session_config(config_path);
    if (seed_flag) {
        parsed.session.seed = *seed_flag;
    } else if (!parsed.seed_present) {
        parsed.session.seed = fallback_seed();
    }

    std::string eve_spec = eve_flag;
    if (eve_spec.empty()) {
        const auto it = parsed.extras.find("eve");
        eve_spec = (it != parsed.extras.end()) ? it->second : "none";
    }

    SessionSetup setup;
    setup.config = parsed.session;
    setup.bases = build_bases(parsed.session.scheme);
    setup.eve = strategy_from_spec(eve_spec, setup.bases);
    return setup;
}

int run_simulate(const std::string& config_path, std::optional<std::uint64_t> seed_flag,
                 const std::string& eve_flag, bool over_wire) {
    const SessionSetup setup = load_session(config_path, seed_flag, eve_flag);
    const Transcript transcript = over_wire ? run_session_wire(setup.config, setup.eve)
                                            : run_session(setup.config, setup.eve);

    const ErrorReport& report = transcript.error_report;
    std::cerr << "frames: " << transcript.frames.size()
              << "  controls verified: " << report.control_total
              << "  control errors: " << report.control_errors << "\n";
    std::cerr << "error rate: " << format_g17(report.error_rate)
              << "  threshold: " << format_g17(setup.config.effective_abort_threshold()) << "\n";
    std::cerr << "verdict: " << (report.verdict == Verdict::PASS ? "PASS" : "ABORT") << "\n";

    if (report.verdict != Verdict::PASS) {
        return 2;
    }
    std::cout << to_hex(*transcript.decoded_message) << "\n";
    const bool correct = decoded_matches_sent(transcript);
    std::cerr << "decode: " << (correct ? "exact" : "MISMATCH") << "\n";
    return correct ? 0 : 1;
}

int run_sweep(const std::string& scheme_name, std::size_t n, std::uint64_t seed,
              const std::string& mode_name, std::optional<std::size_t> empirical_bits) {
    const SchemeParams params = parse_scheme_name(scheme_name);
    ForwardingMode mode;
    if (mode_name == "as-detected") {
        mode = ForwardingMode::AS_DETECTED;
    } else if (mode_name == "random-fixed") {
        mode = ForwardingMode::RANDOM_FIXED;
    } else {
        throw std::invalid_argument("mode must be as-detected or random-fixed");
    }

    const SweepResult result = sweep_strategies(params, n, mode, seed, empirical_bits);
    std::cout << sweep_to_csv(result.rows);
    const SweepSummary& s = result.summary;
    std::cerr << "strategies: " << s.n_strategies << "  min rate: " << format_g17(s.min_rate)
              << "  mean rate: " << format_g17(s.mean_rate)
              << "  bound: " << format_g17(s.bound) << "  violations: " << s.violations << "\n";
    return s.violations == 0 ? 0 : 1;
}

int run_verify(const std::string& scheme_name, const std::string& params_text) {
    SchemeParams raw{0.0, 0.0, 0.0};
    if (!params_text.empty()) {
        std::array<double, 3> a{};
        std::stringstream ss(params_text);
        std::string part;
        std::size_t i = 0;
        while (std::getline(ss, part, ',') && i < 3) {
            a[i++] = std::stod(part);
        }
        if (i != 3) {
            throw std::invalid_argument("--params expects a1,a2,a3");
        }
        raw = SchemeParams{a[0], a[1], a[2]};
    } else {
        raw = parse_scheme_name(scheme_name);
    }

    const SchemeReport report = verify_scheme(raw.a1, raw.a2, raw.a3);
    print_scheme_report(std::cout, report);
    std::cerr << (report.all_pass ? "scheme checks passed" : "scheme checks FAILED") << "\n";
    return report.all_pass ? 0 : 1;
}

int run_attack(const std::string& config_path, std::optional<std::uint64_t> seed_flag,
               const std::string& eve_flag) {
    const SessionSetup setup = load_session(config_path, seed_flag, eve_flag);
    const Transcript transcript = run_session(setup.config, setup.eve);
    const RecoveryReport recovery = recover_message(transcript, setup.bases, setup.eve);

    std::cerr << "bob error rate: " << format_g17(transcript.error_report.error_rate)
              << "  verdict: "
              << (transcript.error_report.verdict == Verdict::PASS ? "PASS" : "ABORT") << "\n";
    std::cerr << "eve recovered " << recovery.count
              << " message bits, correct fraction: " << format_g17(recovery.correct_fraction)
              << ", certain fraction: " << format_g17(recovery.certain_fraction) << "\n";

    std::cout << "bob_error_rate,eve_correct_fraction,eve_certain_fraction,recovered_bits\n"
              << format_g17(transcript.error_report.error_rate) << ','
              << format_g17(recovery.correct_fraction) << ','
              << format_g17(recovery.certain_fraction) << ',' << recovery.count << "\n";
    return 0;
}

int run_qnd_scan(int grid) {
    if (grid < 2) {
        throw std::invalid_argument("--grid must be >= 2");
    }
    std::size_t points = 0;
    std::size_t vulnerable = 0;
    std::size_t interior_vulnerable = 0;
    std::cout << "a1,a2,a3,vulnerable,pattern\n";
    for (int i = 0; i < grid; ++i) {
        for (int j = 0; j < grid; ++j) {
            const double a1 = static_cast<double>(i) / (grid - 1);
            const double a2 = static_cast<double>(j) / (grid - 1);
            const double rest = 1.0 - a1 * a1 - a2 * a2;
            if (rest < -1e-12) {
                continue; // outside the parameter sphere
            }
            const double a3 = std::sqrt(std::max(0.0, rest));
            ++points;
            const auto backdoor = qnd_vulnerability(SchemeParams{a1, a2, a3});
            const bool interior = a1 > 0.0 && a2 > 0.0 && a3 > 1e-12;
            std::cout << format_g17(a1) << ',' << format_g17(a2) << ',' << format_g17(a3) << ','
                      << (backdoor ? 1 : 0) << ',';
            if (backdoor) {
                ++vulnerable;
                if (interior) {
                    ++interior_vulnerable;
                }
                const auto& p = backdoor->eigenvalue_pattern;
                std::cout << p[0] << p[1] << p[2] << p[3];
            }
            std::cout << "\n";
        }
    }
    std::cerr << "grid points: " << points << "  vulnerable: " << vulnerable
              << "  interior vulnerable: " << interior_vulnerable << "\n";
    return interior_vulnerable == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic publicly-known-key protocol simulator and analyzer"};
    app.require_subcommand(1);

    std::string config_path;
    std::string eve_flag;
    std::optional<std::uint64_t> seed_flag;
    bool over_wire = false;

    CLI::App* simulate = app.add_subcommand("simulate", "run a full session from a config file");
    simulate->add_option("--config", config_path, "session config file")->required();
    simulate->add_option("--seed", seed_flag, "override the session seed");
    simulate->add_option("--eve", eve_flag,
                         "override the eavesdropper spec (none|optimal|qnd|random:<seed>|"
                         "random-fixed:<seed>)");
    simulate->add_flag("--wire", over_wire, "run over the framed byte-stream transport");

    std::string scheme_name = "optimal";
    std::size_t sweep_n = 0;
    std::uint64_t sweep_seed = 0;
    bool sweep_seed_given = false;
    std::string mode_name = "as-detected";
    std::optional<std::size_t> empirical_bits;

    CLI::App* sweep = app.add_subcommand("sweep", "evaluate random intercept-resend strategies");
    sweep->add_option("--scheme", scheme_name, "optimal | simple | a1,a2,a3");
    sweep->add_option("--n", sweep_n, "number of strategies")->required();
    sweep->add_option("--seed", sweep_seed, "sweep seed")->each([&](const std::string&) {
        sweep_seed_given = true;
    });
    sweep->add_option("--mode", mode_name, "as-detected | random-fixed");
    sweep->add_option("--empirical", empirical_bits,
                      "also measure each strategy over about this many control bits");

    std::string verify_scheme_name;
    std::string verify_params;
    CLI::App* verify = app.add_subcommand("verify", "check the scheme algebra");
    verify->add_option("--scheme", verify_scheme_name, "optimal | simple | a1,a2,a3");
    verify->add_option("--params", verify_params, "explicit a1,a2,a3");

    CLI::App* attack = app.add_subcommand("attack", "run a session plus post-key recovery");
    attack->add_option("--config", config_path, "session config file")->required();
    attack->add_option("--seed", seed_flag, "override the session seed");
    attack->add_option("--eve", eve_flag, "override the eavesdropper spec");

    int grid = 0;
    CLI::App* qnd_scan = app.add_subcommand("qnd-scan", "scan the parameter grid for backdoors");
    qnd_scan->add_option("--grid", grid, "grid resolution per axis")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            return run_simulate(config_path, seed_flag, eve_flag, over_wire);
        }
        if (sweep->parsed()) {
            if (sweep_n < 1) {
                std::cerr << "error: --n must be >= 1\n";
                return 1;
            }
            if (!sweep_seed_given) {
                sweep_seed = fallback_seed();
            }
            return run_sweep(scheme_name, sweep_n, sweep_seed, mode_name, empirical_bits);
        }
        if (verify->parsed()) {
            if (verify_scheme_name.empty() && verify_params.empty()) {
                std::cerr << "error: verify needs --scheme or --params\n";
                return 1;
            }
            return run_verify(verify_scheme_name, verify_params);
        }
        if (attack->parsed()) {
            return run_attack(config_path, seed_flag, eve_flag);
        }
        if (qnd_scan->parsed()) {
            return run_qnd_scan(grid);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
