#include "crepe/harness/cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "crepe/errors.hpp"
#include "crepe/harness/commands.hpp"
#include "crepe/harness/probe.hpp"

namespace crepe::harness {

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"crepe: curved-ray expected positional encoding harness"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    int k = 0;

    using Handler = CommandResult (*)(const RunConfig&);
    struct Sub {
        const char* name;
        const char* help;
        Handler handler;
        bool takes_k;
    };
    const Sub subs[] = {
        {"coeffs", "Expected modulation coefficients for every (query frame, source token) pair", cmd_coeffs, true},
        {"trace-path", "CSV of projected breakpoint paths", cmd_trace_path, true},
        {"oracle-check", "Compare expected phasors against a Monte-Carlo oracle", cmd_oracle_check, true},
        {"gradcheck", "Finite-difference checks of head and radial-loss gradients", cmd_gradcheck, false},
        {"train-head", "Train per-layer probe heads on synthetic features", cmd_train_head, false},
        {"mix-sim", "Simulate the MixForcing substitution schedule", cmd_mix_sim, false},
    };
    std::vector<std::pair<CLI::App*, const Sub*>> registered;
    for (const Sub& s : subs) {
        CLI::App* sub = app.add_subcommand(s.name, s.help);
        sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "RNG seed");
        sub->add_option("--out", out_dir, "Output directory");
        if (s.takes_k) {
            sub->add_option("--k", k, "Breakpoints per interval");
        }
        registered.emplace_back(sub, &s);
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitPass;
    } catch (const CLI::ParseError& e) {
        err << "crepe: " << e.what() << "\n";
        return kExitParse;
    }

    for (const auto& [sub, spec] : registered) {
        if (!sub->parsed()) {
            continue;
        }
        try {
            const std::optional<std::filesystem::path> cfg =
                config_path.empty() ? std::nullopt : std::optional<std::filesystem::path>(config_path);
            const auto seed_opt = sub->count("--seed") ? std::optional<std::uint64_t>(seed) : std::nullopt;
            const auto k_opt = spec->takes_k && sub->count("--k") ? std::optional<int>(k) : std::nullopt;
            const auto out_opt =
                out_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(out_dir);
            const RunConfig config = load_config(cfg, seed_opt, k_opt, out_opt);
            std::filesystem::create_directories(config.out_dir);
            const CommandResult result = spec->handler(config);
            out << spec->name << ": " << (result.pass ? "PASS" : "FAIL") << " " << result.message << "\n";
            return result.pass ? kExitPass : kExitValidation;
        } catch (const ParseError& e) {
            err << "crepe " << spec->name << ": parse error: " << e.what() << "\n";
            return kExitParse;
        } catch (const nlohmann::json::parse_error& e) {
            err << "crepe " << spec->name << ": parse error: " << e.what() << "\n";
            return kExitParse;
        } catch (const TrainingDiverged& e) {
            err << "crepe " << spec->name << ": training diverged: " << e.what() << "\n";
            return kExitValidation;
        } catch (const std::exception& e) {
            err << "crepe " << spec->name << ": " << e.what() << "\n";
            return kExitValidation;
        }
    }
    return kExitParse;
}

}  // namespace crepe::harness
