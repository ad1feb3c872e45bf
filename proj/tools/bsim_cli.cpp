// Command-line experiment runner.
//
//   bsim run <experiment> [--theta X] [--phi X] [--r X] [--s X]
//            [--alpha re,im] [--beta re,im] [--trials N] [--seed N]
//            [--cutoff N] [--out PATH] [--format json|table] [--config PATH]
//
// Exit codes: 0 success, 2 validation error, 1 internal error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "bsim/experiment.hpp"

namespace {

constexpr int kValidationExit = 2;
constexpr int kInternalExit = 1;

int report(const std::string& kind, const std::string& message, int code) {
    nlohmann::ordered_json err = {{"error", {{"type", kind}, {"message", message}}}};
    std::cerr << err.dump() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Beamsplitter quantum-optics simulator"};
    app.require_subcommand(1);

    // Options live on the top-level app so that a flat config file maps onto
    // them; fallthrough lets them follow the subcommand on the command line.
    app.allow_config_extras(false);
    app.set_config("--config", "", "Flat key = value file mirroring the flags");

    CLI::App* run = app.add_subcommand("run", "Run a named experiment");
    run->fallthrough();
    std::string experiment;
    run->add_option("experiment", experiment, "Experiment name")->required();

    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
    const std::pair<const char*, const char*> numeric[] = {
        {"theta", "Beamsplitter angle (rad)"},
        {"phi", "Phase (rad)"},
        {"r", "Two-mode squeezing"},
        {"s", "Single-mode squeezing on Bob's mode"},
        {"alpha", "Complex amplitude re,im"},
        {"beta", "Complex amplitude re,im"},
        {"trials", "Number of sampled trials"},
        {"cutoff", "Fock cutoff"},
    };
    for (const auto& [name, help] : numeric)
        options[name] = app.add_option(std::string("--") + name, values[name], help);
    // Config values "re,im" arrive split into parts; join them back.
    for (const char* name : {"alpha", "beta"})
        options[name]->delimiter(',')->multi_option_policy(CLI::MultiOptionPolicy::Join);

    std::uint64_t seed = 42;
    app.add_option("--seed", seed, "Base seed")->capture_default_str();
    std::string out_path;
    app.add_option("--out", out_path, "Write JSON to this file instead of stdout");
    std::string format = "table";
    app.add_option("--format", format, "json or table")
        ->check(CLI::IsMember({"json", "table"}))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report("validation", e.what(), kValidationExit);
    }

    std::map<std::string, std::string> given;
    for (const auto& [name, opt] : options)
        if (opt->count() > 0) given[name] = values[name];

    try {
        const auto spec = bsim::make_spec(experiment, given, seed);
        const auto result = bsim::run(spec);
        if (!out_path.empty()) {
            std::ofstream file(out_path, std::ios::binary);
            if (!file) return report("validation", "cannot open " + out_path, kValidationExit);
            file << bsim::emit(result, bsim::OutputFormat::Json);
            if (!file) return report("internal", "failed writing " + out_path, kInternalExit);
        } else {
            const auto fmt = format == "json" ? bsim::OutputFormat::Json : bsim::OutputFormat::Table;
            std::cout << bsim::emit(result, fmt);
        }
    } catch (const std::invalid_argument& e) {
        // ValidationError and module precondition failures alike.
        return report("validation", e.what(), kValidationExit);
    } catch (const std::domain_error& e) {
        return report("validation", e.what(), kValidationExit);
    } catch (const std::exception& e) {
        return report("internal", e.what(), kInternalExit);
    }
    return 0;
}
