// cool_cli: run or validate experiment configs.
//
//   cool_cli run <config> [--out DIR] [--seed-offset N] [--threads N]
//   cool_cli validate <config>
//
// Exit codes: 0 ok, 1 config error, 2 certificate violation, 3 I/O failure.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "cool/experiment.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kCertificateViolation = 2;
constexpr int kIoError = 3;

int report_errors(const fs::path& path, const std::vector<std::string>& errors) {
    std::cerr << path.string() << ": " << errors.size() << " error(s)\n";
    for (const auto& e : errors) std::cerr << "  " << e << '\n';
    return kConfigError;
}

std::optional<cool::ExperimentConfig> load(const fs::path& path, int& status) {
    auto parsed = cool::load_config(path);
    if (auto* errors = std::get_if<std::vector<std::string>>(&parsed)) {
        status = report_errors(path, *errors);
        return std::nullopt;
    }
    return std::get<cool::ExperimentConfig>(std::move(parsed));
}

int cmd_validate(const fs::path& path) {
    int status = kOk;
    auto config = load(path, status);
    if (!config) return status;
    std::cout << path.string() << ": ok (" << cool::to_string(config->kind) << ", T = " << config->T
              << ", " << config->seeds.size() << " seeds, " << cool::plan_runs(*config).size()
              << " runs)\n";
    return kOk;
}

int cmd_run(const fs::path& path, const fs::path& out_dir, std::uint64_t seed_offset,
            unsigned threads) {
    int status = kOk;
    auto config = load(path, status);
    if (!config) return status;
    for (auto& s : config->seeds) s += seed_offset;

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        std::cerr << "cannot create output directory '" << out_dir.string() << "': " << ec.message() << '\n';
        return kIoError;
    }
    const fs::path csv_path = config->output.is_absolute() ? config->output : out_dir / config->output;
    fs::path report_path = csv_path;
    report_path.replace_extension(".report.txt");

    cool::ExperimentResult result;
    try {
        result = cool::run_experiment(*config, threads);
    } catch (const std::exception& e) {
        std::cerr << e.what() << '\n';
        return kConfigError;
    }

    {
        std::ofstream csv(csv_path, std::ios::binary);
        if (csv) cool::write_csv(result, csv);
        if (!csv) {
            std::cerr << "cannot write '" << csv_path.string() << "'\n";
            return kIoError;
        }
    }
    {
        std::ofstream report(report_path, std::ios::binary);
        if (report) cool::write_report(result, report);
        if (!report) {
            std::cerr << "cannot write '" << report_path.string() << "'\n";
            return kIoError;
        }
    }

    for (const auto& learner : result.learners) {
        std::cout << learner << ": final regret " << result.mean_final_regret(learner)
                  << ", utility gain " << result.mean_final_utility(learner) << '\n';
    }
    std::cout << "wrote " << csv_path.string() << " and " << report_path.string() << '\n';

    if (!result.certificates_hold()) {
        for (const auto& r : result.runs) {
            const auto& b = r.result.certificate;
            if (!b.holds()) {
                std::cerr << "certificate violated: " << r.spec.learner << " seed " << r.spec.seed
                          << ": linearized regret " << b.observed_linearized_regret << " > bound "
                          << b.total_bound << '\n';
            }
        }
        return kCertificateViolation;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coordinated online learning experiments"};
    app.require_subcommand(1);

    std::string run_config;
    std::string out_dir = ".";
    std::uint64_t seed_offset = 0;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    auto* run = app.add_subcommand("run", "Run an experiment and write CSV plus certificate report");
    run->add_option("config", run_config, "Config file (YAML)")->required();
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--seed-offset", seed_offset, "Added to every seed");
    run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

    std::string validate_config;
    auto* validate = app.add_subcommand("validate", "Check a config and list every problem");
    validate->add_option("config", validate_config, "Config file (YAML)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    if (*run) return cmd_run(run_config, out_dir, seed_offset, threads);
    return cmd_validate(validate_config);
}
