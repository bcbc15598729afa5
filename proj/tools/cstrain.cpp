/*
 * Copyright 2026 The cstrain Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cstrain/harness/config.hpp"
#include "cstrain/harness/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

int report(const cstrain::Error& e) {
    using cstrain::ErrorCode;
    if (const auto* ce = dynamic_cast<const cstrain::harness::ConfigError*>(&e)) {
        std::cerr << (e.code() == ErrorCode::ParseError ? "parse error" : "invalid config") << ":\n";
        for (const auto& p : ce->problems()) std::cerr << "  " << p << '\n';
        return kExitValidation;
    }
    std::cerr << e.what() << '\n';
    switch (e.code()) {
        case ErrorCode::IoError:
        case ErrorCode::BadMagic:
        case ErrorCode::CountMismatch:
        case ErrorCode::TruncatedFile: return kExitIo;
        default: return kExitValidation;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cstrain: constrained training experiments (FP, SAL, S-ADMM, ALM, ADMM)"};
    app.require_subcommand(1);

    std::string config_path, runs_path;
    unsigned jobs = 1;
    std::string out_dir;
    std::uint64_t seed_offset = 0;

    auto* run = app.add_subcommand("run", "run the sweep described by a config file");
    run->add_option("config", config_path, "experiment config (JSON)")->required();
    run->add_option("--jobs", jobs, "parallel runs")->check(CLI::PositiveNumber);
    run->add_option("--out", out_dir, "override the output directory");
    run->add_option("--seed-offset", seed_offset, "added to every configured seed");

    auto* validate = app.add_subcommand("validate", "check a config file without running it");
    validate->add_option("config", config_path, "experiment config (JSON)")->required();

    auto* summarize = app.add_subcommand("summarize", "recompute per-method mean/std from a runs.csv");
    summarize->add_option("runs", runs_path, "runs.csv written by 'run'")->required();
    summarize->add_option("--out", out_dir, "write summary.csv into this directory instead of stdout");
    bool include_aborted = false;
    summarize->add_flag("--include-aborted", include_aborted, "keep non-finite runs in the statistics");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*validate) {
            const auto cfg = cstrain::harness::parse_config(config_path);
            std::cout << "ok: " << cfg.points().size() << " hyperparameter points x " << cfg.seeds.size()
                      << " seeds\n";
            return kExitOk;
        }
        if (*run) {
            const auto cfg = cstrain::harness::parse_config(config_path);
            cstrain::harness::RunOptions ro;
            ro.jobs = jobs;
            ro.seed_offset = seed_offset;
            if (!out_dir.empty()) ro.out_dir = out_dir;
            const auto res = cstrain::harness::run_experiment(cfg, ro);
            cstrain::harness::write_summary_csv(std::cout, res.summary, false);
            std::cerr << res.rows.size() << " runs written to " << res.out_dir.string() << '\n';
            return kExitOk;
        }
        if (*summarize) {
            const auto rows = cstrain::harness::read_runs_csv(runs_path);
            const auto summary = cstrain::harness::summarize(rows, include_aborted);
            if (out_dir.empty()) {
                cstrain::harness::write_summary_csv(std::cout, summary, false);
            } else {
                std::filesystem::create_directories(out_dir);
                cstrain::harness::write_summary_csv(std::filesystem::path(out_dir) / "summary.csv", summary);
            }
            return kExitOk;
        }
    } catch (const cstrain::Error& e) {
        return report(e);
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << e.what() << '\n';
        return kExitIo;
    }
    return kExitValidation;
}
