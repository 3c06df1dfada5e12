#pragma once

#include "gwm/training.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gwm::cli {

/// One canned experiment: dataset recipes plus a fully pinned training
/// configuration. Every field is printed into the report header so a run
/// is reproducible from its CSV alone.
struct ExperimentSpec {
    std::string name;
    LanguageKind language;
    std::vector<std::pair<int, int>> train_sizes;
    int train_count;
    struct EvalSpec {
        std::string name;
        std::vector<std::pair<int, int>> sizes;
        int count;
    };
    std::vector<EvalSpec> evals;
    TrainConfig config;
};

/// Preset names: bs-table1, bs-generalize-4, bs-generalize-5, sb-table2.
ExperimentSpec make_preset(const std::string& name, std::uint64_t seed,
                           std::optional<int> train_count, std::optional<int> height);

struct ExperimentResult {
    TrainReport report;
    std::vector<std::string> artifact_paths;
};

/// Generates the datasets, trains, and writes train/eval dataset files,
/// the final model, and report.csv under out_dir.
ExperimentResult run_experiment(const ExperimentSpec& spec, const std::string& out_dir);

}  // namespace gwm::cli
