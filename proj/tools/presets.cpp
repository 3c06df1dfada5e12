#include "presets.hpp"

#include "gwm/format.hpp"
#include "gwm/rng.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace gwm::cli {

namespace {

std::vector<std::pair<int, int>> square_sizes(int from, int to) {
    std::vector<std::pair<int, int>> sizes;
    for (int m = from; m <= to; ++m) sizes.emplace_back(m, m);
    return sizes;
}

std::vector<std::pair<int, int>> width_range(int height, int from, int to) {
    std::vector<std::pair<int, int>> sizes;
    for (int n = from; n <= to; ++n) sizes.emplace_back(height, n);
    return sizes;
}

std::string size_list(const std::vector<std::pair<int, int>>& sizes) {
    std::string out;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(sizes[i].first) + "x" + std::to_string(sizes[i].second);
    }
    return out;
}

}  // namespace

ExperimentSpec make_preset(const std::string& name, std::uint64_t seed,
                           std::optional<int> train_count, std::optional<int> height) {
    ExperimentSpec spec;
    spec.name = name;
    spec.config.seed = seed;

    if (name == "bs-table1") {
        spec.language = LanguageKind::BarsStripes;
        spec.train_sizes = {{4, 4}};
        spec.train_count = train_count.value_or(10000);
        spec.evals.push_back({"test", {{4, 4}}, 100});
        spec.config.dim = 6;
        spec.config.init_std = 0.4;
        spec.config.learning_rate = 0.01;
        spec.config.batch_size = 100;
        spec.config.loss = LossKind::Mse;
        spec.config.iterations = 4000;
        spec.config.eval_every = 200;
    } else if (name == "bs-generalize-4" || name == "bs-generalize-5") {
        const int m = name.back() - '0';
        spec.language = LanguageKind::BarsStripes;
        spec.train_sizes = square_sizes(2, m);
        spec.train_count = train_count.value_or(10000);
        spec.evals.push_back({"test", {{m + 1, m + 1}}, 200});
        spec.config.dim = 6;
        spec.config.init_std = 0.4;
        spec.config.learning_rate = 0.001;
        spec.config.batch_size = 1000;
        spec.config.loss = LossKind::Mse;
        spec.config.iterations = 1500;
        spec.config.eval_every = 50;
    } else if (name == "sb-table2") {
        const int h = height.value_or(2);
        if (h < 2) throw std::invalid_argument("sb-table2: height must be at least 2");
        spec.language = LanguageKind::ShiftingBits;
        spec.train_sizes = width_range(h, 5, 15);
        spec.train_count = train_count.value_or(20000);
        for (int w : {10, 20, 50, 100})
            spec.evals.push_back({"w" + std::to_string(w), {{h, w}}, 200});
        spec.evals.push_back({"cross", {{h == 2 ? 3 : 2, 10}}, 200});
        spec.config.dim = 10;
        spec.config.init_std = 0.2;
        spec.config.learning_rate = 0.01;
        spec.config.batch_size = 128;
        spec.config.loss = LossKind::SigmoidCrossEntropy;
        spec.config.clip_norm = 1.0;
        spec.config.batch_mode = BatchMode::ShuffledEpochs;
        const long per_epoch = std::max(1L, static_cast<long>(spec.train_count / 128));
        spec.config.iterations = 60 * per_epoch;
        spec.config.eval_every = 2 * per_epoch;
    } else {
        throw std::invalid_argument(
            "unknown preset '" + name +
            "' (expected bs-table1, bs-generalize-4, bs-generalize-5, or sb-table2)");
    }
    return spec;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    auto path = [&](const std::string& file) { return (fs::path(out_dir) / file).string(); };

    const std::uint64_t seed = spec.config.seed;
    ExperimentResult result;

    Dataset train_set = generate_dataset(spec.language, spec.train_sizes, spec.train_count, 0.5,
                                         mix_seed(seed, 10));
    train_set.meta.split = "train";
    save_dataset_file(train_set, path("train.ds"));
    result.artifact_paths.push_back(path("train.ds"));

    std::vector<Dataset> eval_data;
    eval_data.reserve(spec.evals.size());
    std::vector<NamedDataset> eval_refs;
    for (std::size_t i = 0; i < spec.evals.size(); ++i) {
        const auto& e = spec.evals[i];
        Dataset ds = generate_dataset(spec.language, e.sizes, e.count, 0.5,
                                      mix_seed(seed, 11 + i), &train_set);
        ds.meta.split = e.name;
        save_dataset_file(ds, path(e.name + ".ds"));
        result.artifact_paths.push_back(path(e.name + ".ds"));
        eval_data.push_back(std::move(ds));
    }
    for (std::size_t i = 0; i < spec.evals.size(); ++i)
        eval_refs.push_back({spec.evals[i].name, &eval_data[i]});

    const auto progress = [&](const IterationRecord& rec) {
        std::cerr << "iter " << rec.iteration << '/' << spec.config.iterations << " train_loss "
                  << format_double(rec.train_loss);
        for (std::size_t i = 0; i < eval_refs.size(); ++i)
            std::cerr << ' ' << eval_refs[i].name << ' ' << format_double(rec.evals[i].loss)
                      << '/' << format_double(rec.evals[i].accuracy);
        std::cerr << '\n';
    };
    result.report = train(spec.config, train_set, eval_refs, progress);

    save_model_file(result.report.final_model, path("model.json"));
    result.artifact_paths.push_back(path("model.json"));

    std::vector<std::string> comments = {
        "preset=" + spec.name,
        "seed=" + std::to_string(seed),
        "language=" + std::string(spec.language == LanguageKind::BarsStripes ? "bs" : "sb"),
        "train_sizes=" + size_list(spec.train_sizes),
        "train_count=" + std::to_string(spec.train_count),
        "dim=" + std::to_string(spec.config.dim),
        "init_std=" + format_double(spec.config.init_std),
        "lr=" + format_double(spec.config.learning_rate),
        "batch=" + std::to_string(spec.config.batch_size),
        "iterations=" + std::to_string(spec.config.iterations),
        "loss=" + std::string(spec.config.loss == LossKind::Mse ? "mse" : "ce"),
        "clip=" + (spec.config.clip_norm ? format_double(*spec.config.clip_norm) : "none"),
        "batch_mode=" + std::string(spec.config.batch_mode == BatchMode::UniformWithReplacement
                                        ? "uniform"
                                        : "epochs"),
        "adam=beta1:" + format_double(spec.config.beta1) + ",beta2:" +
            format_double(spec.config.beta2) + ",eps:" + format_double(spec.config.epsilon),
        "eval_every=" + std::to_string(spec.config.eval_every),
    };
    for (const auto& e : spec.evals)
        comments.push_back("eval_" + e.name + "=" + size_list(e.sizes) + " n=" +
                           std::to_string(e.count));

    std::ofstream csv(path("report.csv"));
    if (!csv) throw std::runtime_error("cannot open '" + path("report.csv") + "' for writing");
    write_report_csv(result.report, csv, comments);
    result.artifact_paths.push_back(path("report.csv"));
    return result;
}

}  // namespace gwm::cli
