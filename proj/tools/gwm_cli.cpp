#include "gwm/contraction.hpp"
#include "gwm/format.hpp"
#include "gwm/languages.hpp"
#include "gwm/model.hpp"
#include "gwm/rng.hpp"
#include "gwm/training.hpp"
#include "gwm/wpa.hpp"

#include "presets.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace gwm;

std::pair<int, int> parse_size(const std::string& text) {
    const auto x = text.find('x');
    if (x == std::string::npos)
        throw CLI::ValidationError("size", "expected ROWSxCOLS, got '" + text + "'");
    int m = 0, n = 0;
    try {
        m = std::stoi(text.substr(0, x));
        n = std::stoi(text.substr(x + 1));
    } catch (const std::exception&) {
        throw CLI::ValidationError("size", "expected ROWSxCOLS, got '" + text + "'");
    }
    if (m < 1 || n < 1)
        throw CLI::ValidationError("size", "dimensions must be positive in '" + text + "'");
    return {m, n};
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    const auto dots = text.find("..");
    if (dots != std::string::npos) {
        const int from = std::stoi(text.substr(0, dots));
        const int to = std::stoi(text.substr(dots + 2));
        if (from < 1 || to < from)
            throw CLI::ValidationError("range", "bad range '" + text + "'");
        for (int v = from; v <= to; ++v) out.push_back(v);
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const int v = std::stoi(item);
        if (v < 1) throw CLI::ValidationError("list", "values must be positive in '" + text + "'");
        out.push_back(v);
    }
    return out;
}

struct GenArgs {
    std::string language;
    std::vector<std::string> sizes;
    std::string heights, widths;
    int count = 1000;
    double fraction = 0.5;
    std::uint64_t seed = 0;
    std::string split;
    std::string exclude_path;
    std::string out = "dataset.ds";
};

int run_gen(const GenArgs& args) {
    std::vector<std::pair<int, int>> sizes;
    for (const auto& s : args.sizes) sizes.push_back(parse_size(s));
    if (!args.heights.empty() || !args.widths.empty()) {
        if (args.heights.empty() || args.widths.empty())
            throw CLI::ValidationError("gen", "--heights and --widths must be given together");
        for (int h : parse_int_list(args.heights))
            for (int w : parse_int_list(args.widths)) sizes.emplace_back(h, w);
    }
    if (sizes.empty()) throw CLI::ValidationError("gen", "no sizes given (--size or --heights/--widths)");

    const LanguageKind lang =
        args.language == "bs" ? LanguageKind::BarsStripes : LanguageKind::ShiftingBits;

    std::optional<Dataset> exclude;
    if (!args.exclude_path.empty()) exclude = load_dataset_file(args.exclude_path);

    Dataset ds = generate_dataset(lang, sizes, args.count, args.fraction, args.seed,
                                  exclude ? &*exclude : nullptr);
    ds.meta.split = args.split;
    save_dataset_file(ds, args.out);
    std::cout << "wrote " << ds.examples.size() << " examples to " << args.out << '\n';
    return 0;
}

struct TrainArgs {
    std::string data;
    std::vector<std::string> evals;  // name=path
    std::string loss = "mse";
    TrainConfig config;
    bool use_epochs = false;
    long epochs = 0;
    double clip = 0.0;
    std::string out = "run";
};

int run_train(TrainArgs& args) {
    Dataset train_set = load_dataset_file(args.data);

    std::vector<Dataset> eval_data;
    std::vector<NamedDataset> eval_refs;
    eval_data.reserve(args.evals.size());
    for (const auto& spec : args.evals) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--eval", "expected NAME=PATH, got '" + spec + "'");
        eval_data.push_back(load_dataset_file(spec.substr(eq + 1)));
        eval_refs.push_back({spec.substr(0, eq), nullptr});
    }
    for (std::size_t i = 0; i < eval_data.size(); ++i) eval_refs[i].data = &eval_data[i];

    args.config.loss = args.loss == "mse" ? LossKind::Mse : LossKind::SigmoidCrossEntropy;
    if (args.clip > 0.0) args.config.clip_norm = args.clip;
    if (args.use_epochs) {
        args.config.batch_mode = BatchMode::ShuffledEpochs;
        const long per_epoch =
            static_cast<long>(train_set.examples.size()) / args.config.batch_size;
        if (per_epoch < 1)
            throw CLI::ValidationError("--epochs", "batch size exceeds the training set");
        args.config.iterations = args.epochs * per_epoch;
    }

    const auto progress = [&](const IterationRecord& rec) {
        std::cerr << "iter " << rec.iteration << '/' << args.config.iterations << " train_loss "
                  << format_double(rec.train_loss);
        for (std::size_t i = 0; i < eval_refs.size(); ++i)
            std::cerr << ' ' << eval_refs[i].name << ' ' << format_double(rec.evals[i].loss) << '/'
                      << format_double(rec.evals[i].accuracy);
        std::cerr << '\n';
    };
    TrainReport report = train(args.config, train_set, eval_refs, progress);

    namespace fs = std::filesystem;
    fs::create_directories(args.out);
    save_model_file(report.final_model, (fs::path(args.out) / "model.json").string());
    std::ofstream csv(fs::path(args.out) / "report.csv");
    write_report_csv(report, csv,
                     {"data=" + args.data, "loss=" + args.loss,
                      "seed=" + std::to_string(args.config.seed)});

    if (report.diverged_at) {
        std::cerr << "error: training loss became non-finite at iteration " << *report.diverged_at
                  << '\n';
        return 1;
    }
    if (!report.records.empty()) {
        const auto& last = report.records.back();
        std::cout << "iteration " << last.iteration << " train_loss "
                  << format_double(last.train_loss);
        for (std::size_t i = 0; i < report.eval_names.size(); ++i)
            std::cout << ' ' << report.eval_names[i] << "_loss "
                      << format_double(last.evals[i].loss) << ' ' << report.eval_names[i]
                      << "_accuracy " << format_double(last.evals[i].accuracy);
        std::cout << '\n';
    }
    std::cout << "artifacts in " << args.out << '\n';
    return 0;
}

int run_eval(const std::string& model_path, const std::string& data_path,
             const std::vector<std::string>& metrics) {
    const GwmModel model = load_model_file(model_path);
    const Dataset ds = load_dataset_file(data_path);
    for (const auto& metric : metrics) {
        if (metric == "mse") {
            std::cout << "mse=" << format_double(evaluate_metrics(model, ds, LossKind::Mse).loss)
                      << '\n';
        } else if (metric == "ce") {
            std::cout << "ce="
                      << format_double(
                             evaluate_metrics(model, ds, LossKind::SigmoidCrossEntropy).loss)
                      << '\n';
        } else if (metric == "accuracy") {
            std::cout << "accuracy="
                      << format_double(evaluate_metrics(model, ds, LossKind::Mse).accuracy)
                      << '\n';
        } else {
            throw CLI::ValidationError("--metric", "unknown metric '" + metric + "'");
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph weighted models over pictures: datasets, automata, training"};
    app.require_subcommand(1);

    // ---- gen ----
    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "Generate a labeled picture dataset");
    gen_cmd->add_option("language", gen.language, "Language: bs or sb")
        ->required()
        ->check(CLI::IsMember({"bs", "sb"}));
    gen_cmd->add_option("--size", gen.sizes, "Picture size ROWSxCOLS (repeatable)");
    gen_cmd->add_option("--heights", gen.heights, "Heights list/range, e.g. 2 or 2,3");
    gen_cmd->add_option("--widths", gen.widths, "Widths list/range, e.g. 5..15");
    gen_cmd->add_option("-n,--count", gen.count, "Number of examples")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--fraction", gen.fraction, "Positive fraction (default 0.5)");
    gen_cmd->add_option("--seed", gen.seed, "Random seed");
    gen_cmd->add_option("--split", gen.split, "Split tag stored in the metadata");
    gen_cmd->add_option("--exclude", gen.exclude_path, "Dataset whose examples must not reappear");
    gen_cmd->add_option("-o,--out", gen.out, "Output file");

    // ---- wpa eval / wpa compile ----
    std::string wpa_path, picture_path, compile_out = "model.json";
    auto* wpa_cmd = app.add_subcommand("wpa", "Weighted picture automaton operations");
    wpa_cmd->require_subcommand(1);
    auto* wpa_eval = wpa_cmd->add_subcommand("eval", "Evaluate an automaton on a picture");
    wpa_eval->add_option("automaton", wpa_path, "Automaton file")->required();
    wpa_eval->add_option("picture", picture_path, "Picture file")->required();
    auto* wpa_compile = wpa_cmd->add_subcommand("compile", "Compile an automaton to a model");
    wpa_compile->add_option("automaton", wpa_path, "Automaton file")->required();
    wpa_compile->add_option("-o,--out", compile_out, "Output model file");

    // ---- gwm eval ----
    std::string model_path;
    auto* gwm_cmd = app.add_subcommand("gwm", "Model operations");
    gwm_cmd->require_subcommand(1);
    auto* gwm_eval = gwm_cmd->add_subcommand("eval", "Evaluate a model on a picture");
    gwm_eval->add_option("model", model_path, "Model file")->required();
    gwm_eval->add_option("picture", picture_path, "Picture file")->required();

    // ---- train ----
    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train a model on a dataset");
    train_cmd->add_option("--data", train_args.data, "Training dataset")->required();
    train_cmd->add_option("--eval", train_args.evals, "Held-out set as NAME=PATH (repeatable)");
    train_cmd->add_option("--loss", train_args.loss, "Loss: mse or ce")
        ->check(CLI::IsMember({"mse", "ce"}));
    train_cmd->add_option("--dim", train_args.config.dim, "Model dimension");
    train_cmd->add_option("--lr", train_args.config.learning_rate, "Learning rate");
    train_cmd->add_option("--batch", train_args.config.batch_size, "Mini-batch size");
    auto* iters_opt =
        train_cmd->add_option("--iters", train_args.config.iterations, "Mini-batch count");
    train_cmd->add_option("--epochs", train_args.epochs, "Full passes (shuffled batching)")
        ->excludes(iters_opt);
    train_cmd->add_option("--init-std", train_args.config.init_std, "Init standard deviation");
    train_cmd->add_option("--clip", train_args.clip, "Global-norm gradient clip threshold");
    train_cmd->add_option("--seed", train_args.config.seed, "Random seed");
    train_cmd->add_option("--eval-every", train_args.config.eval_every, "Metric cadence");
    train_cmd->add_option("--out", train_args.out, "Output directory");

    // ---- eval ----
    std::string eval_model, eval_data;
    std::vector<std::string> metrics = {"mse", "accuracy"};
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a saved model on a dataset");
    eval_cmd->add_option("model", eval_model, "Model file")->required();
    eval_cmd->add_option("dataset", eval_data, "Dataset file")->required();
    eval_cmd->add_option("--metric", metrics, "Metrics: mse, accuracy, ce (repeatable)");

    // ---- reproduce ----
    std::string preset_name;
    std::uint64_t preset_seed = 0;
    int preset_n = -1, preset_height = -1;
    long preset_iters = -1, preset_epochs = -1, preset_eval_every = -1;
    std::string preset_out = "experiment";
    auto* rep_cmd = app.add_subcommand("reproduce", "Run a canned experiment end to end");
    rep_cmd->add_option("preset", preset_name,
                        "bs-table1 | bs-generalize-4 | bs-generalize-5 | sb-table2")
        ->required();
    rep_cmd->add_option("--seed", preset_seed, "Random seed");
    rep_cmd->add_option("--n", preset_n, "Training set size override");
    rep_cmd->add_option("--height", preset_height, "Picture height (sb-table2)");
    rep_cmd->add_option("--iters", preset_iters, "Iteration budget override");
    rep_cmd->add_option("--epochs", preset_epochs, "Epoch budget override (sb-table2)");
    rep_cmd->add_option("--eval-every", preset_eval_every, "Metric cadence override");
    rep_cmd->add_option("--out", preset_out, "Output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen_cmd) return run_gen(gen);
        if (*wpa_eval) {
            const Wpa a = load_wpa_file(wpa_path);
            const Picture p = load_picture_file(picture_path);
            std::cout << format_double(evaluate_bruteforce(a, p)) << '\n';
            return 0;
        }
        if (*wpa_compile) {
            save_model_file(compile_to_gwm(load_wpa_file(wpa_path)), compile_out);
            std::cout << "wrote " << compile_out << '\n';
            return 0;
        }
        if (*gwm_eval) {
            const GwmModel m = load_model_file(model_path);
            const Picture p = load_picture_file(picture_path);
            std::cout << format_double(evaluate(m, p)) << '\n';
            return 0;
        }
        if (*train_cmd) return run_train(train_args);
        if (*eval_cmd) return run_eval(eval_model, eval_data, metrics);
        if (*rep_cmd) {
            cli::ExperimentSpec spec = cli::make_preset(
                preset_name, preset_seed,
                preset_n > 0 ? std::optional<int>(preset_n) : std::nullopt,
                preset_height > 0 ? std::optional<int>(preset_height) : std::nullopt);
            if (preset_iters > 0) spec.config.iterations = preset_iters;
            if (preset_epochs > 0)
                spec.config.iterations =
                    preset_epochs * std::max(1L, static_cast<long>(spec.train_count /
                                                                   spec.config.batch_size));
            if (preset_eval_every > 0) spec.config.eval_every = preset_eval_every;

            cli::ExperimentResult result = cli::run_experiment(spec, preset_out);
            if (result.report.diverged_at) {
                std::cerr << "error: training loss became non-finite at iteration "
                          << *result.report.diverged_at << '\n';
                return 1;
            }
            if (!result.report.records.empty()) {
                const auto& last = result.report.records.back();
                std::cout << "final iteration " << last.iteration << " train_loss "
                          << format_double(last.train_loss);
                for (std::size_t i = 0; i < result.report.eval_names.size(); ++i)
                    std::cout << ' ' << result.report.eval_names[i] << "_loss "
                              << format_double(last.evals[i].loss) << ' '
                              << result.report.eval_names[i] << "_accuracy "
                              << format_double(last.evals[i].accuracy);
                std::cout << '\n';
            }
            std::cout << "artifacts in " << preset_out << '\n';
            return 0;
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
