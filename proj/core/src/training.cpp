#include "gwm/training.hpp"

#include "gwm/format.hpp"
#include "gwm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace gwm {

void TrainConfig::validate() const {
    if (dim < 1) throw std::invalid_argument("TrainConfig: dim must be at least 1");
    if (!(init_std > 0.0)) throw std::invalid_argument("TrainConfig: init_std must be positive");
    if (learning_rate < 0.0)
        throw std::invalid_argument("TrainConfig: learning_rate must be non-negative");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be at least 1");
    if (iterations < 0) throw std::invalid_argument("TrainConfig: iterations must be non-negative");
    if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0))
        throw std::invalid_argument("TrainConfig: beta1 and beta2 must lie in (0, 1)");
    if (!(epsilon > 0.0)) throw std::invalid_argument("TrainConfig: epsilon must be positive");
    if (eval_every < 1) throw std::invalid_argument("TrainConfig: eval_every must be at least 1");
    if (clip_norm && !(*clip_norm > 0.0))
        throw std::invalid_argument("TrainConfig: clip threshold must be positive");
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

LossResult mse_loss(const GwmModel& model, std::span<const LabeledExample> batch) {
    if (batch.empty()) throw std::invalid_argument("mse_loss: empty batch");
    LossResult result;
    result.grads = GradientAccumulator::zeros_like(model);
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (const auto& ex : batch) {
        Evaluation e = gradient(model, ex.picture);
        const double residual = e.value - ex.label;
        result.loss += residual * residual * inv;
        result.grads.add_scaled(e.grads, 2.0 * residual * inv);
    }
    return result;
}

LossResult ce_loss(const GwmModel& model, std::span<const LabeledExample> batch) {
    if (batch.empty()) throw std::invalid_argument("ce_loss: empty batch");
    LossResult result;
    result.grads = GradientAccumulator::zeros_like(model);
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (const auto& ex : batch) {
        if (ex.label != 0.0 && ex.label != 1.0)
            throw std::invalid_argument("ce_loss: labels must be exactly 0 or 1, got " +
                                        format_double(ex.label));
        Evaluation e = gradient(model, ex.picture);
        result.loss += (ex.label > 0.5 ? softplus(-e.value) : softplus(e.value)) * inv;
        result.grads.add_scaled(e.grads, (sigmoid(e.value) - ex.label) * inv);
    }
    return result;
}

AdamState AdamState::zeros_like(const GwmModel& model) {
    return AdamState{GradientAccumulator::zeros_like(model),
                     GradientAccumulator::zeros_like(model), 0};
}

namespace {

void adam_update_array(DenseTensor::Buffer& theta, const DenseTensor::Buffer& g,
                       DenseTensor::Buffer& m, DenseTensor::Buffer& v, double lr, double b1,
                       double b2, double eps, double bias1, double bias2) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        theta[i] -= lr * (m[i] / bias1) / (std::sqrt(v[i] / bias2) + eps);
    }
}

}  // namespace

void adam_step(GwmModel& model, AdamState& state, const GradientAccumulator& grads,
               const TrainConfig& config) {
    ++state.steps;
    const double bias1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.steps));
    const double bias2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.steps));
    for (std::size_t s = 0; s < model.tensors.size(); ++s)
        adam_update_array(model.tensors[s].values(), grads.tensors[s].values(),
                          state.first.tensors[s].values(), state.second.tensors[s].values(),
                          config.learning_rate, config.beta1, config.beta2, config.epsilon, bias1,
                          bias2);
    for (std::size_t b = 0; b < model.borders.size(); ++b)
        adam_update_array(model.borders[b].values(), grads.borders[b].values(),
                          state.first.borders[b].values(), state.second.borders[b].values(),
                          config.learning_rate, config.beta1, config.beta2, config.epsilon, bias1,
                          bias2);
}

double clip_gradients(GradientAccumulator& grads, double threshold) {
    const double norm = std::sqrt(grads.squared_norm());
    if (norm > threshold) grads.scale(threshold / norm);
    return norm;
}

bool classify_regression(const GwmModel& model, const Picture& p, double threshold) {
    return evaluate(model, p) > threshold;
}

bool classify_sigmoid(const GwmModel& model, const Picture& p) {
    return evaluate(model, p) >= 0.0;  // sigmoid(0) = 0.5 counts as positive
}

EvalMetrics evaluate_metrics(const GwmModel& model, const Dataset& ds, LossKind loss) {
    if (ds.examples.empty()) throw std::invalid_argument("evaluate_metrics: empty dataset");
    EvalMetrics out;
    std::size_t correct = 0;
    const double inv = 1.0 / static_cast<double>(ds.examples.size());
    for (const auto& ex : ds.examples) {
        const double v = evaluate(model, ex.picture);
        const bool truth = ex.label > 0.5;
        if (loss == LossKind::Mse) {
            out.loss += (v - ex.label) * (v - ex.label) * inv;
            if ((v > 0.5) == truth) ++correct;
        } else {
            out.loss += (truth ? softplus(-v) : softplus(v)) * inv;
            if ((v >= 0.0) == truth) ++correct;
        }
    }
    out.accuracy = static_cast<double>(correct) * inv;
    return out;
}

namespace {

std::vector<char> dataset_alphabet(const Dataset& ds) {
    std::vector<char> alpha;
    for (const auto& ex : ds.examples)
        for (char c : ex.picture.cells())
            if (std::find(alpha.begin(), alpha.end(), c) == alpha.end()) alpha.push_back(c);
    std::sort(alpha.begin(), alpha.end());
    return alpha;
}

}  // namespace

TrainReport train(const TrainConfig& config, const Dataset& train_set,
                  const std::vector<NamedDataset>& eval_sets, const ProgressFn& on_record) {
    config.validate();
    if (train_set.examples.empty()) throw std::invalid_argument("train: empty training set");
    const std::size_t n = train_set.examples.size();
    if (config.batch_mode == BatchMode::ShuffledEpochs &&
        static_cast<std::size_t>(config.batch_size) > n)
        throw std::invalid_argument("train: batch size exceeds the training set in epoch mode");

    TrainReport report;
    for (const auto& e : eval_sets) report.eval_names.push_back(e.name);

    GwmModel model =
        random_init(config.dim, dataset_alphabet(train_set), config.init_std, mix_seed(config.seed, 0));
    AdamState state = AdamState::zeros_like(model);
    Rng rng(mix_seed(config.seed, 1));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::size_t epoch_cursor = n;  // forces a shuffle on first use

    std::vector<LabeledExample> batch;
    batch.reserve(static_cast<std::size_t>(config.batch_size));

    auto record = [&](long iteration, double loss) {
        IterationRecord rec;
        rec.iteration = iteration;
        rec.train_loss = loss;
        for (const auto& e : eval_sets) rec.evals.push_back(evaluate_metrics(model, *e.data, config.loss));
        if (on_record) on_record(rec);
        report.records.push_back(std::move(rec));
    };

    for (long t = 1; t <= config.iterations; ++t) {
        batch.clear();
        if (config.batch_mode == BatchMode::UniformWithReplacement) {
            for (int k = 0; k < config.batch_size; ++k)
                batch.push_back(train_set.examples[rng.uniform_index(n)]);
        } else {
            if (epoch_cursor + static_cast<std::size_t>(config.batch_size) > n) {
                for (std::size_t i = n; i > 1; --i)
                    std::swap(order[i - 1], order[rng.uniform_index(i)]);
                epoch_cursor = 0;
            }
            for (int k = 0; k < config.batch_size; ++k)
                batch.push_back(train_set.examples[order[epoch_cursor++]]);
        }

        LossResult step = config.loss == LossKind::Mse ? mse_loss(model, batch) : ce_loss(model, batch);
        if (!std::isfinite(step.loss)) {
            report.diverged_at = t;
            record(t, step.loss);
            break;
        }
        if (config.clip_norm) clip_gradients(step.grads, *config.clip_norm);
        adam_step(model, state, step.grads, config);

        if (t == 1 || t % config.eval_every == 0 || t == config.iterations) record(t, step.loss);
    }

    report.final_model = std::move(model);
    return report;
}

void write_report_csv(const TrainReport& report, std::ostream& out,
                      const std::vector<std::string>& comments) {
    for (const auto& c : comments) out << "# " << c << '\n';
    out << "iteration,train_loss";
    for (const auto& name : report.eval_names) out << ',' << name << "_loss," << name << "_accuracy";
    out << '\n';
    for (const auto& rec : report.records) {
        out << rec.iteration << ',' << format_double(rec.train_loss);
        for (const auto& e : rec.evals)
            out << ',' << format_double(e.loss) << ',' << format_double(e.accuracy);
        out << '\n';
    }
    if (report.diverged_at)
        out << "# diverged_at=" << *report.diverged_at << " (non-finite training loss)\n";
}

}  // namespace gwm
