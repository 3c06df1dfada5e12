#pragma once

#include "gwm/contraction.hpp"
#include "gwm/languages.hpp"
#include "gwm/model.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gwm {

enum class LossKind { Mse, SigmoidCrossEntropy };
enum class BatchMode { UniformWithReplacement, ShuffledEpochs };

struct TrainConfig {
    int dim = 2;
    double init_std = 0.4;
    double learning_rate = 0.01;
    int batch_size = 100;
    long iterations = 1000;          // number of mini-batches
    LossKind loss = LossKind::Mse;
    std::optional<double> clip_norm; // global-norm gradient clipping when set
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    BatchMode batch_mode = BatchMode::UniformWithReplacement;
    long eval_every = 100;           // metric cadence, in iterations

    void validate() const;
};

struct LossResult {
    double loss = 0.0;
    GradientAccumulator grads;
};

/// Mean squared error over the batch and its exact gradient.
LossResult mse_loss(const GwmModel& model, std::span<const LabeledExample> batch);

/// Sigmoid cross-entropy over a batch with 0/1 labels, computed in the
/// numerically stable softplus form, and its exact gradient.
LossResult ce_loss(const GwmModel& model, std::span<const LabeledExample> batch);

double sigmoid(double x);

/// First/second Adam moments for every model parameter plus the step count.
struct AdamState {
    GradientAccumulator first;
    GradientAccumulator second;
    long steps = 0;

    static AdamState zeros_like(const GwmModel& model);
};

/// One bias-corrected Adam update applied in place to every parameter.
void adam_step(GwmModel& model, AdamState& state, const GradientAccumulator& grads,
               const TrainConfig& config);

/// Rescales all gradients to the threshold when their joint L2 norm
/// exceeds it; returns the pre-clip norm.
double clip_gradients(GradientAccumulator& grads, double threshold);

bool classify_regression(const GwmModel& model, const Picture& p, double threshold = 0.5);
bool classify_sigmoid(const GwmModel& model, const Picture& p);

struct EvalMetrics {
    double loss = 0.0;
    double accuracy = 0.0;
};

/// Forward-only loss and thresholded accuracy over a dataset.
EvalMetrics evaluate_metrics(const GwmModel& model, const Dataset& ds, LossKind loss);

struct IterationRecord {
    long iteration = 0;
    double train_loss = 0.0;
    std::vector<EvalMetrics> evals;  // parallel to TrainReport::eval_names
};

struct TrainReport {
    std::vector<std::string> eval_names;
    std::vector<IterationRecord> records;
    GwmModel final_model;
    std::optional<long> diverged_at;  // iteration of the first non-finite loss
};

struct NamedDataset {
    std::string name;
    const Dataset* data = nullptr;
};

using ProgressFn = std::function<void(const IterationRecord&)>;

/// Seeded mini-batch gradient descent with Adam. Initializes the model
/// from the config, draws one mini-batch per iteration (uniform with
/// replacement, or consecutive chunks of a fresh shuffle per epoch),
/// optionally clips, steps, and records metrics on the eval sets at the
/// configured cadence. Bit-reproducible for a fixed (config, dataset);
/// `on_record` only observes the records as they are produced.
/// A non-finite loss stops the run and is reported in the result.
TrainReport train(const TrainConfig& config, const Dataset& train_set,
                  const std::vector<NamedDataset>& eval_sets, const ProgressFn& on_record = {});

/// CSV stream of the per-iteration records; `comments` become leading
/// `# ...` lines.
void write_report_csv(const TrainReport& report, std::ostream& out,
                      const std::vector<std::string>& comments = {});

}  // namespace gwm
