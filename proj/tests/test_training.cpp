#include "gwm/training.hpp"

#include "gwm/rng.hpp"
#include "gwm/wpa.hpp"
#include "support/tensor_network.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace gwm;
using testsupport::random_model;
using testsupport::random_picture;

namespace {

std::vector<LabeledExample> random_batch(int count, int rows, int cols, Rng& rng,
                                         bool binary_labels) {
    std::vector<LabeledExample> batch;
    for (int i = 0; i < count; ++i) {
        const double label =
            binary_labels ? static_cast<double>(rng.next_u64() & 1) : rng.normal(0.0, 1.0);
        batch.push_back({random_picture(rows, cols, rng), label});
    }
    return batch;
}

// finite differences of a batch loss with respect to every parameter
void check_loss_gradient(const GwmModel& model, std::span<const LabeledExample> batch,
                         LossKind kind) {
    const auto loss_fn = [&](const GwmModel& m) {
        return kind == LossKind::Mse ? mse_loss(m, batch).loss : ce_loss(m, batch).loss;
    };
    const LossResult res =
        kind == LossKind::Mse ? mse_loss(model, batch) : ce_loss(model, batch);

    for (std::size_t s = 0; s < model.tensors.size(); ++s) {
        DenseTensor fd = finite_difference_gradient(
            [&](const DenseTensor& t) {
                GwmModel probe = model;
                probe.tensors[s] = t;
                return loss_fn(probe);
            },
            model.tensors[s], 1e-5);
        CHECK(testsupport::gradient_mismatch(fd, res.grads.tensors[s]) < 1e-5);
    }
    for (Side side : kSides) {
        DenseTensor fd = finite_difference_gradient(
            [&](const DenseTensor& t) {
                GwmModel probe = model;
                probe.border(side) = t;
                return loss_fn(probe);
            },
            model.border(side), 1e-5);
        CHECK(testsupport::gradient_mismatch(fd, res.grads.border(side)) < 1e-5);
    }
}

}  // namespace

TEST_CASE("a model that reproduces its labels has zero loss and zero gradient") {
    const GwmModel m = compile_to_gwm(bars_stripes_automaton());
    std::vector<LabeledExample> batch;
    Rng rng(42);
    for (int i = 0; i < 10; ++i) {
        const Picture p = random_picture(2, 3, rng);
        batch.push_back({p, bs_target(p)});
    }
    const LossResult r = mse_loss(m, batch);
    CHECK(r.loss < 1e-20);
    CHECK(r.grads.squared_norm() < 1e-18);
}

TEST_CASE("single-example mean squared error follows the chain rule") {
    const GwmModel m = random_model(3, 0.5, 77);
    Rng rng(7);
    const Picture p = random_picture(2, 2, rng);
    const Evaluation e = gradient(m, p);
    std::vector<LabeledExample> batch = {{p, 0.0}};
    const LossResult r = mse_loss(m, batch);
    CHECK(r.loss == doctest::Approx(e.value * e.value).epsilon(1e-12));
    // gradient must be 2 * value * d(value)/d(theta)
    for (std::size_t s = 0; s < m.tensors.size(); ++s)
        for (std::size_t i = 0; i < m.tensors[s].size(); ++i)
            CHECK(r.grads.tensors[s][i] ==
                  doctest::Approx(2.0 * e.value * e.grads.tensors[s][i]).epsilon(1e-12));
}

TEST_CASE("mean squared error gradients match finite differences") {
    Rng rng(88);
    const GwmModel m = random_model(2, 0.5, 99);
    const auto batch = random_batch(3, 2, 3, rng, false);
    check_loss_gradient(m, batch, LossKind::Mse);
}

TEST_CASE("cross entropy at a zero output is log 2, and vanishes at strong outputs") {
    GwmModel m;
    m.dim = 1;
    m.alphabet = {'a'};
    m.tensors.emplace_back(std::vector<std::size_t>{1, 1, 1, 1}, std::vector<double>{0.0});
    for (Side s : kSides)
        m.border(s) = DenseTensor(std::vector<std::size_t>{1}, std::vector<double>{1.0});

    std::vector<LabeledExample> batch = {{Picture::from_rows({"a"}), 1.0}};
    CHECK(ce_loss(m, batch).loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    m.tensors[0][0] = 50.0;  // value 50, sigmoid saturates toward 1
    CHECK(ce_loss(m, batch).loss < 1e-20);
    batch[0].label = 0.0;
    CHECK(ce_loss(m, batch).loss == doctest::Approx(50.0).epsilon(1e-6));
}

TEST_CASE("cross entropy rejects labels outside {0,1}") {
    const GwmModel m = random_model(2, 0.5, 5);
    std::vector<LabeledExample> batch = {{Picture(1, 1, 'a'), 0.5}};
    CHECK_THROWS_WITH_AS(ce_loss(m, batch), doctest::Contains("0 or 1"), std::invalid_argument);
    CHECK_THROWS_AS(ce_loss(m, {}), std::invalid_argument);
    CHECK_THROWS_AS(mse_loss(m, {}), std::invalid_argument);
}

TEST_CASE("cross entropy gradients match finite differences") {
    Rng rng(111);
    const GwmModel m = random_model(2, 0.5, 112);
    const auto batch = random_batch(4, 2, 3, rng, true);
    check_loss_gradient(m, batch, LossKind::SigmoidCrossEntropy);
}

TEST_CASE("adam leaves parameters alone on a zero gradient") {
    GwmModel m = random_model(2, 0.5, 200);
    const GwmModel before = m;
    AdamState state = AdamState::zeros_like(m);
    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    adam_step(m, state, GradientAccumulator::zeros_like(m), cfg);
    CHECK(m == before);
    CHECK(state.steps == 1);
}

TEST_CASE("adam steps approach learning-rate-sized sign moves on constant gradients") {
    GwmModel m = random_model(1, 0.5, 201);
    AdamState state = AdamState::zeros_like(m);
    TrainConfig cfg;
    cfg.learning_rate = 0.01;
    GradientAccumulator g = GradientAccumulator::zeros_like(m);
    for (auto& t : g.tensors) t.fill(3.0);
    for (auto& b : g.borders) b.fill(3.0);

    double previous = m.tensors[0][0];
    for (int step = 0; step < 50; ++step) {
        adam_step(m, state, g, cfg);
        const double delta = m.tensors[0][0] - previous;
        previous = m.tensors[0][0];
        CHECK(delta < 0.0);  // moves against the gradient
        if (step > 5) CHECK(std::abs(std::abs(delta) - cfg.learning_rate) < 1e-4);
    }
}

TEST_CASE("two adam steps match the recurrence computed by hand") {
    GwmModel m;
    m.dim = 1;
    m.alphabet = {'a'};
    m.tensors.emplace_back(std::vector<std::size_t>{1, 1, 1, 1}, std::vector<double>{0.5});
    for (Side s : kSides)
        m.border(s) = DenseTensor(std::vector<std::size_t>{1}, std::vector<double>{1.0});
    AdamState state = AdamState::zeros_like(m);
    TrainConfig cfg;
    cfg.learning_rate = 0.1;

    const double g1 = 0.7, g2 = -0.2;
    GradientAccumulator g = GradientAccumulator::zeros_like(m);

    // by-hand trace of the update rule for the tensor entry
    double theta = 0.5, mm = 0.0, vv = 0.0;
    for (int step = 1; step <= 2; ++step) {
        const double grad = step == 1 ? g1 : g2;
        mm = cfg.beta1 * mm + (1 - cfg.beta1) * grad;
        vv = cfg.beta2 * vv + (1 - cfg.beta2) * grad * grad;
        const double mhat = mm / (1 - std::pow(cfg.beta1, step));
        const double vhat = vv / (1 - std::pow(cfg.beta2, step));
        theta -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);

        g.tensors[0][0] = grad;
        adam_step(m, state, g, cfg);
        CHECK(m.tensors[0][0] == doctest::Approx(theta).epsilon(1e-15));
    }
}

TEST_CASE("with both betas zero adam is sign-scaled gradient descent") {
    GwmModel m = random_model(1, 0.5, 202);
    const double before = m.tensors[0][0];
    AdamState state = AdamState::zeros_like(m);
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.beta1 = 0.0;
    cfg.beta2 = 0.0;
    GradientAccumulator g = GradientAccumulator::zeros_like(m);
    g.tensors[0][0] = -4.0;
    adam_step(m, state, g, cfg);
    const double want = before - cfg.learning_rate * (-4.0) / (4.0 + cfg.epsilon);
    CHECK(m.tensors[0][0] == doctest::Approx(want).epsilon(1e-15));
}

TEST_CASE("gradient clipping rescales only above the threshold") {
    const GwmModel m = random_model(2, 0.5, 203);
    GradientAccumulator g = GradientAccumulator::zeros_like(m);
    std::size_t entries = 0;
    for (auto& t : g.tensors) {
        t.fill(0.01);
        entries += t.size();
    }
    for (auto& b : g.borders) {
        b.fill(0.01);
        entries += b.size();
    }
    const double norm = 0.01 * std::sqrt(static_cast<double>(entries));
    REQUIRE(norm < 1.0);

    GradientAccumulator below = g;
    CHECK(clip_gradients(below, 1.0) == doctest::Approx(norm));
    for (std::size_t s = 0; s < g.tensors.size(); ++s) CHECK(below.tensors[s] == g.tensors[s]);

    GradientAccumulator above = g;
    above.scale(10.0 / norm);  // norm exactly 10
    const double reported = clip_gradients(above, 1.0);
    CHECK(reported == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(std::sqrt(above.squared_norm()) == doctest::Approx(1.0).epsilon(1e-12));

    // direction preserved: every entry scaled by the same factor
    for (std::size_t s = 0; s < g.tensors.size(); ++s)
        for (std::size_t i = 0; i < g.tensors[s].size(); ++i)
            CHECK(above.tensors[s][i] * 10.0 ==
                  doctest::Approx(g.tensors[s][i] * (10.0 / norm)).epsilon(1e-12));
}

TEST_CASE("training with a zero learning rate keeps the initial parameters") {
    const Dataset ds = generate_dataset(LanguageKind::BarsStripes, {{2, 2}}, 20, 0.5, 31);
    TrainConfig cfg;
    cfg.dim = 2;
    cfg.init_std = 0.4;
    cfg.learning_rate = 0.0;
    cfg.batch_size = 5;
    cfg.iterations = 7;
    cfg.seed = 9;
    const TrainReport report = train(cfg, ds, {});
    const GwmModel fresh = random_init(cfg.dim, {'a', 'b'}, cfg.init_std, mix_seed(cfg.seed, 0));
    CHECK(report.final_model == fresh);
}

TEST_CASE("training is reproducible from its seed") {
    const Dataset ds = generate_dataset(LanguageKind::BarsStripes, {{3, 3}}, 60, 0.5, 32);
    const Dataset eval_ds = generate_dataset(LanguageKind::BarsStripes, {{3, 3}}, 20, 0.5, 33, &ds);
    TrainConfig cfg;
    cfg.dim = 3;
    cfg.learning_rate = 0.01;
    cfg.batch_size = 10;
    cfg.iterations = 12;
    cfg.eval_every = 4;
    cfg.seed = 17;

    const TrainReport a = train(cfg, ds, {{"test", &eval_ds}});
    const TrainReport b = train(cfg, ds, {{"test", &eval_ds}});
    CHECK(a.final_model == b.final_model);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].iteration == b.records[i].iteration);
        CHECK(a.records[i].train_loss == b.records[i].train_loss);
        for (std::size_t k = 0; k < a.records[i].evals.size(); ++k) {
            CHECK(a.records[i].evals[k].loss == b.records[i].evals[k].loss);
            CHECK(a.records[i].evals[k].accuracy == b.records[i].evals[k].accuracy);
        }
    }

    std::stringstream csv;
    write_report_csv(a, csv, {"seed=17"});
    CHECK(csv.str().find("test_loss,test_accuracy") != std::string::npos);
}

TEST_CASE("a non-finite loss stops training with a diagnostic record") {
    Dataset ds;
    ds.examples.push_back({Picture(2, 2, 'a'), 1e308});
    ds.examples.push_back({Picture(2, 2, 'b'), 1e308});
    TrainConfig cfg;
    cfg.dim = 2;
    cfg.batch_size = 2;
    cfg.iterations = 50;
    const TrainReport report = train(cfg, ds, {});
    REQUIRE(report.diverged_at.has_value());
    CHECK(*report.diverged_at == 1);
    CHECK(report.records.size() == 1);
    CHECK(!std::isfinite(report.records.back().train_loss));
}

TEST_CASE("classification thresholds sit where advertised") {
    GwmModel m;
    m.dim = 1;
    m.alphabet = {'a'};
    m.tensors.emplace_back(std::vector<std::size_t>{1, 1, 1, 1}, std::vector<double>{0.4999});
    for (Side s : kSides)
        m.border(s) = DenseTensor(std::vector<std::size_t>{1}, std::vector<double>{1.0});
    const Picture p = Picture::from_rows({"a"});

    CHECK_FALSE(classify_regression(m, p));  // strictly greater than 0.5
    m.tensors[0][0] = 0.5001;
    CHECK(classify_regression(m, p));

    m.tensors[0][0] = 0.0;
    CHECK(classify_sigmoid(m, p));  // sigmoid(0) = 0.5 counts as positive
    m.tensors[0][0] = -0.1;
    CHECK_FALSE(classify_sigmoid(m, p));
}

TEST_CASE("a compiled exact model scores perfect accuracy") {
    const GwmModel m = compile_to_gwm(bars_stripes_automaton());
    const Dataset ds = generate_dataset(LanguageKind::BarsStripes, {{3, 3}}, 200, 0.5, 77);
    const EvalMetrics metrics = evaluate_metrics(m, ds, LossKind::Mse);
    CHECK(metrics.loss < 1e-18);
    CHECK(metrics.accuracy == 1.0);
}

TEST_CASE("epoch batching validates the batch size") {
    const Dataset ds = generate_dataset(LanguageKind::BarsStripes, {{2, 2}}, 10, 0.5, 3);
    TrainConfig cfg;
    cfg.batch_size = 16;
    cfg.batch_mode = BatchMode::ShuffledEpochs;
    cfg.iterations = 2;
    CHECK_THROWS_AS(train(cfg, ds, {}), std::invalid_argument);
}
