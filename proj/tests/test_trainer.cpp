/*
 * Copyright 2026 The AP-Loss Toolkit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

#include "aploss/error.hpp"
#include "aploss/synth.hpp"
#include "aploss/trainer.hpp"

namespace aploss {
namespace {

template <typename F>
ErrorCode CodeOf(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no aploss::Error thrown");
  return ErrorCode::kAssertionFailed;
}

bool SameRecords(const std::vector<StepRecord>& a,
                 const std::vector<StepRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].step != b[k].step || a[k].loss_value != b[k].loss_value ||
        a[k].ap_loss != b[k].ap_loss || a[k].exact_ap != b[k].exact_ap ||
        a[k].interp_ap != b[k].interp_ap || a[k].grad_norm != b[k].grad_norm ||
        a[k].min_image_ap != b[k].min_image_ap) {
      return false;
    }
  }
  return true;
}

Dataset Separable(std::uint64_t seed, int images = 1) {
  SynthSpec spec;
  spec.kind = images > 1 ? SynthKind::kMultiImage : SynthKind::kSeparable;
  spec.n_images = images;
  spec.n_pos = 8;
  spec.n_neg = 8;
  spec.dim = 4;
  spec.margin = 0.2;
  spec.seed = seed;
  return Generate(spec).data;
}

TEST_CASE("config parsing and validation") {
  CHECK(ParseLossKind("ap") == LossKind::kApErrorDriven);
  CHECK(ParseLossKind("ap_error_driven") == LossKind::kApErrorDriven);
  CHECK(ParseLossKind("ap-margin") == LossKind::kApMargin);
  CHECK(ParseLossKind("smooth-ap") == LossKind::kSmoothAp);
  CHECK(ParseLossKind("perceptron") == LossKind::kPerceptron);
  CHECK(ParseBatching("per-image") == Batching::kPerImage);
  CHECK(ParseBatching("per_image") == Batching::kPerImage);
  CHECK(ParseModelKind("mlp") == ModelKind::kMlp);
  for (LossKind k : {LossKind::kApErrorDriven, LossKind::kApMargin,
                     LossKind::kAuc, LossKind::kSmoothAp,
                     LossKind::kPerceptron}) {
    CHECK(ParseLossKind(LossKindName(k)) == k);
  }
  CHECK(CodeOf([] { ParseLossKind("focal"); }) == ErrorCode::kInvalidArgument);

  TrainConfig c;
  CHECK(c.momentum == 0.9);
  CHECK(c.weight_decay == 1e-4);
  CHECK(c.delta == 1.0);
  c.Validate();
  c.momentum = 1.0;
  CHECK(CodeOf([&] { c.Validate(); }) == ErrorCode::kInvalidArgument);
  c = TrainConfig{};
  c.learning_rate = 0.0;
  CHECK(CodeOf([&] { c.Validate(); }) == ErrorCode::kInvalidArgument);
  c = TrainConfig{};
  c.batch_size = 0;
  CHECK(CodeOf([&] { c.Validate(); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("training is deterministic") {
  for (LossKind kind : {LossKind::kApErrorDriven, LossKind::kSmoothAp,
                        LossKind::kAuc, LossKind::kApMargin}) {
    for (ModelKind model : {ModelKind::kLinear, ModelKind::kMlp}) {
      TrainConfig c;
      c.loss_kind = kind;
      c.model = model;
      c.epochs = 20;
      c.seed = 5;
      const Dataset d = Separable(1, 3);
      const TrainResult a = Train(c, d);
      const TrainResult b = Train(c, d);
      CHECK(SameRecords(a.history.records, b.history.records));
      CHECK(Parameters(a.model) == Parameters(b.model));
    }
  }
}

TEST_CASE("error-driven training stays perfect once converged") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    TrainConfig c;
    c.step = StepKind::Type::kHeaviside;
    c.interpolated = false;
    c.momentum = 0.0;
    c.weight_decay = 0.0;
    c.learning_rate = 0.5;
    c.epochs = 3000;
    c.stop_when_converged = false;
    const TrainResult r = Train(c, Separable(seed));
    REQUIRE(r.history.converged_at_step);
    const long at = *r.history.converged_at_step;
    for (const StepRecord& rec : r.history.records) {
      if (rec.step < at) continue;
      CHECK(rec.exact_ap == 1.0);
      CHECK(rec.grad_norm == 0.0);
    }
    CHECK(r.history.records.back().step == 2999);
  }
}

TEST_CASE("unit-step training replays the perceptron update") {
  const Dataset d = Separable(4);
  TrainConfig c;
  c.loss_kind = LossKind::kPerceptron;
  c.learning_rate = 1.0;
  c.momentum = 0.0;
  c.weight_decay = 0.0;
  ScorerModel model = LinearScorer{Eigen::VectorXd::Zero(d.dim())};
  for (int step = 1; step <= 8; ++step) {
    c.epochs = step;
    const TrainResult r =
        Train(c, d, LinearScorer{Eigen::VectorXd::Zero(d.dim())});
    const Eigen::VectorXd scores = ScoreForward(model, d.features);
    model = PerceptronStep(model, d.Batch(scores), d.features,
                           StepKind::Heaviside());
    if (r.history.converged_at_step) break;
    // Same update, different summation order.
    const Eigen::VectorXd diff = Parameters(r.model) - Parameters(model);
    CHECK(diff.cwiseAbs().maxCoeff() <=
          1e-12 * (1.0 + Parameters(model).norm()));
  }
}

TEST_CASE("history AP-loss and exact AP agree") {
  // The identity needs a proper ranking, so start from a generic weight
  // vector: theta = 0 ties every score.
  TrainConfig c;
  c.epochs = 200;
  c.stop_when_converged = false;
  SynthSpec spec;
  spec.kind = SynthKind::kSeparable;
  spec.noise = 0.5;
  spec.margin = 0.0;
  spec.n_images = 3;
  spec.seed = 8;
  const Dataset d = Generate(spec).data;
  std::mt19937_64 rng(52);
  std::normal_distribution<double> normal;
  const Eigen::VectorXd theta = Eigen::VectorXd::NullaryExpr(
      d.dim(), [&](Eigen::Index) { return normal(rng); });
  for (LossKind kind : {LossKind::kApErrorDriven, LossKind::kSmoothAp}) {
    c.loss_kind = kind;
    for (const StepRecord& rec :
         Train(c, d, LinearScorer{theta}).history.records) {
      CHECK(std::abs(rec.ap_loss - (1.0 - rec.exact_ap)) <= 1e-12);
      CHECK(rec.interp_ap >= rec.exact_ap - 1e-12);
    }
  }
}

TEST_CASE("three-sample instance: smooth loss stalls, error-driven succeeds") {
  SynthSpec spec;
  spec.kind = SynthKind::kThreeSample;
  const Dataset d = Generate(spec).data;
  const ScorerModel init = LinearScorer{Eigen::Vector2d(10, 5)};
  TrainConfig smooth;
  smooth.loss_kind = LossKind::kSmoothAp;
  smooth.learning_rate = 1.0;
  smooth.momentum = 0.0;
  smooth.weight_decay = 0.0;
  smooth.epochs = 20000;
  smooth.stop_when_converged = false;
  const TrainResult gd = Train(smooth, d, init);
  CHECK(std::abs(gd.history.records.back().loss_value - 1.0 / 6) <= 0.02);

  TrainConfig ed;
  ed.learning_rate = 0.1;
  ed.momentum = 0.0;
  ed.weight_decay = 0.0;
  ed.epochs = 20000;
  const TrainResult r = Train(ed, d, init);
  CHECK(r.history.converged_at_step);
  CHECK(Evaluate(r.model, d.features, d.labels).exact_ap == 1.0);
}

TEST_CASE("score shift") {
  const ScoreShiftReport r = ScoreShiftExperiment(0);
  CHECK(r.pooled.combined_ap == 1.0);
  CHECK(r.per_image.history.converged_at_step);
  for (double ap : r.per_image.image_aps) CHECK(ap == 1.0);
  CHECK(r.per_image.combined_ap < 1.0);
}

TEST_CASE("batching modes agree on a single image") {
  const Dataset d = Separable(6);
  TrainConfig c;
  c.epochs = 50;
  c.batching = Batching::kPooled;
  const TrainResult pooled = Train(c, d);
  c.batching = Batching::kPerImage;
  const TrainResult per_image = Train(c, d);
  CHECK(SameRecords(pooled.history.records, per_image.history.records));
}

TEST_CASE("per-image gradient is the mean of image gradients") {
  TrainConfig c;
  c.batching = Batching::kPerImage;
  c.step = StepKind::Type::kHeaviside;
  const RankingBatch b({1, 2, 3, 0, 5, 4}, {1, 0, 0, 1, 0, -1},
                       {0, 0, 0, 1, 1, 1});
  const BatchGradient g = ComputeBatchGradient(c, b);
  TrainConfig single = c;
  single.batching = Batching::kPooled;
  const auto a =
      ComputeBatchGradient(single, RankingBatch({1, 2, 3}, {1, 0, 0}));
  const auto z =
      ComputeBatchGradient(single, RankingBatch({0, 5, 4}, {1, 0, -1}));
  for (int k = 0; k < 3; ++k) {
    CHECK(g.score_grad[k] == doctest::Approx(a.score_grad[k] / 2));
    CHECK(g.score_grad[k + 3] == doctest::Approx(z.score_grad[k] / 2));
  }
  CHECK(g.loss == doctest::Approx((a.loss + z.loss) / 2));
  // Images without positives contribute nothing.
  const auto none = ComputeBatchGradient(c, RankingBatch({1, 2}, {0, 0}));
  CHECK(none.score_grad == std::vector<double>{0.0, 0.0});
}

TEST_CASE("evaluate") {
  Eigen::MatrixXd f(5, 1);
  f << 10, 9, 8, 7, 6;
  const ScorerModel identity = LinearScorer{Eigen::VectorXd::Ones(1)};
  const std::vector<int> dip = {0, 1, 1, 0, 1};
  const Metrics m = Evaluate(identity, f, dip);
  CHECK(std::abs(m.exact_ap - 53.0 / 90) <= 1e-15);
  CHECK(std::abs(m.interp_ap - 29.0 / 45) <= 1e-15);
  CHECK(m.auc == doctest::Approx(2.0 / 6));

  const std::vector<int> perfect = {1, 1, 0, 0, 0};
  const Metrics p = Evaluate(identity, f, perfect);
  CHECK(p.exact_ap == 1.0);
  CHECK(p.interp_ap == 1.0);
  CHECK(p.auc == 1.0);

  std::mt19937_64 rng(51);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd big(4000, 1);
  std::vector<int> labels(4000);
  for (int i = 0; i < 4000; ++i) {
    big(i, 0) = normal(rng);
    labels[i] = i % 2;
  }
  CHECK(std::abs(Evaluate(identity, big, labels).auc - 0.5) <= 0.05);

  const std::vector<int> none = {0, 0, 0, 0, -1};
  CHECK(CodeOf([&] { Evaluate(identity, f, none); }) ==
        ErrorCode::kNoPositives);
}

TEST_CASE("training errors") {
  Dataset d = Separable(0);
  for (int& l : d.labels) l = l == 1 ? 0 : l;
  CHECK(CodeOf([&] { Train(TrainConfig{}, d); }) == ErrorCode::kNoPositives);

  TrainConfig huge;
  huge.loss_kind = LossKind::kPerceptron;
  huge.learning_rate = 1e308;
  huge.momentum = 0.0;
  huge.weight_decay = 0.0;
  huge.epochs = 50;
  SynthSpec spec;
  spec.kind = SynthKind::kInseparable;
  spec.seed = 3;
  CHECK(CodeOf([&] { Train(huge, Generate(spec).data); }) ==
        ErrorCode::kDivergenceDetected);

  const Dataset ok = Separable(0);
  CHECK(CodeOf([&] {
          Train(TrainConfig{}, ok, LinearScorer{Eigen::VectorXd::Zero(2)});
        }) == ErrorCode::kDimensionMismatch);
}

TEST_CASE("offline bound run") {
  SynthSpec spec;
  spec.n_pos = 6;
  spec.n_neg = 6;
  spec.dim = 3;
  spec.margin = 0.5;
  spec.seed = 9;
  const SynthData sep = Generate(spec);
  TrainConfig c;
  c.loss_kind = LossKind::kApMargin;
  c.momentum = 0.0;
  c.weight_decay = 0.0;
  const Eigen::VectorXd u = sep.certificate->theta *
                            (c.delta / sep.certificate->epsilon * (1 + 1e-9));
  const std::vector<long> checkpoints = {1, 10, 100, 1000};
  const OfflineBoundReport r =
      OfflineBoundExperiment(c, sep.data, u, checkpoints);
  CHECK(r.all_hold);
  CHECK(r.slack == 0.0);
  CHECK(r.step_size ==
        doctest::Approx(1.0 / (r.operator_norm * r.operator_norm)));
  // T = 1: the initialization term dominates.
  CHECK(r.checkpoints[0].bound() >= 1.0);
  CHECK(r.checkpoints.back().average_ap_loss <=
        r.checkpoints.front().average_ap_loss);

  spec.kind = SynthKind::kInseparable;
  spec.noise = 0.3;
  const SynthData ins = Generate(spec);
  const OfflineBoundReport q = OfflineBoundExperiment(
      c, ins.data, ins.reference_direction * (c.delta / spec.margin),
      checkpoints);
  CHECK(q.all_hold);
  CHECK(q.slack > 0.0);

  TrainConfig bad = c;
  bad.momentum = 0.5;
  CHECK(CodeOf([&] {
          OfflineBoundExperiment(bad, sep.data, u, checkpoints);
        }) == ErrorCode::kInvalidArgument);
  bad = c;
  bad.loss_kind = LossKind::kAuc;
  CHECK(CodeOf([&] {
          OfflineBoundExperiment(bad, sep.data, u, checkpoints);
        }) == ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace aploss
