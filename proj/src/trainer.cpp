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

#include "aploss/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "aploss/error.hpp"
#include "aploss/synth.hpp"

namespace aploss {

LossKind ParseLossKind(std::string_view name) {
  if (name == "ap_error_driven" || name == "ap") {
    return LossKind::kApErrorDriven;
  }
  if (name == "ap_margin" || name == "ap-margin") return LossKind::kApMargin;
  if (name == "auc") return LossKind::kAuc;
  if (name == "smooth_ap" || name == "smooth-ap") return LossKind::kSmoothAp;
  if (name == "perceptron_a1" || name == "perceptron") {
    return LossKind::kPerceptron;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown loss kind '" + std::string(name) + "'");
}

Batching ParseBatching(std::string_view name) {
  if (name == "pooled") return Batching::kPooled;
  if (name == "per_image" || name == "per-image") return Batching::kPerImage;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown batching '" + std::string(name) + "'");
}

ModelKind ParseModelKind(std::string_view name) {
  if (name == "linear") return ModelKind::kLinear;
  if (name == "mlp") return ModelKind::kMlp;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown model '" + std::string(name) + "'");
}

StepKind::Type ParseStepType(std::string_view name) {
  if (name == "heaviside") return StepKind::Type::kHeaviside;
  if (name == "piecewise") return StepKind::Type::kPiecewise;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown step kind '" + std::string(name) + "'");
}

std::string_view LossKindName(LossKind kind) {
  switch (kind) {
    case LossKind::kApErrorDriven: return "ap_error_driven";
    case LossKind::kApMargin: return "ap_margin";
    case LossKind::kAuc: return "auc";
    case LossKind::kSmoothAp: return "smooth_ap";
    case LossKind::kPerceptron: return "perceptron_a1";
  }
  return "unknown";
}

std::string_view BatchingName(Batching batching) {
  return batching == Batching::kPooled ? "pooled" : "per_image";
}

std::string_view ModelKindName(ModelKind kind) {
  return kind == ModelKind::kLinear ? "linear" : "mlp";
}

std::string_view StepTypeName(StepKind::Type type) {
  return type == StepKind::Type::kHeaviside ? "heaviside" : "piecewise";
}

void TrainConfig::Validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, what);
  };
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    fail("learning_rate must be > 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0)) fail("weight_decay must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (epochs < 1) fail("epochs must be >= 1");
  if (!(delta > 0.0)) fail("delta must be > 0");
  if (hidden_units < 1) fail("hidden_units must be >= 1");
  smooth_ap().Validate();
}

StepKind TrainConfig::step_kind() const {
  return step == StepKind::Type::kHeaviside ? StepKind::Heaviside()
                                            : StepKind::Piecewise(delta);
}

SmoothApConfig TrainConfig::smooth_ap() const {
  return SmoothApConfig{temperature, epsilon, log_space};
}

namespace {

struct LossOutput {
  std::vector<double> g;
  double loss = 0.0;
};

// Gradient of one ranking (a pooled minibatch or a single image).
std::optional<LossOutput> RankingGradient(const TrainConfig& config,
                                          const RankingBatch& batch) {
  if (batch.positives().empty()) return std::nullopt;
  switch (config.loss_kind) {
    case LossKind::kApErrorDriven: {
      MinibatchGradient r =
          ApGradMinibatch(batch, config.step_kind(), config.interpolated);
      return LossOutput{std::move(r.gradient.g), r.loss};
    }
    case LossKind::kApMargin: {
      const PrimaryTermRows rows = MarginPrimaryTerms(batch, config.delta);
      return LossOutput{ScoreGradients(rows, batch, true).g,
                        SurrogateLoss(batch, batch.scores(), config.delta)};
    }
    case LossKind::kAuc: {
      if (batch.negatives().empty()) return std::nullopt;
      const PrimaryTermRows rows = AucPrimaryTerms(batch, config.step_kind());
      return LossOutput{ScoreGradients(rows, batch, true).g,
                        rows.MeanRowSum()};
    }
    case LossKind::kSmoothAp: {
      SmoothApResult r = SmoothApValueGrad(batch, config.smooth_ap());
      return LossOutput{std::move(r.grad.g), r.value};
    }
    case LossKind::kPerceptron: {
      const PrimaryTermRows rows = PrimaryTerms(batch, StepKind::Heaviside());
      return LossOutput{ScoreGradients(rows, batch, false).g,
                        rows.MeanRowSum()};
    }
  }
  return std::nullopt;
}

std::vector<std::vector<std::size_t>> GroupByImage(
    std::span<const int> image_ids) {
  std::vector<int> ids(image_ids.begin(), image_ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::vector<std::vector<std::size_t>> groups(ids.size());
  for (std::size_t i = 0; i < image_ids.size(); ++i) {
    const auto pos = std::lower_bound(ids.begin(), ids.end(), image_ids[i]);
    groups[static_cast<std::size_t>(pos - ids.begin())].push_back(i);
  }
  return groups;
}

RankingBatch SubBatch(const RankingBatch& batch,
                      std::span<const std::size_t> rows) {
  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<int> images;
  for (std::size_t r : rows) {
    scores.push_back(batch.scores()[r]);
    labels.push_back(batch.labels()[r]);
    images.push_back(batch.image_ids()[r]);
  }
  return RankingBatch(std::move(scores), std::move(labels), std::move(images));
}

// Fisher-Yates on the engine's raw output so the order does not depend on the
// standard library's distribution implementation.
void Shuffle(std::vector<std::size_t>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(items[i - 1], items[j]);
  }
}

double AucMetric(std::span<const double> scores, std::span<const int> labels) {
  double pairs = 0.0;
  double correct = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != kPositiveLabel) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != kNegativeLabel) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) {
        correct += 1.0;
      } else if (scores[i] == scores[j]) {
        correct += 0.5;
      }
    }
  }
  return pairs == 0.0 ? 1.0 : correct / pairs;
}

ScorerModel InitialModel(const TrainConfig& config, Eigen::Index dim) {
  if (config.model == ModelKind::kLinear) {
    return LinearScorer{Eigen::VectorXd::Zero(dim)};
  }
  return MlpScorer::Random(dim, config.hidden_units, config.seed);
}

}  // namespace

BatchGradient ComputeBatchGradient(const TrainConfig& config,
                                   const RankingBatch& batch) {
  BatchGradient out;
  out.score_grad.assign(batch.size(), 0.0);
  if (config.batching == Batching::kPooled) {
    if (auto r = RankingGradient(config, batch)) {
      out.score_grad = std::move(r->g);
      out.loss = r->loss;
    }
    return out;
  }
  int used = 0;
  for (const auto& rows : GroupByImage(batch.image_ids())) {
    const RankingBatch image = SubBatch(batch, rows);
    const auto r = RankingGradient(config, image);
    if (!r) continue;
    ++used;
    out.loss += r->loss;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      out.score_grad[rows[k]] += r->g[k];
    }
  }
  if (used > 0) {
    for (double& v : out.score_grad) v /= used;
    out.loss /= used;
  }
  return out;
}

std::vector<double> PerImageAp(const Dataset& data,
                               const Eigen::VectorXd& scores) {
  const RankingBatch all = data.Batch(scores);
  std::vector<double> aps;
  for (const auto& rows : GroupByImage(data.image_ids)) {
    const RankingBatch image = SubBatch(all, rows);
    if (image.positives().empty()) continue;
    aps.push_back(ExactApOracle(image));
  }
  return aps;
}

TrainResult Train(const TrainConfig& config, const Dataset& data,
                  const std::optional<ScorerModel>& init) {
  config.Validate();
  data.Validate();
  if (std::none_of(data.labels.begin(), data.labels.end(),
                   [](int l) { return l == kPositiveLabel; })) {
    throw Error(ErrorCode::kNoPositives, "training data has no positive");
  }

  ScorerModel model = init ? *init : InitialModel(config, data.dim());
  if (InputDim(model) != data.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "initial model does not match the feature width");
  }
  Eigen::VectorXd params = Parameters(model);
  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(params.size());

  const auto groups = GroupByImage(data.image_ids);
  const std::size_t batch_images = static_cast<std::size_t>(config.batch_size);
  TrainResult result;
  TrainHistory& history = result.history;
  history.steps_per_epoch =
      static_cast<long>((groups.size() + batch_images - 1) / batch_images);

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> image_order(groups.size());
  long step = 0;
  long streak_start = -1;
  bool done = false;

  for (int epoch = 0; epoch < config.epochs && !done; ++epoch) {
    for (std::size_t k = 0; k < image_order.size(); ++k) image_order[k] = k;
    Shuffle(image_order, rng);

    for (std::size_t b = 0; b < image_order.size() && !done;
         b += batch_images) {
      std::vector<std::size_t> rows;
      const std::size_t end = std::min(b + batch_images, image_order.size());
      for (std::size_t k = b; k < end; ++k) {
        const auto& g = groups[image_order[k]];
        rows.insert(rows.end(), g.begin(), g.end());
      }
      const Dataset minibatch = data.Subset(rows);
      const Eigen::VectorXd minibatch_scores =
          ScoreForward(model, minibatch.features);
      if (!minibatch_scores.allFinite()) {
        throw Error(ErrorCode::kDivergenceDetected,
                    "non-finite score at step " + std::to_string(step));
      }
      const RankingBatch batch = minibatch.Batch(minibatch_scores);
      const BatchGradient bg = ComputeBatchGradient(config, batch);
      const Eigen::VectorXd grad =
          ScoreBackward(model, minibatch.features, bg.score_grad);

      const Eigen::VectorXd full_scores = ScoreForward(model, data.features);
      if (!std::isfinite(bg.loss) || !full_scores.allFinite() ||
          !grad.allFinite()) {
        throw Error(ErrorCode::kDivergenceDetected,
                    "non-finite loss, score or gradient at step " +
                        std::to_string(step));
      }
      const RankingBatch full = data.Batch(full_scores);
      StepRecord record;
      record.step = step;
      record.loss_value = bg.loss;
      record.ap_loss = ApLoss(full, StepKind::Heaviside(), false);
      record.exact_ap = ExactApOracle(full);
      record.interp_ap = 1.0 - ApLoss(full, StepKind::Heaviside(), true);
      record.grad_norm = grad.norm();
      record.min_image_ap = 1.0;
      bool every_image_perfect = true;
      for (const auto& g : groups) {
        const RankingBatch image = SubBatch(full, g);
        if (image.positives().empty()) continue;
        record.min_image_ap =
            std::min(record.min_image_ap, ExactApOracle(image));
        every_image_perfect =
            every_image_perfect &&
            ApLoss(image, StepKind::Heaviside(), false) == 0.0;
      }
      const bool target_met = config.batching == Batching::kPooled
                                  ? record.ap_loss == 0.0
                                  : every_image_perfect;
      history.records.push_back(record);

      if (target_met) {
        if (streak_start < 0) streak_start = step;
        if (!history.converged_at_step &&
            step - streak_start >= history.steps_per_epoch) {
          history.converged_at_step = streak_start;
          done = config.stop_when_converged;
        }
      } else {
        streak_start = -1;
      }
      if (done) break;

      velocity = config.momentum * velocity + grad +
                 config.weight_decay * params;
      params -= config.learning_rate * velocity;
      if (!params.allFinite()) {
        throw Error(ErrorCode::kDivergenceDetected,
                    "non-finite weights after step " + std::to_string(step));
      }
      model = WithParameters(model, params);
      ++step;
    }
  }
  result.model = std::move(model);
  return result;
}

Metrics Evaluate(const ScorerModel& model, const FeatureSet& features,
                 std::span<const int> labels) {
  if (std::none_of(labels.begin(), labels.end(),
                   [](int l) { return l == kPositiveLabel; })) {
    throw Error(ErrorCode::kNoPositives, "evaluation data has no positive");
  }
  const RankingBatch batch(ToStdVector(ScoreForward(model, features)),
                           std::vector<int>(labels.begin(), labels.end()));
  Metrics m;
  m.exact_ap = ExactApOracle(batch);
  m.interp_ap = 1.0 - ApLoss(batch, StepKind::Heaviside(), true);
  m.auc = AucMetric(batch.scores(), batch.labels());
  return m;
}

ScoreShiftReport ScoreShiftExperiment(std::uint64_t seed) {
  SynthSpec spec;
  spec.kind = SynthKind::kMultiImage;
  spec.n_pos = 5;
  spec.n_neg = 5;
  spec.dim = 3;
  spec.margin = 0.5;
  spec.n_images = 2;
  spec.seed = seed;
  const SynthData synth = Generate(spec);

  ScoreShiftReport report;
  report.data = synth.data;
  report.initial_offset_weight = 4.0;
  report.config.loss_kind = LossKind::kApErrorDriven;
  report.config.step = StepKind::Type::kHeaviside;
  report.config.interpolated = false;
  report.config.learning_rate = 0.1;
  report.config.momentum = 0.0;
  report.config.weight_decay = 0.0;
  report.config.batch_size = 2;
  report.config.epochs = 5000;
  report.config.seed = seed;

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(spec.dim);
  theta(*synth.offset_column) = report.initial_offset_weight;
  const ScorerModel init = LinearScorer{theta};

  auto run = [&](Batching batching) {
    TrainConfig config = report.config;
    config.batching = batching;
    TrainResult trained = Train(config, report.data, init);
    ScoreShiftRun out;
    const Eigen::VectorXd scores =
        ScoreForward(trained.model, report.data.features);
    out.combined_ap = ExactApOracle(report.data.Batch(scores));
    out.image_aps = PerImageAp(report.data, scores);
    out.history = std::move(trained.history);
    return out;
  };
  report.pooled = run(Batching::kPooled);
  report.per_image = run(Batching::kPerImage);
  return report;
}

OfflineBoundReport OfflineBoundExperiment(const TrainConfig& config,
                                          const Dataset& data,
                                          const Eigen::VectorXd& reference_u,
                                          std::span<const long> checkpoints,
                                          bool throw_on_violation) {
  if (config.loss_kind != LossKind::kApMargin ||
      config.model != ModelKind::kLinear || config.momentum != 0.0 ||
      config.weight_decay != 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "bound check needs ap_margin, a linear model, no momentum and "
                "no weight decay");
  }
  if (checkpoints.empty() || reference_u.size() != data.dim()) {
    throw Error(ErrorCode::kInvalidArgument,
                "bound check needs checkpoints and a reference of width D");
  }
  // Offline setting: every step sees the full data as one ranking.
  Dataset offline = data;
  std::fill(offline.image_ids.begin(), offline.image_ids.end(), 0);
  const RankingBatch labels_only = offline.Batch(
      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(offline.size())));

  OfflineBoundReport report;
  report.operator_norm = LinearPairJacobianNorm(offline.features, labels_only);
  if (!(report.operator_norm > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "pairwise feature differences are all zero");
  }
  report.step_size =
      config.delta / (report.operator_norm * report.operator_norm);
  report.slack = SeparatorSlack(
      offline.Batch(offline.features * reference_u), config.delta);
  report.init_distance_sq = reference_u.squaredNorm();

  TrainConfig run = config;
  run.learning_rate = report.step_size;
  run.batching = Batching::kPooled;
  run.batch_size = 1;
  run.epochs = static_cast<int>(
      *std::max_element(checkpoints.begin(), checkpoints.end()));
  run.stop_when_converged = false;
  TrainResult trained = Train(run, offline,
                              LinearScorer{Eigen::VectorXd::Zero(data.dim())});
  report.history = std::move(trained.history);

  report.all_hold = true;
  std::size_t num_positives = labels_only.positives().size();
  for (long t : checkpoints) {
    BoundCheckpoint cp;
    cp.steps = t;
    double total = 0.0;
    for (long s = 0; s < t; ++s) total += report.history.records[s].ap_loss;
    cp.average_ap_loss = total / static_cast<double>(t);
    const OfflineBoundTerms terms{report.slack, num_positives,
                                  report.operator_norm,
                             config.delta, report.init_distance_sq, t};
    cp.recall_weighted = OfflineBoundRhs(terms, BoundMode::kRecallWeighted);
    cp.saturating = OfflineBoundRhs(terms, BoundMode::kSaturating);
    cp.holds = cp.average_ap_loss <= cp.bound();
    report.all_hold = report.all_hold && cp.holds;
    report.checkpoints.push_back(cp);
  }
  if (throw_on_violation && !report.all_hold) {
    throw Error(ErrorCode::kBoundViolated,
                "averaged AP-loss exceeds the bound");
  }
  return report;
}

}  // namespace aploss
