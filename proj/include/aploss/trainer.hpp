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

#ifndef APLOSS_TRAINER_HPP_
#define APLOSS_TRAINER_HPP_

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "aploss/apgrad.hpp"
#include "aploss/baselines.hpp"
#include "aploss/dataset.hpp"
#include "aploss/models.hpp"

namespace aploss {

enum class LossKind { kApErrorDriven, kApMargin, kAuc, kSmoothAp, kPerceptron };
enum class Batching { kPooled, kPerImage };
enum class ModelKind { kLinear, kMlp };

/// Accepts both the config spelling (ap_error_driven, per_image, ...) and the
/// CLI spelling (ap, ap-margin, smooth-ap, perceptron, per-image, ...).
LossKind ParseLossKind(std::string_view name);
Batching ParseBatching(std::string_view name);
ModelKind ParseModelKind(std::string_view name);
StepKind::Type ParseStepType(std::string_view name);
std::string_view LossKindName(LossKind kind);
std::string_view BatchingName(Batching batching);
std::string_view ModelKindName(ModelKind kind);
std::string_view StepTypeName(StepKind::Type type);

struct TrainConfig {
  LossKind loss_kind = LossKind::kApErrorDriven;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int batch_size = 1;  // images per minibatch
  int epochs = 10;
  double delta = 1.0;
  bool interpolated = true;
  Batching batching = Batching::kPooled;
  std::uint64_t seed = 0;
  StepKind::Type step = StepKind::Type::kPiecewise;
  ModelKind model = ModelKind::kLinear;
  int hidden_units = 8;
  double temperature = 1.0;
  double epsilon = 0.01;
  bool log_space = false;
  bool stop_when_converged = true;

  /// Throws Error(kInvalidArgument).
  void Validate() const;
  StepKind step_kind() const;
  SmoothApConfig smooth_ap() const;
};

/// Metrics of the model before the update of `step`. ap_loss, exact_ap and
/// interp_ap are measured on the whole dataset pooled into one ranking with
/// the Heaviside step; loss_value is the training objective on the minibatch.
struct StepRecord {
  long step = 0;
  double loss_value = 0.0;
  double ap_loss = 0.0;
  double exact_ap = 0.0;
  double interp_ap = 0.0;
  double grad_norm = 0.0;
  double min_image_ap = 0.0;  // smallest per-image exact AP
};

struct TrainHistory {
  std::vector<StepRecord> records;
  /// First step from which the batching-mode target held for a full epoch:
  /// pooled AP-loss 0 (pooled) or every per-image AP-loss 0 (per_image).
  std::optional<long> converged_at_step;
  long steps_per_epoch = 0;
};

struct TrainResult {
  TrainHistory history;
  ScorerModel model;
};

/// Minibatch SGD with momentum and weight decay. Each epoch shuffles the
/// images and walks them `batch_size` at a time. Deterministic given the
/// config. Throws kNoPositives when the data has no positive sample and
/// kDivergenceDetected on a non-finite loss or weight.
TrainResult Train(const TrainConfig& config, const Dataset& data,
                  const std::optional<ScorerModel>& init = std::nullopt);

/// Score gradient and objective of one minibatch under the config's loss and
/// batching mode. Batches (or images) without positives contribute nothing.
struct BatchGradient {
  std::vector<double> score_grad;
  double loss = 0.0;
};
BatchGradient ComputeBatchGradient(const TrainConfig& config,
                                   const RankingBatch& batch);

struct Metrics {
  double exact_ap = 0.0;
  double interp_ap = 0.0;
  double auc = 0.0;  // Mann-Whitney, ties count one half
};

/// Throws kNoPositives.
Metrics Evaluate(const ScorerModel& model, const FeatureSet& features,
                 std::span<const int> labels);

/// Exact AP of each image ranked on its own.
std::vector<double> PerImageAp(const Dataset& data,
                               const Eigen::VectorXd& scores);

struct ScoreShiftRun {
  TrainHistory history;
  double combined_ap = 0.0;
  std::vector<double> image_aps;
};

struct ScoreShiftReport {
  TrainConfig config;
  double initial_offset_weight = 0.0;
  Dataset data;
  ScoreShiftRun pooled;
  ScoreShiftRun per_image;
};

/// Two-image linear problem whose images are separable alone and jointly,
/// started with a large weight on the per-image offset feature. Per-image
/// gradients are blind to that feature, so only pooled training removes the
/// shift.
ScoreShiftReport ScoreShiftExperiment(std::uint64_t seed);

struct BoundCheckpoint {
  long steps = 0;
  double average_ap_loss = 0.0;
  double recall_weighted = 0.0;
  double saturating = 0.0;
  bool holds = false;

  double bound() const { return std::min(recall_weighted, saturating); }
};

struct OfflineBoundReport {
  double operator_norm = 0.0;  // R
  double step_size = 0.0;      // delta / R^2
  double slack = 0.0;          // Z(u)
  double init_distance_sq = 0.0;
  std::vector<BoundCheckpoint> checkpoints;
  TrainHistory history;
  bool all_hold = false;
};

/// Offline run of the margin variant on the full dataset with step size
/// delta / R^2 from theta = 0, checking the averaged AP-loss against both
/// bounds at every checkpoint. Needs loss ap_margin, a linear model, zero
/// momentum and zero weight decay (kInvalidArgument otherwise). Throws
/// kBoundViolated on a violation when `throw_on_violation` is set.
OfflineBoundReport OfflineBoundExperiment(const TrainConfig& config,
                                          const Dataset& data,
                                          const Eigen::VectorXd& reference_u,
                                          std::span<const long> checkpoints,
                                          bool throw_on_violation = true);

}  // namespace aploss

#endif  // APLOSS_TRAINER_HPP_
