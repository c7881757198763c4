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

#ifndef APLOSS_MODELS_HPP_
#define APLOSS_MODELS_HPP_

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "aploss/apgrad.hpp"
#include "aploss/ranking.hpp"

namespace aploss {

/// One row of features per sample.
using FeatureSet = Eigen::MatrixXd;

/// s_i = <f_i, theta>.
struct LinearScorer {
  Eigen::VectorXd theta;
};

/// s_i = w2 . tanh(W1^T f_i + b1) + b2 with W1 of shape D x H.
struct MlpScorer {
  Eigen::MatrixXd hidden_weights;
  Eigen::VectorXd hidden_bias;
  Eigen::VectorXd output_weights;
  double output_bias = 0.0;

  /// All parameters uniform in [-0.5, 0.5].
  static MlpScorer Random(Eigen::Index input_dim, Eigen::Index hidden_units,
                          std::uint64_t seed);
};

using ScorerModel = std::variant<LinearScorer, MlpScorer>;

Eigen::Index InputDim(const ScorerModel& model);

/// Flat parameter view. MLP order: hidden weights (column-major), hidden
/// bias, output weights, output bias.
Eigen::VectorXd Parameters(const ScorerModel& model);
ScorerModel WithParameters(const ScorerModel& model,
                           const Eigen::VectorXd& params);

/// Throws Error(kDimensionMismatch) if the feature width differs from the
/// model input dimension.
Eigen::VectorXd ScoreForward(const ScorerModel& model,
                             const FeatureSet& features);

/// Chain rule from score gradients to a flat parameter gradient:
/// sum_i g_i * ds_i/dtheta.
Eigen::VectorXd ScoreBackward(const ScorerModel& model,
                              const FeatureSet& features,
                              std::span<const double> score_grad);

/// One unnormalized unit-step error-driven update of a linear scorer:
/// theta + sum_{i in P, j in N} L_ij (f_i - f_j). Throws kNotLinear for any
/// other model.
LinearScorer PerceptronStep(const ScorerModel& model, const RankingBatch& batch,
                            const FeatureSet& features, StepKind kind);

std::vector<double> ToStdVector(const Eigen::VectorXd& v);

}  // namespace aploss

#endif  // APLOSS_MODELS_HPP_
