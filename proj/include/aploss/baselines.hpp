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

#ifndef APLOSS_BASELINES_HPP_
#define APLOSS_BASELINES_HPP_

#include <array>
#include <span>
#include <vector>

#include "aploss/apgrad.hpp"
#include "aploss/ranking.hpp"

namespace aploss {

/// Sigmoid-smoothed AP-loss. The sigmoid is S(T x) with T = temperature.
/// With log_space set the objective becomes -log(1 - F + epsilon), i.e. the
/// negated log of smoothed AP plus epsilon.
struct SmoothApConfig {
  double temperature = 1.0;
  double epsilon = 0.01;
  bool log_space = false;

  /// Throws Error(kInvalidArgument) unless temperature > 0 and
  /// 0 < epsilon < 1.
  void Validate() const;
};

struct SmoothApResult {
  double value = 0.0;        // objective (F, or its log-space transform)
  double smooth_loss = 0.0;  // F itself
  GradientVector grad;       // d value / d scores
};

/// F = (1/|P|) sum_i sum_j S(x_ij) / (1 + sum_{k != i} S(x_ik)) and its exact
/// gradient with respect to the batch scores.
SmoothApResult SmoothApValueGrad(const RankingBatch& batch,
                                 const SmoothApConfig& config);

/// Logistic function, overflow-safe.
double Sigmoid(double x);

/// Closed-form smoothed AP-loss of the three-sample linear instance with
/// features (0,0) negative, (1,0) and (-3,1) positive, as a function of the
/// weights (theta1, theta2).
double ThreeSampleObjective(std::array<double, 2> theta);

/// AUC-loss gradient: every misordered pair carries 1/|N|. Normalized by |P|
/// when requested. Throws kEmptyPositives / kEmptyNegatives.
GradientVector AucGrad(const RankingBatch& batch, StepKind kind,
                       bool normalize = true);

/// Error-driven update with a softmax activation over K logits and a zero-based
/// target class: g_i = softmax(x)_i - [i == label]. Throws kInvalidClass for a
/// label outside [0, K) and kInvalidArgument for K < 2.
std::vector<double> SoftmaxConsistencyGrad(std::span<const double> logits,
                                           int label);

/// Binary case with (x_0, x_1) = (-x, x) and loss-augmented step activation
/// L_i = H(x_i - 1): g_i = [i == label] (L_i - 1). Label is 0 or 1.
std::array<double, 2> HingeConsistencyGrad(double x, int label);

}  // namespace aploss

#endif  // APLOSS_BASELINES_HPP_
