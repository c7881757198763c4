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

#include "aploss/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aploss/error.hpp"

namespace aploss {

void SmoothApConfig::Validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be > 0");
  }
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must lie in (0, 1)");
  }
}

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

SmoothApResult SmoothApValueGrad(const RankingBatch& batch,
                                 const SmoothApConfig& config) {
  config.Validate();
  RequirePositives(batch);
  const auto scores = batch.scores();
  const auto labels = batch.labels();
  const double temperature = config.temperature;
  const double num_positives = static_cast<double>(batch.positives().size());

  SmoothApResult out;
  out.grad.g.assign(batch.size(), 0.0);
  std::vector<double> sig(batch.size());

  double total = 0.0;
  for (std::size_t i : batch.positives()) {
    double numerator = 0.0;
    double denominator = 1.0;
    for (std::size_t k = 0; k < batch.size(); ++k) {
      if (k == i || !batch.is_valid(k)) continue;
      sig[k] = Sigmoid(temperature * PairwiseDifference(scores, i, k));
      denominator += sig[k];
      if (labels[k] == kNegativeLabel) numerator += sig[k];
    }
    const double ratio = numerator / denominator;
    total += ratio;
    // dF_i/dx_ik = S'(x_ik) ([k in N] - F_i) / D_i
    for (std::size_t k = 0; k < batch.size(); ++k) {
      if (k == i || !batch.is_valid(k)) continue;
      const double slope = temperature * sig[k] * (1.0 - sig[k]);
      const double indicator = labels[k] == kNegativeLabel ? 1.0 : 0.0;
      const double d = slope * (indicator - ratio) / denominator;
      out.grad.g[k] += d;
      out.grad.g[i] -= d;
    }
  }
  out.smooth_loss = total / num_positives;

  double outer = 1.0 / num_positives;
  if (config.log_space) {
    const double inner = 1.0 - out.smooth_loss + config.epsilon;
    out.value = -std::log(inner);
    outer /= inner;
  } else {
    out.value = out.smooth_loss;
  }
  for (double& v : out.grad.g) v *= outer;
  out.grad.normalized = true;
  return out;
}

double ThreeSampleObjective(std::array<double, 2> theta) {
  const double t1 = theta[0];
  const double t2 = theta[1];
  const double first =
      Sigmoid(-t1) / (1.0 + Sigmoid(-t1) + Sigmoid(t2 - 4.0 * t1));
  const double second = Sigmoid(3.0 * t1 - t2) /
                        (1.0 + Sigmoid(4.0 * t1 - t2) + Sigmoid(3.0 * t1 - t2));
  return 0.5 * (first + second);
}

GradientVector AucGrad(const RankingBatch& batch, StepKind kind,
                       bool normalize) {
  return ScoreGradients(AucPrimaryTerms(batch, kind), batch, normalize);
}

std::vector<double> SoftmaxConsistencyGrad(std::span<const double> logits,
                                           int label) {
  if (logits.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "softmax needs K >= 2 logits");
  }
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw Error(ErrorCode::kInvalidClass,
                "class " + std::to_string(label) + " outside [0, " +
                    std::to_string(logits.size()) + ")");
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> activation(logits.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    activation[i] = std::exp(logits[i] - peak);
    norm += activation[i];
  }
  // Desired output is the one-hot target; the update is its negation.
  std::vector<double> g(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double desired = static_cast<int>(i) == label ? 1.0 : 0.0;
    g[i] = activation[i] / norm - desired;
  }
  return g;
}

std::array<double, 2> HingeConsistencyGrad(double x, int label) {
  if (label != 0 && label != 1) {
    throw Error(ErrorCode::kInvalidClass, "hinge label must be 0 or 1");
  }
  const std::array<double, 2> margins = {-x, x};
  std::array<double, 2> g = {0.0, 0.0};
  const double activation = Step(margins[label] - 1.0, StepKind::Heaviside());
  g[label] = activation - 1.0;
  return g;
}

}  // namespace aploss
