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

#ifndef APLOSS_APGRAD_HPP_
#define APLOSS_APGRAD_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "aploss/ranking.hpp"

namespace aploss {

/// Per-sample score gradients. Ignored samples always hold 0.
struct GradientVector {
  std::vector<double> g;
  bool normalized = false;

  double Sum() const;
  double Norm() const;
};

/// Delta x_ij = -L_ij * y_ij.
inline double ErrorDrivenDelta(double term, int pair_label) {
  return pair_label == 1 ? -term : 0.0;
}
std::vector<double> ErrorDrivenDelta(std::span<const double> terms,
                                     std::span<const int> pair_labels);

/// Backpropagates the error-driven update through the difference transform:
/// positives get -sum_j L_ij, negatives get sum_i L_ij. Divides by |P| when
/// `normalize` is set.
GradientVector ScoreGradients(const PrimaryTermRows& rows,
                              const RankingBatch& batch, bool normalize = true);

struct MinibatchGradient {
  GradientVector gradient;
  PrimaryTermRows rows;  // after interpolation, one row per positive
  double loss = 0.0;  // interpolated AP-loss when interpolation is on
};

/// Minibatch gradient for (interpolated) AP. Visits positives in ascending
/// score order, tracking the running maximum precision and shrinking rows that
/// fall below it, then normalizes by |P|. Throws kEmptyPositives, or
/// kDegeneratePrecision if a rescale would divide by zero. All samples of the
/// batch are pooled into one ranking.
MinibatchGradient ApGradMinibatch(const RankingBatch& batch, StepKind kind,
                                  bool interpolated);

/// Margin variant: piecewise step of half-width delta in the numerator,
/// Heaviside in the denominator.
PrimaryTermRows MarginPrimaryTerms(const RankingBatch& batch, double delta);

/// l(x, x_hat) with Q(x_ij) summed over negatives and the denominator frozen
/// at the anchor scores.
double SurrogateLoss(const RankingBatch& batch,
                     std::span<const double> anchor_scores, double delta);

/// Z(u) = max over positives of sum_j Q(x_ij) for scores produced by u.
double SeparatorSlack(const RankingBatch& batch, double delta);

enum class BoundMode { kRecallWeighted, kSaturating };

/// Accepts "recall_weighted" or "saturating"; throws Error(kInvalidMode).
BoundMode ParseBoundMode(std::string_view name);

struct OfflineBoundTerms {
  double slack = 0.0;           // Z(u)
  std::size_t num_positives = 1;
  double operator_norm = 0.0;   // R
  double delta = 1.0;
  double init_distance_sq = 0.0;  // ||u - theta_1||^2
  long steps = 1;                 // T
};

/// Right-hand side of the averaged AP-loss bound for the offline setting.
/// recall_weighted: (ln|P| + 1)/|P| * (8/delta) Z + 4 R^2 ||u-theta_1||^2 /
/// (delta^2 T); saturating: (8/delta) Z / (1 + (8/delta) Z) + same tail.
double OfflineBoundRhs(const OfflineBoundTerms& terms, BoundMode mode);
double OfflineBoundMin(const OfflineBoundTerms& terms);

/// Largest singular value of the Jacobian of (x_ij)_{i in P, j in N} with
/// respect to the weights of a linear scorer, i.e. of the matrix whose rows
/// are f_j - f_i. Upper-bounds the score-map operator norm the bound needs.
double LinearPairJacobianNorm(const Eigen::MatrixXd& features,
                              const RankingBatch& batch);

using ScoreField =
    std::function<std::vector<double>(std::span<const double> scores)>;

/// Error-driven update field -g(s) for a fixed label vector (plain AP rows).
ScoreField ErrorDrivenField(std::vector<int> labels, StepKind kind);

/// Line integral of `field` around the axis-aligned square of half-width
/// `half_width` centred on `center`, moving in the (axis_a, axis_b) plane
/// counter-clockwise. Midpoint rule with `segments` pieces per side. Zero (up
/// to quadrature error) for any gradient field.
double LoopIntegral(const ScoreField& field, std::span<const double> center,
                    std::size_t axis_a, std::size_t axis_b, double half_width,
                    int segments);

}  // namespace aploss

#endif  // APLOSS_APGRAD_HPP_
