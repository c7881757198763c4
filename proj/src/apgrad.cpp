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

#include "aploss/apgrad.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <string>

#include "aploss/error.hpp"

namespace aploss {

double GradientVector::Sum() const {
  double sum = 0.0;
  for (double v : g) sum += v;
  return sum;
}

double GradientVector::Norm() const {
  double sq = 0.0;
  for (double v : g) sq += v * v;
  return std::sqrt(sq);
}

std::vector<double> ErrorDrivenDelta(std::span<const double> terms,
                                     std::span<const int> pair_labels) {
  if (terms.size() != pair_labels.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "terms and pair labels differ in length");
  }
  std::vector<double> delta(terms.size());
  for (std::size_t k = 0; k < terms.size(); ++k) {
    delta[k] = ErrorDrivenDelta(terms[k], pair_labels[k]);
  }
  return delta;
}

GradientVector ScoreGradients(const PrimaryTermRows& rows,
                              const RankingBatch& batch, bool normalize) {
  RequirePositives(batch);
  GradientVector out;
  out.g.assign(batch.size(), 0.0);
  for (std::size_t r = 0; r < rows.num_rows(); ++r) {
    const auto row = rows.row(r);
    double row_sum = 0.0;
    for (std::size_t c = 0; c < rows.num_cols(); ++c) {
      row_sum += row[c];
      out.g[rows.negatives[c]] += row[c];
    }
    out.g[rows.positives[r]] -= row_sum;
  }
  if (normalize) {
    const double num_positives = static_cast<double>(rows.num_rows());
    for (double& v : out.g) v /= num_positives;
    out.normalized = true;
  }
  return out;
}

MinibatchGradient ApGradMinibatch(const RankingBatch& batch, StepKind kind,
                                  bool interpolated) {
  RequirePositives(batch);
  const auto scores = batch.scores();

  MinibatchGradient out;
  PrimaryTermRows& rows = out.rows;
  rows.positives = batch.positives();
  rows.negatives = batch.negatives();
  rows.terms.assign(rows.num_rows() * rows.num_cols(), 0.0);
  rows.denominators.resize(rows.num_rows());
  rows.precisions.resize(rows.num_rows());

  std::vector<std::size_t> order(rows.num_rows());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[rows.positives[a]] <
                            scores[rows.positives[b]];
                   });

  double max_precision = 0.0;
  for (std::size_t r : order) {
    const std::size_t i = rows.positives[r];
    double denominator = 1.0;
    for (std::size_t k = 0; k < batch.size(); ++k) {
      if (k == i || !batch.is_valid(k)) continue;
      denominator += Step(PairwiseDifference(scores, i, k), kind);
    }
    auto row = rows.row(r);
    for (std::size_t c = 0; c < rows.num_cols(); ++c) {
      row[c] = Step(PairwiseDifference(scores, i, rows.negatives[c]), kind) /
               denominator;
    }
    rows.denominators[r] = denominator;
    const double precision = 1.0 - rows.RowSum(r);
    if (!interpolated || precision >= max_precision) {
      max_precision = std::max(max_precision, precision);
    } else {
      if (precision >= 1.0) {
        throw Error(ErrorCode::kDegeneratePrecision,
                    "rescale requested for a row with precision 1");
      }
      const double scale = (1.0 - max_precision) / (1.0 - precision);
      for (double& v : row) v *= scale;
    }
    rows.precisions[r] = 1.0 - rows.RowSum(r);
  }

  // Accumulation in index order so the plain path matches ScoreGradients
  // bit for bit.
  out.gradient = ScoreGradients(rows, batch, true);
  out.loss = rows.MeanRowSum();
  return out;
}

PrimaryTermRows MarginPrimaryTerms(const RankingBatch& batch, double delta) {
  const StepKind ramp = StepKind::Piecewise(delta);
  PrimaryTermRows rows = PrimaryTerms(batch, StepKind::Heaviside());
  const auto scores = batch.scores();
  for (std::size_t r = 0; r < rows.num_rows(); ++r) {
    auto row = rows.row(r);
    for (std::size_t c = 0; c < rows.num_cols(); ++c) {
      row[c] = Step(PairwiseDifference(scores, rows.positives[r],
                                       rows.negatives[c]),
                    ramp) /
               rows.denominators[r];
    }
    rows.precisions[r] = 1.0 - rows.RowSum(r);
  }
  return rows;
}

double SurrogateLoss(const RankingBatch& batch,
                     std::span<const double> anchor_scores, double delta) {
  RequirePositives(batch);
  if (anchor_scores.size() != batch.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "anchor scores do not match the batch");
  }
  const auto scores = batch.scores();
  const StepKind heaviside = StepKind::Heaviside();
  double total = 0.0;
  for (std::size_t i : batch.positives()) {
    double denominator = 1.0;
    for (std::size_t k = 0; k < batch.size(); ++k) {
      if (k == i || !batch.is_valid(k)) continue;
      denominator += Step(PairwiseDifference(anchor_scores, i, k), heaviside);
    }
    double numerator = 0.0;
    for (std::size_t j : batch.negatives()) {
      numerator += QIntegral(PairwiseDifference(scores, i, j), delta);
    }
    total += numerator / denominator;
  }
  return total / static_cast<double>(batch.positives().size());
}

double SeparatorSlack(const RankingBatch& batch, double delta) {
  RequirePositives(batch);
  const auto scores = batch.scores();
  double slack = 0.0;
  for (std::size_t i : batch.positives()) {
    double row = 0.0;
    for (std::size_t j : batch.negatives()) {
      row += QIntegral(PairwiseDifference(scores, i, j), delta);
    }
    slack = std::max(slack, row);
  }
  return slack;
}

BoundMode ParseBoundMode(std::string_view name) {
  if (name == "recall_weighted") return BoundMode::kRecallWeighted;
  if (name == "saturating") return BoundMode::kSaturating;
  throw Error(ErrorCode::kInvalidMode,
              "unknown bound mode '" + std::string(name) + "'");
}

double OfflineBoundRhs(const OfflineBoundTerms& terms, BoundMode mode) {
  if (!(terms.delta > 0.0) || terms.steps < 1 || terms.num_positives < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "bound needs delta > 0, T >= 1 and |P| >= 1");
  }
  const double scaled = 8.0 / terms.delta * terms.slack;
  const double tail = 4.0 * terms.operator_norm * terms.operator_norm *
                      terms.init_distance_sq /
                      (terms.delta * terms.delta *
                       static_cast<double>(terms.steps));
  const double p = static_cast<double>(terms.num_positives);
  switch (mode) {
    case BoundMode::kRecallWeighted:
      return (std::log(p) + 1.0) / p * scaled + tail;
    case BoundMode::kSaturating:
      return scaled / (1.0 + scaled) + tail;
  }
  throw Error(ErrorCode::kInvalidMode, "unknown bound mode");
}

double OfflineBoundMin(const OfflineBoundTerms& terms) {
  return std::min(OfflineBoundRhs(terms, BoundMode::kRecallWeighted),
                  OfflineBoundRhs(terms, BoundMode::kSaturating));
}

double LinearPairJacobianNorm(const Eigen::MatrixXd& features,
                              const RankingBatch& batch) {
  if (static_cast<std::size_t>(features.rows()) != batch.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "feature rows do not match the batch");
  }
  const auto& positives = batch.positives();
  const auto& negatives = batch.negatives();
  Eigen::MatrixXd jacobian(positives.size() * negatives.size(),
                           features.cols());
  Eigen::Index row = 0;
  for (std::size_t i : positives) {
    for (std::size_t j : negatives) {
      jacobian.row(row++) = features.row(static_cast<Eigen::Index>(j)) -
                            features.row(static_cast<Eigen::Index>(i));
    }
  }
  if (jacobian.rows() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jacobian);
  return svd.singularValues()(0);
}

ScoreField ErrorDrivenField(std::vector<int> labels, StepKind kind) {
  return [labels = std::move(labels), kind](std::span<const double> scores) {
    const RankingBatch batch(std::vector<double>(scores.begin(), scores.end()),
                             labels);
    const GradientVector g =
        ScoreGradients(PrimaryTerms(batch, kind), batch, true);
    std::vector<double> update(g.g.size());
    std::transform(g.g.begin(), g.g.end(), update.begin(),
                   [](double v) { return -v; });
    return update;
  };
}

double LoopIntegral(const ScoreField& field, std::span<const double> center,
                    std::size_t axis_a, std::size_t axis_b, double half_width,
                    int segments) {
  if (axis_a >= center.size() || axis_b >= center.size() || axis_a == axis_b ||
      segments < 1) {
    throw Error(ErrorCode::kInvalidArgument, "bad loop integral arguments");
  }
  // Corners in counter-clockwise order in the (a, b) plane.
  const double corners[5][2] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}, {-1, -1}};
  std::vector<double> point(center.begin(), center.end());
  double total = 0.0;
  for (int side = 0; side < 4; ++side) {
    const double da =
        (corners[side + 1][0] - corners[side][0]) * half_width / segments;
    const double db =
        (corners[side + 1][1] - corners[side][1]) * half_width / segments;
    for (int s = 0; s < segments; ++s) {
      const double t = (s + 0.5) / segments;
      point[axis_a] = center[axis_a] +
                      half_width * (corners[side][0] +
                                    t * (corners[side + 1][0] -
                                         corners[side][0]));
      point[axis_b] = center[axis_b] +
                      half_width * (corners[side][1] +
                                    t * (corners[side + 1][1] -
                                         corners[side][1]));
      const std::vector<double> v = field(point);
      total += v[axis_a] * da + v[axis_b] * db;
    }
  }
  return total;
}

}  // namespace aploss
