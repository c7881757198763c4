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

#include "aploss/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "aploss/error.hpp"

namespace aploss {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyPositives: return "EmptyPositives";
    case ErrorCode::kEmptyNegatives: return "EmptyNegatives";
    case ErrorCode::kDegeneratePrecision: return "DegeneratePrecision";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidMode: return "InvalidMode";
    case ErrorCode::kInvalidClass: return "InvalidClass";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNotLinear: return "NotLinear";
    case ErrorCode::kNoPositives: return "NoPositives";
    case ErrorCode::kDivergenceDetected: return "DivergenceDetected";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kBoundViolated: return "BoundViolated";
    case ErrorCode::kBadFlags: return "BadFlags";
    case ErrorCode::kAssertionFailed: return "AssertionFailed";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

RankingBatch::RankingBatch(std::vector<double> scores, std::vector<int> labels,
                           std::vector<int> image_ids)
    : scores_(std::move(scores)),
      labels_(std::move(labels)),
      image_ids_(std::move(image_ids)) {
  if (scores_.size() != labels_.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "scores and labels differ in length (" +
                    std::to_string(scores_.size()) + " vs " +
                    std::to_string(labels_.size()) + ")");
  }
  if (image_ids_.empty()) image_ids_.assign(scores_.size(), 0);
  if (image_ids_.size() != scores_.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "image_ids length does not match scores");
  }
  for (std::size_t i = 0; i < scores_.size(); ++i) {
    if (!std::isfinite(scores_[i])) {
      throw Error(ErrorCode::kInvalidArgument,
                  "non-finite score at index " + std::to_string(i));
    }
    switch (labels_[i]) {
      case kPositiveLabel: positives_.push_back(i); break;
      case kNegativeLabel: negatives_.push_back(i); break;
      case kIgnoreLabel: break;
      default:
        throw Error(ErrorCode::kInvalidArgument,
                    "label " + std::to_string(labels_[i]) + " at index " +
                        std::to_string(i) + " is not in {-1, 0, 1}");
    }
  }
}

RankingBatch RankingBatch::WithScores(std::vector<double> scores) const {
  return RankingBatch(std::move(scores), labels_, image_ids_);
}

StepKind StepKind::Piecewise(double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw Error(ErrorCode::kInvalidArgument,
                "piecewise step needs delta > 0, got " + std::to_string(delta));
  }
  return StepKind(Type::kPiecewise, delta);
}

double PrimaryTermRows::RowSum(std::size_t r) const {
  double sum = 0.0;
  for (double v : row(r)) sum += v;
  return sum;
}

double PrimaryTermRows::MeanRowSum() const {
  if (num_rows() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < num_rows(); ++r) total += RowSum(r);
  return total / static_cast<double>(num_rows());
}

double Step(double x, StepKind kind) {
  if (kind.is_heaviside()) return x >= 0.0 ? 1.0 : 0.0;
  const double delta = kind.delta();
  if (x < -delta) return 0.0;
  if (x > delta) return 1.0;
  return x / (2.0 * delta) + 0.5;
}

void RequirePositives(const RankingBatch& batch) {
  if (batch.positives().empty()) {
    throw Error(ErrorCode::kEmptyPositives, "batch has no positive sample");
  }
}

PrimaryTermRows PrimaryTerms(const RankingBatch& batch, StepKind kind) {
  RequirePositives(batch);
  const auto scores = batch.scores();
  PrimaryTermRows rows;
  rows.positives = batch.positives();
  rows.negatives = batch.negatives();
  rows.terms.assign(rows.num_rows() * rows.num_cols(), 0.0);
  rows.denominators.resize(rows.num_rows());
  rows.precisions.resize(rows.num_rows());

  for (std::size_t r = 0; r < rows.num_rows(); ++r) {
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
    rows.precisions[r] = 1.0 - rows.RowSum(r);
  }
  return rows;
}

namespace {

// Row order of positives sorted by ascending score, ties by index.
std::vector<std::size_t> AscendingPositiveRows(const PrimaryTermRows& rows,
                                               const RankingBatch& batch) {
  std::vector<std::size_t> order(rows.num_rows());
  std::iota(order.begin(), order.end(), 0);
  const auto scores = batch.scores();
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[rows.positives[a]] <
                            scores[rows.positives[b]];
                   });
  return order;
}

}  // namespace

void InterpolateRows(PrimaryTermRows& rows, const RankingBatch& batch) {
  double max_precision = 0.0;
  for (std::size_t r : AscendingPositiveRows(rows, batch)) {
    const double precision = rows.precisions[r];
    if (precision >= max_precision) {
      max_precision = precision;
      continue;
    }
    const double scale = (1.0 - max_precision) / (1.0 - precision);
    for (double& v : rows.row(r)) v *= scale;
    rows.precisions[r] = 1.0 - rows.RowSum(r);
  }
}

double ApLoss(const RankingBatch& batch, StepKind kind, bool interpolated) {
  PrimaryTermRows rows = PrimaryTerms(batch, kind);
  if (interpolated) InterpolateRows(rows, batch);
  return rows.MeanRowSum();
}

double ExactApOracle(const RankingBatch& batch) {
  RequirePositives(batch);
  std::vector<std::size_t> order;
  order.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch.is_valid(i)) order.push_back(i);
  }
  const auto scores = batch.scores();
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });
  double precision_sum = 0.0;
  double positives_seen = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (batch.labels()[order[rank]] != kPositiveLabel) continue;
    positives_seen += 1.0;
    precision_sum += positives_seen / static_cast<double>(rank + 1);
  }
  return precision_sum / static_cast<double>(batch.positives().size());
}

PrimaryTermRows AucPrimaryTerms(const RankingBatch& batch, StepKind kind) {
  RequirePositives(batch);
  if (batch.negatives().empty()) {
    throw Error(ErrorCode::kEmptyNegatives, "batch has no negative sample");
  }
  const auto scores = batch.scores();
  PrimaryTermRows rows;
  rows.positives = batch.positives();
  rows.negatives = batch.negatives();
  rows.terms.assign(rows.num_rows() * rows.num_cols(), 0.0);
  const double num_negatives = static_cast<double>(rows.num_cols());
  rows.denominators.assign(rows.num_rows(), num_negatives);
  rows.precisions.resize(rows.num_rows());
  for (std::size_t r = 0; r < rows.num_rows(); ++r) {
    auto row = rows.row(r);
    for (std::size_t c = 0; c < rows.num_cols(); ++c) {
      row[c] = Step(PairwiseDifference(scores, rows.positives[r],
                                       rows.negatives[c]),
                    kind) /
               num_negatives;
    }
    rows.precisions[r] = 1.0 - rows.RowSum(r);
  }
  return rows;
}

double QIntegral(double x, double delta) {
  if (!(delta > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "QIntegral needs delta > 0");
  }
  if (x < -delta) return 0.0;
  if (x > delta) return x;
  return (x + delta) * (x + delta) / (4.0 * delta);
}

}  // namespace aploss
