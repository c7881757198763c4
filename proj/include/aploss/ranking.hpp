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

#ifndef APLOSS_RANKING_HPP_
#define APLOSS_RANKING_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace aploss {

/// Ternary sample labels. Ignored samples take no part in any ranking sum.
inline constexpr int kIgnoreLabel = -1;
inline constexpr int kNegativeLabel = 0;
inline constexpr int kPositiveLabel = 1;

/// Scores and labels of the samples ranked together. Every loss in this
/// library is defined over one batch: all valid samples form a single
/// ranking regardless of their image tag.
class RankingBatch {
 public:
  RankingBatch() = default;
  /// Throws Error(kInvalidArgument) on length mismatch, non-finite scores or
  /// labels outside {-1, 0, 1}. Empty `image_ids` tags every sample 0.
  RankingBatch(std::vector<double> scores, std::vector<int> labels,
               std::vector<int> image_ids = {});

  std::size_t size() const { return scores_.size(); }
  std::span<const double> scores() const { return scores_; }
  std::span<const int> labels() const { return labels_; }
  std::span<const int> image_ids() const { return image_ids_; }

  /// Sample indices with label 1, in index order.
  const std::vector<std::size_t>& positives() const { return positives_; }
  /// Sample indices with label 0, in index order.
  const std::vector<std::size_t>& negatives() const { return negatives_; }
  bool is_valid(std::size_t i) const { return labels_[i] != kIgnoreLabel; }

  /// Same labels and tags with a new score vector.
  RankingBatch WithScores(std::vector<double> scores) const;

 private:
  std::vector<double> scores_;
  std::vector<int> labels_;
  std::vector<int> image_ids_;
  std::vector<std::size_t> positives_;
  std::vector<std::size_t> negatives_;
};

/// Heaviside step H(x) = [x >= 0], or the linear ramp of half-width delta.
class StepKind {
 public:
  enum class Type { kHeaviside, kPiecewise };

  static StepKind Heaviside() { return StepKind(Type::kHeaviside, 0.0); }
  /// Throws Error(kInvalidArgument) unless delta > 0.
  static StepKind Piecewise(double delta);

  Type type() const { return type_; }
  double delta() const { return delta_; }
  bool is_heaviside() const { return type_ == Type::kHeaviside; }

 private:
  StepKind(Type type, double delta) : type_(type), delta_(delta) {}
  Type type_;
  double delta_;
};

/// Primary terms L_ij for every (positive i, negative j) pair, stored as one
/// dense row per positive.
struct PrimaryTermRows {
  std::vector<std::size_t> positives;  // row -> sample index
  std::vector<std::size_t> negatives;  // column -> sample index
  std::vector<double> terms;           // row-major, positives x negatives
  std::vector<double> denominators;    // 1 + sum_{k != i} step(x_ik)
  std::vector<double> precisions;      // 1 - sum_j L_ij

  std::size_t num_rows() const { return positives.size(); }
  std::size_t num_cols() const { return negatives.size(); }
  std::span<double> row(std::size_t r) {
    return {terms.data() + r * num_cols(), num_cols()};
  }
  std::span<const double> row(std::size_t r) const {
    return {terms.data() + r * num_cols(), num_cols()};
  }
  double RowSum(std::size_t r) const;
  /// (1/|P|) * sum of all terms.
  double MeanRowSum() const;
};

double Step(double x, StepKind kind);

/// x_ij = -(s_i - s_j).
inline double PairwiseDifference(std::span<const double> scores, std::size_t i,
                                 std::size_t j) {
  return scores[j] - scores[i];
}

/// L_ij = step(x_ij) / (1 + sum_{k valid, k != i} step(x_ik)). The same step
/// kind is used in numerator and denominator.
PrimaryTermRows PrimaryTerms(const RankingBatch& batch, StepKind kind);

/// Rescales rows so that precision is non-decreasing over positives sorted by
/// ascending score; ties among positives are visited in index order.
void InterpolateRows(PrimaryTermRows& rows, const RankingBatch& batch);

/// Mean over positives of sum_j L_ij, optionally after interpolation.
double ApLoss(const RankingBatch& batch, StepKind kind, bool interpolated);

/// Average precision from an explicit descending sort of the valid samples.
/// Equal scores are ordered by ascending sample index.
double ExactApOracle(const RankingBatch& batch);

/// AUC activation L'_ij = step(x_ij) / |N|.
PrimaryTermRows AucPrimaryTerms(const RankingBatch& batch, StepKind kind);

/// Antiderivative of the piecewise step with half-width delta.
double QIntegral(double x, double delta);

/// Throws Error(kEmptyPositives) when the batch has no positive sample.
void RequirePositives(const RankingBatch& batch);

}  // namespace aploss

#endif  // APLOSS_RANKING_HPP_
