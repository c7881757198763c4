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

#ifndef APLOSS_DATASET_HPP_
#define APLOSS_DATASET_HPP_

#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "aploss/models.hpp"

namespace aploss {

/// Labelled feature rows with an image-of-origin tag per row.
struct Dataset {
  FeatureSet features;
  std::vector<int> labels;
  std::vector<int> image_ids;

  std::size_t size() const { return labels.size(); }
  Eigen::Index dim() const { return features.cols(); }

  /// Throws Error(kInvalidArgument) on inconsistent sizes or bad labels.
  void Validate() const;
  /// Distinct image ids in ascending order.
  std::vector<int> Images() const;
  Dataset Subset(std::span<const std::size_t> rows) const;
  RankingBatch Batch(const Eigen::VectorXd& scores) const;
};

/// CSV layout: header `image_id,label,f_1,...,f_D`, then one row per sample.
/// Reals are written with 17 significant digits so a read-back is exact.
void WriteDatasetCsv(const Dataset& data, std::ostream& out);
/// Throws Error(kIo) on malformed input.
Dataset ReadDatasetCsv(std::istream& in);

}  // namespace aploss

#endif  // APLOSS_DATASET_HPP_
