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

#ifndef APLOSS_SYNTH_HPP_
#define APLOSS_SYNTH_HPP_

#include <cstdint>
#include <optional>
#include <string_view>

#include "aploss/dataset.hpp"

namespace aploss {

enum class SynthKind { kSeparable, kInseparable, kThreeSample, kMultiImage };

SynthKind ParseSynthKind(std::string_view name);
std::string_view SynthKindName(SynthKind kind);

/// Counts are per image. The fixed three-sample kind ignores every field but
/// kind.
struct SynthSpec {
  SynthKind kind = SynthKind::kSeparable;
  int n_pos = 20;
  int n_neg = 20;
  int dim = 5;
  double margin = 0.1;
  double noise = 0.0;
  int n_images = 1;
  std::uint64_t seed = 0;

  /// Throws Error(kInvalidSpec).
  void Validate() const;
};

/// Witness that <f_i - f_j, theta> >= epsilon for every positive i and
/// negative j of the same image.
struct SeparabilityCertificate {
  Eigen::VectorXd theta;
  double epsilon = 0.0;
};

struct SynthData {
  Dataset data;
  std::optional<SeparabilityCertificate> certificate;
  /// Direction the data was built around; for the inseparable kind this is
  /// the separator of the data before the duplicated point was added.
  Eigen::VectorXd reference_direction;
  /// multi_image only: feature column holding the per-image constant offset.
  std::optional<Eigen::Index> offset_column;
};

/// Seeded generator. separable: features ~ N(0, I), then each projection on a
/// random unit direction is pushed to +-(margin/2 + |projection|).
/// inseparable: separable data plus optional Gaussian jitter (`noise`) and a
/// negative copy of the first positive placed at index 0, so that pair ties
/// under every linear scorer. a2_counterexample: (0,0) negative, (1,0) and
/// (-3,1) positive. multi_image: per-image separable content features plus a
/// last column holding a per-image constant offset in [-1, 1].
SynthData Generate(const SynthSpec& spec);

/// min over images and (positive, negative) pairs of <f_i - f_j, theta>;
/// +infinity when no pair exists.
double MinimumPairMargin(const Dataset& data, const Eigen::VectorXd& theta);

bool SatisfiesSeparability(const Dataset& data,
                           const SeparabilityCertificate& certificate);

}  // namespace aploss

#endif  // APLOSS_SYNTH_HPP_
