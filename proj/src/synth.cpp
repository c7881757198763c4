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

#include "aploss/synth.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "aploss/error.hpp"

namespace aploss {

SynthKind ParseSynthKind(std::string_view name) {
  if (name == "separable") return SynthKind::kSeparable;
  if (name == "inseparable") return SynthKind::kInseparable;
  if (name == "a2_counterexample") return SynthKind::kThreeSample;
  if (name == "multi_image") return SynthKind::kMultiImage;
  throw Error(ErrorCode::kInvalidSpec,
              "unknown synthetic kind '" + std::string(name) + "'");
}

std::string_view SynthKindName(SynthKind kind) {
  switch (kind) {
    case SynthKind::kSeparable: return "separable";
    case SynthKind::kInseparable: return "inseparable";
    case SynthKind::kThreeSample: return "a2_counterexample";
    case SynthKind::kMultiImage: return "multi_image";
  }
  return "unknown";
}

void SynthSpec::Validate() const {
  if (kind == SynthKind::kThreeSample) return;
  if (n_pos < 1 || n_neg < 1 || dim < 1 || n_images < 1) {
    throw Error(ErrorCode::kInvalidSpec,
                "n_pos, n_neg, dim and n_images must be >= 1");
  }
  if (!(margin >= 0.0) || !(noise >= 0.0)) {
    throw Error(ErrorCode::kInvalidSpec, "margin and noise must be >= 0");
  }
  if (kind == SynthKind::kMultiImage && (n_images < 2 || dim < 2)) {
    throw Error(ErrorCode::kInvalidSpec,
                "multi_image needs n_images >= 2 and dim >= 2");
  }
}

namespace {

Eigen::VectorXd UnitDirection(Eigen::Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(dim);
  do {
    for (Eigen::Index d = 0; d < dim; ++d) v(d) = normal(rng);
  } while (v.norm() < 1e-12);
  return v.normalized();
}

// Appends n_pos + n_neg rows for one image, separated along `direction`.
void AppendSeparableImage(const SynthSpec& spec,
                          const Eigen::VectorXd& direction,
                          int image_id, std::mt19937_64& rng,
                          std::vector<Eigen::VectorXd>& rows, Dataset& data) {
  std::normal_distribution<double> normal;
  const Eigen::Index dim = direction.size();
  for (int s = 0; s < spec.n_pos + spec.n_neg; ++s) {
    const bool positive = s < spec.n_pos;
    Eigen::VectorXd f(dim);
    for (Eigen::Index d = 0; d < dim; ++d) f(d) = normal(rng);
    const double projection = f.dot(direction);
    const double pushed = spec.margin / 2.0 + std::abs(projection);
    f += ((positive ? pushed : -pushed) - projection) * direction;
    rows.push_back(std::move(f));
    data.labels.push_back(positive ? kPositiveLabel : kNegativeLabel);
    data.image_ids.push_back(image_id);
  }
}

FeatureSet Stack(const std::vector<Eigen::VectorXd>& rows, Eigen::Index dim) {
  FeatureSet features(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    features.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
  }
  return features;
}

}  // namespace

double MinimumPairMargin(const Dataset& data, const Eigen::VectorXd& theta) {
  const Eigen::VectorXd scores = data.features * theta;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.labels[i] != kPositiveLabel) continue;
    for (std::size_t j = 0; j < data.size(); ++j) {
      if (data.labels[j] != kNegativeLabel ||
          data.image_ids[j] != data.image_ids[i]) {
        continue;
      }
      best = std::min(best, scores(static_cast<Eigen::Index>(i)) -
                                scores(static_cast<Eigen::Index>(j)));
    }
  }
  return best;
}

bool SatisfiesSeparability(const Dataset& data,
                           const SeparabilityCertificate& certificate) {
  return certificate.epsilon > 0.0 &&
         MinimumPairMargin(data, certificate.theta) >= certificate.epsilon;
}

SynthData Generate(const SynthSpec& spec) {
  spec.Validate();
  SynthData out;
  std::mt19937_64 rng(spec.seed);

  switch (spec.kind) {
    case SynthKind::kThreeSample: {
      out.data.features.resize(3, 2);
      out.data.features << 0.0, 0.0, 1.0, 0.0, -3.0, 1.0;
      out.data.labels = {kNegativeLabel, kPositiveLabel, kPositiveLabel};
      out.data.image_ids = {0, 0, 0};
      // Separable whenever 0 < theta1 < theta2 / 3.
      Eigen::VectorXd theta(2);
      theta << 1.0, 4.0;
      out.certificate = SeparabilityCertificate{theta, 1.0};
      out.reference_direction = theta;
      break;
    }
    case SynthKind::kSeparable:
    case SynthKind::kInseparable: {
      const Eigen::VectorXd direction = UnitDirection(spec.dim, rng);
      std::vector<Eigen::VectorXd> rows;
      for (int image = 0; image < spec.n_images; ++image) {
        AppendSeparableImage(spec, direction, image, rng, rows, out.data);
      }
      out.reference_direction = direction;
      if (spec.kind == SynthKind::kInseparable) {
        std::normal_distribution<double> normal;
        for (auto& f : rows) {
          for (Eigen::Index d = 0; d < f.size(); ++d) {
            f(d) += spec.noise * normal(rng);
          }
        }
        // Row 0 is the first positive; its negative twin goes in front.
        rows.insert(rows.begin(), rows.front());
        out.data.labels.insert(out.data.labels.begin(), kNegativeLabel);
        out.data.image_ids.insert(out.data.image_ids.begin(),
                                  out.data.image_ids.front());
      }
      out.data.features = Stack(rows, spec.dim);
      if (spec.kind == SynthKind::kSeparable) {
        out.certificate = SeparabilityCertificate{
            direction, MinimumPairMargin(out.data, direction)};
      }
      break;
    }
    case SynthKind::kMultiImage: {
      const Eigen::Index content_dim = spec.dim - 1;
      const Eigen::VectorXd content = UnitDirection(content_dim, rng);
      std::vector<Eigen::VectorXd> rows;
      SynthSpec content_spec = spec;
      content_spec.dim = static_cast<int>(content_dim);
      for (int image = 0; image < spec.n_images; ++image) {
        const std::size_t first = rows.size();
        AppendSeparableImage(content_spec, content, image, rng, rows, out.data);
        const double offset =
            static_cast<double>(spec.n_images - 1 - 2 * image) /
            static_cast<double>(spec.n_images - 1);
        for (std::size_t r = first; r < rows.size(); ++r) {
          Eigen::VectorXd f(spec.dim);
          f << rows[r], offset;
          rows[r] = std::move(f);
        }
      }
      out.data.features = Stack(rows, spec.dim);
      Eigen::VectorXd theta = Eigen::VectorXd::Zero(spec.dim);
      theta.head(content_dim) = content;
      out.reference_direction = theta;
      out.offset_column = spec.dim - 1;
      // Pooled certificate: every positive of every image above every
      // negative of every image.
      Dataset pooled = out.data;
      std::fill(pooled.image_ids.begin(), pooled.image_ids.end(), 0);
      out.certificate =
          SeparabilityCertificate{theta, MinimumPairMargin(pooled, theta)};
      break;
    }
  }
  out.data.Validate();
  return out;
}

}  // namespace aploss
