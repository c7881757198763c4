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

#include "aploss/models.hpp"

#include <random>
#include <string>

#include "aploss/error.hpp"

namespace aploss {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void CheckWidth(const ScorerModel& model, const FeatureSet& features) {
  if (features.cols() != InputDim(model)) {
    throw Error(ErrorCode::kDimensionMismatch,
                "feature width " + std::to_string(features.cols()) +
                    " does not match model input " +
                    std::to_string(InputDim(model)));
  }
}

}  // namespace

MlpScorer MlpScorer::Random(Eigen::Index input_dim, Eigen::Index hidden_units,
                            std::uint64_t seed) {
  if (input_dim < 1 || hidden_units < 1) {
    throw Error(ErrorCode::kInvalidArgument, "MLP needs D >= 1 and H >= 1");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-0.5, 0.5);
  auto draw = [&] { return uniform(rng); };
  MlpScorer mlp;
  mlp.hidden_weights = Eigen::MatrixXd::NullaryExpr(input_dim, hidden_units,
                                                    draw);
  mlp.hidden_bias = Eigen::VectorXd::NullaryExpr(hidden_units, draw);
  mlp.output_weights = Eigen::VectorXd::NullaryExpr(hidden_units, draw);
  mlp.output_bias = draw();
  return mlp;
}

Eigen::Index InputDim(const ScorerModel& model) {
  return std::visit(
      Overloaded{[](const LinearScorer& m) { return m.theta.size(); },
                 [](const MlpScorer& m) { return m.hidden_weights.rows(); }},
      model);
}

Eigen::VectorXd Parameters(const ScorerModel& model) {
  return std::visit(
      Overloaded{
          [](const LinearScorer& m) -> Eigen::VectorXd { return m.theta; },
          [](const MlpScorer& m) -> Eigen::VectorXd {
            const Eigen::Index w1 = m.hidden_weights.size();
            const Eigen::Index h = m.hidden_bias.size();
            Eigen::VectorXd p(w1 + 2 * h + 1);
            p.head(w1) = m.hidden_weights.reshaped();
            p.segment(w1, h) = m.hidden_bias;
            p.segment(w1 + h, h) = m.output_weights;
            p(w1 + 2 * h) = m.output_bias;
            return p;
          }},
      model);
}

ScorerModel WithParameters(const ScorerModel& model,
                           const Eigen::VectorXd& params) {
  return std::visit(
      Overloaded{
          [&](const LinearScorer& m) -> ScorerModel {
            if (params.size() != m.theta.size()) {
              throw Error(ErrorCode::kDimensionMismatch,
                          "linear parameter count mismatch");
            }
            return LinearScorer{params};
          },
          [&](const MlpScorer& m) -> ScorerModel {
            const Eigen::Index d = m.hidden_weights.rows();
            const Eigen::Index h = m.hidden_weights.cols();
            if (params.size() != d * h + 2 * h + 1) {
              throw Error(ErrorCode::kDimensionMismatch,
                          "MLP parameter count mismatch");
            }
            MlpScorer out;
            out.hidden_weights = params.head(d * h).reshaped(d, h);
            out.hidden_bias = params.segment(d * h, h);
            out.output_weights = params.segment(d * h + h, h);
            out.output_bias = params(d * h + 2 * h);
            return out;
          }},
      model);
}

Eigen::VectorXd ScoreForward(const ScorerModel& model,
                             const FeatureSet& features) {
  CheckWidth(model, features);
  return std::visit(
      Overloaded{[&](const LinearScorer& m) -> Eigen::VectorXd {
                   return features * m.theta;
                 },
                 [&](const MlpScorer& m) -> Eigen::VectorXd {
                   const Eigen::MatrixXd hidden =
                       ((features * m.hidden_weights).rowwise() +
                        m.hidden_bias.transpose())
                           .array()
                           .tanh()
                           .matrix();
                   return (hidden * m.output_weights).array() + m.output_bias;
                 }},
      model);
}

Eigen::VectorXd ScoreBackward(const ScorerModel& model,
                              const FeatureSet& features,
                              std::span<const double> score_grad) {
  CheckWidth(model, features);
  if (static_cast<Eigen::Index>(score_grad.size()) != features.rows()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "score gradient length does not match feature rows");
  }
  const Eigen::Map<const Eigen::VectorXd> g(score_grad.data(),
                                            features.rows());
  return std::visit(
      Overloaded{
          [&](const LinearScorer&) -> Eigen::VectorXd {
            return features.transpose() * g;
          },
          [&](const MlpScorer& m) -> Eigen::VectorXd {
            const Eigen::MatrixXd hidden =
                ((features * m.hidden_weights).rowwise() +
                 m.hidden_bias.transpose())
                    .array()
                    .tanh()
                    .matrix();
            const Eigen::MatrixXd d_pre =
                ((g * m.output_weights.transpose()).array() *
                 (1.0 - hidden.array().square()))
                    .matrix();
            MlpScorer grad;
            grad.hidden_weights = features.transpose() * d_pre;
            grad.hidden_bias = d_pre.colwise().sum().transpose();
            grad.output_weights = hidden.transpose() * g;
            grad.output_bias = g.sum();
            return Parameters(grad);
          }},
      model);
}

LinearScorer PerceptronStep(const ScorerModel& model, const RankingBatch& batch,
                            const FeatureSet& features, StepKind kind) {
  const auto* linear = std::get_if<LinearScorer>(&model);
  if (linear == nullptr) {
    throw Error(ErrorCode::kNotLinear,
                "the perceptron update is defined for linear scorers only");
  }
  CheckWidth(model, features);
  if (static_cast<std::size_t>(features.rows()) != batch.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "feature rows do not match the batch");
  }
  const PrimaryTermRows rows = PrimaryTerms(batch, kind);
  LinearScorer next = *linear;
  for (std::size_t r = 0; r < rows.num_rows(); ++r) {
    const auto row = rows.row(r);
    const auto fi = features.row(static_cast<Eigen::Index>(rows.positives[r]));
    for (std::size_t c = 0; c < rows.num_cols(); ++c) {
      if (row[c] == 0.0) continue;
      const auto fj =
          features.row(static_cast<Eigen::Index>(rows.negatives[c]));
      next.theta += row[c] * (fi - fj).transpose();
    }
  }
  return next;
}

std::vector<double> ToStdVector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace aploss
