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

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"

#include "aploss/baselines.hpp"
#include "aploss/error.hpp"
#include "aploss/models.hpp"

namespace aploss {
namespace {

template <typename F>
ErrorCode CodeOf(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no aploss::Error thrown");
  return ErrorCode::kAssertionFailed;
}

Eigen::MatrixXd RandomMatrix(std::mt19937_64& rng, Eigen::Index rows,
                             Eigen::Index cols) {
  std::normal_distribution<double> normal;
  return Eigen::MatrixXd::NullaryExpr(
      rows, cols, [&](Eigen::Index, Eigen::Index) { return normal(rng); });
}

TEST_CASE("linear forward") {
  Eigen::MatrixXd f(1, 2);
  f << 3, 4;
  const ScorerModel m = LinearScorer{Eigen::Vector2d(1, 2)};
  CHECK(ScoreForward(m, f)(0) == 11.0);
  const ScorerModel zero = LinearScorer{Eigen::Vector2d::Zero()};
  CHECK(ScoreForward(zero, Eigen::MatrixXd::Random(5, 2)).isZero(0.0));
  CHECK(CodeOf([&] { ScoreForward(m, Eigen::MatrixXd::Zero(2, 3)); }) ==
        ErrorCode::kDimensionMismatch);
}

TEST_CASE("mlp with zero output weights is constant") {
  MlpScorer mlp = MlpScorer::Random(3, 4, 7);
  mlp.output_weights.setZero();
  mlp.output_bias = 0.25;
  std::mt19937_64 rng(1);
  const Eigen::VectorXd s = ScoreForward(mlp, RandomMatrix(rng, 6, 3));
  for (Eigen::Index i = 0; i < s.size(); ++i) CHECK(s(i) == 0.25);
}

TEST_CASE("mlp random init is seeded and bounded") {
  const MlpScorer a = MlpScorer::Random(3, 5, 9);
  const MlpScorer b = MlpScorer::Random(3, 5, 9);
  const MlpScorer c = MlpScorer::Random(3, 5, 10);
  CHECK(Parameters(a) == Parameters(b));
  CHECK(Parameters(a) != Parameters(c));
  CHECK(Parameters(a).cwiseAbs().maxCoeff() <= 0.5);
  CHECK(Parameters(a).size() == 3 * 5 + 5 + 5 + 1);
  CHECK(InputDim(a) == 3);
}

TEST_CASE("linear backward") {
  Eigen::MatrixXd f(2, 2);
  f << 1, 0, 0, 0;
  const ScorerModel m = LinearScorer{Eigen::Vector2d(0.3, -0.2)};
  std::vector<double> g = {-0.5, 0.5};
  const Eigen::VectorXd d = ScoreBackward(m, f, g);
  CHECK(d(0) == -0.5);
  CHECK(d(1) == 0.0);
  std::vector<double> zero = {0.0, 0.0};
  CHECK(ScoreBackward(m, f, zero).isZero(0.0));
  std::vector<double> short_g = {1.0};
  CHECK(CodeOf([&] { ScoreBackward(m, f, short_g); }) ==
        ErrorCode::kDimensionMismatch);
}

TEST_CASE("parameters round trip") {
  const ScorerModel mlp = MlpScorer::Random(2, 3, 4);
  Eigen::VectorXd p = Parameters(mlp);
  p.array() += 1.0;
  CHECK(Parameters(WithParameters(mlp, p)) == p);
  const ScorerModel lin = LinearScorer{Eigen::Vector3d(1, 2, 3)};
  CHECK(Parameters(lin) == Eigen::Vector3d(1, 2, 3));
  CHECK(CodeOf([&] { WithParameters(lin, Eigen::Vector2d(1, 2)); }) ==
        ErrorCode::kDimensionMismatch);
}

TEST_CASE("property: backward is linear in the score gradient") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> normal;
  for (int t = 0; t < 50; ++t) {
    const Eigen::MatrixXd f = RandomMatrix(rng, 7, 3);
    const ScorerModel model = t % 2 ? ScorerModel(MlpScorer::Random(3, 4, t))
                                    : ScorerModel(LinearScorer{
                                          RandomMatrix(rng, 3, 1).col(0)});
    std::vector<double> g1(7), g2(7), mix(7);
    const double a = normal(rng), b = normal(rng);
    for (int i = 0; i < 7; ++i) {
      g1[i] = normal(rng);
      g2[i] = normal(rng);
      mix[i] = a * g1[i] + b * g2[i];
    }
    const Eigen::VectorXd lhs = ScoreBackward(model, f, mix);
    const Eigen::VectorXd rhs =
        a * ScoreBackward(model, f, g1) + b * ScoreBackward(model, f, g2);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * (1 + rhs.norm()));
  }
}

TEST_CASE("property: mlp smooth-AP parameter gradient matches differences") {
  std::mt19937_64 rng(42);
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd f = RandomMatrix(rng, 10, 3);
    std::vector<int> labels(10);
    for (int i = 0; i < 10; ++i) labels[i] = i < 4 ? 1 : (i < 9 ? 0 : -1);
    const ScorerModel model = MlpScorer::Random(3, 6, 100 + t);
    auto objective = [&](const Eigen::VectorXd& p) {
      const ScorerModel m = WithParameters(model, p);
      const Eigen::VectorXd s = ScoreForward(m, f);
      return SmoothApValueGrad(RankingBatch(ToStdVector(s), labels),
                               SmoothApConfig{});
    };
    const Eigen::VectorXd p0 = Parameters(model);
    const auto r = objective(p0);
    const std::vector<double> analytic =
        ToStdVector(ScoreBackward(model, f, r.grad.g));
    const auto fd = testing::FiniteDifferenceGradient(
        [&](const std::vector<double>& p) {
          return objective(Eigen::Map<const Eigen::VectorXd>(
                               p.data(), static_cast<Eigen::Index>(p.size())))
              .value;
        },
        ToStdVector(p0), 1e-5);
    CHECK(testing::RelativeError(analytic, fd) <= 1e-4);
  }
}

TEST_CASE("perceptron step") {
  Eigen::MatrixXd f(2, 2);
  f << 1, 0, 0, 0;
  const RankingBatch b0({0.0, 0.0}, {1, 0});
  const LinearScorer s1 = PerceptronStep(
      LinearScorer{Eigen::Vector2d::Zero()}, b0, f, StepKind::Heaviside());
  CHECK(s1.theta == Eigen::Vector2d(0.5, 0.0));
  const Eigen::VectorXd scores = f * s1.theta;
  const RankingBatch b1(ToStdVector(scores), {1, 0});
  const LinearScorer s2 = PerceptronStep(s1, b1, f, StepKind::Heaviside());
  CHECK(s2.theta == s1.theta);

  CHECK(CodeOf([&] {
          PerceptronStep(MlpScorer::Random(2, 2, 0), b0, f,
                         StepKind::Heaviside());
        }) == ErrorCode::kNotLinear);
}

TEST_CASE("property: perceptron step is the unnormalized backward step") {
  std::mt19937_64 rng(43);
  for (int t = 0; t < 100; ++t) {
    const auto raw = testing::RandomTieFreeBatch(rng, 8, 8, 2);
    const Eigen::Index n = static_cast<Eigen::Index>(raw.labels.size());
    const Eigen::MatrixXd f = RandomMatrix(rng, n, 4);
    const LinearScorer model{RandomMatrix(rng, 4, 1).col(0)};
    const Eigen::VectorXd s = f * model.theta;
    const RankingBatch b(ToStdVector(s), raw.labels);
    const LinearScorer next =
        PerceptronStep(model, b, f, StepKind::Heaviside());
    const auto g =
        ScoreGradients(PrimaryTerms(b, StepKind::Heaviside()), b, false);
    const Eigen::VectorXd want = model.theta - ScoreBackward(model, f, g.g);
    CHECK((next.theta - want).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

}  // namespace
}  // namespace aploss
