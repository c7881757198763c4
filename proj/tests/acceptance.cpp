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

// Acceptance suite. One line per criterion; exit status 0 only if all pass.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "oracles.hpp"

#include "aploss/apgrad.hpp"
#include "aploss/baselines.hpp"
#include "aploss/error.hpp"
#include "aploss/experiments.hpp"
#include "aploss/models.hpp"
#include "aploss/synth.hpp"
#include "aploss/trainer.hpp"

namespace {

using namespace aploss;
namespace fs = std::filesystem;

struct Outcome {
  bool passed = false;
  std::string detail;
};

Outcome OracleEquivalence() {
  std::mt19937_64 rng(1001);
  const int batches = 500;
  double worst = 0.0;
  for (int t = 0; t < batches; ++t) {
    const auto raw = testing::RandomTieFreeBatch(rng, 20, 20, 3);
    const RankingBatch b(raw.scores, raw.labels);
    const double loss = ApLoss(b, StepKind::Heaviside(), false);
    worst = std::max(worst, std::abs(loss - (1.0 - ExactApOracle(b))));
    worst = std::max(worst, std::abs(loss - (1.0 - testing::RankFormAp(raw))));
  }
  return {worst <= 1e-12,
          fmt::format("{} batches, max |ap_loss - (1 - AP)| = {:.3g} "
                      "(tol 1e-12)",
                      batches, worst)};
}

Outcome GradientInvariants() {
  std::mt19937_64 rng(1002);
  const int batches = 500;
  double worst_sum = 0.0;
  long sign_violations = 0, ignored_nonzero = 0, composition_mismatch = 0;
  for (int t = 0; t < batches; ++t) {
    const auto raw = testing::RandomTieFreeBatch(rng, 20, 20, 3);
    const RankingBatch b(raw.scores, raw.labels);
    for (StepKind kind : {StepKind::Heaviside(), StepKind::Piecewise(1.0)}) {
      for (bool interp : {false, true}) {
        const MinibatchGradient mb = ApGradMinibatch(b, kind, interp);
        worst_sum = std::max(worst_sum, std::abs(mb.gradient.Sum()));
        for (std::size_t i = 0; i < b.size(); ++i) {
          const double g = mb.gradient.g[i];
          if (raw.labels[i] == 1 && g > 0.0) ++sign_violations;
          if (raw.labels[i] == 0 && g < 0.0) ++sign_violations;
          if (raw.labels[i] == -1 && g != 0.0) ++ignored_nonzero;
        }
        if (!interp) {
          const GradientVector composed =
              ScoreGradients(PrimaryTerms(b, kind), b, true);
          if (composed.g != mb.gradient.g) ++composition_mismatch;
        }
      }
    }
  }
  const bool ok = worst_sum <= 1e-12 && sign_violations == 0 &&
                  ignored_nonzero == 0 && composition_mismatch == 0;
  return {ok, fmt::format("{} batches x 4 modes, max |sum g| = {:.3g}, sign "
                          "violations {}, nonzero ignored {}, composition "
                          "mismatches {}",
                          batches, worst_sum, sign_violations, ignored_nonzero,
                          composition_mismatch)};
}

Outcome Interpolation() {
  const RankingBatch dip({10, 9, 8, 7, 6}, {0, 1, 1, 0, 1});
  const double interp = ApLoss(dip, StepKind::Heaviside(), true);
  const double plain = ApLoss(dip, StepKind::Heaviside(), false);
  const double mb = ApGradMinibatch(dip, StepKind::Heaviside(), true).loss;
  const bool values_ok = std::abs(interp - 16.0 / 45) <= 1e-12 &&
                         std::abs(plain - 37.0 / 90) <= 1e-12 &&
                         std::abs(mb - 16.0 / 45) <= 1e-12;

  std::mt19937_64 rng(1003);
  const int batches = 500;
  long decreasing = 0;
  for (int t = 0; t < batches; ++t) {
    const auto raw = testing::RandomTieFreeBatch(rng, 20, 20, 3);
    const RankingBatch b(raw.scores, raw.labels);
    for (StepKind kind : {StepKind::Heaviside(), StepKind::Piecewise(1.0)}) {
      const MinibatchGradient r = ApGradMinibatch(b, kind, true);
      std::vector<std::pair<double, double>> seq;
      for (std::size_t k = 0; k < r.rows.num_rows(); ++k) {
        seq.emplace_back(raw.scores[r.rows.positives[k]], r.rows.precisions[k]);
      }
      std::sort(seq.begin(), seq.end());
      for (std::size_t k = 1; k < seq.size(); ++k) {
        if (seq[k].second < seq[k - 1].second - 1e-12) ++decreasing;
      }
    }
  }
  return {values_ok && decreasing == 0,
          fmt::format("dip: interpolated {:.17g} (16/45), plain {:.17g} "
                      "(37/90); {} batches with {} precision decreases",
                      interp, plain, batches, decreasing)};
}

Outcome Consistency() {
  std::mt19937_64 rng(1004);
  std::normal_distribution<double> normal(0.0, 3.0);
  std::uniform_real_distribution<double> uniform(-3.0, 3.0);
  const int trials = 2000;
  double softmax_dev = 0.0, hinge_dev = 0.0;
  for (int t = 0; t < trials; ++t) {
    const int k = 2 + static_cast<int>(rng() % 8);
    std::vector<double> x(k);
    for (double& v : x) v = normal(rng);
    const int y = static_cast<int>(rng() % k);
    const auto g = SoftmaxConsistencyGrad(x, y);
    const auto ce = testing::CrossEntropyGradient(x, y);
    for (int i = 0; i < k; ++i) {
      softmax_dev = std::max(softmax_dev, std::abs(g[i] - ce[i]));
    }
    const double h = uniform(rng);
    const int label = static_cast<int>(rng() % 2);
    const auto a = HingeConsistencyGrad(h, label);
    const auto b = testing::HingeSubgradient(h, label);
    hinge_dev = std::max({hinge_dev, std::abs(a[0] - b[0]),
                          std::abs(a[1] - b[1])});
  }
  return {softmax_dev <= 1e-12 && hinge_dev <= 1e-12,
          fmt::format("{} inputs, softmax vs cross-entropy {:.3g}, step vs "
                      "hinge {:.3g} (tol 1e-12)",
                      trials, softmax_dev, hinge_dev)};
}

Outcome SmoothApGradient() {
  std::mt19937_64 rng(1005);
  std::normal_distribution<double> normal;
  const int instances = 60;
  double worst_scores = 0.0, worst_theta = 0.0;
  for (int t = 0; t < instances; ++t) {
    const auto raw = testing::RandomTieFreeBatch(rng, 12, 12, 2);
    const RankingBatch b(raw.scores, raw.labels);
    SmoothApConfig cfg;
    cfg.log_space = t % 2 == 1;
    const auto r = SmoothApValueGrad(b, cfg);
    const auto fd = testing::FiniteDifferenceGradient(
        [&](const std::vector<double>& s) {
          return SmoothApValueGrad(b.WithScores(s), cfg).value;
        },
        raw.scores, 1e-5);
    worst_scores = std::max(worst_scores, testing::RelativeError(r.grad.g, fd));

    const Eigen::Index n = static_cast<Eigen::Index>(raw.labels.size());
    const Eigen::MatrixXd f = Eigen::MatrixXd::NullaryExpr(
        n, 4, [&](Eigen::Index, Eigen::Index) { return normal(rng); });
    const Eigen::VectorXd theta0 = Eigen::VectorXd::NullaryExpr(
        4, [&](Eigen::Index) { return normal(rng); });
    auto objective = [&](const std::vector<double>& theta) {
      const Eigen::VectorXd s =
          f * Eigen::Map<const Eigen::VectorXd>(theta.data(), 4);
      return SmoothApValueGrad(RankingBatch(ToStdVector(s), raw.labels), cfg);
    };
    const std::vector<double> th = ToStdVector(theta0);
    const auto at = objective(th);
    const ScorerModel model = LinearScorer{theta0};
    const std::vector<double> analytic =
        ToStdVector(ScoreBackward(model, f, at.grad.g));
    const auto fd_theta = testing::FiniteDifferenceGradient(
        [&](const std::vector<double>& p) { return objective(p).value; }, th,
        1e-5);
    worst_theta =
        std::max(worst_theta, testing::RelativeError(analytic, fd_theta));
  }
  return {worst_scores <= 1e-5 && worst_theta <= 1e-5,
          fmt::format("{} instances, max rel. error: scores {:.3g}, linear "
                      "weights {:.3g} (tol 1e-5)",
                      instances, worst_scores, worst_theta)};
}

Outcome FailedAssertions(const ExperimentReport& report) {
  std::string failed;
  for (const auto& a : report.assertions) {
    if (!a.passed) failed += " " + a.name + " (" + a.detail + ")";
  }
  return {report.passed(), failed};
}

Outcome Convergence() {
  Settings s;
  s.Set("seeds", "50");
  s.Set("steps", "100000");
  s.Set("dim", "5");
  s.Set("n_pos", "20");
  s.Set("n_neg", "20");
  s.Set("margin", "0.1");
  const ExperimentReport r = RunExperiment("convergence", s, ".");
  const int converged = r.summary["converged"].get<int>();
  const int stopped = r.summary["stopped_updating"].get<int>();
  const long worst = r.summary["max_converged_at_step"].get<long>();
  const bool ok = r.passed() && converged == 50 && stopped == 50 &&
                  worst <= 100000;
  return {ok, fmt::format("{}/50 converged, {}/50 stopped updating, slowest "
                          "at step {} (limit 100000){}",
                          converged, stopped, worst,
                          FailedAssertions(r).detail)};
}

Outcome Counterexample() {
  Settings s;
  s.Set("steps", "20000");
  const ExperimentReport r = RunExperiment("counterexample", s, ".");
  const double f = r.summary["smooth_final_objective"].get<double>();
  const double ap = r.summary["error_driven_final_exact_ap"].get<double>();
  const double d1 = r.summary["dF_dtheta1"].get<double>();
  const double d2 = r.summary["dF_dtheta2"].get<double>();
  // Independent finite differences of the closed form at (10, 5).
  const double h = 1e-3;
  const double e1 =
      (ThreeSampleObjective({10 + h, 5}) -
       ThreeSampleObjective({10 - h, 5})) /
      (2 * h);
  const double e2 =
      (ThreeSampleObjective({10, 5 + h}) -
       ThreeSampleObjective({10, 5 - h})) /
      (2 * h);
  const bool ok = r.passed() && std::abs(f - 1.0 / 6) <= 0.02 && ap == 1.0 &&
                  d1 < d2 && d2 < 0.0 && e1 < e2 && e2 < 0.0;
  return {ok, fmt::format("smooth F = {:.6f} (1/6 +- 0.02), error-driven AP = "
                          "{}, dF/dtheta1 = {:.3g} < dF/dtheta2 = {:.3g} < 0{}",
                          f, ap, d1, d2, FailedAssertions(r).detail)};
}

Outcome ScoreShift() {
  const ScoreShiftReport r = ScoreShiftExperiment(0);
  bool images_perfect = !r.per_image.image_aps.empty();
  std::string aps;
  for (double ap : r.per_image.image_aps) {
    images_perfect = images_perfect && ap == 1.0;
    aps += fmt::format("{}{:.3g}", aps.empty() ? "" : ", ", ap);
  }
  const bool ok = r.pooled.combined_ap == 1.0 &&
                  r.per_image.history.converged_at_step.has_value() &&
                  images_perfect && r.per_image.combined_ap < 1.0;
  return {ok, fmt::format("pooled combined AP {:.6g}; per-image converged {}, "
                          "image APs [{}], combined AP {:.6g}",
                          r.pooled.combined_ap,
                          r.per_image.history.converged_at_step.has_value(),
                          aps, r.per_image.combined_ap)};
}

Outcome Bound() {
  Settings s;
  s.Set("checkpoints", "100,1000,10000");
  s.Set("steps", "10000");
  const ExperimentReport r = RunExperiment("bound", s, ".");
  std::string detail;
  int checked = 0;
  bool all_hold = true;
  for (const char* label : {"separable", "inseparable"}) {
    const auto& j = r.summary[label];
    for (const auto& cp : j["checkpoints"]) {
      ++checked;
      const double avg = cp["average_ap_loss"].get<double>();
      const double bound = std::min(cp["recall_weighted"].get<double>(),
                                    cp["saturating"].get<double>());
      all_hold = all_hold && avg <= bound;
      detail += fmt::format(" {}@T={}: {:.3g}<={:.3g}", label,
                            cp["T"].get<long>(), avg, bound);
    }
  }
  const bool zero_slack =
      r.summary["separable"]["slack_z"].get<double>() == 0.0;
  return {r.passed() && all_hold && checked == 6 && zero_slack,
          fmt::format("{} checks, separable Z(u) = {};{}{}", checked,
                      r.summary["separable"]["slack_z"].get<double>(), detail,
                      FailedAssertions(r).detail)};
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome Determinism() {
  const fs::path root = fs::temp_directory_path() /
                        ("aploss_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  struct Case {
    std::string name;
    std::vector<std::pair<std::string, std::string>> settings;
  };
  const std::vector<Case> cases = {
      {"convergence", {{"seeds", "5"}, {"seed", "3"}}},
      {"counterexample", {{"steps", "2000"}}},
      {"bound", {{"steps", "1000"}, {"checkpoints", "10,100,1000"}}},
      {"consistency", {{"trials", "200"}}},
      {"scoreshift", {{"seed", "2"}}},
      {"losscmp", {{"steps", "200"}, {"seed", "5"}}},
      {"curves", {{"steps", "300"}, {"loss_kind", "smooth-ap"}}},
      {"curves",
       {{"steps", "300"}, {"batching", "per_image"}, {"delta", "0.3"}}},
  };
  int identical = 0;
  std::string mismatched;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const fs::path first = root / fmt::format("{}_{}_a", c, cases[c].name);
    const fs::path second = root / fmt::format("{}_{}_b", c, cases[c].name);
    Settings s;
    for (const auto& [k, v] : cases[c].settings) s.Set(k, v);
    WriteReport(RunExperiment(cases[c].name, s, first), first);
    Settings again;
    again.LoadFile(first / "config.txt");
    WriteReport(RunExperiment(cases[c].name, again, second), second);
    bool same = Slurp(first / "history.csv") == Slurp(second / "history.csv") &&
                !Slurp(first / "history.csv").empty();
    for (const auto& entry : fs::directory_iterator(first)) {
      const std::string file = entry.path().filename().string();
      if (file.rfind("history_", 0) == 0) {
        same = same && Slurp(entry.path()) == Slurp(second / file);
      }
    }
    if (same) {
      ++identical;
    } else {
      mismatched += " " + cases[c].name;
    }
  }
  fs::remove_all(root);
  return {identical == static_cast<int>(cases.size()),
          fmt::format("{}/{} reruns from the echoed config gave identical "
                      "history bytes{}",
                      identical, cases.size(), mismatched)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"oracle equivalence", OracleEquivalence},
      {"gradient invariants", GradientInvariants},
      {"interpolation", Interpolation},
      {"consistency", Consistency},
      {"smooth-AP gradient", SmoothApGradient},
      {"convergence", Convergence},
      {"counterexample", Counterexample},
      {"score shift", ScoreShift},
      {"offline bound", Bound},
      {"determinism", Determinism},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - start)
                               .count();
    const bool in_time = seconds < 60.0;
    if (!o.passed || !in_time) ++failed;
    std::printf("%s %2zu %s [%.2fs]: %s\n",
                o.passed && in_time ? "PASS" : "FAIL", k + 1, criteria[k].name,
                seconds, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
