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

#include "aploss/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include <fmt/core.h>

#include "aploss/error.hpp"
#include "aploss/synth.hpp"

namespace aploss {

bool ExperimentReport::passed() const {
  return std::all_of(assertions.begin(), assertions.end(),
                     [](const Assertion& a) { return a.passed; });
}

nlohmann::ordered_json ExperimentReport::ToJson() const {
  nlohmann::ordered_json j;
  j["experiment"] = name;
  j["config"] = config;
  j["summary"] = summary;
  auto& list = j["assertions"] = nlohmann::ordered_json::array();
  for (const auto& a : assertions) {
    list.push_back({{"name", a.name},
                    {"checks", a.checks},
                    {"passed", a.passed},
                    {"detail", a.detail}});
  }
  j["passed"] = passed();
  j["unused_keys"] = unused_keys;
  j["history_rows"] = history.size();
  j["wall_clock_seconds"] = seconds;
  return j;
}

std::string HistoryCsv(const std::vector<StepRecord>& history) {
  std::string csv = "step,loss_value,exact_ap,interp_ap,grad_norm\n";
  for (const auto& r : history) {
    csv += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.step,
                       r.loss_value, r.exact_ap, r.interp_ap, r.grad_norm);
  }
  return csv;
}

void WriteReport(const ExperimentReport& report,
                 const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto write = [&](const std::string& file, const std::string& text) {
    std::ofstream out(out_dir / file, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + file);
    out << text;
  };
  write("summary.json", report.ToJson().dump(2) + "\n");
  write("history.csv", HistoryCsv(report.history));
  std::string config_text;
  for (const auto& [key, value] : report.config) {
    config_text += key + " = " + value + "\n";
  }
  write("config.txt", config_text);
  for (const auto& [name, rows] : report.extra_histories) {
    write("history_" + name + ".csv", HistoryCsv(rows));
  }
}

namespace {

void Check(ExperimentReport& report, std::string name, std::string checks,
           bool passed, std::string detail) {
  report.assertions.push_back(
      {std::move(name), std::move(checks), passed, std::move(detail)});
}

std::string Num(double v) { return fmt::format("{:.6g}", v); }

SynthSpec ReadSynthSpec(Settings& s, const SynthSpec& defaults) {
  SynthSpec spec;
  try {
    spec.kind = ParseSynthKind(
        s.GetString("kind", std::string(SynthKindName(defaults.kind))));
  } catch (const Error& e) {
    throw Error(ErrorCode::kBadFlags, e.what());
  }
  spec.n_pos = static_cast<int>(s.GetInt("n_pos", defaults.n_pos));
  spec.n_neg = static_cast<int>(s.GetInt("n_neg", defaults.n_neg));
  spec.dim = static_cast<int>(s.GetInt("dim", defaults.dim));
  spec.margin = s.GetDouble("margin", defaults.margin);
  spec.noise = s.GetDouble("noise", defaults.noise);
  spec.n_images = static_cast<int>(s.GetInt("n_images", defaults.n_images));
  spec.seed = s.GetSeed("data_seed", defaults.seed);
  try {
    spec.Validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kBadFlags, e.what());
  }
  return spec;
}

// Dataset from `data` (a CSV path) when given, else from the synthetic spec.
Dataset LoadOrGenerate(Settings& s, const SynthSpec& defaults) {
  const std::string path = s.GetString("data", "");
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIo, "cannot read dataset " + path);
    return ReadDatasetCsv(in);
  }
  return Generate(ReadSynthSpec(s, defaults)).data;
}

int EpochsForSteps(long steps, const Dataset& data, int batch_size) {
  const long images = static_cast<long>(data.Images().size());
  const long per_epoch = (images + batch_size - 1) / batch_size;
  return static_cast<int>(
      std::max<long>(1, (steps + per_epoch - 1) / per_epoch));
}

void RunConvergence(Settings& s, ExperimentReport& report) {
  TrainConfig defaults;
  defaults.loss_kind = LossKind::kPerceptron;
  defaults.learning_rate = 1.0;
  defaults.momentum = 0.0;
  defaults.weight_decay = 0.0;
  defaults.step = StepKind::Type::kHeaviside;
  defaults.interpolated = false;
  const long seeds = s.GetInt("seeds", 50);
  const long max_steps = s.GetInt("steps", 100000);
  SynthSpec spec_defaults;
  spec_defaults.kind = SynthKind::kSeparable;
  SynthSpec spec = ReadSynthSpec(s, spec_defaults);
  TrainConfig config = ReadTrainConfig(s, defaults);
  if (seeds < 1 || max_steps < 1) {
    throw Error(ErrorCode::kBadFlags, "seeds and steps must be >= 1");
  }

  long converged = 0;
  long stopped = 0;
  long certified = 0;
  long worst_step = 0;
  auto& per_seed = report.summary["per_seed"] = nlohmann::ordered_json::array();
  for (long k = 0; k < seeds; ++k) {
    SynthSpec run_spec = spec;
    run_spec.seed = spec.seed + static_cast<std::uint64_t>(k);
    const SynthData synth = Generate(run_spec);
    if (synth.certificate &&
        SatisfiesSeparability(synth.data, *synth.certificate)) {
      ++certified;
    }
    TrainConfig run = config;
    run.seed = config.seed + static_cast<std::uint64_t>(k);
    run.epochs = EpochsForSteps(max_steps, synth.data, run.batch_size);
    TrainResult trained = Train(run, synth.data);
    const auto& h = trained.history;
    const bool ok = h.converged_at_step && *h.converged_at_step <= max_steps;
    bool quiet = false;
    if (ok) {
      ++converged;
      worst_step = std::max(worst_step, *h.converged_at_step);
      const auto& at =
          h.records[static_cast<std::size_t>(*h.converged_at_step)];
      quiet = at.exact_ap == 1.0 && at.grad_norm == 0.0;
      if (quiet) ++stopped;
    }
    per_seed.push_back({{"seed", run_spec.seed},
                        {"converged", ok},
                        {"converged_at_step",
                         ok ? nlohmann::ordered_json(*h.converged_at_step)
                            : nlohmann::ordered_json(nullptr)},
                        {"stopped_updating", quiet}});
    if (k == 0) report.history = h.records;
  }

  // The trainer's first update must coincide with the direct perceptron step
  // when momentum, weight decay and normalization are all off.
  bool identity = true;
  if (config.loss_kind == LossKind::kPerceptron && config.momentum == 0.0 &&
      config.weight_decay == 0.0 && config.learning_rate == 1.0) {
    const SynthData synth = Generate(spec);
    ScorerModel model = LinearScorer{Eigen::VectorXd::Zero(spec.dim)};
    TrainConfig one = config;
    one.epochs = 1;
    one.stop_when_converged = false;
    for (int t = 0; t < 5; ++t) {
      const RankingBatch batch =
          synth.data.Batch(ScoreForward(model, synth.data.features));
      const LinearScorer direct = PerceptronStep(
          model, batch, synth.data.features, StepKind::Heaviside());
      const TrainResult trained = Train(one, synth.data, model);
      const auto& via_trainer = std::get<LinearScorer>(trained.model).theta;
      identity = identity && (via_trainer - direct.theta).norm() <=
                                 1e-12 * (1.0 + direct.theta.norm());
      model = direct;
    }
    Check(report, "trainer_matches_perceptron_step",
          "unit-step, unnormalized training reproduces the linear perceptron "
          "update sequence",
          identity, "first 5 updates compared");
  }

  report.summary["seeds"] = seeds;
  report.summary["converged"] = converged;
  report.summary["stopped_updating"] = stopped;
  report.summary["certified_separable"] = certified;
  report.summary["max_converged_at_step"] = worst_step;
  Check(report, "all_seeds_separable",
        "generated data satisfies the separability certificate",
        certified == seeds, fmt::format("{}/{}", certified, seeds));
  Check(report, "all_seeds_converged",
        "error-driven updates on separable data with a linear model converge "
        "in finitely many steps",
        converged == seeds,
        fmt::format("{}/{} converged within {} steps (worst {})", converged,
                    seeds, max_steps, worst_step));
  Check(report, "updates_stop_at_convergence",
        "once every positive outranks every negative the update is zero",
        stopped == converged, fmt::format("{}/{}", stopped, converged));
}

double CentralDifference(const std::function<double(double)>& f, double x,
                         double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

void RunCounterexample(Settings& s, ExperimentReport& report) {
  const long steps = s.GetInt("steps", 20000);
  const double theta1 = s.GetDouble("init_theta1", 10.0);
  const double theta2 = s.GetDouble("init_theta2", 5.0);
  const double fd_step = s.GetDouble("fd_step", 1e-2);
  const double smooth_lr = s.GetDouble("smooth_learning_rate", 1.0);
  if (steps < 1) throw Error(ErrorCode::kBadFlags, "steps must be >= 1");

  TrainConfig defaults;
  defaults.loss_kind = LossKind::kApErrorDriven;
  defaults.learning_rate = 0.1;
  defaults.momentum = 0.0;
  defaults.weight_decay = 0.0;
  defaults.epochs = static_cast<int>(steps);
  TrainConfig error_driven = ReadTrainConfig(s, defaults);
  error_driven.epochs = static_cast<int>(steps);

  SynthSpec spec;
  spec.kind = SynthKind::kThreeSample;
  const SynthData synth = Generate(spec);
  Eigen::VectorXd init(2);
  init << theta1, theta2;

  // Plain gradient descent on the sigmoid-smoothed objective.
  TrainConfig smooth;
  smooth.loss_kind = LossKind::kSmoothAp;
  smooth.learning_rate = smooth_lr;
  smooth.momentum = 0.0;
  smooth.weight_decay = 0.0;
  smooth.epochs = static_cast<int>(steps);
  smooth.stop_when_converged = false;
  smooth.seed = error_driven.seed;
  const TrainResult gd = Train(smooth, synth.data, LinearScorer{init});
  const Eigen::VectorXd gd_theta = std::get<LinearScorer>(gd.model).theta;
  const double final_objective =
      ThreeSampleObjective({gd_theta(0), gd_theta(1)});
  const double trained_objective =
      SmoothApValueGrad(synth.data.Batch(synth.data.features * gd_theta),
                        SmoothApConfig{})
          .value;

  const TrainResult ed = Train(error_driven, synth.data, LinearScorer{init});
  const Eigen::VectorXd ed_theta = std::get<LinearScorer>(ed.model).theta;
  const double ed_ap =
      ExactApOracle(synth.data.Batch(synth.data.features * ed_theta));

  const double d1 = CentralDifference(
      [&](double t) { return ThreeSampleObjective({t, theta2}); }, theta1,
      fd_step);
  const double d2 = CentralDifference(
      [&](double t) { return ThreeSampleObjective({theta1, t}); }, theta2,
      fd_step);

  report.history = gd.history.records;
  report.extra_histories["error_driven"] = ed.history.records;
  report.summary["smooth_final_theta"] = {gd_theta(0), gd_theta(1)};
  report.summary["smooth_final_objective"] = final_objective;
  report.summary["error_driven_final_theta"] = {ed_theta(0), ed_theta(1)};
  report.summary["error_driven_final_exact_ap"] = ed_ap;
  report.summary["error_driven_converged_at_step"] =
      ed.history.converged_at_step
          ? nlohmann::ordered_json(*ed.history.converged_at_step)
          : nlohmann::ordered_json(nullptr);
  report.summary["dF_dtheta1"] = d1;
  report.summary["dF_dtheta2"] = d2;
  report.summary["smooth_objective_convention"] =
      "F (sigmoid-smoothed AP-loss), minimized directly";

  Check(report, "closed_form_matches_generic_smooth_ap",
        "the two-weight closed form equals the generic smoothed AP-loss",
        std::abs(final_objective - trained_objective) <= 1e-12,
        Num(std::abs(final_objective - trained_objective)));
  Check(report, "partial_derivative_order",
        "at the start point dF/dtheta1 < dF/dtheta2 < 0", d1 < d2 && d2 < 0.0,
        fmt::format("dF/dtheta1 = {:.6g}, dF/dtheta2 = {:.6g}", d1, d2));
  Check(report, "smooth_gd_stalls_at_one_sixth",
        "gradient descent on the smoothed loss approaches 1/6, not 0",
        std::abs(final_objective - 1.0 / 6.0) <= 0.02,
        fmt::format("F = {:.9g}", final_objective));
  Check(report, "smooth_gd_keeps_theta1_above_theta2",
        "descent keeps theta1 > theta2 > 0", gd_theta(0) > gd_theta(1) &&
                                                 gd_theta(1) > 0.0,
        fmt::format("theta = ({:.6g}, {:.6g})", gd_theta(0), gd_theta(1)));
  Check(report, "error_driven_reaches_perfect_ap",
        "the error-driven update ranks both positives above the negative",
        ed_ap == 1.0, fmt::format("exact AP = {:.9g}", ed_ap));
}

std::vector<long> ParseCheckpoints(const std::string& text, long max_steps) {
  std::vector<long> out;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    try {
      const long t = std::stol(item);
      if (t < 1) throw std::invalid_argument(item);
      if (t <= max_steps) out.push_back(t);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kBadFlags, "bad checkpoint '" + item + "'");
    }
  }
  if (out.empty()) out.push_back(max_steps);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void RunBound(Settings& s, ExperimentReport& report) {
  const long steps = s.GetInt("steps", 10000);
  const std::vector<long> checkpoints =
      ParseCheckpoints(s.GetString("checkpoints", "100,1000,10000"), steps);
  TrainConfig defaults;
  defaults.loss_kind = LossKind::kApMargin;
  defaults.momentum = 0.0;
  defaults.weight_decay = 0.0;
  TrainConfig config = ReadTrainConfig(s, defaults);
  SynthSpec spec_defaults;
  spec_defaults.n_pos = 10;
  spec_defaults.n_neg = 10;
  spec_defaults.dim = 5;
  spec_defaults.margin = 0.5;
  spec_defaults.noise = 0.3;
  spec_defaults.kind = SynthKind::kSeparable;
  SynthSpec spec = ReadSynthSpec(s, spec_defaults);

  auto run_instance = [&](SynthKind kind, const std::string& label) {
    SynthSpec instance = spec;
    instance.kind = kind;
    const SynthData synth = Generate(instance);
    Eigen::VectorXd u;
    if (synth.certificate) {
      // Scaled so every positive clears every negative by more than delta.
      u = synth.certificate->theta *
          (config.delta / synth.certificate->epsilon * (1.0 + 1e-9));
    } else {
      u = synth.reference_direction * (config.delta / instance.margin);
    }
    const OfflineBoundReport r =
        OfflineBoundExperiment(config, synth.data, u, checkpoints, false);
    auto& j = report.summary[label];
    j["operator_norm"] = r.operator_norm;
    j["step_size"] = r.step_size;
    j["slack_z"] = r.slack;
    j["init_distance_sq"] = r.init_distance_sq;
    auto& cps = j["checkpoints"] = nlohmann::ordered_json::array();
    for (const auto& cp : r.checkpoints) {
      cps.push_back({{"T", cp.steps},
                     {"average_ap_loss", cp.average_ap_loss},
                     {"recall_weighted", cp.recall_weighted},
                     {"saturating", cp.saturating},
                     {"bound", cp.bound()},
                     {"holds", cp.holds}});
      Check(report, fmt::format("{}_bound_T{}", label, cp.steps),
            "averaged AP-loss of the margin variant stays below the smaller "
            "of the two offline bounds",
            cp.holds,
            fmt::format("average {:.6g} <= bound {:.6g}", cp.average_ap_loss,
                        cp.bound()));
    }
    return r;
  };

  OfflineBoundReport separable =
      run_instance(SynthKind::kSeparable, "separable");
  OfflineBoundReport inseparable =
      run_instance(SynthKind::kInseparable, "inseparable");
  report.summary["step_size_rule"] = "delta / R^2";
  Check(report, "separable_reference_has_zero_slack",
        "a separator with margin delta has Z(u) = 0",
        separable.slack == 0.0, Num(separable.slack));
  Check(report, "inseparable_reference_has_positive_slack",
        "no separator exists, so Z(u) > 0", inseparable.slack > 0.0,
        Num(inseparable.slack));
  report.history = std::move(separable.history.records);
  report.extra_histories["inseparable"] =
      std::move(inseparable.history.records);
}

void RunConsistency(Settings& s, ExperimentReport& report) {
  const long trials = s.GetInt("trials", 1000);
  const std::uint64_t seed = s.GetSeed("seed", 0);
  const double delta = s.GetDouble("delta", 1.0);
  if (trials < 1) throw Error(ErrorCode::kBadFlags, "trials must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 3.0);
  std::uniform_real_distribution<double> uniform(-3.0, 3.0);

  double softmax_dev = 0.0;
  double hinge_dev = 0.0;
  for (long t = 0; t < trials; ++t) {
    const int k = 2 + static_cast<int>(rng() % 7);
    std::vector<double> logits(static_cast<std::size_t>(k));
    for (double& v : logits) v = normal(rng);
    const int label = static_cast<int>(rng() % static_cast<std::uint64_t>(k));
    // d/dx_i of logsumexp(x) - x_label.
    const double peak = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - peak);
    const double lse = peak + std::log(sum);
    const auto g = SoftmaxConsistencyGrad(logits, label);
    for (int i = 0; i < k; ++i) {
      const double ce = std::exp(logits[i] - lse) - (i == label ? 1.0 : 0.0);
      softmax_dev = std::max(softmax_dev, std::abs(g[i] - ce));
    }

    const double x = uniform(rng);
    const int y = static_cast<int>(rng() % 2);
    const auto h = HingeConsistencyGrad(x, y);
    const double margin = y == 1 ? x : -x;
    std::array<double, 2> sub = {0.0, 0.0};
    sub[y] = margin < 1.0 ? -1.0 : 0.0;
    hinge_dev = std::max({hinge_dev, std::abs(h[0] - sub[0]),
                          std::abs(h[1] - sub[1])});
  }

  // One positive (index 0) and two negatives; loop in the plane of the two
  // negative scores where the ramp is linear for every pair.
  const std::vector<double> center = {0.0, 0.0, 0.5};
  const double error_loop =
      LoopIntegral(ErrorDrivenField({1, 0, 0}, StepKind::Piecewise(delta)),
                   center, 1, 2, 0.4 * delta, 2000);
  const ScoreField smooth_field = [](std::span<const double> scores) {
    const RankingBatch b(std::vector<double>(scores.begin(), scores.end()),
                         {1, 0, 0});
    auto g = SmoothApValueGrad(b, SmoothApConfig{}).grad.g;
    for (double& v : g) v = -v;
    return g;
  };
  const double smooth_loop =
      LoopIntegral(smooth_field, center, 1, 2, 0.4 * delta, 2000);

  report.summary["trials"] = trials;
  report.summary["max_softmax_vs_cross_entropy"] = softmax_dev;
  report.summary["max_step_vs_hinge"] = hinge_dev;
  report.summary["error_driven_loop_integral"] = error_loop;
  report.summary["smooth_ap_loop_integral"] = smooth_loop;
  Check(report, "softmax_equals_cross_entropy_gradient",
        "error-driven update with softmax activation is the cross-entropy "
        "gradient",
        softmax_dev <= 1e-12, Num(softmax_dev));
  Check(report, "loss_augmented_step_equals_hinge_subgradient",
        "error-driven update with loss-augmented step activation is the hinge "
        "subgradient",
        hinge_dev <= 1e-12, Num(hinge_dev));
  Check(report, "error_driven_field_not_conservative",
        "the AP error-driven update field has non-zero circulation, so it is "
        "not the gradient of any loss",
        std::abs(error_loop) > 1e-3, Num(error_loop));
  Check(report, "smooth_ap_field_conservative",
        "a true gradient field has zero circulation (quadrature control)",
        std::abs(smooth_loop) < 1e-6, Num(smooth_loop));
}

void RunScoreShift(Settings& s, ExperimentReport& report) {
  const std::uint64_t seed = s.GetSeed("seed", 0);
  const ScoreShiftReport r = ScoreShiftExperiment(seed);
  const auto& cfg = r.config;
  report.summary["learning_rate"] = cfg.learning_rate;
  report.summary["initial_offset_weight"] = r.initial_offset_weight;
  auto describe = [](const ScoreShiftRun& run) {
    return nlohmann::ordered_json{
        {"combined_ap", run.combined_ap},
        {"image_aps", run.image_aps},
        {"converged_at_step",
         run.history.converged_at_step
             ? nlohmann::ordered_json(*run.history.converged_at_step)
             : nlohmann::ordered_json(nullptr)}};
  };
  report.summary["pooled"] = describe(r.pooled);
  report.summary["per_image"] = describe(r.per_image);
  const bool images_perfect =
      std::all_of(r.per_image.image_aps.begin(), r.per_image.image_aps.end(),
                  [](double ap) { return ap == 1.0; });
  Check(report, "pooled_reaches_perfect_combined_ap",
        "pooling the minibatch into one ranking removes the score shift",
        r.pooled.combined_ap == 1.0,
        fmt::format("combined AP = {:.9g}", r.pooled.combined_ap));
  Check(report, "per_image_converges",
        "per-image training reaches a perfect ranking inside every image",
        r.per_image.history.converged_at_step.has_value() && images_perfect,
        fmt::format("{} images", r.per_image.image_aps.size()));
  Check(report, "per_image_combined_ap_below_one",
        "perfect per-image rankings still leave a poor combined ranking",
        r.per_image.combined_ap < 1.0,
        fmt::format("combined AP = {:.9g}", r.per_image.combined_ap));
  report.history = r.pooled.history.records;
  report.extra_histories["per_image"] = r.per_image.history.records;
}

void RunLossCmp(Settings& s, ExperimentReport& report) {
  const long steps = s.GetInt("steps", 500);
  TrainConfig defaults;
  defaults.batch_size = 2;
  TrainConfig base = ReadTrainConfig(s, defaults);
  SynthSpec spec_defaults;
  spec_defaults.kind = SynthKind::kInseparable;
  spec_defaults.n_pos = 5;
  spec_defaults.n_neg = 40;
  spec_defaults.n_images = 4;
  spec_defaults.noise = 0.5;
  const Dataset data = LoadOrGenerate(s, spec_defaults);
  base.epochs = EpochsForSteps(steps, data, base.batch_size);
  base.stop_when_converged = false;

  const std::vector<LossKind> kinds = {
      LossKind::kApErrorDriven, LossKind::kAuc, LossKind::kSmoothAp,
      LossKind::kApMargin};
  auto& results = report.summary["losses"] = nlohmann::ordered_json::object();
  for (LossKind kind : kinds) {
    TrainConfig config = base;
    config.loss_kind = kind;
    const TrainResult trained = Train(config, data);
    const Metrics m = Evaluate(trained.model, data.features, data.labels);
    const std::string name(LossKindName(kind));
    results[name] = {{"exact_ap", m.exact_ap},
                     {"interp_ap", m.interp_ap},
                     {"auc", m.auc},
                     {"steps", trained.history.records.size()}};
    const bool sane = std::isfinite(m.exact_ap) && m.exact_ap >= 0.0 &&
                      m.exact_ap <= 1.0 && m.auc >= 0.0 && m.auc <= 1.0;
    Check(report, name + "_metrics_in_range",
          "training completes with metrics in [0, 1]", sane,
          fmt::format("AP {:.6g}, AUC {:.6g}", m.exact_ap, m.auc));
    if (kind == LossKind::kApErrorDriven) {
      report.history = trained.history.records;
    } else {
      report.extra_histories[name] = trained.history.records;
    }
  }
}

void RunCurves(Settings& s, ExperimentReport& report) {
  const long steps = s.GetInt("steps", 1000);
  TrainConfig defaults;
  defaults.batch_size = 2;
  TrainConfig config = ReadTrainConfig(s, defaults);
  SynthSpec spec_defaults;
  spec_defaults.kind = SynthKind::kInseparable;
  spec_defaults.n_pos = 5;
  spec_defaults.n_neg = 40;
  spec_defaults.n_images = 4;
  spec_defaults.noise = 0.5;
  const Dataset data = LoadOrGenerate(s, spec_defaults);
  config.epochs = EpochsForSteps(steps, data, config.batch_size);
  const TrainResult trained = Train(config, data);
  const auto& h = trained.history;
  const Metrics m = Evaluate(trained.model, data.features, data.labels);
  report.summary["final"] = {
      {"exact_ap", m.exact_ap}, {"interp_ap", m.interp_ap}, {"auc", m.auc}};
  report.summary["steps_run"] = h.records.size();
  report.summary["converged_at_step"] =
      h.converged_at_step ? nlohmann::ordered_json(*h.converged_at_step)
                          : nlohmann::ordered_json(nullptr);
  Check(report, "history_recorded", "training produced a finite curve",
        !h.records.empty() &&
            std::all_of(h.records.begin(), h.records.end(),
                        [](const StepRecord& r) {
                          return std::isfinite(r.loss_value);
                        }),
        fmt::format("{} rows", h.records.size()));
  report.history = h.records;
}

void RunGenData(Settings& s, ExperimentReport& report,
                const std::filesystem::path& out_dir) {
  SynthSpec spec_defaults;
  const SynthSpec spec = ReadSynthSpec(s, spec_defaults);
  const SynthData synth = Generate(spec);
  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir / "dataset.csv", std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write dataset.csv");
  WriteDatasetCsv(synth.data, out);
  report.summary["samples"] = synth.data.size();
  report.summary["dim"] = synth.data.dim();
  report.summary["file"] = "dataset.csv";
  if (synth.certificate) {
    report.summary["certificate"] = {
        {"theta", ToStdVector(synth.certificate->theta)},
        {"epsilon", synth.certificate->epsilon}};
    Check(report, "certificate_verified",
          "the returned separator satisfies the margin condition",
          SatisfiesSeparability(synth.data, *synth.certificate),
          fmt::format("epsilon = {:.6g}", synth.certificate->epsilon));
  }
}

}  // namespace

const std::vector<std::string>& ExperimentNames() {
  static const std::vector<std::string> names = {
      "convergence", "counterexample", "bound",  "consistency",
      "scoreshift",  "losscmp",        "curves", "gen-data"};
  return names;
}

ExperimentReport RunExperiment(std::string_view name, Settings& settings,
                               const std::filesystem::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.name = std::string(name);
  if (name == "convergence") {
    RunConvergence(settings, report);
  } else if (name == "counterexample") {
    RunCounterexample(settings, report);
  } else if (name == "bound") {
    RunBound(settings, report);
  } else if (name == "consistency") {
    RunConsistency(settings, report);
  } else if (name == "scoreshift") {
    RunScoreShift(settings, report);
  } else if (name == "losscmp") {
    RunLossCmp(settings, report);
  } else if (name == "curves") {
    RunCurves(settings, report);
  } else if (name == "gen-data") {
    RunGenData(settings, report, out_dir);
  } else {
    throw Error(ErrorCode::kBadFlags,
                "unknown experiment '" + std::string(name) + "'");
  }
  report.config = settings.echo();
  report.unused_keys = settings.UnusedKeys();
  report.seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return report;
}

}  // namespace aploss
