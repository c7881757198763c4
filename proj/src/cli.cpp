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

#include <exception>
#include <optional>
#include <ostream>

#include "CLI11.hpp"

#include "aploss/error.hpp"
#include "aploss/experiments.hpp"

namespace aploss {

namespace {

struct Flags {
  std::string config;
  std::string out = "out";
  std::optional<std::string> seed, steps, seeds, delta, interpolated, loss,
      batching, data, kind;
  std::vector<std::string> overrides;
};

void AddFlags(CLI::App& cmd, Flags& f) {
  cmd.add_option("--config", f.config, "key = value settings file");
  cmd.add_option("--out", f.out, "output directory")->capture_default_str();
  cmd.add_option("--seed", f.seed, "random seed");
  cmd.add_option("--steps", f.steps, "step budget");
  cmd.add_option("--seeds", f.seeds, "number of seeds (convergence)");
  cmd.add_option("--delta", f.delta, "half-width of the piecewise step");
  cmd.add_option("--interpolated", f.interpolated, "on|off");
  cmd.add_option("--loss", f.loss,
                 "ap|ap-margin|auc|smooth-ap|perceptron");
  cmd.add_option("--batching", f.batching, "pooled|per-image");
  cmd.add_option("--data", f.data, "dataset CSV (curves, losscmp)");
  cmd.add_option("--kind", f.kind,
                 "separable|inseparable|a2_counterexample|multi_image");
  cmd.add_option("--set", f.overrides, "extra key=value setting (repeatable)");
}

void Apply(const Flags& f, Settings& s) {
  if (!f.config.empty()) s.LoadFile(f.config);
  for (const auto& kv : f.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(ErrorCode::kBadFlags, "--set expects key=value, got " + kv);
    }
    s.Set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  auto put = [&](const char* key, const std::optional<std::string>& v) {
    if (v) s.Set(key, *v);
  };
  put("seed", f.seed);
  put("steps", f.steps);
  put("seeds", f.seeds);
  put("delta", f.delta);
  put("interpolated", f.interpolated);
  put("loss_kind", f.loss);
  put("batching", f.batching);
  put("data", f.data);
  put("kind", f.kind);
}

}  // namespace

int RunCommandLine(const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err) {
  std::vector<std::string> argv = args;
  // `aploss run <experiment>` and `aploss <experiment>` are equivalent.
  if (argv.size() > 1 && argv[1] == "run") argv.erase(argv.begin() + 1);

  CLI::App app{"AP-loss experiment runner"};
  app.require_subcommand(1);
  Flags flags;
  for (const auto& name : ExperimentNames()) {
    AddFlags(*app.add_subcommand(name, "run the " + name + " experiment"),
             flags);
  }

  std::vector<const char*> raw;
  for (const auto& a : argv) raw.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(raw.size()), raw.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 2;
  }
  const std::string name = app.get_subcommands().front()->get_name();

  try {
    Settings settings;
    Apply(flags, settings);
    const ExperimentReport report = RunExperiment(name, settings, flags.out);
    WriteReport(report, flags.out);
    for (const auto& a : report.assertions) {
      (a.passed ? out : err) << (a.passed ? "PASS " : "FAIL ") << a.name
                             << ": " << a.detail << "\n";
    }
    for (const auto& key : report.unused_keys) {
      err << "warning: setting '" << key << "' was not used\n";
    }
    out << "wrote " << flags.out << "/summary.json\n";
    return report.passed() ? 0 : 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    if (e.code() == ErrorCode::kBadFlags) {
      err << app.help();
      return 2;
    }
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace aploss
