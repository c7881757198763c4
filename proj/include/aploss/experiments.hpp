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

#ifndef APLOSS_EXPERIMENTS_HPP_
#define APLOSS_EXPERIMENTS_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "aploss/trainer.hpp"

namespace aploss {

/// Flat `key = value` settings. Later assignments override earlier ones, so
/// loading a file and then applying flags gives flags precedence. Every
/// typed read is recorded with its effective value; the record is the config
/// echo that reproduces a run.
class Settings {
 public:
  void Set(const std::string& key, const std::string& value);
  /// Lines of `key = value`; blank lines and lines starting with '#' are
  /// skipped. Throws Error(kBadFlags) on a malformed line or kIo if the file
  /// cannot be read.
  void LoadFile(const std::filesystem::path& path);
  void LoadText(std::string_view text);

  bool Has(const std::string& key) const { return values_.count(key) != 0; }
  std::string GetString(const std::string& key, const std::string& fallback);
  double GetDouble(const std::string& key, double fallback);
  long GetInt(const std::string& key, long fallback);
  std::uint64_t GetSeed(const std::string& key, std::uint64_t fallback);
  /// Accepts on/off, true/false, 1/0.
  bool GetBool(const std::string& key, bool fallback);

  const std::map<std::string, std::string>& echo() const { return echo_; }
  std::vector<std::string> UnusedKeys() const;

  /// Echo rendered as a settings file.
  std::string EchoText() const;

 private:
  void Record(const std::string& key, const std::string& value);

  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> echo_;
};

/// Reads every TrainConfig field, using `defaults` for absent keys.
TrainConfig ReadTrainConfig(Settings& settings, const TrainConfig& defaults);

struct Assertion {
  std::string name;
  std::string checks;  // the claim under test, in words
  bool passed = false;
  std::string detail;
};

struct ExperimentReport {
  std::string name;
  std::map<std::string, std::string> config;
  std::vector<StepRecord> history;
  std::map<std::string, std::vector<StepRecord>> extra_histories;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  std::vector<Assertion> assertions;
  std::vector<std::string> unused_keys;
  double seconds = 0.0;

  bool passed() const;
  nlohmann::ordered_json ToJson() const;
};

/// Subcommand names in the order they are listed by --help.
const std::vector<std::string>& ExperimentNames();

/// Runs one experiment. `out_dir` is only used by gen-data, which writes the
/// dataset file itself. Throws Error(kBadFlags) for an unknown name.
ExperimentReport RunExperiment(std::string_view name, Settings& settings,
                               const std::filesystem::path& out_dir);

/// `step,loss_value,exact_ap,interp_ap,grad_norm`, reals with 17 significant
/// digits.
std::string HistoryCsv(const std::vector<StepRecord>& history);

/// Writes summary.json, history.csv, config.txt and one
/// history_<name>.csv per extra history into `out_dir`.
void WriteReport(const ExperimentReport& report,
                 const std::filesystem::path& out_dir);

/// Full command line handling. Returns 0 when every assertion passed, 1 on a
/// failed assertion, 2 on bad flags and 3 on any other error.
int RunCommandLine(const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err);

}  // namespace aploss

#endif  // APLOSS_EXPERIMENTS_HPP_
