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

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <fmt/core.h>

#include "aploss/error.hpp"
#include "aploss/experiments.hpp"

namespace aploss {

namespace {

std::string Trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) {
    ++begin;
  }
  while (end > begin &&
         std::isspace(static_cast<unsigned char>(text[end - 1]))) {
    --end;
  }
  return std::string(text.substr(begin, end - begin));
}

[[noreturn]] void BadValue(const std::string& key, const std::string& value,
                           const char* expected) {
  throw Error(ErrorCode::kBadFlags, "'" + key + "' expects " + expected +
                                        ", got '" + value + "'");
}

}  // namespace

void Settings::Set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

void Settings::LoadText(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string trimmed = Trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kBadFlags, "config line " +
                                            std::to_string(line_no) +
                                            " is not 'key = value'");
    }
    const std::string key = Trim(std::string_view(trimmed).substr(0, eq));
    if (key.empty()) {
      throw Error(ErrorCode::kBadFlags,
                  "config line " + std::to_string(line_no) + " has no key");
    }
    Set(key, Trim(std::string_view(trimmed).substr(eq + 1)));
  }
}

void Settings::LoadFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  LoadText(buffer.str());
}

void Settings::Record(const std::string& key, const std::string& value) {
  echo_[key] = value;
}

std::string Settings::GetString(const std::string& key,
                                const std::string& fallback) {
  const auto it = values_.find(key);
  const std::string value = it == values_.end() ? fallback : it->second;
  Record(key, value);
  return value;
}

double Settings::GetDouble(const std::string& key, double fallback) {
  double value = fallback;
  if (const auto it = values_.find(key); it != values_.end()) {
    try {
      std::size_t used = 0;
      value = std::stod(it->second, &used);
      if (used != it->second.size()) BadValue(key, it->second, "a number");
    } catch (const std::logic_error&) {
      BadValue(key, it->second, "a number");
    }
  }
  Record(key, fmt::format("{}", value));
  return value;
}

long Settings::GetInt(const std::string& key, long fallback) {
  long value = fallback;
  if (const auto it = values_.find(key); it != values_.end()) {
    try {
      std::size_t used = 0;
      value = std::stol(it->second, &used);
      if (used != it->second.size()) BadValue(key, it->second, "an integer");
    } catch (const std::logic_error&) {
      BadValue(key, it->second, "an integer");
    }
  }
  Record(key, std::to_string(value));
  return value;
}

std::uint64_t Settings::GetSeed(const std::string& key,
                                std::uint64_t fallback) {
  std::uint64_t value = fallback;
  if (const auto it = values_.find(key); it != values_.end()) {
    try {
      std::size_t used = 0;
      if (!it->second.empty() && it->second.front() == '-') {
        BadValue(key, it->second, "a non-negative integer");
      }
      value = std::stoull(it->second, &used);
      if (used != it->second.size()) {
        BadValue(key, it->second, "a non-negative integer");
      }
    } catch (const std::logic_error&) {
      BadValue(key, it->second, "a non-negative integer");
    }
  }
  Record(key, std::to_string(value));
  return value;
}

bool Settings::GetBool(const std::string& key, bool fallback) {
  bool value = fallback;
  if (const auto it = values_.find(key); it != values_.end()) {
    const std::string& v = it->second;
    if (v == "on" || v == "true" || v == "1") {
      value = true;
    } else if (v == "off" || v == "false" || v == "0") {
      value = false;
    } else {
      BadValue(key, v, "on/off");
    }
  }
  Record(key, value ? "on" : "off");
  return value;
}

std::vector<std::string> Settings::UnusedKeys() const {
  std::vector<std::string> unused;
  for (const auto& [key, value] : values_) {
    if (echo_.count(key) == 0) unused.push_back(key);
  }
  return unused;
}

std::string Settings::EchoText() const {
  std::string text;
  for (const auto& [key, value] : echo_) text += key + " = " + value + "\n";
  return text;
}

TrainConfig ReadTrainConfig(Settings& settings, const TrainConfig& defaults) {
  TrainConfig c;
  try {
    c.loss_kind = ParseLossKind(settings.GetString(
        "loss_kind", std::string(LossKindName(defaults.loss_kind))));
    c.batching = ParseBatching(settings.GetString(
        "batching", std::string(BatchingName(defaults.batching))));
    c.model = ParseModelKind(settings.GetString(
        "model", std::string(ModelKindName(defaults.model))));
    c.step = ParseStepType(settings.GetString(
        "step", std::string(StepTypeName(defaults.step))));
  } catch (const Error& e) {
    throw Error(ErrorCode::kBadFlags, e.what());
  }
  c.learning_rate = settings.GetDouble("learning_rate", defaults.learning_rate);
  c.momentum = settings.GetDouble("momentum", defaults.momentum);
  c.weight_decay = settings.GetDouble("weight_decay", defaults.weight_decay);
  c.batch_size =
      static_cast<int>(settings.GetInt("batch_size", defaults.batch_size));
  c.epochs = static_cast<int>(settings.GetInt("epochs", defaults.epochs));
  c.delta = settings.GetDouble("delta", defaults.delta);
  c.interpolated = settings.GetBool("interpolated", defaults.interpolated);
  c.seed = settings.GetSeed("seed", defaults.seed);
  c.hidden_units =
      static_cast<int>(settings.GetInt("hidden_units", defaults.hidden_units));
  c.temperature = settings.GetDouble("temperature", defaults.temperature);
  c.epsilon = settings.GetDouble("epsilon", defaults.epsilon);
  c.log_space = settings.GetBool("log_space", defaults.log_space);
  c.stop_when_converged =
      settings.GetBool("stop_when_converged", defaults.stop_when_converged);
  try {
    c.Validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kBadFlags, e.what());
  }
  return c;
}

}  // namespace aploss
