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

#include "aploss/dataset.hpp"

#include <algorithm>
#include <sstream>
#include <string>

#include <fmt/core.h>

#include "aploss/error.hpp"

namespace aploss {

void Dataset::Validate() const {
  if (static_cast<std::size_t>(features.rows()) != labels.size() ||
      image_ids.size() != labels.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "features, labels and image ids differ in length");
  }
  for (int label : labels) {
    if (label < kIgnoreLabel || label > kPositiveLabel) {
      throw Error(ErrorCode::kInvalidArgument,
                  "label " + std::to_string(label) + " not in {-1, 0, 1}");
    }
  }
  if (!features.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "non-finite feature value");
  }
}

std::vector<int> Dataset::Images() const {
  std::vector<int> ids = image_ids;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

Dataset Dataset::Subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  out.image_ids.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.features.row(static_cast<Eigen::Index>(r)) =
        features.row(static_cast<Eigen::Index>(rows[r]));
    out.labels.push_back(labels[rows[r]]);
    out.image_ids.push_back(image_ids[rows[r]]);
  }
  return out;
}

RankingBatch Dataset::Batch(const Eigen::VectorXd& scores) const {
  return RankingBatch(ToStdVector(scores), labels, image_ids);
}

void WriteDatasetCsv(const Dataset& data, std::ostream& out) {
  data.Validate();
  out << "image_id,label";
  for (Eigen::Index d = 0; d < data.dim(); ++d) out << ",f_" << (d + 1);
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.image_ids[i] << ',' << data.labels[i];
    for (Eigen::Index d = 0; d < data.dim(); ++d) {
      out << ',' << fmt::format("{:.17g}",
                                data.features(static_cast<Eigen::Index>(i), d));
    }
    out << '\n';
  }
}

namespace {

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream stream(line);
  std::string cell;
  while (std::getline(stream, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double ParseReal(const std::string& text, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::kIo, "line " + std::to_string(line_no) +
                                    ": cannot parse '" + text + "'");
  }
}

}  // namespace

Dataset ReadDatasetCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kIo, "empty dataset");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = SplitCsv(line);
  if (header.size() < 3 || header[0] != "image_id" || header[1] != "label") {
    throw Error(ErrorCode::kIo,
                "header must start with image_id,label and name features");
  }
  const std::size_t dim = header.size() - 2;
  std::vector<std::vector<double>> rows;
  Dataset data;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = SplitCsv(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::kIo, "line " + std::to_string(line_no) +
                                      ": expected " +
                                      std::to_string(header.size()) +
                                      " cells");
    }
    data.image_ids.push_back(static_cast<int>(ParseReal(cells[0], line_no)));
    data.labels.push_back(static_cast<int>(ParseReal(cells[1], line_no)));
    std::vector<double> row(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      row[d] = ParseReal(cells[d + 2], line_no);
    }
    rows.push_back(std::move(row));
  }
  data.features.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(dim));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t d = 0; d < dim; ++d) {
      data.features(static_cast<Eigen::Index>(r),
                    static_cast<Eigen::Index>(d)) = rows[r][d];
    }
  }
  try {
    data.Validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kIo, e.what());
  }
  return data;
}

}  // namespace aploss
