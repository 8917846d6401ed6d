// Copyright 2026 The mve Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mve/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace mve {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\"");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n\"");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_line(std::string_view line, char delimiter) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return cells;
}

std::optional<double> parse_number(std::string_view cell) {
  if (cell.empty()) {
    return std::nullopt;
  }
  if (cell.front() == '+') {
    cell.remove_prefix(1);
  }
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

std::vector<std::size_t> resolve(const ColumnSelector& selector,
                                 const std::vector<std::string>& header,
                                 const std::string& what) {
  std::vector<std::size_t> resolved;
  for (const auto& name : selector.names) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw std::runtime_error("load_csv: " + what + " column not found: " + name);
    }
    resolved.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  for (std::size_t index : selector.indices) {
    if (index >= header.size()) {
      throw std::runtime_error("load_csv: " + what + " column index out of range: " +
                               std::to_string(index));
    }
    resolved.push_back(index);
  }
  return resolved;
}

std::string format_double(double v) {
  char buffer[32];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v);
  return std::string(buffer, ptr);
}

}  // namespace

void Dataset::validate() const {
  if (features.rows() != labels.rows()) {
    throw std::invalid_argument("Dataset: feature and label row counts differ");
  }
  if (!features.allFinite() || !labels.allFinite()) {
    throw std::invalid_argument("Dataset: non-finite entries");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out{name, Matrix(indices.size(), features.cols()), Matrix(indices.size(), labels.cols()),
              feature_names, label_names};
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.features.row(i) = features.row(indices[i]);
    out.labels.row(i) = labels.row(indices[i]);
  }
  return out;
}

ColumnSelector ColumnSelector::parse(std::string_view list) {
  ColumnSelector selector;
  std::vector<std::string_view> parts = split_line(list, ',');
  bool all_numeric = !parts.empty();
  for (auto part : parts) {
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (part.empty() || ec != std::errc() || ptr != part.data() + part.size()) {
      all_numeric = false;
    }
  }
  for (auto part : parts) {
    if (part.empty()) {
      continue;
    }
    if (all_numeric) {
      std::size_t value = 0;
      std::from_chars(part.data(), part.data() + part.size(), value);
      selector.indices.push_back(value);
    } else {
      selector.names.emplace_back(part);
    }
  }
  return selector;
}

CsvLoad load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_csv: cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("load_csv: empty file " + path.string());
  }
  std::vector<std::string> header;
  for (auto cell : split_line(line, options.delimiter)) {
    header.emplace_back(cell);
  }
  if (options.labels.empty()) {
    throw std::runtime_error("load_csv: no label columns given");
  }
  const auto label_cols = resolve(options.labels, header, "label");
  const auto ignored_cols = resolve(options.ignored, header, "ignored");
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const bool is_label = std::find(label_cols.begin(), label_cols.end(), c) != label_cols.end();
    const bool is_ignored =
        std::find(ignored_cols.begin(), ignored_cols.end(), c) != ignored_cols.end();
    if (!is_label && !is_ignored) {
      feature_cols.push_back(c);
    }
  }

  std::vector<double> x_values;
  std::vector<double> y_values;
  std::size_t kept = 0;
  std::size_t dropped = 0;
  std::vector<double> row_x(feature_cols.size());
  std::vector<double> row_y(label_cols.size());
  while (std::getline(in, line)) {
    if (trim(line).empty()) {
      continue;
    }
    const auto cells = split_line(line, options.delimiter);
    bool ok = cells.size() == header.size();
    for (std::size_t j = 0; ok && j < feature_cols.size(); ++j) {
      const auto v = parse_number(cells[feature_cols[j]]);
      ok = v.has_value();
      row_x[j] = v.value_or(0.0);
    }
    for (std::size_t j = 0; ok && j < label_cols.size(); ++j) {
      const auto v = parse_number(cells[label_cols[j]]);
      ok = v.has_value();
      row_y[j] = v.value_or(0.0);
    }
    if (!ok) {
      ++dropped;
      continue;
    }
    x_values.insert(x_values.end(), row_x.begin(), row_x.end());
    y_values.insert(y_values.end(), row_y.begin(), row_y.end());
    ++kept;
  }
  if (kept == 0) {
    throw std::runtime_error("load_csv: no usable rows in " + path.string());
  }
  if (dropped > 0) {
    std::clog << "warning: " << path.string() << ": dropped " << dropped
              << " row(s) with missing or non-numeric cells\n";
  }

  CsvLoad result;
  Dataset& ds = result.dataset;
  ds.name = path.stem().string();
  ds.features = Eigen::Map<RowMatrix>(x_values.data(), static_cast<Eigen::Index>(kept),
                                      static_cast<Eigen::Index>(feature_cols.size()));
  ds.labels = Eigen::Map<RowMatrix>(y_values.data(), static_cast<Eigen::Index>(kept),
                                    static_cast<Eigen::Index>(label_cols.size()));
  for (auto c : feature_cols) ds.feature_names.push_back(header[c]);
  for (auto c : label_cols) ds.label_names.push_back(header[c]);
  result.dropped_rows = dropped;
  return result;
}

Standardizer::Standardizer(Vector mean, Vector scale) : mean_(std::move(mean)), scale_(std::move(scale)) {
  if (mean_.size() != scale_.size()) {
    throw std::invalid_argument("Standardizer: mean and scale sizes differ");
  }
}

Standardizer Standardizer::fit(const Matrix& rows) {
  if (rows.rows() == 0) {
    throw std::invalid_argument("Standardizer::fit: no rows");
  }
  const Vector mean = rows.colwise().mean().transpose();
  Vector scale(rows.cols());
  for (Eigen::Index c = 0; c < rows.cols(); ++c) {
    const double var = (rows.col(c).array() - mean(c)).square().mean();
    scale(c) = std::max(std::sqrt(var), 1e-12);
  }
  return Standardizer(mean, scale);
}

Matrix Standardizer::apply(const Matrix& rows) const {
  if (rows.cols() != mean_.size()) {
    throw std::invalid_argument("Standardizer::apply: dimension mismatch");
  }
  return ((rows.rowwise() - mean_.transpose()).array().rowwise() / scale_.transpose().array())
      .matrix();
}

RowMatrix Standardizer::apply_rows(const Matrix& rows) const { return RowMatrix(apply(rows)); }

Vector Standardizer::apply(const Vector& x) const {
  if (x.size() != mean_.size()) {
    throw std::invalid_argument("Standardizer::apply: dimension mismatch");
  }
  return ((x - mean_).array() / scale_.array()).matrix();
}

Split split_dataset(std::size_t rows, std::uint64_t seed) {
  if (rows < kMinSplitRows) {
    throw std::invalid_argument("split_dataset: need at least " + std::to_string(kMinSplitRows) +
                                " rows, got " + std::to_string(rows));
  }
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t n_train = (81 * rows) / 100;
  const std::size_t n_val = (9 * rows) / 100;
  Split split;
  split.seed = seed;
  split.train.assign(order.begin(), order.begin() + n_train);
  split.validation.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  split.test.assign(order.begin() + n_train + n_val, order.end());
  return split;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t state) {
  for (unsigned char c : bytes) {
    state ^= c;
    state *= 1099511628211ULL;
  }
  return state;
}

std::uint64_t split_checksum(const Split& split) {
  std::uint64_t h = fnv1a({});
  for (const auto* part : {&split.train, &split.validation, &split.test}) {
    for (std::size_t idx : *part) {
      const std::uint64_t v = idx;
      h = fnv1a(std::string_view(reinterpret_cast<const char*>(&v), sizeof(v)), h);
    }
    h = fnv1a("|", h);
  }
  return h;
}

void save_dataset_cache(const Dataset& ds, const std::filesystem::path& path) {
  ds.validate();
  std::ostringstream body;
  body << "mve-dataset 1\n";
  body << "name " << (ds.name.empty() ? "unnamed" : ds.name) << "\n";
  body << "shape " << ds.rows() << ' ' << ds.feature_dim() << ' ' << ds.label_dim() << "\n";
  auto write_column = [&](char kind, const std::string& name, const auto& column) {
    body << kind << ' ' << name;
    for (Eigen::Index i = 0; i < column.size(); ++i) {
      body << ' ' << format_double(column(i));
    }
    body << "\n";
  };
  for (int c = 0; c < ds.feature_dim(); ++c) {
    const std::string name = c < static_cast<int>(ds.feature_names.size()) ? ds.feature_names[c]
                                                                           : "x" + std::to_string(c);
    write_column('x', name, ds.features.col(c));
  }
  for (int c = 0; c < ds.label_dim(); ++c) {
    const std::string name = c < static_cast<int>(ds.label_names.size()) ? ds.label_names[c]
                                                                         : "y" + std::to_string(c);
    write_column('y', name, ds.labels.col(c));
  }
  const std::string text = body.str();
  char checksum[32];
  std::snprintf(checksum, sizeof(checksum), "%016llx",
                static_cast<unsigned long long>(fnv1a(text)));

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) {
      throw std::runtime_error("save_dataset_cache: cannot write " + tmp.string());
    }
    out << text << "checksum " << checksum << "\n";
  }
  std::filesystem::rename(tmp, path);
}

Dataset load_dataset_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("load_dataset_cache: cannot open " + path.string());
  }
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto marker = text.rfind("checksum ");
  if (marker == std::string::npos) {
    throw std::runtime_error("load_dataset_cache: missing checksum line");
  }
  const std::string body = text.substr(0, marker);
  const std::string stored(trim(std::string_view(text).substr(marker + 9)));
  char expected[32];
  std::snprintf(expected, sizeof(expected), "%016llx",
                static_cast<unsigned long long>(fnv1a(body)));
  if (stored != expected) {
    throw std::runtime_error("load_dataset_cache: checksum mismatch in " + path.string());
  }

  std::istringstream lines(body);
  std::string line;
  std::string tag;
  int version = 0;
  if (std::getline(lines, line)) {
    std::istringstream(line) >> tag >> version;
  }
  if (tag != "mve-dataset" || version != 1) {
    throw std::runtime_error("load_dataset_cache: bad header");
  }
  Dataset ds;
  std::size_t m = 0;
  int d = 0;
  int n = 0;
  {
    std::getline(lines, line);
    std::istringstream(line) >> tag >> ds.name;
    std::getline(lines, line);
    std::istringstream shape(line);
    if (!(shape >> tag >> m >> d >> n) || tag != "shape") {
      throw std::runtime_error("load_dataset_cache: bad shape line");
    }
  }
  ds.features.resize(static_cast<Eigen::Index>(m), d);
  ds.labels.resize(static_cast<Eigen::Index>(m), n);
  int seen_x = 0;
  int seen_y = 0;
  while (std::getline(lines, line)) {
    std::istringstream cols(line);
    std::string kind;
    std::string name;
    cols >> kind >> name;
    const bool is_x = kind == "x";
    if ((!is_x && kind != "y") || (is_x ? seen_x >= d : seen_y >= n)) {
      throw std::runtime_error("load_dataset_cache: unexpected column line");
    }
    auto column = is_x ? ds.features.col(seen_x) : ds.labels.col(seen_y);
    for (std::size_t i = 0; i < m; ++i) {
      std::string token;
      cols >> token;
      const auto v = parse_number(token);
      if (!v) {
        throw std::runtime_error("load_dataset_cache: bad value in column " + name);
      }
      column(static_cast<Eigen::Index>(i)) = *v;
    }
    (is_x ? ds.feature_names : ds.label_names).push_back(name);
    (is_x ? seen_x : seen_y)++;
  }
  if (seen_x != d || seen_y != n) {
    throw std::runtime_error("load_dataset_cache: column count mismatch");
  }
  return ds;
}

}  // namespace mve
