/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "islands/experiment/reports.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "islands/error.hpp"

namespace islands::experiment {

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string out = buf;
  if (out.find_first_not_of("-0.") == std::string::npos) return "0.000000";
  return out;
}

std::string grid_label(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (x.size() != y.size() || x.size() < 2) return nan;
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) mx += rx[i], my += ry[i];
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return nan;
  return sxy / std::sqrt(sxx * syy);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) { row(header); }

CsvWriter& CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw ValidationError("csv row width does not match the header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) text_ += ',';
    const auto& c = cells[i];
    if (c.find_first_of(",\"\n") == std::string::npos) {
      text_ += c;
      continue;
    }
    text_ += '"';
    for (char ch : c) {
      if (ch == '"') text_ += '"';
      text_ += ch;
    }
    text_ += '"';
  }
  text_ += '\n';
  return *this;
}

const std::vector<std::string>& score_columns() {
  static const std::vector<std::string> cols{"experiment",        "fold",          "split",
                                             "selector",          "gamma",         "beta",
                                             "seed",              "best_epoch",    "weighted_accuracy",
                                             "fine_accuracy",     "coarse_accuracy", "fraction_coarse",
                                             "frames"};
  return cols;
}

std::vector<std::string> score_cells(const ScoreRow& r) {
  return {r.experiment,
          std::to_string(r.fold),
          r.split,
          r.selector,
          std::isnan(r.gamma) ? "" : grid_label(r.gamma),
          grid_label(r.beta),
          r.seed < 0 ? "" : std::to_string(r.seed),
          r.best_epoch < 0 ? "" : std::to_string(r.best_epoch),
          fmt(r.tally.weighted(r.beta)),
          fmt(r.tally.fine_accuracy()),
          fmt(r.tally.coarse_accuracy()),
          fmt(r.tally.fraction_coarse()),
          std::to_string(r.tally.frames)};
}

nlohmann::ordered_json to_json(const ScoreRow& r) {
  nlohmann::ordered_json j;
  j["experiment"] = r.experiment;
  j["fold"] = r.fold;
  j["split"] = r.split;
  j["selector"] = r.selector;
  j["gamma"] = std::isnan(r.gamma) ? nlohmann::ordered_json() : nlohmann::ordered_json(r.gamma);
  j["beta"] = r.beta;
  j["seed"] = r.seed;
  j["best_epoch"] = r.best_epoch;
  j["weighted_accuracy"] = r.tally.weighted(r.beta);
  j["fine_accuracy"] = r.tally.fine_accuracy();
  j["coarse_accuracy"] = r.tally.coarse_accuracy();
  j["fraction_coarse"] = r.tally.fraction_coarse();
  j["tally"] = {{"frames", r.tally.frames},
                {"fine_selected", r.tally.fine_selected},
                {"fine_credited", r.tally.fine_credited},
                {"coarse_selected", r.tally.coarse_selected},
                {"coarse_credited", r.tally.coarse_credited}};
  return j;
}

ScoreRow score_row_from_json(const nlohmann::json& j) {
  ScoreRow r;
  r.experiment = j.at("experiment").get<std::string>();
  r.fold = j.at("fold").get<int>();
  r.split = j.at("split").get<std::string>();
  r.selector = j.at("selector").get<std::string>();
  r.gamma = j.at("gamma").is_null() ? std::numeric_limits<double>::quiet_NaN() : j.at("gamma").get<double>();
  r.beta = j.at("beta").get<double>();
  r.seed = j.at("seed").get<int>();
  r.best_epoch = j.at("best_epoch").get<int>();
  const auto& t = j.at("tally");
  r.tally.frames = t.at("frames").get<long>();
  r.tally.fine_selected = t.at("fine_selected").get<long>();
  r.tally.fine_credited = t.at("fine_credited").get<long>();
  r.tally.coarse_selected = t.at("coarse_selected").get<long>();
  r.tally.coarse_credited = t.at("coarse_credited").get<long>();
  return r;
}

}  // namespace islands::experiment
