/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "islands/experiment/timeline.hpp"

#include <cstdio>

#include "islands/error.hpp"
#include "islands/experiment/reports.hpp"

namespace islands::experiment {

namespace {

const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948",
                          "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac", "#86bcb6", "#d37295"};
constexpr int kPaletteSize = sizeof kPalette / sizeof kPalette[0];

const char* granularity_name(int g) { return g == 0 ? "fine" : "coarse"; }

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void TimelineData::validate() const {
  const auto n = truth_fine.size();
  if (n == 0) throw ValidationError("timeline for '" + video_id + "' is empty");
  if (fine_argmax.size() != n || coarse_argmax.size() != n || oracle.size() != n)
    throw ValidationError("timeline tracks for '" + video_id + "' differ in length");
  if (selections.size() != gammas.size())
    throw ValidationError("timeline for '" + video_id + "' needs one selection track per gamma");
  for (const auto& s : selections)
    if (s.size() != n) throw ValidationError("timeline selection for '" + video_id + "' has the wrong length");
  for (std::size_t i = 1; i < gammas.size(); ++i)
    if (!(gammas[i] > gammas[i - 1])) throw ValidationError("timeline gammas must be ascending");
}

std::vector<int> TimelineData::first_fine() const {
  std::vector<int> out(truth_fine.size(), -1);
  for (std::size_t t = 0; t < out.size(); ++t) {
    for (std::size_t g = 0; g < selections.size(); ++g) {
      if (selections[g][t] == 0) {
        out[t] = static_cast<int>(g);
        break;
      }
    }
  }
  return out;
}

std::vector<int> TimelineData::monotone() const {
  const auto first = first_fine();
  std::vector<int> out(first.size(), 1);
  for (std::size_t t = 0; t < first.size(); ++t) {
    if (first[t] < 0) continue;
    for (std::size_t g = static_cast<std::size_t>(first[t]); g < selections.size(); ++g)
      if (selections[g][t] != 0) out[t] = 0;
  }
  return out;
}

std::string timeline_csv(const TimelineData& data, const Taxonomy& taxonomy) {
  data.validate();
  std::vector<std::string> header{"frame", "truth_fine", "truth_coarse", "fine_argmax", "coarse_argmax", "oracle"};
  for (double g : data.gammas) header.push_back("gamma=" + grid_label(g));
  header.push_back("first_fine_gamma");
  header.push_back("monotone");
  CsvWriter csv(header);
  const auto first = data.first_fine();
  const auto mono = data.monotone();
  for (std::size_t t = 0; t < data.truth_fine.size(); ++t) {
    std::vector<std::string> row{std::to_string(data.observed + static_cast<int>(t) + 1),
                                 taxonomy.fine_name(data.truth_fine[t]),
                                 taxonomy.coarse_name(taxonomy.coarsen(data.truth_fine[t])),
                                 taxonomy.fine_name(data.fine_argmax[t]),
                                 taxonomy.coarse_name(data.coarse_argmax[t]),
                                 granularity_name(data.oracle[t])};
    for (const auto& s : data.selections) row.emplace_back(granularity_name(s[t]));
    row.push_back(first[t] < 0 ? "" : grid_label(data.gammas[static_cast<std::size_t>(first[t])]));
    row.push_back(std::to_string(mono[t]));
    csv.row(row);
  }
  return csv.str();
}

std::string timeline_svg(const TimelineData& data, const Taxonomy& taxonomy) {
  data.validate();
  const int n = static_cast<int>(data.truth_fine.size());
  const int cell = 6, row_h = 18, gap = 6, label_w = 110, top = 24;
  const int rows = 3 + static_cast<int>(data.gammas.size());
  const int width = label_w + n * cell + 10;
  const int height = top + rows * (row_h + gap) + 10;

  std::string svg;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" font-family=\"sans-serif\" "
                "font-size=\"11\">\n",
                width, height);
  svg += buf;
  svg += "<text x=\"4\" y=\"14\">" + escape_xml(data.video_id) + "</text>\n";

  int row = 0;
  auto label = [&](const std::string& text) {
    std::snprintf(buf, sizeof buf, "<text x=\"4\" y=\"%d\">", top + row * (row_h + gap) + row_h - 5);
    svg += buf;
    svg += escape_xml(text) + "</text>\n";
  };
  auto rect = [&](int t, const char* fill, const std::string& title) {
    std::snprintf(buf, sizeof buf, "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"%s\">",
                  label_w + t * cell, top + row * (row_h + gap), cell, row_h, fill);
    svg += buf;
    svg += "<title>" + escape_xml(title) + "</title></rect>\n";
  };

  label("truth");
  for (int t = 0; t < n; ++t)
    rect(t, kPalette[data.truth_fine[t] % kPaletteSize], taxonomy.fine_name(data.truth_fine[t]));
  ++row;
  label("fine forecast");
  for (int t = 0; t < n; ++t)
    rect(t, kPalette[data.fine_argmax[t] % kPaletteSize], taxonomy.fine_name(data.fine_argmax[t]));
  ++row;
  label("oracle");
  for (int t = 0; t < n; ++t) rect(t, data.oracle[t] == 0 ? "#222222" : "#dddddd", granularity_name(data.oracle[t]));
  ++row;
  for (std::size_t g = 0; g < data.gammas.size(); ++g, ++row) {
    label("gamma " + grid_label(data.gammas[g]));
    for (int t = 0; t < n; ++t)
      rect(t, data.selections[g][t] == 0 ? "#222222" : "#dddddd", granularity_name(data.selections[g][t]));
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace islands::experiment
