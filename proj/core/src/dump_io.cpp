/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "islands/dump_io.hpp"

#include <sstream>

#include <nlohmann/json.hpp>

#include "io_util.hpp"
#include "islands/error.hpp"

namespace islands {

namespace {

nlohmann::json matrix_json(const nnet::Tensor2D& m) {
  auto rows = nlohmann::json::array();
  for (int r = 0; r < m.rows(); ++r) rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

nnet::Tensor2D matrix_from_json(const nlohmann::json& j, const char* key) {
  const auto& rows = j.at(key);
  if (!rows.is_array() || rows.empty()) throw ValidationError(std::string("'") + key + "' must be a non-empty matrix");
  const int cols = static_cast<int>(rows.front().size());
  nnet::Tensor2D m(static_cast<int>(rows.size()), cols);
  for (int r = 0; r < m.rows(); ++r) {
    const auto& row = rows.at(static_cast<std::size_t>(r));
    if (!row.is_array() || static_cast<int>(row.size()) != cols) {
      throw ValidationError(std::string("'") + key + "' row " + std::to_string(r) + " has the wrong width");
    }
    for (int c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

template <class Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
  std::istringstream in(detail::read_text_file(path));
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (detail::trim(line).empty()) continue;
    const auto where = path.string() + ":" + std::to_string(number);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    try {
      fn(j);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
}

}  // namespace

void save_forecast_dump(const std::filesystem::path& path, std::span<const ForecastRecord> records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["id"] = r.video_id;
    j["observed"] = r.observed;
    j["total_frames"] = r.total_frames;
    j["horizon"] = r.forecast.horizon;
    j["truth_fine"] = r.truth_fine;
    j["fine_mean"] = matrix_json(r.forecast.fine_mean);
    j["fine_var"] = matrix_json(r.forecast.fine_var);
    j["coarse_mean"] = matrix_json(r.forecast.coarse_mean);
    j["coarse_var"] = matrix_json(r.forecast.coarse_var);
    out += j.dump() + "\n";
  }
  detail::write_text_file(path, out);
}

std::vector<ForecastRecord> load_forecast_dump(const std::filesystem::path& path, const Taxonomy& taxonomy) {
  std::vector<ForecastRecord> records;
  for_each_line(path, [&](const nlohmann::json& j) {
    ForecastRecord r;
    r.video_id = j.at("id").get<std::string>();
    r.observed = j.at("observed").get<int>();
    r.total_frames = j.at("total_frames").get<int>();
    r.truth_fine = j.at("truth_fine").get<std::vector<int>>();
    auto& f = r.forecast;
    f.horizon = j.at("horizon").get<int>();
    f.fine_mean = matrix_from_json(j, "fine_mean");
    f.fine_var = matrix_from_json(j, "fine_var");
    f.coarse_mean = matrix_from_json(j, "coarse_mean");
    f.coarse_var = matrix_from_json(j, "coarse_var");
    if (f.fine_mean.cols() != taxonomy.fine_count() || f.coarse_mean.cols() != taxonomy.coarse_count()) {
      throw ValidationError("video '" + r.video_id + "': class count does not match the taxonomy");
    }
    f.fine_argmax = argmax_rows(f.fine_mean);
    f.coarse_argmax = argmax_rows(f.coarse_mean);
    f.validate();
    if (r.truth_fine.size() != static_cast<std::size_t>(f.horizon)) {
      throw ValidationError("video '" + r.video_id + "': truth length does not match the horizon");
    }
    records.push_back(std::move(r));
  });
  return records;
}

void save_selector_dataset(const std::filesystem::path& path, const SelectorDataset& data) {
  std::string out;
  for (const auto& s : data) {
    nlohmann::ordered_json j;
    j["id"] = s.video_id;
    j["features"] = matrix_json(s.features);
    j["labels"] = s.labels;
    j["truth_fine"] = s.truth_fine;
    out += j.dump() + "\n";
  }
  detail::write_text_file(path, out);
}

SelectorDataset load_selector_dataset(const std::filesystem::path& path, const Taxonomy& taxonomy) {
  SelectorDataset data;
  for_each_line(path, [&](const nlohmann::json& j) {
    SelectorSample s;
    s.video_id = j.at("id").get<std::string>();
    s.features = matrix_from_json(j, "features");
    s.labels = j.at("labels").get<std::vector<int>>();
    s.truth_fine = j.at("truth_fine").get<std::vector<int>>();
    s.validate(taxonomy);
    data.push_back(std::move(s));
  });
  return data;
}

}  // namespace islands
