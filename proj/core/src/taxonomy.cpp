/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "islands/taxonomy.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "io_util.hpp"
#include "islands/error.hpp"

namespace islands {

namespace {

void require_unique(const std::vector<std::string>& names, const char* level) {
  std::set<std::string_view> seen;
  for (const auto& n : names) {
    if (n.empty()) throw ValidationError(std::string("empty ") + level + " label name");
    if (!seen.insert(n).second) {
      throw ValidationError(std::string("duplicate ") + level + " label '" + n + "'");
    }
  }
}

int find_in(const std::vector<std::string>& names, std::string_view name) noexcept {
  const auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

}  // namespace

Taxonomy::Taxonomy(std::vector<std::string> fine_labels, std::vector<std::string> coarse_labels,
                   std::vector<int> fine_to_coarse)
    : fine_(std::move(fine_labels)), coarse_(std::move(coarse_labels)), map_(std::move(fine_to_coarse)) {
  require_unique(fine_, "fine");
  require_unique(coarse_, "coarse");
  if (coarse_.size() < 2) throw ValidationError("taxonomy needs at least two coarse labels");
  if (fine_.size() < coarse_.size()) {
    throw ValidationError("taxonomy has fewer fine labels than coarse labels");
  }
  if (map_.size() != fine_.size()) {
    throw ValidationError("fine-to-coarse map must have one entry per fine label");
  }
  for (std::size_t i = 0; i < map_.size(); ++i) {
    if (map_[i] < 0 || map_[i] >= coarse_count()) {
      throw ValidationError("fine label '" + fine_[i] + "' maps to an invalid coarse index");
    }
  }
}

Taxonomy Taxonomy::identity(std::vector<std::string> labels) {
  std::vector<int> map(labels.size());
  for (std::size_t i = 0; i < map.size(); ++i) map[i] = static_cast<int>(i);
  auto coarse = labels;
  return Taxonomy(std::move(labels), std::move(coarse), std::move(map));
}

int Taxonomy::coarsen(int fine_index) const {
  if (fine_index < 0 || fine_index >= fine_count()) {
    throw std::out_of_range("fine label index " + std::to_string(fine_index) + " outside [0, " +
                            std::to_string(fine_count()) + ")");
  }
  return map_[static_cast<std::size_t>(fine_index)];
}

std::vector<int> Taxonomy::coarsen(std::span<const int> fine_track) const {
  std::vector<int> out;
  out.reserve(fine_track.size());
  for (int f : fine_track) out.push_back(coarsen(f));
  return out;
}

const std::string& Taxonomy::fine_name(int index) const { return fine_.at(static_cast<std::size_t>(index)); }

const std::string& Taxonomy::coarse_name(int index) const {
  return coarse_.at(static_cast<std::size_t>(index));
}

int Taxonomy::find_fine(std::string_view name) const noexcept { return find_in(fine_, name); }

int Taxonomy::find_coarse(std::string_view name) const noexcept { return find_in(coarse_, name); }

std::vector<int> Taxonomy::group(int coarse_index) const {
  std::vector<int> members;
  for (int f = 0; f < fine_count(); ++f) {
    if (map_[static_cast<std::size_t>(f)] == coarse_index) members.push_back(f);
  }
  return members;
}

std::string Taxonomy::to_mapping_text() const {
  // Coarse order is first-appearance order, so a file written in fine order
  // only reproduces `coarse_` if the map's first appearances follow it.
  std::string text;
  std::vector<bool> emitted(coarse_.size(), false);
  int next_coarse = 0;
  bool ordered = true;
  for (std::size_t i = 0; i < fine_.size(); ++i) {
    const int c = map_[i];
    if (!emitted[static_cast<std::size_t>(c)]) {
      if (c != next_coarse) ordered = false;
      emitted[static_cast<std::size_t>(c)] = true;
      ++next_coarse;
    }
  }
  if (!ordered) {
    throw ValidationError(
        "taxonomy coarse order differs from first-appearance order and cannot be written as a mapping file");
  }
  for (std::size_t i = 0; i < fine_.size(); ++i) {
    text += fine_[i];
    text += '\t';
    text += coarse_[static_cast<std::size_t>(map_[i])];
    text += '\n';
  }
  return text;
}

std::uint64_t Taxonomy::fingerprint() const noexcept {
  std::string canonical;
  for (std::size_t i = 0; i < fine_.size(); ++i) {
    canonical += fine_[i] + '\t' + coarse_[static_cast<std::size_t>(map_[i])] + '\n';
  }
  return detail::fnv1a(canonical);
}

Taxonomy parse_mapping(std::string_view text) {
  std::vector<std::string> fine;
  std::vector<std::string> coarse;
  std::vector<int> map;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    const auto raw = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    auto line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (detail::trim(line).empty() || detail::trim(line).front() == '#') continue;

    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || line.find('\t', tab + 1) != std::string_view::npos) {
      throw ParseError("mapping line " + std::to_string(line_no) + ": expected '<fine>\\t<coarse>'");
    }
    const auto fine_name = detail::trim(line.substr(0, tab));
    const auto coarse_name = detail::trim(line.substr(tab + 1));
    if (fine_name.empty() || coarse_name.empty()) {
      throw ParseError("mapping line " + std::to_string(line_no) + ": empty label name");
    }
    if (std::find(fine.begin(), fine.end(), fine_name) != fine.end()) {
      throw ValidationError("mapping line " + std::to_string(line_no) + ": fine label '" +
                            std::string(fine_name) + "' is mapped twice");
    }
    auto it = std::find(coarse.begin(), coarse.end(), coarse_name);
    if (it == coarse.end()) {
      coarse.emplace_back(coarse_name);
      it = coarse.end() - 1;
    }
    fine.emplace_back(fine_name);
    map.push_back(static_cast<int>(it - coarse.begin()));
  }
  return Taxonomy(std::move(fine), std::move(coarse), std::move(map));
}

Taxonomy load_mapping(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error("mapping file '" + path.string() + "' does not exist");
  try {
    return parse_mapping(detail::read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_mapping(const std::filesystem::path& path, const Taxonomy& taxonomy) {
  detail::write_text_file(path, taxonomy.to_mapping_text());
}

}  // namespace islands
