/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace islands {

/// Two-level action hierarchy: an ordered fine label set, an ordered coarse
/// label set and a total map from fine index to coarse index.
///
/// Indices are the runtime representation; names only matter for I/O.
/// Instances are immutable once constructed.
class Taxonomy {
 public:
  /// Validates and builds a taxonomy. Throws ValidationError when label names
  /// repeat within a level, when a map entry is out of range, when fewer than
  /// two coarse labels exist or when C_f < C_c.
  Taxonomy(std::vector<std::string> fine_labels, std::vector<std::string> coarse_labels,
           std::vector<int> fine_to_coarse);

  /// C_f labels that map onto themselves.
  static Taxonomy identity(std::vector<std::string> labels);

  int fine_count() const noexcept { return static_cast<int>(fine_.size()); }
  int coarse_count() const noexcept { return static_cast<int>(coarse_.size()); }
  /// Number of granularity levels. Always 2 for this taxonomy type.
  int levels() const noexcept { return 2; }

  /// Throws std::out_of_range for indices outside [0, C_f).
  int coarsen(int fine_index) const;
  std::vector<int> coarsen(std::span<const int> fine_track) const;

  const std::string& fine_name(int index) const;
  const std::string& coarse_name(int index) const;
  const std::vector<std::string>& fine_labels() const noexcept { return fine_; }
  const std::vector<std::string>& coarse_labels() const noexcept { return coarse_; }
  const std::vector<int>& map() const noexcept { return map_; }

  /// -1 when the name is unknown.
  int find_fine(std::string_view name) const noexcept;
  int find_coarse(std::string_view name) const noexcept;

  /// Fine indices belonging to one coarse group, ascending.
  std::vector<int> group(int coarse_index) const;

  /// Mapping-file text (tab separated, file order preserved).
  std::string to_mapping_text() const;
  /// FNV-1a hash of `to_mapping_text()`; used to tag checkpoints.
  std::uint64_t fingerprint() const noexcept;

  friend bool operator==(const Taxonomy&, const Taxonomy&) = default;

 private:
  std::vector<std::string> fine_;
  std::vector<std::string> coarse_;
  std::vector<int> map_;
};

/// Parses `<fine><TAB><coarse>` lines. `#` lines and blank lines are skipped;
/// coarse order is first-appearance order.
Taxonomy parse_mapping(std::string_view text);
Taxonomy load_mapping(const std::filesystem::path& path);
void save_mapping(const std::filesystem::path& path, const Taxonomy& taxonomy);

}  // namespace islands
