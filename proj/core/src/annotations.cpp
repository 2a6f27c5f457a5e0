/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "islands/annotations.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "io_util.hpp"
#include "islands/error.hpp"

namespace islands {

namespace fs = std::filesystem;

VideoSequence parse_annotation(std::string id, std::string_view text, const Taxonomy& taxonomy) {
  std::vector<int> frames;
  std::size_t line_no = 0;
  std::size_t blank_run_start = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto end = text.find('\n', pos);
    const auto line = detail::trim(text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
    pos = end == std::string_view::npos ? text.size() : end + 1;
    ++line_no;
    if (line.empty()) {
      if (blank_run_start == 0) blank_run_start = line_no;
      continue;
    }
    if (blank_run_start != 0) {
      throw ParseError(id + ":" + std::to_string(blank_run_start) + ": blank line inside frame annotations");
    }
    const int label = taxonomy.find_fine(line);
    if (label < 0) {
      throw ValidationError(id + ":" + std::to_string(line_no) + ": unknown label '" + std::string(line) + "'");
    }
    frames.push_back(label);
  }
  if (frames.empty()) throw ValidationError(id + ": empty annotation file");
  return VideoSequence::from_frames(std::move(id), std::move(frames), taxonomy);
}

Corpus load_annotations(const fs::path& dir, const Taxonomy& taxonomy) {
  if (!fs::is_directory(dir)) throw Error("annotation directory '" + dir.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto name = entry.path().filename().string();
    if (name.empty() || name.front() == '.') continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  Corpus corpus;
  corpus.reserve(files.size());
  for (const auto& f : files) {
    std::string id = f.extension() == ".txt" ? f.stem().string() : f.filename().string();
    corpus.push_back(parse_annotation(std::move(id), detail::read_text_file(f), taxonomy));
  }
  return corpus;
}

void save_annotations(const fs::path& dir, const Corpus& corpus, const Taxonomy& taxonomy) {
  fs::create_directories(dir);
  for (const auto& v : corpus) {
    std::string text;
    for (int f : v.frames_fine()) {
      text += taxonomy.fine_name(f);
      text += '\n';
    }
    detail::write_text_file(dir / (v.id() + ".txt"), text);
  }
}

std::string corpus_manifest(const Corpus& corpus) {
  std::string out;
  for (const auto& v : corpus) {
    nlohmann::ordered_json row;
    row["id"] = v.id();
    row["frames"] = v.length();
    row["segments"] = v.segments().size();
    out += row.dump();
    out += '\n';
  }
  return out;
}

}  // namespace islands
