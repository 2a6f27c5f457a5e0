/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "islands/sequence.hpp"
#include "islands/taxonomy.hpp"

namespace islands {

/// One fine label name per line per frame. Trailing blank lines are ignored;
/// unknown names raise ValidationError naming the label and line.
VideoSequence parse_annotation(std::string id, std::string_view text, const Taxonomy& taxonomy);

/// Loads every regular file in `dir` (sorted by name, dot-files skipped) as a
/// label-only video. The id is the file name without a ".txt" extension.
Corpus load_annotations(const std::filesystem::path& dir, const Taxonomy& taxonomy);

/// Writes `<id>.txt` per video.
void save_annotations(const std::filesystem::path& dir, const Corpus& corpus, const Taxonomy& taxonomy);

/// JSON-lines index: {"id": ..., "frames": T, "segments": n} per video.
std::string corpus_manifest(const Corpus& corpus);

}  // namespace islands
