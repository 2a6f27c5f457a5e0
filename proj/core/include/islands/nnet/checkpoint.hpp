/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "islands/nnet/params.hpp"
#include "islands/nnet/tensor.hpp"

namespace islands::nnet {

using NamedTensor = std::pair<std::string, Tensor2D>;

/// Binary checkpoint, little-endian:
///   "ISLNDCKP" | u32 version (1) | u32 count |
///   count x { u32 name_len | name | i32 rows | i32 cols | rows*cols f64 }
/// Values round-trip bit-exactly.
std::string encode_tensors(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_tensors(std::string_view bytes);

void save_tensors(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_tensors(const std::filesystem::path& path);

void save_params(const std::filesystem::path& path, const ParamStore& params);
/// Loads values into an already-shaped store; names and shapes must match.
void load_params(const std::filesystem::path& path, ParamStore& params);

}  // namespace islands::nnet
