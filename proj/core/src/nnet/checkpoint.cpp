/*
 * Copyright 2026 The Islands Authors
 * SPDX-License-Identifier: Apache-2.0
 */

#include "islands/nnet/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>

#include "../io_util.hpp"
#include "islands/error.hpp"

namespace islands::nnet {

namespace {

constexpr char kMagic[8] = {'I', 'S', 'L', 'N', 'D', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint64_t u64() { return read(8); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(read(4)); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  bool done() const noexcept { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ParseError("checkpoint truncated");
  }
  std::uint64_t read(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_tensors(const std::vector<NamedTensor>& tensors) {
  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.rows()));
    put_u32(out, static_cast<std::uint32_t>(t.cols()));
    for (double v : t.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

std::vector<NamedTensor> decode_tensors(std::string_view bytes) {
  Reader r(bytes);
  if (r.str(sizeof kMagic) != std::string_view(kMagic, sizeof kMagic)) throw ParseError("not a checkpoint file");
  const auto version = r.u32();
  if (version != kVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version));
  const auto count = r.u32();
  std::vector<NamedTensor> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str(r.u32());
    const auto rows = static_cast<std::int32_t>(r.u32());
    const auto cols = static_cast<std::int32_t>(r.u32());
    if (rows < 0 || cols < 0) throw ParseError("checkpoint tensor '" + name + "' has a negative dimension");
    std::vector<double> values(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
    for (auto& v : values) v = std::bit_cast<double>(r.u64());
    out.emplace_back(std::move(name), Tensor2D(rows, cols, std::move(values)));
  }
  if (!r.done()) throw ParseError("trailing bytes after checkpoint tensors");
  return out;
}

void save_tensors(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  detail::write_text_file(path, encode_tensors(tensors));
}

std::vector<NamedTensor> load_tensors(const std::filesystem::path& path) {
  try {
    return decode_tensors(detail::read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void save_params(const std::filesystem::path& path, const ParamStore& params) {
  std::vector<NamedTensor> tensors;
  for (const auto& p : params.all()) tensors.emplace_back(p.name, p.value);
  save_tensors(path, tensors);
}

void load_params(const std::filesystem::path& path, ParamStore& params) {
  const auto tensors = load_tensors(path);
  if (tensors.size() != params.count()) {
    throw ValidationError(path.string() + ": checkpoint holds " + std::to_string(tensors.size()) +
                          " tensors, model expects " + std::to_string(params.count()));
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    auto& p = params.all()[i];
    if (tensors[i].first != p.name || !tensors[i].second.same_shape(p.value)) {
      throw ValidationError(path.string() + ": tensor '" + tensors[i].first + "' " +
                            tensors[i].second.shape_string() + " does not match '" + p.name + "' " +
                            p.value.shape_string());
    }
    p.value = tensors[i].second;
  }
}

}  // namespace islands::nnet
