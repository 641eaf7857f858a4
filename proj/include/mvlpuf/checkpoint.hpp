// SPDX-License-Identifier: Apache-2.0
/**
 * @file   checkpoint.hpp
 * @brief  Binary model checkpoints.
 *
 * Little-endian layout:
 *
 *   "MLPF"                      4 bytes
 *   version                     u32 (= 1)
 *   D_c, D_r, hidden, n_hidden  u32 each
 *   output_scale, bn_eps, bn_momentum   f64 each
 *   init_seed                   u64
 *   per hidden layer: W (in x out, row-major), b, gamma, beta,
 *                     running mean, running variance        f64
 *   head: W (row-major), b                                  f64
 */
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>

#include "mvlpuf/error.hpp"
#include "mvlpuf/io.hpp"
#include "mvlpuf/mlp.hpp"

namespace mvlpuf::mlp {

inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T> void put_le(std::string &out, T v) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const U u = std::bit_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(U); ++i)
    out.push_back(static_cast<char>((u >> (8 * i)) & 0xFFU));
}

class Reader {
public:
  explicit Reader(std::string_view data) : data_(data) {}

  template <typename T> T get() {
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    if (pos_ + sizeof(U) > data_.size())
      throw IoError("checkpoint truncated");
    U u = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      u |= static_cast<U>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return std::bit_cast<T>(u);
  }

  std::string_view take(std::size_t n) {
    if (pos_ + n > data_.size())
      throw IoError("checkpoint truncated");
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const noexcept { return pos_ == data_.size(); }

private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

template <typename Dense> void put_dense(std::string &out, const Dense &a) {
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      put_le(out, a(r, c));
}

template <typename Dense> void get_dense(Reader &in, Dense &a) {
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      a(r, c) = in.get<double>();
}

} // namespace detail

inline std::string serialize(const MlpModel &m) {
  std::string out = "MLPF";
  const ModelConfig &c = m.config;
  detail::put_le(out, kCheckpointVersion);
  detail::put_le(out, static_cast<std::uint32_t>(c.input_width));
  detail::put_le(out, static_cast<std::uint32_t>(c.output_width));
  detail::put_le(out, static_cast<std::uint32_t>(c.hidden_width));
  detail::put_le(out, static_cast<std::uint32_t>(c.n_hidden));
  detail::put_le(out, c.output_scale);
  detail::put_le(out, c.bn_eps);
  detail::put_le(out, c.bn_momentum);
  detail::put_le(out, c.init_seed);
  const auto H = static_cast<std::size_t>(m.n_hidden());
  for (std::size_t l = 0; l < H; ++l) {
    detail::put_dense(out, m.params.weights[l]);
    detail::put_dense(out, m.params.biases[l]);
    detail::put_dense(out, m.params.gammas[l]);
    detail::put_dense(out, m.params.betas[l]);
    detail::put_dense(out, m.running_mean[l]);
    detail::put_dense(out, m.running_var[l]);
  }
  detail::put_dense(out, m.params.weights[H]);
  detail::put_dense(out, m.params.biases[H]);
  return out;
}

/// The restored model is in inference mode.
inline MlpModel deserialize(std::string_view data) {
  detail::Reader in(data);
  if (in.take(4) != "MLPF")
    throw IoError("not a model checkpoint (bad magic)");
  if (in.get<std::uint32_t>() != kCheckpointVersion)
    throw IoError("unsupported checkpoint version");
  ModelConfig c;
  c.input_width = static_cast<int>(in.get<std::uint32_t>());
  c.output_width = static_cast<int>(in.get<std::uint32_t>());
  c.hidden_width = static_cast<int>(in.get<std::uint32_t>());
  c.n_hidden = static_cast<int>(in.get<std::uint32_t>());
  c.output_scale = in.get<double>();
  c.bn_eps = in.get<double>();
  c.bn_momentum = in.get<double>();
  c.init_seed = in.get<std::uint64_t>();
  try {
    c.validate();
  } catch (const InvalidArgument &e) {
    throw IoError(std::string("checkpoint header invalid: ") + e.what());
  }
  // Guard against absurd headers before allocating.
  const std::int64_t expect =
      count_parameters(c.input_width, c.output_width, c.hidden_width, c.n_hidden);
  const std::size_t header = 4 + 4 * 5 + 8 * 4;
  if (data.size() != header + 8 * static_cast<std::size_t>(expect))
    throw IoError("checkpoint size does not match its header");
  MlpModel m = init_model(c);
  const auto H = static_cast<std::size_t>(c.n_hidden);
  for (std::size_t l = 0; l < H; ++l) {
    detail::get_dense(in, m.params.weights[l]);
    detail::get_dense(in, m.params.biases[l]);
    detail::get_dense(in, m.params.gammas[l]);
    detail::get_dense(in, m.params.betas[l]);
    detail::get_dense(in, m.running_mean[l]);
    detail::get_dense(in, m.running_var[l]);
  }
  detail::get_dense(in, m.params.weights[H]);
  detail::get_dense(in, m.params.biases[H]);
  if (!in.done())
    throw IoError("trailing bytes in checkpoint");
  m.mode = Mode::Inference;
  return m;
}

inline void write_checkpoint(const MlpModel &m, const std::filesystem::path &path) {
  io::write_file_atomic(path, serialize(m));
}

inline MlpModel read_checkpoint(const std::filesystem::path &path) {
  return deserialize(io::read_file(path));
}

} // namespace mvlpuf::mlp
