#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "forgesr/nn/tensor.hpp"

namespace forgesr::nn {

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

struct NamedArray {
  std::string name;
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<float> values;
};

/// Single-file container shared by every trained artifact.
///
/// Layout (all integers little-endian):
///   8 bytes   magic "FSRCKPT\0"
///   u32       container format version
///   u64       header length L
///   L bytes   UTF-8 JSON header; always carries "format_version" and an
///             "arrays" list of {name, rows, cols, offset, count}
///   ...       float32 little-endian payload, arrays back to back
struct Checkpoint {
  nlohmann::json header = nlohmann::json::object();
  std::vector<NamedArray> arrays;

  const NamedArray& array(const std::string& name) const;
};

void write_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint read_checkpoint(const std::string& path);

// Byte-level encode/decode, used for hashing and by the file functions.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

template <typename Scalar>
std::vector<NamedArray> export_params(const ParamList<Scalar>& params) {
  std::vector<NamedArray> out;
  out.reserve(params.size());
  for (const auto* p : params) {
    NamedArray a{p->name, p->value.rows(), p->value.cols(), {}};
    a.values.resize(static_cast<std::size_t>(p->value.size()));
    for (Eigen::Index i = 0; i < p->value.size(); ++i) a.values[static_cast<std::size_t>(i)] = static_cast<float>(p->value.data()[i]);
    out.push_back(std::move(a));
  }
  return out;
}

/// Copies matching arrays into params; every param must be present with the
/// same shape.
template <typename Scalar>
void import_params(const ParamList<Scalar>& params, const Checkpoint& ckpt) {
  for (auto* p : params) {
    const NamedArray& a = ckpt.array(p->name);
    if (a.rows != p->value.rows() || a.cols != p->value.cols())
      throw InvalidArgument("checkpoint array '" + p->name + "' has wrong shape");
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = static_cast<Scalar>(a.values[static_cast<std::size_t>(i)]);
  }
}

}  // namespace forgesr::nn
