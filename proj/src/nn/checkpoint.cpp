#include "forgesr/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "forgesr/core/error.hpp"

namespace forgesr::nn {
namespace {

constexpr char kMagic[8] = {'F', 'S', 'R', 'C', 'K', 'P', 'T', '\0'};

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xffu));
}

std::uint64_t get_le(const std::vector<std::uint8_t>& in, std::size_t pos, int bytes) {
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | in[pos + static_cast<std::size_t>(i)];
  return v;
}

}  // namespace

const NamedArray& Checkpoint::array(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return a;
  throw ValidationError("checkpoint has no array named '" + name + "'");
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json header = ckpt.header;
  header["format_version"] = kCheckpointFormatVersion;
  auto list = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& a : ckpt.arrays) {
    if (static_cast<std::int64_t>(a.values.size()) != a.rows * a.cols)
      throw InvalidArgument("checkpoint array '" + a.name + "' size does not match its shape");
    list.push_back({{"name", a.name}, {"rows", a.rows}, {"cols", a.cols}, {"offset", offset}, {"count", a.values.size()}});
    offset += a.values.size();
  }
  header["arrays"] = list;
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le(out, kCheckpointFormatVersion, 4);
  put_le(out, text.size(), 8);
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + offset * 4);
  for (const auto& a : ckpt.arrays) {
    for (float f : a.values) {
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_le(out, bits, 4);
    }
  }
  return out;
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw ValidationError("not a checkpoint container (bad magic)");
  const auto version = static_cast<std::uint32_t>(get_le(bytes, 8, 4));
  if (version != kCheckpointFormatVersion)
    throw ValidationError("unsupported checkpoint format version " + std::to_string(version));
  const auto header_len = get_le(bytes, 12, 8);
  if (20 + header_len > bytes.size()) throw ValidationError("truncated checkpoint header");
  Checkpoint ckpt;
  try {
    ckpt.header = nlohmann::json::parse(bytes.begin() + 20, bytes.begin() + 20 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  if (!ckpt.header.contains("format_version") || ckpt.header["format_version"] != kCheckpointFormatVersion)
    throw ValidationError("checkpoint header missing or mismatched format_version");
  const std::size_t payload = 20 + header_len;
  for (const auto& entry : ckpt.header.at("arrays")) {
    NamedArray a;
    a.name = entry.at("name").get<std::string>();
    a.rows = entry.at("rows").get<std::int64_t>();
    a.cols = entry.at("cols").get<std::int64_t>();
    const auto offset = entry.at("offset").get<std::uint64_t>();
    const auto count = entry.at("count").get<std::uint64_t>();
    if (payload + (offset + count) * 4 > bytes.size()) throw ValidationError("truncated checkpoint payload");
    a.values.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      const auto bits = static_cast<std::uint32_t>(get_le(bytes, payload + (offset + i) * 4, 4));
      std::memcpy(&a.values[i], &bits, 4);
    }
    ckpt.arrays.push_back(std::move(a));
  }
  ckpt.header.erase("arrays");
  return ckpt;
}

void write_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace forgesr::nn
