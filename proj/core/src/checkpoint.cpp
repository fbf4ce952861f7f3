#include "drivelearn/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "drivelearn/error.hpp"

namespace drivelearn {

namespace {

constexpr std::array<char, 8> kMagic{'D', 'L', 'C', 'K', 'P', 'T', '\0', '\0'};

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& source) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) {
    throw ValidationError(source + ": truncated checkpoint");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace

void write_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.kind));
  put<std::uint64_t>(out, ckpt.layout_hash);
  put<std::uint64_t>(out, ckpt.params.size());
  for (double v : ckpt.params) put<double>(out, v);
}

Checkpoint read_checkpoint(std::istream& in, const std::string& source) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw ValidationError(source + ": not a checkpoint file");
  const auto version = get<std::uint32_t>(in, source);
  if (version != kCheckpointVersion) {
    throw ValidationError(source + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto kind = get<std::uint32_t>(in, source);
  if (kind > 1) throw ValidationError(source + ": unknown checkpoint kind " + std::to_string(kind));
  ckpt.kind = static_cast<CheckpointKind>(kind);
  ckpt.layout_hash = get<std::uint64_t>(in, source);
  const auto count = get<std::uint64_t>(in, source);
  if (count > (std::uint64_t{1} << 32)) throw ValidationError(source + ": implausible parameter count");
  ckpt.params.resize(count);
  for (auto& v : ckpt.params) v = get<double>(in, source);
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  write_checkpoint(ckpt, out);
  if (!out) throw std::runtime_error("failed writing " + file.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint " + file.string());
  return read_checkpoint(in, file.string());
}

}  // namespace drivelearn
