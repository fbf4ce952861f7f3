#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace drivelearn {

enum class CheckpointKind : std::uint32_t { network = 0, expert_replay = 1 };

/// Binary file: "DLCKPT\0\0", u32 version, u32 kind, u64 layout hash,
/// u64 parameter count, then little-endian f64 parameters.
struct Checkpoint {
  CheckpointKind kind = CheckpointKind::network;
  std::uint64_t layout_hash = 0;
  std::vector<double> params;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const Checkpoint& ckpt, std::ostream& out);
Checkpoint read_checkpoint(std::istream& in, const std::string& source);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& file);
Checkpoint load_checkpoint(const std::filesystem::path& file);

}  // namespace drivelearn
