#pragma once

// Binary checkpoint layout (all integers and doubles little-endian):
//
//   offset  size      field
//   0       8         magic "PUALCKPT"
//   8       4         format version (currently 1)
//   12      4         kind: 0 = live policy, 1 = frozen snapshot
//   16      8         N (prompts)
//   24      8         V (responses)
//   32      8         policy version / snapshot taken_at_version
//   40      8*N*V     logits, row-major
//   40+8NV  8         FNV-1a 64 checksum of every preceding byte

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pualign/policy.hpp"

namespace pualign {

enum class CheckpointKind : std::uint32_t { policy = 0, snapshot = 1 };

struct Checkpoint {
  CheckpointKind kind;
  std::uint64_t version;
  LogitTable logits;
};

std::vector<unsigned char> encode_checkpoint(const CategoricalTable& table, CheckpointKind kind,
                                             std::uint64_t version);
/// Throws std::runtime_error on a bad magic, version, size or checksum.
Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes);

void write_checkpoint(const std::filesystem::path& path, const Policy& policy);
void write_checkpoint(const std::filesystem::path& path, const PolicySnapshot& snapshot);
Checkpoint read_checkpoint(const std::filesystem::path& path);

Policy policy_from_checkpoint(const Checkpoint& ckpt);
PolicySnapshot snapshot_from_checkpoint(const Checkpoint& ckpt);

std::uint64_t fnv1a64(const unsigned char* data, std::size_t size);

/// Writes to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace pualign
