#include "pualign/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace pualign {

namespace {

constexpr char kMagic[8] = {'P', 'U', 'A', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::size_t kHeaderSize = 40;

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

std::uint64_t fnv1a64(const unsigned char* data, std::size_t size) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<unsigned char> encode_checkpoint(const CategoricalTable& table, CheckpointKind kind,
                                             std::uint64_t version) {
  const LogitTable& logits = table.logits();
  std::vector<unsigned char> out;
  out.reserve(kHeaderSize + 8 * logits.data().size() + 8);
  for (char c : kMagic) out.push_back(static_cast<unsigned char>(c));
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(kind));
  put_u64(out, logits.rows());
  put_u64(out, logits.cols());
  put_u64(out, version);
  for (double v : logits.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  put_u64(out, fnv1a64(out.data(), out.size()));
  return out;
}

Checkpoint decode_checkpoint(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < kHeaderSize + 8) throw std::runtime_error("checkpoint: truncated header");
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) throw std::runtime_error("checkpoint: bad magic");
  if (get_u32(bytes.data() + 8) != kFormatVersion) throw std::runtime_error("checkpoint: unsupported format version");
  const std::uint32_t kind = get_u32(bytes.data() + 12);
  if (kind > 1) throw std::runtime_error("checkpoint: unknown kind");
  const std::uint64_t rows = get_u64(bytes.data() + 16);
  const std::uint64_t cols = get_u64(bytes.data() + 24);
  const std::uint64_t version = get_u64(bytes.data() + 32);
  if (rows == 0 || cols == 0 || rows > (1ULL << 32) || cols > (1ULL << 32)) {
    throw std::runtime_error("checkpoint: bad shape");
  }
  const std::size_t count = static_cast<std::size_t>(rows * cols);
  if (bytes.size() != kHeaderSize + 8 * count + 8) throw std::runtime_error("checkpoint: size mismatch");
  const std::size_t body = kHeaderSize + 8 * count;
  if (get_u64(bytes.data() + body) != fnv1a64(bytes.data(), body)) {
    throw std::runtime_error("checkpoint: checksum mismatch");
  }
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) data[i] = std::bit_cast<double>(get_u64(bytes.data() + kHeaderSize + 8 * i));
  return Checkpoint{static_cast<CheckpointKind>(kind), version,
                    LogitTable(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), std::move(data))};
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace {

void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Policy& policy) {
  write_bytes(path, encode_checkpoint(policy, CheckpointKind::policy, policy.version()));
}

void write_checkpoint(const std::filesystem::path& path, const PolicySnapshot& snapshot) {
  write_bytes(path, encode_checkpoint(snapshot, CheckpointKind::snapshot, snapshot.taken_at_version()));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

Policy policy_from_checkpoint(const Checkpoint& ckpt) { return Policy(ckpt.logits, ckpt.version); }

PolicySnapshot snapshot_from_checkpoint(const Checkpoint& ckpt) { return PolicySnapshot(ckpt.logits, ckpt.version); }

}  // namespace pualign
