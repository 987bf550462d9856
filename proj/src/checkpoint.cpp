#include "hsicnet/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "hsicnet/error.hpp"

namespace hsicnet::ckpt {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {
constexpr char kMagic[8] = {'H', 'S', 'N', 'C', 'K', 'P', 'T', '1'};

void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::ifstream& in, const std::string& path) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) fail(ErrorKind::data, "checkpoint truncated: " + path);
  return v;
}
}  // namespace

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::data, "cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_u64(out, c.config_json.size());
  out.write(c.config_json.data(), static_cast<std::streamsize>(c.config_json.size()));
  write_u64(out, c.arrays.size());
  for (const auto& [name, values] : c.arrays) {
    write_u64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(out, values.size());
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
  }
  if (!out) fail(ErrorKind::data, "checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::data, "cannot open checkpoint: " + path);
  in.seekg(0, std::ios::end);
  const std::uint64_t file_size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  // Length fields come from the file; check them against the bytes actually
  // present before allocating, so a corrupt header cannot demand gigabytes.
  auto require_bytes = [&](std::uint64_t want) {
    std::uint64_t at = static_cast<std::uint64_t>(in.tellg());
    if (want > file_size - at)
      fail(ErrorKind::data, "checkpoint truncated: " + path);
  };
  char magic[sizeof(kMagic)] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    fail(ErrorKind::data, "not a checkpoint file: " + path);

  Checkpoint c;
  std::uint64_t json_len = read_u64(in, path);
  require_bytes(json_len);
  c.config_json.resize(json_len);
  in.read(c.config_json.data(), static_cast<std::streamsize>(json_len));
  if (!in) fail(ErrorKind::data, "checkpoint truncated: " + path);

  std::uint64_t count = read_u64(in, path);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint64_t name_len = read_u64(in, path);
    require_bytes(name_len);
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    std::uint64_t n = read_u64(in, path);
    if (n > file_size / sizeof(double))
      fail(ErrorKind::data, "checkpoint truncated: " + path);
    require_bytes(n * sizeof(double));
    std::vector<double> values(n);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) fail(ErrorKind::data, "checkpoint truncated: " + path);
    if (!c.arrays.emplace(std::move(name), std::move(values)).second)
      fail(ErrorKind::data, "checkpoint has a duplicate array name: " + path);
  }
  char extra;
  if (in.read(&extra, 1))
    fail(ErrorKind::data, "checkpoint has trailing bytes: " + path);
  return c;
}

}  // namespace hsicnet::ckpt
