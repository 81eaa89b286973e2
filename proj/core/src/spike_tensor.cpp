#include "sevpr/spike_tensor.hpp"

#include <cstring>
#include <fstream>

#include "sevpr/errors.hpp"

namespace sevpr {

namespace {
constexpr char kMagic[4] = {'S', 'P', 'K', '1'};

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(char((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
} // namespace

void SpikeTensor::validate(const char* what) const {
  if (t <= 0 || c <= 0 || h <= 0 || w <= 0)
    throw numeric_error(std::string(what) + ": non-positive spike tensor dims");
  if (data.size() != std::size_t(t) * c * h * w)
    throw numeric_error(std::string(what) + ": spike tensor size/dims mismatch");
  for (std::uint8_t v : data)
    if (v > 1)
      throw numeric_error(std::string(what) + ": spike tensor element not in {0,1}");
}

std::size_t SpikeTensor::count_ones() const {
  std::size_t n = 0;
  for (std::uint8_t v : data) n += v;
  return n;
}

void save_spike_tensor(const SpikeTensor& s, const std::string& path) {
  s.validate("save_spike_tensor");
  std::string buf;
  buf.reserve(20 + (s.size() + 7) / 8);
  buf.append(kMagic, 4);
  put_u32(buf, std::uint32_t(s.t));
  put_u32(buf, std::uint32_t(s.c));
  put_u32(buf, std::uint32_t(s.h));
  put_u32(buf, std::uint32_t(s.w));
  std::uint8_t byte = 0;
  int nbits = 0;
  for (std::uint8_t v : s.data) {
    byte |= std::uint8_t(v << nbits);
    if (++nbits == 8) {
      buf.push_back(char(byte));
      byte = 0;
      nbits = 0;
    }
  }
  if (nbits > 0) buf.push_back(char(byte));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot write spike tensor: " + path);
  out.write(buf.data(), std::streamsize(buf.size()));
  if (!out) throw io_error("write failed: " + path);
}

SpikeTensor load_spike_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open spike tensor: " + path);
  std::string blob((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (blob.size() < 20 || std::memcmp(blob.data(), kMagic, 4) != 0)
    throw io_error(path + ": offset 0: missing SPK1 magic");
  const auto* p = reinterpret_cast<const unsigned char*>(blob.data());
  SpikeTensor s(int(get_u32(p + 4)), int(get_u32(p + 8)), int(get_u32(p + 12)),
                int(get_u32(p + 16)));
  const std::size_t need = 20 + (s.size() + 7) / 8;
  if (blob.size() != need)
    throw io_error(path + ": payload size " + std::to_string(blob.size() - 20) +
                   " does not match dims");
  for (std::size_t i = 0; i < s.size(); ++i)
    s.data[i] = (p[20 + i / 8] >> (i % 8)) & 1;
  return s;
}

} // namespace sevpr
