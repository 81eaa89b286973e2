#include "sevpr/snn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "sevpr/errors.hpp"

namespace sevpr::snn {

namespace {

constexpr char kMagic[4] = {'S', 'E', 'W', '1'};

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(char((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& buf, float f) {
  std::uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(buf, v);
}

class Reader {
public:
  Reader(std::string blob, std::string path)
      : blob_(std::move(blob)), path_(std::move(path)) {}

  std::uint32_t u32() {
    need(4);
    const auto* p = reinterpret_cast<const unsigned char*>(blob_.data() + pos_);
    pos_ += 4;
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
           (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
  }
  float f32() {
    const std::uint32_t v = u32();
    float f;
    std::memcpy(&f, &v, 4);
    return f;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = blob_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void expect_magic() {
    need(4);
    if (std::memcmp(blob_.data(), kMagic, 4) != 0)
      throw io_error(path_ + ": offset 0: missing SEW1 magic");
    pos_ = 4;
  }
  bool done() const { return pos_ == blob_.size(); }
  void fail_if_trailing() const {
    if (!done())
      throw io_error(path_ + ": trailing bytes after offset " + std::to_string(pos_));
  }

private:
  void need(std::size_t n) {
    if (pos_ + n > blob_.size())
      throw io_error(path_ + ": truncated at offset " + std::to_string(pos_));
  }
  std::string blob_;
  std::string path_;
  std::size_t pos_ = 0;
};

} // namespace

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  std::string buf;
  buf.append(kMagic, 4);
  put_u32(buf, std::uint32_t(c.manifest.size()));
  for (const auto& s : c.manifest) {
    put_u32(buf, std::uint32_t(s.size()));
    buf.append(s);
  }
  put_u32(buf, std::uint32_t(c.tensors.size()));
  for (const auto& t : c.tensors) {
    put_u32(buf, std::uint32_t(t.name.size()));
    buf.append(t.name);
    put_u32(buf, std::uint32_t(t.shape.size()));
    std::size_t n = 1;
    for (int d : t.shape) {
      put_u32(buf, std::uint32_t(d));
      n *= std::size_t(d);
    }
    if (n != t.data.size())
      throw io_error("checkpoint tensor '" + t.name + "': shape/data mismatch");
    for (float f : t.data) put_f32(buf, f);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot write checkpoint: " + path);
  out.write(buf.data(), std::streamsize(buf.size()));
  if (!out) throw io_error("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open checkpoint: " + path);
  std::string blob((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  Reader r(std::move(blob), path);
  r.expect_magic();
  Checkpoint c;
  const std::uint32_t nsec = r.u32();
  for (std::uint32_t i = 0; i < nsec; ++i) c.manifest.push_back(r.str(r.u32()));
  const std::uint32_t nt = r.u32();
  for (std::uint32_t i = 0; i < nt; ++i) {
    NamedTensorF32 t;
    t.name = r.str(r.u32());
    const std::uint32_t nd = r.u32();
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < nd; ++d) {
      t.shape.push_back(int(r.u32()));
      n *= std::size_t(t.shape.back());
    }
    t.data.resize(n);
    for (std::size_t j = 0; j < n; ++j) t.data[j] = r.f32();
    c.tensors.push_back(std::move(t));
  }
  r.fail_if_trailing();
  return c;
}

Checkpoint snapshot(const ParamRegistry& reg, std::vector<std::string> manifest) {
  Checkpoint c;
  c.manifest = std::move(manifest);
  for (const auto& e : reg.entries()) {
    NamedTensorF32 t;
    t.name = e.name;
    t.shape = e.shape;
    t.data.resize(e.n);
    for (std::size_t i = 0; i < e.n; ++i) t.data[i] = float(e.w[i]);
    c.tensors.push_back(std::move(t));
  }
  return c;
}

void restore(const Checkpoint& c, const ParamRegistry& reg) {
  if (c.tensors.size() != reg.entries().size())
    throw io_error("checkpoint has " + std::to_string(c.tensors.size()) +
                   " tensors, model expects " +
                   std::to_string(reg.entries().size()));
  for (const auto& t : c.tensors) {
    const auto* e = reg.find(t.name);
    if (!e) throw io_error("checkpoint tensor '" + t.name + "' unknown to model");
    if (t.shape != e->shape || t.data.size() != e->n)
      throw io_error("checkpoint tensor '" + t.name + "': shape mismatch");
    for (std::size_t i = 0; i < e->n; ++i) e->w[i] = double(t.data[i]);
  }
}

} // namespace sevpr::snn
