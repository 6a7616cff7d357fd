#include "spda/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "spda/errors.hpp"

namespace spda {

namespace {

constexpr char kMagic[5] = {'S', 'P', 'D', 'A', '1'};

class Writer {
 public:
  explicit Writer(const std::string& path) : f_(path, std::ios::binary) {
    if (!f_) throw FormatError("cannot create " + path);
  }
  void bytes(const void* p, size_t n) { f_.write(static_cast<const char*>(p), n); }
  void u8(uint8_t v) { bytes(&v, 1); }
  void u64(uint64_t v) {
    uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<uint8_t>(v >> (8 * i));
    bytes(b, 8);
  }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void tensor(const Tensor& t) {
    u64(static_cast<uint64_t>(t.size()));
    for (long i = 0; i < t.size(); ++i) f64(t.data()[i]);
  }
  bool ok() const { return static_cast<bool>(f_); }

 private:
  std::ofstream f_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path), f_(path, std::ios::binary) {
    if (!f_) throw FormatError("cannot open " + path);
  }
  void bytes(void* p, size_t n) {
    f_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(f_.gcount()) != n)
      throw FormatError("truncated checkpoint: " + path_);
  }
  uint8_t u8() {
    uint8_t v;
    bytes(&v, 1);
    return v;
  }
  uint64_t u64() {
    uint8_t b[8];
    bytes(b, 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() {
    uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  Tensor tensor() {
    uint64_t count = u64();
    if (count > (1ull << 32)) throw FormatError("oversized tensor block in " + path_);
    Tensor t({static_cast<long>(count)});
    for (uint64_t i = 0; i < count; ++i) t[static_cast<long>(i)] = f64();
    return t;
  }
  bool at_eof() {
    f_.peek();
    return f_.eof();
  }

 private:
  std::string path_;
  std::ifstream f_;
};

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::string tmp = path + ".tmp";
  {
    Writer w(tmp);
    w.bytes(kMagic, 5);
    w.bytes(ckpt.config_hash.data(), 32);
    w.u64(ckpt.tensors.size());
    for (const Tensor& t : ckpt.tensors) w.tensor(t);
    w.u8(static_cast<uint8_t>(ckpt.opt.kind));
    w.u64(static_cast<uint64_t>(ckpt.opt.t));
    w.f64(ckpt.opt.alpha);
    w.f64(ckpt.opt.lambda);
    w.u8(static_cast<uint8_t>(ckpt.opt.lr_mode));
    w.f64(ckpt.opt.eta);
    w.u64(ckpt.opt.gbar.size());
    for (const Tensor& t : ckpt.opt.gbar) w.tensor(t);
    w.u64(static_cast<uint64_t>(ckpt.epoch));
    w.u8(ckpt.phase);
    w.u64(ckpt.masks.size());
    for (const std::vector<uint8_t>& m : ckpt.masks) {
      w.u64(m.size());
      std::vector<uint8_t> packed((m.size() + 7) / 8, 0);
      for (size_t i = 0; i < m.size(); ++i)
        if (m[i]) packed[i / 8] |= static_cast<uint8_t>(1u << (i % 8));
      if (!packed.empty()) w.bytes(packed.data(), packed.size());
    }
    if (!w.ok()) throw FormatError("short write to " + tmp);
  }
  // Atomic-enough replace so an interrupted save never corrupts the previous
  // checkpoint.
  std::remove(path.c_str());
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw FormatError("cannot move checkpoint into place: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[5];
  r.bytes(magic, 5);
  if (std::memcmp(magic, kMagic, 5) != 0)
    throw FormatError("bad checkpoint magic in " + path);
  Checkpoint c;
  r.bytes(c.config_hash.data(), 32);
  uint64_t n_tensors = r.u64();
  if (n_tensors > 4096) throw FormatError("implausible tensor count in " + path);
  c.tensors.reserve(n_tensors);
  for (uint64_t i = 0; i < n_tensors; ++i) c.tensors.push_back(r.tensor());
  uint8_t kind = r.u8();
  if (kind > 4) throw FormatError("bad optimizer kind in " + path);
  c.opt.kind = static_cast<OptKind>(kind);
  c.opt.t = static_cast<long>(r.u64());
  c.opt.alpha = r.f64();
  c.opt.lambda = r.f64();
  uint8_t mode = r.u8();
  if (mode > 1) throw FormatError("bad lr mode in " + path);
  c.opt.lr_mode = static_cast<LrMode>(mode);
  c.opt.eta = r.f64();
  uint64_t n_gbar = r.u64();
  if (n_gbar > 4096) throw FormatError("implausible gbar count in " + path);
  for (uint64_t i = 0; i < n_gbar; ++i) c.opt.gbar.push_back(r.tensor());
  c.epoch = static_cast<long>(r.u64());
  c.phase = r.u8();
  if (c.phase != 1 && c.phase != 2) throw FormatError("bad phase byte in " + path);
  uint64_t n_masks = r.u64();
  if (n_masks > 4096) throw FormatError("implausible mask count in " + path);
  for (uint64_t i = 0; i < n_masks; ++i) {
    uint64_t nbits = r.u64();
    if (nbits > (1ull << 32)) throw FormatError("oversized mask in " + path);
    std::vector<uint8_t> packed((nbits + 7) / 8);
    if (!packed.empty()) r.bytes(packed.data(), packed.size());
    std::vector<uint8_t> mask(nbits);
    for (uint64_t b = 0; b < nbits; ++b)
      mask[b] = (packed[b / 8] >> (b % 8)) & 1u;
    c.masks.push_back(std::move(mask));
  }
  if (!r.at_eof()) throw FormatError("trailing bytes in " + path);
  return c;
}

}  // namespace spda
