#include "spda/data.hpp"

#include <zlib.h>

#include <filesystem>
#include <numeric>

#include "spda/errors.hpp"
#include "spda/rng.hpp"

namespace spda {

namespace {

class GzReader {
 public:
  explicit GzReader(const std::string& path) : path_(path), f_(gzopen(path.c_str(), "rb")) {
    if (!f_) throw FormatError("cannot open " + path);
  }
  ~GzReader() {
    if (f_) gzclose(f_);
  }
  GzReader(const GzReader&) = delete;
  GzReader& operator=(const GzReader&) = delete;

  void read_exact(void* dst, size_t n) {
    int got = gzread(f_, dst, static_cast<unsigned>(n));
    if (got < 0 || static_cast<size_t>(got) != n)
      throw FormatError("truncated IDX file: " + path_);
  }

  uint32_t read_be32() {
    uint8_t b[4];
    read_exact(b, 4);
    return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) |
           uint32_t(b[3]);
  }

  bool at_eof() {
    uint8_t probe;
    return gzread(f_, &probe, 1) == 0;
  }

 private:
  std::string path_;
  gzFile f_;
};

}  // namespace

IdxData read_idx(const std::string& path) {
  GzReader in(path);
  IdxData out;
  out.magic = in.read_be32();
  if ((out.magic >> 16) != 0 || ((out.magic >> 8) & 0xff) != 0x08)
    throw FormatError("bad IDX magic in " + path);
  long ndims = static_cast<long>(out.magic & 0xff);
  if (ndims < 1 || ndims > 4) throw FormatError("unsupported IDX rank in " + path);
  long count = 1;
  for (long i = 0; i < ndims; ++i) {
    uint32_t d = in.read_be32();
    if (d == 0 || d > (1u << 28)) throw FormatError("bad IDX dimension in " + path);
    out.dims.push_back(static_cast<long>(d));
    count *= static_cast<long>(d);
    if (count > (1L << 31)) throw FormatError("oversized IDX payload in " + path);
  }
  out.bytes.resize(static_cast<size_t>(count));
  in.read_exact(out.bytes.data(), out.bytes.size());
  if (!in.at_eof()) throw FormatError("trailing bytes in " + path);
  return out;
}

void write_idx(const std::string& path, const IdxData& data) {
  if (data.dims.empty() || data.dims.size() > 4)
    throw FormatError("IDX rank must be 1..4");
  long count = 1;
  for (long d : data.dims) count *= d;
  if (count != static_cast<long>(data.bytes.size()))
    throw FormatError("IDX dims do not match payload size");
  gzFile f = gzopen(path.c_str(), "wb");
  if (!f) throw FormatError("cannot create " + path);
  auto put_be32 = [&](uint32_t v) {
    uint8_t b[4] = {uint8_t(v >> 24), uint8_t(v >> 16), uint8_t(v >> 8), uint8_t(v)};
    gzwrite(f, b, 4);
  };
  put_be32(0x00000800u | static_cast<uint32_t>(data.dims.size()));
  for (long d : data.dims) put_be32(static_cast<uint32_t>(d));
  if (!data.bytes.empty() &&
      gzwrite(f, data.bytes.data(), static_cast<unsigned>(data.bytes.size())) !=
          static_cast<int>(data.bytes.size())) {
    gzclose(f);
    throw FormatError("short write to " + path);
  }
  gzclose(f);
}

Tensor load_idx(const std::string& path) {
  IdxData raw = read_idx(path);
  Tensor out(raw.dims);
  bool image = raw.dims.size() >= 2;
  double scl = image ? 1.0 / 255.0 : 1.0;
  for (long i = 0; i < out.size(); ++i)
    out[i] = static_cast<double>(raw.bytes[static_cast<size_t>(i)]) * scl;
  return out;
}

namespace {

std::string resolve_mnist_file(const std::string& dir, const std::string& name) {
  namespace fs = std::filesystem;
  std::string gz = dir + "/" + name + ".gz";
  if (fs::exists(gz)) return gz;
  std::string plain = dir + "/" + name;
  if (fs::exists(plain)) return plain;
  throw FormatError("missing MNIST file " + name + "(.gz) under " + dir);
}

}  // namespace

LabeledDataset load_mnist(const std::string& dir, bool train) {
  std::string stem = train ? "train" : "t10k";
  Tensor images = load_idx(resolve_mnist_file(dir, stem + "-images-idx3-ubyte"));
  IdxData labels = read_idx(resolve_mnist_file(dir, stem + "-labels-idx1-ubyte"));
  if (images.rank() != 3) throw FormatError("MNIST image file must be rank 3");
  long n = images.dim(0);
  if (labels.dims.size() != 1 || labels.dims[0] != n)
    throw FormatError("MNIST image/label counts disagree");
  LabeledDataset ds;
  ds.inputs = Tensor({n, 1, images.dim(1), images.dim(2)}, images.raw());
  ds.labels.reserve(static_cast<size_t>(n));
  for (uint8_t b : labels.bytes) ds.labels.push_back(static_cast<int>(b));
  return ds;
}

LabeledDataset truncate_dataset(const LabeledDataset& ds, long n) {
  if (n < 0 || n >= ds.size()) return ds;
  if (n == 0) throw ConfigError("cannot truncate a dataset to zero samples");
  long per = ds.inputs.size() / ds.inputs.dim(0);
  Shape shape = ds.inputs.shape();
  shape[0] = n;
  std::vector<double> vals(ds.inputs.raw().begin(), ds.inputs.raw().begin() + n * per);
  LabeledDataset out;
  out.inputs = Tensor(shape, std::move(vals));
  out.labels.assign(ds.labels.begin(), ds.labels.begin() + n);
  return out;
}

MinibatchIterator::MinibatchIterator(long n, long batch_size, uint64_t epoch_seed)
    : perm_(static_cast<size_t>(n)), batch_(batch_size) {
  if (n < 1) throw ConfigError("minibatch iterator needs at least one sample");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  std::iota(perm_.begin(), perm_.end(), 0L);
  reset(epoch_seed);
}

void MinibatchIterator::reset(uint64_t epoch_seed) {
  std::iota(perm_.begin(), perm_.end(), 0L);
  Rng rng(epoch_seed);
  rng.shuffle(perm_);
  pos_ = 0;
}

bool MinibatchIterator::next(std::vector<long>& indices) {
  long n = static_cast<long>(perm_.size());
  if (pos_ >= n) return false;
  long take = std::min(batch_, n - pos_);
  indices.assign(perm_.begin() + pos_, perm_.begin() + pos_ + take);
  pos_ += take;
  return true;
}

long MinibatchIterator::num_batches() const {
  long n = static_cast<long>(perm_.size());
  return (n + batch_ - 1) / batch_;
}

}  // namespace spda
