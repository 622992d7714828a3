#include "cgan/autodiff/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <vector>

#include "cgan/util/atomic_file.hpp"

namespace cgan::ad {

namespace {

constexpr char kMagic[4] = {'C', 'G', 'A', 'N'};

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}
  [[nodiscard]] bool done() const { return pos_ == bytes_.size(); }
  [[nodiscard]] std::size_t remaining() const { return bytes_.size() - pos_; }

  template <typename T>
  T get() {
    need(sizeof(T));
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      value |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return value;
  }
  std::string get_string(std::size_t n) {
    need(n);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw CheckpointError("checkpoint: truncated file");
  }
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamList& params) {
  std::string out(kMagic, 4);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  for (const auto& p : params) {
    if (p.name().size() > 0xFFFF) throw CheckpointError("checkpoint: name too long: " + p.name());
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(p.name().size()));
    out += p.name();
    const auto& shape = p.shape();
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(shape.size()));
    for (auto e : shape) put_le<std::uint64_t>(out, e);
    for (double v : p.value().data()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  util::write_file_atomic(path, out);
}

void load_checkpoint(const std::filesystem::path& path, ParamList& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(std::move(bytes));
  if (r.get_string(4) != std::string(kMagic, 4)) throw CheckpointError("checkpoint: bad magic in " + path.string());
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
  }
  std::map<std::string, Tensor> entries;
  while (!r.done()) {
    const auto len = r.get<std::uint16_t>();
    std::string name = r.get_string(len);
    const auto rank = r.get<std::uint8_t>();
    Shape shape(rank);
    for (auto& e : shape) e = static_cast<std::size_t>(r.get<std::uint64_t>());
    const std::size_t numel = shape_numel(shape);
    if (numel > r.remaining() / sizeof(double)) throw CheckpointError("checkpoint: truncated payload for " + name);
    std::vector<double> data(numel);
    for (double& v : data) v = std::bit_cast<double>(r.get<std::uint64_t>());
    Tensor value(shape, std::move(data));
    if (!value.all_finite()) throw CheckpointError("checkpoint: non-finite values in " + name);
    if (!entries.emplace(name, std::move(value)).second) {
      throw CheckpointError("checkpoint: duplicate entry " + name);
    }
  }
  for (auto& p : params.params()) {
    auto it = entries.find(p.name());
    if (it == entries.end()) throw CheckpointError("checkpoint: missing parameter " + p.name());
    if (it->second.shape() != p.shape()) {
      throw CheckpointError("checkpoint: shape mismatch for " + p.name() + ": file " + shape_str(it->second.shape()) +
                            ", model " + shape_str(p.shape()));
    }
  }
  if (entries.size() != params.size()) throw CheckpointError("checkpoint: file holds unexpected extra parameters");
  for (auto& p : params.params()) p.mutable_value() = entries.at(p.name());
}

}  // namespace cgan::ad
