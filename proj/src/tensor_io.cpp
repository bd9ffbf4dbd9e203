#include "declip/tensor_io.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "declip/errors.hpp"

namespace declip::ad {
namespace {

constexpr char kMagic[4] = {'D', 'T', 'N', '1'};
constexpr std::uint32_t kMaxRank = 8;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw DataError("tensor block: truncated header");
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_tensor(std::ostream& out, const Tensor& t) {
  if (!t.defined()) throw InvalidArgument("write_tensor: undefined tensor");
  out.write(kMagic, 4);
  const Shape& s = t.shape();
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  for (int d : s) put_u32(out, static_cast<std::uint32_t>(d));
  static_assert(sizeof(double) == 8);
  const auto v = t.values();
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!out) throw DataError("write_tensor: stream write failed");
}

Tensor read_tensor(std::istream& in, bool requires_grad) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("tensor block: bad magic");
  const std::uint32_t rank = get_u32(in);
  if (rank == 0 || rank > kMaxRank)
    throw DataError("tensor block: unsupported rank " + std::to_string(rank));
  Shape shape(rank);
  std::size_t n = 1;
  for (std::uint32_t d = 0; d < rank; ++d) {
    const std::uint32_t e = get_u32(in);
    if (e == 0 || e > (1u << 30))
      throw DataError("tensor block: bad extent " + std::to_string(e));
    shape[d] = static_cast<int>(e);
    n *= e;
  }
  std::vector<double> values(n);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw DataError("tensor block: truncated data");
  return requires_grad ? Tensor::variable(shape, std::move(values))
                       : Tensor::constant(shape, std::move(values));
}

std::size_t tensor_block_size(const Tensor& t) {
  return 4 + 4 + 4 * t.shape().size() + sizeof(double) * t.values().size();
}

void save_tensor(const std::string& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  write_tensor(out, t);
}

Tensor load_tensor(const std::string& path, bool requires_grad) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  return read_tensor(in, requires_grad);
}

}  // namespace declip::ad
