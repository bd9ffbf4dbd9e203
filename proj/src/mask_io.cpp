#include "declip/mask_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "declip/errors.hpp"

namespace declip {

namespace {
constexpr char kMagic[4] = {'D', 'C', 'M', '1'};
}

void write_mask(const std::string& path, const ClipMask& mask) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("write_mask: cannot open " + path + " for writing");
  os.write(kMagic, 4);
  const std::uint32_t n = static_cast<std::uint32_t>(mask.size());
  char len[4];
  for (int i = 0; i < 4; ++i) len[i] = static_cast<char>((n >> (8 * i)) & 0xff);
  os.write(len, 4);
  for (SampleLabel l : mask.labels)
    os.put(static_cast<char>(static_cast<std::uint8_t>(l)));
  if (!os) throw DataError("write_mask: short write to " + path);
}

ClipMask read_mask(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("read_mask: cannot open " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw DataError("read_mask: " + path + " is not a mask sidecar");
  std::uint32_t n = 0;
  for (int i = 0; i < 4; ++i)
    n |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 + i]))
         << (8 * i);
  if (bytes.size() != 8 + static_cast<std::size_t>(n))
    throw DataError("read_mask: " + path + " length does not match header");
  ClipMask m;
  m.labels.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const unsigned char v = static_cast<unsigned char>(bytes[8 + i]);
    if (v > 2)
      throw DataError("read_mask: invalid label value in " + path);
    m.labels[i] = static_cast<SampleLabel>(v);
  }
  return m;
}

}  // namespace declip
