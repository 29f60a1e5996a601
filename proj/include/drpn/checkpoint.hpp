#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace drpn::toy {
struct ToyNet;
}

namespace drpn::io {

// Checkpoint container format (all integers little-endian):
//   magic "DRPN" | version u16 (=1) | entry count u32 | entries...
// Entry: name length u16 | name bytes (utf-8) | rank u8 | dims u32 x rank |
//        payload f64 x prod(dims), row-major.
// Round trips are bit-identical.

struct NamedTensor {
  std::vector<std::uint32_t> dims;
  std::vector<double> values;

  std::size_t element_count() const;
};

using TensorEntries = std::vector<std::pair<std::string, NamedTensor>>;

void save_checkpoint(const TensorEntries& entries, std::ostream& out);
TensorEntries load_checkpoint(std::istream& in);

void save_checkpoint_file(const TensorEntries& entries, const std::string& path);
TensorEntries load_checkpoint_file(const std::string& path);

// Named-tensor packing of the toy classifier (drpn1.*, drpn2.*, head.*).
TensorEntries pack_toynet(const toy::ToyNet& net);
toy::ToyNet unpack_toynet(const TensorEntries& entries);

}  // namespace drpn::io
