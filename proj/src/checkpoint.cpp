#include "drpn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>

#include "drpn/layer.hpp"
#include "drpn/toynet.hpp"

namespace drpn::io {

namespace {

constexpr char kMagic[4] = {'D', 'R', 'P', 'N'};
constexpr std::uint16_t kVersion = 1;

void put_bytes(std::ostream& out, const void* p, std::size_t len) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(len));
}

template <typename T>
void put_le(std::ostream& out, T v) {
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i)
    bytes[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
  put_bytes(out, bytes, sizeof(T));
}

void put_f64_le(std::ostream& out, double d) {
  put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(d));
}

void get_bytes(std::istream& in, void* p, std::size_t len, const char* what) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(len));
  if (static_cast<std::size_t>(in.gcount()) != len)
    throw std::runtime_error(std::string("checkpoint: truncated ") + what);
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  unsigned char bytes[sizeof(T)];
  get_bytes(in, bytes, sizeof(T), what);
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return static_cast<T>(v);
}

double get_f64_le(std::istream& in, const char* what) {
  return std::bit_cast<double>(get_le<std::uint64_t>(in, what));
}

}  // namespace

std::size_t NamedTensor::element_count() const {
  std::size_t n = 1;
  for (std::uint32_t d : dims) n *= d;
  return n;
}

void save_checkpoint(const TensorEntries& entries, std::ostream& out) {
  std::set<std::string> seen;
  for (const auto& [name, tensor] : entries) {
    if (name.empty()) throw std::invalid_argument("checkpoint: empty tensor name");
    if (name.size() > 0xffff) throw std::invalid_argument("checkpoint: name too long");
    if (!seen.insert(name).second)
      throw std::invalid_argument("checkpoint: duplicate tensor name '" + name + "'");
    if (tensor.dims.size() > 0xff) throw std::invalid_argument("checkpoint: rank too large");
    if (tensor.values.size() != tensor.element_count())
      throw std::invalid_argument("checkpoint: payload does not match dims for '" + name +
                                  "'");
  }

  put_bytes(out, kMagic, 4);
  put_le<std::uint16_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, tensor] : entries) {
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    put_bytes(out, name.data(), name.size());
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(tensor.dims.size()));
    for (std::uint32_t d : tensor.dims) put_le<std::uint32_t>(out, d);
    for (double v : tensor.values) put_f64_le(out, v);
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

TensorEntries load_checkpoint(std::istream& in) {
  char magic[4];
  get_bytes(in, magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  const auto version = get_le<std::uint16_t>(in, "version");
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

  const auto count = get_le<std::uint32_t>(in, "entry count");
  TensorEntries entries;
  entries.reserve(count);
  std::set<std::string> seen;
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto name_len = get_le<std::uint16_t>(in, "name length");
    std::string name(name_len, '\0');
    if (name_len > 0) get_bytes(in, name.data(), name_len, "name");
    if (!seen.insert(name).second)
      throw std::runtime_error("checkpoint: duplicate tensor name '" + name + "'");

    NamedTensor tensor;
    const auto rank = get_le<std::uint8_t>(in, "rank");
    tensor.dims.resize(rank);
    for (auto& d : tensor.dims) d = get_le<std::uint32_t>(in, "dims");
    tensor.values.resize(tensor.element_count());
    for (auto& v : tensor.values) v = get_f64_le(in, "payload");
    entries.emplace_back(std::move(name), std::move(tensor));
  }
  return entries;
}

void save_checkpoint_file(const TensorEntries& entries, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
  save_checkpoint(entries, out);
}

TensorEntries load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  return load_checkpoint(in);
}

namespace {

NamedTensor from_kernel(const Kernel4& k) {
  NamedTensor t;
  t.dims = {static_cast<std::uint32_t>(k.co), static_cast<std::uint32_t>(k.ci),
            static_cast<std::uint32_t>(k.kh), static_cast<std::uint32_t>(k.kw)};
  t.values = k.data;
  return t;
}

NamedTensor from_matrix(const Matrix& m) {
  NamedTensor t;
  t.dims = {static_cast<std::uint32_t>(m.rows), static_cast<std::uint32_t>(m.cols)};
  t.values = m.data;
  return t;
}

const NamedTensor& find_entry(const TensorEntries& entries, const std::string& name) {
  for (const auto& [n, t] : entries)
    if (n == name) return t;
  throw std::runtime_error("checkpoint: missing tensor '" + name + "'");
}

Kernel4 to_kernel(const NamedTensor& t, const std::string& name) {
  if (t.dims.size() != 4)
    throw std::runtime_error("checkpoint: '" + name + "' is not rank 4");
  Kernel4 k(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]),
            static_cast<int>(t.dims[2]), static_cast<int>(t.dims[3]));
  k.data = t.values;
  return k;
}

Matrix to_matrix(const NamedTensor& t, const std::string& name) {
  if (t.dims.size() != 2)
    throw std::runtime_error("checkpoint: '" + name + "' is not rank 2");
  Matrix m(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]));
  m.data = t.values;
  return m;
}

void pack_layer(TensorEntries& entries, const std::string& prefix, const DrpnLayer& l) {
  entries.emplace_back(prefix + ".f1", from_kernel(l.f1));
  entries.emplace_back(prefix + ".f2", from_kernel(l.f2));
  entries.emplace_back(prefix + ".k3x3", from_kernel(l.k3x3));
  entries.emplace_back(prefix + ".k1x3", from_kernel(l.k1x3));
  entries.emplace_back(prefix + ".k3x1", from_kernel(l.k3x1));
  entries.emplace_back(prefix + ".k1x1", from_kernel(l.k1x1));
}

DrpnLayer unpack_layer(const TensorEntries& entries, const std::string& prefix) {
  auto kernel = [&](const char* field) {
    const std::string name = prefix + "." + field;
    return to_kernel(find_entry(entries, name), name);
  };
  return DrpnLayer::make(kernel("f1"), kernel("f2"), kernel("k3x3"), kernel("k1x3"),
                         kernel("k3x1"), kernel("k1x1"));
}

}  // namespace

TensorEntries pack_toynet(const toy::ToyNet& net) {
  TensorEntries entries;
  pack_layer(entries, "drpn1", net.drpn1);
  pack_layer(entries, "drpn2", net.drpn2);
  entries.emplace_back("head.w", from_matrix(net.head_w));
  entries.emplace_back("head.b", from_matrix(net.head_b));
  return entries;
}

toy::ToyNet unpack_toynet(const TensorEntries& entries) {
  toy::ToyNet net;
  net.drpn1 = unpack_layer(entries, "drpn1");
  net.drpn2 = unpack_layer(entries, "drpn2");
  net.head_w = to_matrix(find_entry(entries, "head.w"), "head.w");
  net.head_b = to_matrix(find_entry(entries, "head.b"), "head.b");
  net.n_classes = net.head_w.cols;
  return net;
}

}  // namespace drpn::io
