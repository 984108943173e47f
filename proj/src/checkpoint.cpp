#include "minopt/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace minopt {

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'M', 'I', 'N', 'C', 'K', 'P', 'T', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

bool read_u32(std::istream& in, std::uint32_t& v) {
  in.read(reinterpret_cast<char*>(&v), 4);
  return in.gcount() == 4;
}

}  // namespace

const Tensor& NamedTensors::get(const std::string& name) const {
  for (const auto& [n, t] : items)
    if (n == name) return t;
  throw std::out_of_range("checkpoint: no tensor named " + name);
}

bool NamedTensors::has(const std::string& name) const {
  for (const auto& [n, t] : items)
    if (n == name) return true;
  return false;
}

void save_checkpoint(const std::filesystem::path& path,
                     const NamedTensors& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out.write(kMagic, sizeof(kMagic));
  for (const auto& [name, t] : tensors.items) {
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), std::streamsize(name.size()));
    write_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape()) write_u32(out, static_cast<std::uint32_t>(e));
    out.write(reinterpret_cast<const char*>(t.data()),
              std::streamsize(t.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

NamedTensors load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("not a MINCKPT1 checkpoint: " + path.string());

  NamedTensors out;
  for (;;) {
    std::uint32_t name_len;
    if (!read_u32(in, name_len)) {
      if (in.eof()) break;  // clean end after a whole record
      throw std::runtime_error("truncated checkpoint: " + path.string());
    }
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    std::uint32_t rank;
    if (std::size_t(in.gcount()) != name_len || !read_u32(in, rank))
      throw std::runtime_error("truncated checkpoint: " + path.string());
    Shape shape(rank);
    std::size_t n = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      std::uint32_t e;
      if (!read_u32(in, e) || e == 0)
        throw std::runtime_error("truncated checkpoint: " + path.string());
      shape[i] = e;
      n *= e;
    }
    std::vector<double> data(n);
    in.read(reinterpret_cast<char*>(data.data()),
            std::streamsize(n * sizeof(double)));
    if (std::size_t(in.gcount()) != n * sizeof(double))
      throw std::runtime_error("truncated checkpoint: " + path.string());
    out.add(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return out;
}

}  // namespace minopt
