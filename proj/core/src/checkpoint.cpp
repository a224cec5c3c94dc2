#include "sdlf/checkpoint.hpp"

#include "io_util.hpp"

namespace sdlf::io {

using namespace detail;

void save_checkpoint(const std::string &path, const Checkpoint &c) {
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw IoError("save_checkpoint: cannot open '" + path + "'");
  os.write("SDLC", 4);
  put_u32(os, 1);
  put_u32(os, static_cast<std::uint32_t>(c.tensors.size()));
  for (const auto &t : c.tensors) {
    if (t.name.size() > 0xffff)
      throw IoError("save_checkpoint: tensor name too long");
    put_u16(os, static_cast<std::uint16_t>(t.name.size()));
    os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_u8(os, static_cast<std::uint8_t>(t.dtype));
    put_u8(os, static_cast<std::uint8_t>(t.shape.size()));
    for (int d : t.shape)
      put_u32(os, static_cast<std::uint32_t>(d));
    const std::int64_t n = t.numel();
    if (t.dtype == 0) {
      if (static_cast<std::int64_t>(t.f32.size()) != n)
        throw IoError("save_checkpoint: tensor '" + t.name + "' size mismatch");
      for (float v : t.f32)
        put_f32(os, v);
    } else if (t.dtype == 1) {
      if (static_cast<std::int64_t>(t.f64.size()) != n)
        throw IoError("save_checkpoint: tensor '" + t.name + "' size mismatch");
      for (double v : t.f64)
        put_f64(os, v);
    } else {
      throw IoError("save_checkpoint: unknown dtype code " + std::to_string(t.dtype));
    }
  }
  put_u32(os, static_cast<std::uint32_t>(c.config_blob.size()));
  os.write(c.config_blob.data(), static_cast<std::streamsize>(c.config_blob.size()));
  if (!os)
    throw IoError("save_checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw IoError("load_checkpoint: cannot open '" + path + "'");
  expect_magic(is, "SDLC", "load_checkpoint('" + path + "')");
  const std::uint32_t version = get_u32(is);
  if (version != 1)
    throw IoError("load_checkpoint: unsupported version " + std::to_string(version));
  const std::uint32_t count = get_u32(is);
  Checkpoint c;
  c.tensors.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedTensor t;
    const std::uint16_t len = get_u16(is);
    t.name.resize(len);
    is.read(t.name.data(), len);
    if (!is)
      throw IoError("load_checkpoint: truncated name");
    t.dtype = get_u8(is);
    if (t.dtype != 0 && t.dtype != 1)
      throw IoError("load_checkpoint: tensor '" + t.name + "' has unknown dtype code " +
                    std::to_string(t.dtype));
    const int ndim = get_u8(is);
    t.shape.resize(static_cast<std::size_t>(ndim));
    for (int d = 0; d < ndim; ++d)
      t.shape[static_cast<std::size_t>(d)] = static_cast<int>(get_u32(is));
    const std::int64_t n = t.numel();
    if (n < 0 || n > (1ll << 32))
      throw IoError("load_checkpoint: implausible tensor size");
    if (t.dtype == 0) {
      t.f32.resize(static_cast<std::size_t>(n));
      for (auto &v : t.f32)
        v = get_f32(is);
    } else {
      t.f64.resize(static_cast<std::size_t>(n));
      for (auto &v : t.f64)
        v = get_f64(is);
    }
    c.tensors.push_back(std::move(t));
  }
  const std::uint32_t blob_len = get_u32(is);
  c.config_blob.resize(blob_len);
  is.read(c.config_blob.data(), blob_len);
  if (!is)
    throw IoError("load_checkpoint: truncated config blob");
  return c;
}

} // namespace sdlf::io
