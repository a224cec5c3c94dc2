#include "sdlf/slice_io.hpp"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <sstream>

#include "io_util.hpp"

namespace sdlf::io {

namespace fs = std::filesystem;
using namespace detail;

namespace {

// planar [.,2,h,w] -> interleaved complex64 stream
void put_complex_planar(std::ostream &os, const float *p, std::size_t L) {
  for (std::size_t i = 0; i < L; ++i) {
    put_f32(os, p[i]);
    put_f32(os, p[L + i]);
  }
}

void get_complex_planar(std::istream &is, float *p, std::size_t L) {
  for (std::size_t i = 0; i < L; ++i) {
    p[i] = get_f32(is);
    p[L + i] = get_f32(is);
  }
}

} // namespace

void write_slice(const std::string &path, const Slice &s) {
  const std::size_t L = static_cast<std::size_t>(s.h) * s.w;
  if (s.kspace.size() != static_cast<std::size_t>(s.nc) * 2 * L ||
      s.smaps.size() != s.kspace.size() || (s.has_gt && s.gt.size() != 2 * L))
    throw IoError("write_slice: field sizes do not match header");
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw IoError("write_slice: cannot open '" + path + "'");
  os.write("SDLK", 4);
  put_u32(os, 1);
  put_u32(os, static_cast<std::uint32_t>(s.nc));
  put_u32(os, static_cast<std::uint32_t>(s.h));
  put_u32(os, static_cast<std::uint32_t>(s.w));
  for (int c = 0; c < s.nc; ++c)
    put_complex_planar(os, s.kspace.data() + static_cast<std::size_t>(c) * 2 * L, L);
  for (int c = 0; c < s.nc; ++c)
    put_complex_planar(os, s.smaps.data() + static_cast<std::size_t>(c) * 2 * L, L);
  put_u8(os, s.has_gt ? 1 : 0);
  if (s.has_gt)
    put_complex_planar(os, s.gt.data(), L);
  if (!os)
    throw IoError("write_slice: write failed for '" + path + "'");
}

Slice read_slice(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw IoError("read_slice: cannot open '" + path + "'");
  expect_magic(is, "SDLK", "read_slice('" + path + "')");
  const std::uint32_t version = get_u32(is);
  if (version != 1)
    throw IoError("read_slice: unsupported version " + std::to_string(version));
  Slice s;
  s.nc = static_cast<int>(get_u32(is));
  s.h = static_cast<int>(get_u32(is));
  s.w = static_cast<int>(get_u32(is));
  if (s.nc < 1 || s.nc > 1024 || s.h < 1 || s.w < 1 || s.h > 65536 || s.w > 65536)
    throw IoError("read_slice: implausible header in '" + path + "'");
  const std::size_t L = static_cast<std::size_t>(s.h) * s.w;
  s.kspace.resize(static_cast<std::size_t>(s.nc) * 2 * L);
  s.smaps.resize(s.kspace.size());
  for (int c = 0; c < s.nc; ++c)
    get_complex_planar(is, s.kspace.data() + static_cast<std::size_t>(c) * 2 * L, L);
  for (int c = 0; c < s.nc; ++c)
    get_complex_planar(is, s.smaps.data() + static_cast<std::size_t>(c) * 2 * L, L);
  s.has_gt = get_u8(is) != 0;
  if (s.has_gt) {
    s.gt.resize(2 * L);
    get_complex_planar(is, s.gt.data(), L);
  }
  s.name = fs::path(path).stem().string();
  return s;
}

Slice synth_slice(int nc, int h, int w, std::uint64_t seed) {
  const mri::ComplexImage<double> phantom = mri::make_phantom<double>(h, w, seed);
  const mri::CoilSensitivities<double> coils =
      mri::make_coils<double>(nc, h, w, derive_seed(seed, seed_stream::slice_synth, 1));
  mri::SamplingMask full;
  full.cols.assign(static_cast<std::size_t>(w), 1);
  full.accel = 1;
  const mri::KSpace<double> y = mri::apply_forward(phantom, coils, full);

  Slice s;
  s.nc = nc;
  s.h = h;
  s.w = w;
  s.kspace.assign(y.data.data().begin(), y.data.data().end());
  s.smaps.assign(coils.maps.data().begin(), coils.maps.data().end());

  // ground truth = float coil combine of the float k-space, the same
  // computation an evaluator runs on a fully sampled slice
  const mri::KSpace<float> yf = slice_kspace<float>(s);
  const mri::CoilSensitivities<float> sf = slice_smaps<float>(s);
  const mri::ComplexImage<float> gt = mri::coil_combine(yf, sf);
  s.has_gt = true;
  s.gt.assign(gt.data.data().begin(), gt.data.data().end());
  return s;
}

void write_manifest(const std::string &dir, const std::vector<DatasetEntry> &entries) {
  const fs::path p = fs::path(dir) / "manifest.txt";
  std::ofstream os(p);
  if (!os)
    throw IoError("write_manifest: cannot open '" + p.string() + "'");
  for (const auto &e : entries)
    os << e.file << " " << e.seed << "\n";
}

std::vector<DatasetEntry> synth_dataset(const std::string &dir, int n, int nc, int h,
                                        int w, std::uint64_t master_seed) {
  if (n < 1)
    throw ConfigError("synth_dataset: need at least one slice");
  fs::create_directories(dir);
  std::vector<DatasetEntry> entries;
  entries.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::uint64_t seed =
        derive_seed(master_seed, seed_stream::slice_synth, static_cast<std::uint64_t>(i));
    std::ostringstream name;
    name << "slice_" << std::setfill('0') << std::setw(4) << i << ".sdlk";
    const Slice s = synth_slice(nc, h, w, seed);
    write_slice((fs::path(dir) / name.str()).string(), s);
    entries.push_back({name.str(), seed});
  }
  write_manifest(dir, entries);
  return entries;
}

std::vector<DatasetEntry> list_dataset(const std::string &dir) {
  const fs::path manifest = fs::path(dir) / "manifest.txt";
  std::vector<DatasetEntry> entries;
  if (fs::exists(manifest)) {
    std::ifstream is(manifest);
    std::string file;
    std::uint64_t seed;
    while (is >> file >> seed)
      entries.push_back({file, seed});
    if (entries.empty())
      throw IoError("list_dataset: empty manifest in '" + dir + "'");
    return entries;
  }
  if (!fs::is_directory(dir))
    throw IoError("list_dataset: '" + dir + "' is not a directory");
  for (const auto &e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".sdlk")
      entries.push_back({e.path().filename().string(), 0});
  std::sort(entries.begin(), entries.end(),
            [](const DatasetEntry &a, const DatasetEntry &b) { return a.file < b.file; });
  if (entries.empty())
    throw IoError("list_dataset: no .sdlk slices in '" + dir + "'");
  return entries;
}

std::vector<Slice> load_dataset(const std::string &dir) {
  std::vector<Slice> slices;
  for (const auto &e : list_dataset(dir))
    slices.push_back(read_slice((fs::path(dir) / e.file).string()));
  return slices;
}

} // namespace sdlf::io
