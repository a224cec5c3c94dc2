#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdlf/mri.hpp"

// SDLK slice files, little-endian:
//   magic "SDLK", u32 version=1, u32 N_c, u32 H, u32 W,
//   k-space      N_c*H*W complex64 (re,im interleaved, coil-major row-major),
//   sensitivity  N_c*H*W complex64 (same layout),
//   u8 gt_flag, [ground truth H*W complex64 when gt_flag=1].
// In memory the fields are planar [nc,2,h,w] / [2,h,w] float vectors.

namespace sdlf::io {

struct Slice {
  int nc = 0, h = 0, w = 0;
  std::vector<float> kspace; // planar [nc,2,h,w]
  std::vector<float> smaps;  // planar [nc,2,h,w]
  bool has_gt = false;
  std::vector<float> gt; // planar [2,h,w]
  std::string name;      // file stem when loaded from disk
};

void write_slice(const std::string &path, const Slice &s);
Slice read_slice(const std::string &path);

/// Synthetic slice: random phantom and coil maps, fully sampled k-space.
/// The stored ground truth is the float coil-combined reconstruction of the
/// stored (float) k-space, so a fully sampled zero-filled reconstruction
/// reproduces it bit for bit.
Slice synth_slice(int nc, int h, int w, std::uint64_t seed);

struct DatasetEntry {
  std::string file; // file name relative to the dataset directory
  std::uint64_t seed = 0;
};

/// Writes n slices plus a manifest ("<file> <seed>" per line) into dir.
std::vector<DatasetEntry> synth_dataset(const std::string &dir, int n, int nc, int h,
                                        int w, std::uint64_t master_seed);

void write_manifest(const std::string &dir, const std::vector<DatasetEntry> &entries);

/// Manifest order when a manifest exists, otherwise sorted *.sdlk files.
std::vector<DatasetEntry> list_dataset(const std::string &dir);

std::vector<Slice> load_dataset(const std::string &dir);

template <typename T> mri::KSpace<T> slice_kspace(const Slice &s) {
  std::vector<T> v(s.kspace.begin(), s.kspace.end());
  return mri::KSpace<T>(Tensor<T>::from_vector({s.nc, 2, s.h, s.w}, std::move(v)));
}

template <typename T> mri::CoilSensitivities<T> slice_smaps(const Slice &s) {
  std::vector<T> v(s.smaps.begin(), s.smaps.end());
  return mri::CoilSensitivities<T>(Tensor<T>::from_vector({s.nc, 2, s.h, s.w}, std::move(v)));
}

template <typename T> mri::ComplexImage<T> slice_gt(const Slice &s) {
  if (!s.has_gt)
    throw IoError("slice '" + s.name + "' has no ground-truth image");
  std::vector<T> v(s.gt.begin(), s.gt.end());
  return mri::ComplexImage<T>(Tensor<T>::from_vector({2, s.h, s.w}, std::move(v)));
}

} // namespace sdlf::io
