#include "sdlf/mri.hpp"

#include <cmath>

namespace sdlf::mri {

double default_acs_frac(int accel) { return accel >= 5 ? 0.10 : 0.125; }

SamplingMask make_mask(int w, int accel, double acs_frac, std::uint64_t seed) {
  if (w < 2)
    throw ConfigError("make_mask: width must be >= 2, got " + std::to_string(w));
  if (accel < 1)
    throw ConfigError("make_mask: accel must be >= 1, got " + std::to_string(accel));
  if (acs_frac * w < 2.0 - 1e-9)
    throw ConfigError("make_mask: acs_frac*w must be >= 2, got " +
                      std::to_string(acs_frac * w));
  const int acs = std::min(w, static_cast<int>(std::ceil(acs_frac * w)));
  const int total = std::min<long long>(w, std::llround(static_cast<double>(w) / accel));
  if (total < acs)
    throw ConfigError("make_mask: infeasible accel " + std::to_string(accel) + " (" +
                      std::to_string(total) + " columns < " + std::to_string(acs) +
                      " ACS columns)");
  SamplingMask m;
  m.cols.assign(static_cast<std::size_t>(w), 0);
  m.accel = accel;
  m.acs = acs;
  const int start = m.acs_start();
  for (int c = start; c < start + acs; ++c)
    m.cols[static_cast<std::size_t>(c)] = 1;

  std::vector<int> pool;
  pool.reserve(static_cast<std::size_t>(w - acs));
  for (int c = 0; c < w; ++c)
    if (!m.cols[static_cast<std::size_t>(c)])
      pool.push_back(c);
  Rng rng(seed);
  const auto pick = rng.sample_without_replacement(pool.size(),
                                                   static_cast<std::uint64_t>(total - acs));
  for (auto k : pick)
    m.cols[static_cast<std::size_t>(pool[static_cast<std::size_t>(k)])] = 1;
  return m;
}

SplitMasks split_mask(const SamplingMask &m, double rho, std::uint64_t seed) {
  if (!(rho > 0.0 && rho < 1.0))
    throw ContractError("split_mask: rho must be in (0,1), got " + std::to_string(rho));
  SplitMasks out;
  out.m1.cols.assign(m.cols.size(), 0);
  out.m2.cols.assign(m.cols.size(), 0);
  out.m1.acs = m.acs;
  out.m2.acs = 0;
  Rng rng(seed);
  int n2 = 0;
  for (int c = 0; c < m.width(); ++c) {
    if (!m.cols[static_cast<std::size_t>(c)])
      continue;
    if (m.is_acs(c)) {
      out.m1.cols[static_cast<std::size_t>(c)] = 1;
    } else if (rng.uniform01() < rho) {
      out.m1.cols[static_cast<std::size_t>(c)] = 1;
    } else {
      out.m2.cols[static_cast<std::size_t>(c)] = 1;
      ++n2;
    }
  }
  if (n2 == 0)
    throw SplitEmptyError("split_mask: loss mask is empty, retry with a new seed");
  return out;
}

} // namespace sdlf::mri
