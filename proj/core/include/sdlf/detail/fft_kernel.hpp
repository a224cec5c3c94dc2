#pragma once

namespace sdlf::detail {

// Centered orthonormal 2-D DFT on split re/im planes of size H*W (row-major).
// Zero frequency sits at (H/2, W/2); forward and inverse are exact adjoints
// and exact inverses of each other. Computation is always double precision;
// power-of-two sides use an iterative radix-2 transform, everything else a
// direct DFT.
void fft2_centered(int H, int W, const double *re_in, const double *im_in,
                   double *re_out, double *im_out, bool inverse);

} // namespace sdlf::detail
