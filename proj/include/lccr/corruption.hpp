#pragma once

#include <cstdint>

#include "lccr/types.hpp"

namespace lccr {

/// 8-bit-range grayscale image held as doubles: every entry finite and in
/// [0, 255].
struct PixelImage {
  Eigen::MatrixXd pixels;  // H x W
  Index height() const { return pixels.rows(); }
  Index width() const { return pixels.cols(); }

  /// Throws when an entry is non-finite or outside [0, 255].
  void validate() const;
};

/// Additive white Gaussian noise: x + alpha * sigma_scale * n with n drawn
/// i.i.d. standard normal, clamped back to [0, 255]. The raw "alpha * n"
/// recipe is invisible on a [0,255] image, so the noise is scaled by
/// sigma_scale (default 255) to make alpha a meaningful corruption ratio.
/// Deterministic given the seed.
PixelImage add_white_noise(const PixelImage& img, double alpha, std::uint64_t seed,
                           double sigma_scale = 255.0);

/// Replaces exactly round(ratio * H * W) distinct pixels, chosen uniformly
/// without replacement, by i.i.d. uniform draws on [0, p_max] where p_max is
/// the largest pixel value of the input. Other pixels are untouched.
PixelImage corrupt_random_pixels(const PixelImage& img, double ratio, std::uint64_t seed);

struct BlockRect {
  Index top = 0;
  Index left = 0;
  Index height = 0;
  Index width = 0;
};

struct OcclusionResult {
  PixelImage image;
  BlockRect rect;
};

/// Overwrites a square block covering `ratio` of the image area (side =
/// round(sqrt(ratio * H * W)), clamped to fit) at a uniformly random feasible
/// position with the patch, resized by nearest-neighbor resampling. Pixels
/// outside the returned rectangle are bitwise unchanged.
OcclusionResult occlude_block(const PixelImage& img, const PixelImage& patch, double ratio,
                              std::uint64_t seed);

}  // namespace lccr
