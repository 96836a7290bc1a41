#include "lccr/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lccr/errors.hpp"
#include "lccr/rng.hpp"

namespace lccr {

void PixelImage::validate() const {
  if (pixels.size() == 0) throw std::invalid_argument("empty image");
  if (!pixels.allFinite()) throw CorruptFileError("image has non-finite pixels");
  if (pixels.minCoeff() < 0.0 || pixels.maxCoeff() > 255.0)
    throw CorruptFileError("pixel values outside [0, 255]");
}

PixelImage add_white_noise(const PixelImage& img, double alpha, std::uint64_t seed,
                           double sigma_scale) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in [0, 1]");
  if (!(sigma_scale > 0.0)) throw std::invalid_argument("sigma_scale must be > 0");

  PixelImage out = img;
  if (alpha == 0.0) return out;

  SeededRng rng(seed);
  const double scale = alpha * sigma_scale;
  for (Index j = 0; j < out.pixels.cols(); ++j)
    for (Index i = 0; i < out.pixels.rows(); ++i)
      out.pixels(i, j) = std::clamp(out.pixels(i, j) + scale * rng.normal(), 0.0, 255.0);
  return out;
}

PixelImage corrupt_random_pixels(const PixelImage& img, double ratio, std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw std::invalid_argument("ratio must be in [0, 1]");

  PixelImage out = img;
  const Index total = img.pixels.size();
  const Index count = static_cast<Index>(std::llround(ratio * static_cast<double>(total)));
  if (count == 0) return out;

  const double p_max = img.pixels.maxCoeff();

  // Partial Fisher-Yates: the first `count` entries are a uniform sample
  // without replacement.
  SeededRng rng(seed);
  std::vector<Index> positions(total);
  std::iota(positions.begin(), positions.end(), Index{0});
  for (Index i = 0; i < count; ++i) {
    const Index j = i + static_cast<Index>(rng.uniform_index(total - i));
    std::swap(positions[i], positions[j]);
  }

  double* data = out.pixels.data();  // column-major, matches the linear positions
  for (Index i = 0; i < count; ++i) data[positions[i]] = rng.uniform() * p_max;
  return out;
}

OcclusionResult occlude_block(const PixelImage& img, const PixelImage& patch, double ratio,
                              std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("ratio must be in (0, 1)");
  if (patch.pixels.size() == 0) throw std::invalid_argument("patch must be non-empty");

  const Index h = img.height();
  const Index w = img.width();
  Index side = static_cast<Index>(std::llround(std::sqrt(ratio * static_cast<double>(h * w))));
  side = std::clamp<Index>(side, 1, std::min(h, w));

  SeededRng rng(seed);
  const Index top = static_cast<Index>(rng.uniform_index(h - side + 1));
  const Index left = static_cast<Index>(rng.uniform_index(w - side + 1));

  OcclusionResult result;
  result.image = img;
  result.rect = BlockRect{top, left, side, side};
  const Index ph = patch.height();
  const Index pw = patch.width();
  for (Index i = 0; i < side; ++i)
    for (Index j = 0; j < side; ++j)
      result.image.pixels(top + i, left + j) = patch.pixels((i * ph) / side, (j * pw) / side);
  return result;
}

}  // namespace lccr
