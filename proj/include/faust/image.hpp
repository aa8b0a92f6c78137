#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "faust/types.hpp"

namespace faust {

/// Grayscale image with real-valued pixels in the 0..255 convention, stored
/// row-major. Values may leave the range during processing; writers clamp.
struct Image {
  Index width = 0;
  Index height = 0;
  std::vector<double> pixels;

  double& at(Index x, Index y) { return pixels[y * width + x]; }
  double at(Index x, Index y) const { return pixels[y * width + x]; }
};

inline Image makeImage(Index width, Index height, double fill = 0) {
  Image img;
  img.width = width;
  img.height = height;
  img.pixels.assign(static_cast<std::size_t>(width * height), fill);
  return img;
}

inline double mse(const Image& a, const Image& b) {
  detail::require(a.width == b.width && a.height == b.height, "mse: size mismatch");
  double acc = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    acc += d * d;
  }
  return acc / double(a.pixels.size());
}

/// PSNR in dB for the 0..255 range; identical images give +inf.
inline double psnr(const Image& reference, const Image& img) {
  const double m = mse(reference, img);
  if (m == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / m);
}

inline Image addGaussianNoise(const Image& img, double sigma, std::uint64_t seed) {
  Image out = img;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  for (double& p : out.pixels) p += gauss(rng);
  return out;
}

/// Column vector of the p x p patch with top-left corner (x, y), pixels taken
/// column by column within the patch.
inline Vectord extractPatch(const Image& img, Index x, Index y, Index p) {
  Vectord v(p * p);
  for (Index dx = 0; dx < p; ++dx)
    for (Index dy = 0; dy < p; ++dy) v[dx * p + dy] = img.at(x + dx, y + dy);
  return v;
}

/// Uniform averaging of overlapping patches: every patch adds its values and
/// a unit weight to the pixels it covers, and covered pixels are divided by
/// their weight. Pixels no patch covers are left at zero.
inline Image reconstructFromPatches(Index width, Index height, Index p,
                                    const std::vector<std::pair<Index, Index>>& positions,
                                    const std::vector<Vectord>& patches) {
  detail::require(positions.size() == patches.size(),
                  "reconstructFromPatches: one patch per position required");
  Image out = makeImage(width, height);
  std::vector<double> weight(out.pixels.size(), 0.0);
  for (std::size_t k = 0; k < positions.size(); ++k) {
    const auto [x, y] = positions[k];
    for (Index dx = 0; dx < p; ++dx)
      for (Index dy = 0; dy < p; ++dy) {
        out.at(x + dx, y + dy) += patches[k][dx * p + dy];
        weight[(y + dy) * width + (x + dx)] += 1.0;
      }
  }
  for (std::size_t i = 0; i < out.pixels.size(); ++i)
    if (weight[i] > 0) out.pixels[i] /= weight[i];
  return out;
}

inline Image readPgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  detail::require(bool(in), "readPgm: cannot open " + path);
  std::string magic;
  in >> magic;
  detail::require(magic == "P2" || magic == "P5", "readPgm: not a PGM file: " + path);

  auto nextToken = [&in]() {
    std::string tok;
    while (in >> tok) {
      if (tok[0] == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      return tok;
    }
    throw std::invalid_argument("readPgm: truncated header");
  };
  const Index width = std::stol(nextToken());
  const Index height = std::stol(nextToken());
  const long maxval = std::stol(nextToken());
  detail::require(width > 0 && height > 0 && maxval > 0 && maxval < 65536,
                  "readPgm: bad header");

  Image img = makeImage(width, height);
  if (magic == "P2") {
    for (double& p : img.pixels) {
      long v;
      detail::require(bool(in >> v), "readPgm: truncated data");
      p = double(v);
    }
  } else {
    in.get();  // single whitespace after maxval
    const bool wide = maxval > 255;
    for (double& p : img.pixels) {
      int hi = in.get();
      detail::require(hi != EOF, "readPgm: truncated data");
      if (wide) {
        int lo = in.get();
        detail::require(lo != EOF, "readPgm: truncated data");
        p = double(hi * 256 + lo);
      } else {
        p = double(hi);
      }
    }
  }
  return img;
}

/// ASCII P2 writer; pixels are rounded and clamped to 0..255.
inline void writePgm(std::ostream& os, const Image& img) {
  os << "P2\n" << img.width << ' ' << img.height << "\n255\n";
  Index col = 0;
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    long v = std::lround(img.pixels[i]);
    v = std::max(0l, std::min(255l, v));
    os << v;
    if (++col == 16 || i + 1 == img.pixels.size()) {
      os << '\n';
      col = 0;
    } else {
      os << ' ';
    }
  }
}

/// Deterministic 0..255 test scene: smooth gradient background, a few flat
/// geometric shapes and one textured band, so dictionaries have structure to
/// learn without shipping photographic data.
inline Image makeTestImage(Index size = 128) {
  Image img = makeImage(size, size);
  const double s = double(size);
  for (Index y = 0; y < size; ++y)
    for (Index x = 0; x < size; ++x) {
      double v = 40.0 + 120.0 * (double(x) + double(y)) / (2.0 * s);
      const double cx = 0.3 * s, cy = 0.35 * s, r = 0.18 * s;
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) < r * r) v = 210.0;
      if (x > 0.55 * s && x < 0.85 * s && y > 0.55 * s && y < 0.8 * s) v = 70.0;
      if (y > 0.86 * s) v = 128.0 + 90.0 * std::sin(0.35 * double(x)) *
                                 std::cos(0.21 * double(y));
      if (std::abs(double(x) - 0.72 * s + 0.4 * (double(y) - 0.1 * s)) < 2.0 &&
          y < 0.45 * s)
        v = 235.0;
      img.at(x, y) = std::max(0.0, std::min(255.0, v));
    }
  return img;
}

}  // namespace faust
