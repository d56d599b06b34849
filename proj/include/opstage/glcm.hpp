#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "opstage/image.hpp"

namespace opstage {

// Column (dx) and row (dy) displacement. Only non-negative, non-zero offsets
// are accepted.
struct GlcmOffset {
  int dx = 1;
  int dy = 0;

  friend bool operator==(const GlcmOffset&, const GlcmOffset&) = default;
};

// The four offsets used for the feature vector, in component order.
inline constexpr std::array<GlcmOffset, 4> kFeatureOffsets{{{1, 0}, {0, 1}, {2, 0}, {1, 1}}};

// Directed co-occurrence counts. counts(a, b) is the number of positions where
// pixel (row, col) == a and pixel (row + dy, col + dx) == b. Not symmetrized.
class Glcm {
 public:
  Glcm(int levels, GlcmOffset offset, std::vector<std::uint64_t> counts);

  int levels() const noexcept { return levels_; }
  GlcmOffset offset() const noexcept { return offset_; }
  std::uint64_t total_pairs() const noexcept { return total_; }
  std::uint64_t count(int a, int b) const noexcept {
    return counts_[static_cast<std::size_t>(a) * levels_ + b];
  }
  std::span<const std::uint64_t> counts() const noexcept { return counts_; }

  friend bool operator==(const Glcm&, const Glcm&) = default;

 private:
  int levels_;
  GlcmOffset offset_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

class NormalizedGlcm {
 public:
  NormalizedGlcm(int levels, GlcmOffset offset, std::vector<double> probs);

  int levels() const noexcept { return levels_; }
  GlcmOffset offset() const noexcept { return offset_; }
  double prob(int i, int j) const noexcept {
    return probs_[static_cast<std::size_t>(i) * levels_ + j];
  }
  std::span<const double> probs() const noexcept { return probs_; }

 private:
  int levels_;
  GlcmOffset offset_;
  std::vector<double> probs_;
};

struct TextureStats {
  double energy = 0.0;
  double entropy = 0.0;
  double inverse_variance = 0.0;
  double contrast = 0.0;
};

inline constexpr std::size_t kFeatureDim = 16;

// Four blocks of (energy, contrast, -entropy, inverse_variance), one per
// entry of kFeatureOffsets.
using FeatureVector = std::array<double, kFeatureDim>;

Glcm compute_glcm(const GrayImage& img, GlcmOffset offset);
NormalizedGlcm normalize_glcm(const Glcm& glcm);

// sum h^2
double energy(const NormalizedGlcm& g);
// -sum h^2 ln h, with 0 ln 0 = 0. The squared weight is intentional.
double entropy(const NormalizedGlcm& g);
// sum h / (1 + (i-j)^2)
double inverse_variance(const NormalizedGlcm& g);
// sum (i-j)^2 h^2. Also squared, matching the entropy weighting.
double contrast(const NormalizedGlcm& g);

TextureStats texture_stats(const NormalizedGlcm& g);

FeatureVector feature_vector(const GrayImage& img);

// Order-preserving batch extraction; runs on up to `threads` workers
// (0 = hardware concurrency).
std::vector<FeatureVector> feature_vectors(std::span<const GrayImage> images,
                                           unsigned threads = 0);

}  // namespace opstage
