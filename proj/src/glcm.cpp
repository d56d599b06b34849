#include "opstage/glcm.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "opstage/error.hpp"

namespace opstage {

Glcm::Glcm(int levels, GlcmOffset offset, std::vector<std::uint64_t> counts)
    : levels_(levels), offset_(offset), counts_(std::move(counts)) {
  if (counts_.size() != static_cast<std::size_t>(levels) * levels) {
    throw Error(ErrorKind::ShapeError, "GLCM counts must be levels x levels");
  }
  total_ = std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

NormalizedGlcm::NormalizedGlcm(int levels, GlcmOffset offset, std::vector<double> probs)
    : levels_(levels), offset_(offset), probs_(std::move(probs)) {
  if (probs_.size() != static_cast<std::size_t>(levels) * levels) {
    throw Error(ErrorKind::ShapeError, "GLCM probabilities must be levels x levels");
  }
}

namespace {

void check_offset(GlcmOffset offset) {
  if (offset.dx < 0 || offset.dy < 0) {
    throw Error(ErrorKind::InvalidArgument, "GLCM offsets must be non-negative");
  }
  if (offset.dx == 0 && offset.dy == 0) {
    throw Error(ErrorKind::InvalidArgument, "GLCM offset (0, 0) is not allowed");
  }
}

}  // namespace

Glcm compute_glcm(const GrayImage& img, GlcmOffset offset) {
  check_offset(offset);
  if (img.width() <= offset.dx || img.height() <= offset.dy) {
    throw Error(ErrorKind::EmptyGlcm, "image " + std::to_string(img.width()) + "x" +
                                          std::to_string(img.height()) + " has no pixel pairs at offset (" +
                                          std::to_string(offset.dx) + ", " +
                                          std::to_string(offset.dy) + ")");
  }
  const auto n = static_cast<std::size_t>(img.levels());
  std::vector<std::uint64_t> counts(n * n, 0);
  const auto px = img.pixels();
  const auto w = static_cast<std::size_t>(img.width());
  const int rows = img.height() - offset.dy;
  const int cols = img.width() - offset.dx;
  for (int r = 0; r < rows; ++r) {
    const std::uint16_t* src = px.data() + static_cast<std::size_t>(r) * w;
    const std::uint16_t* dst = px.data() + static_cast<std::size_t>(r + offset.dy) * w + offset.dx;
    for (int c = 0; c < cols; ++c) {
      ++counts[src[c] * n + dst[c]];
    }
  }
  return Glcm(img.levels(), offset, std::move(counts));
}

NormalizedGlcm normalize_glcm(const Glcm& glcm) {
  if (glcm.total_pairs() == 0) throw Error(ErrorKind::EmptyGlcm, "GLCM has no pairs");
  const double total = static_cast<double>(glcm.total_pairs());
  std::vector<double> probs;
  probs.reserve(glcm.counts().size());
  for (std::uint64_t c : glcm.counts()) probs.push_back(static_cast<double>(c) / total);
  return NormalizedGlcm(glcm.levels(), glcm.offset(), std::move(probs));
}

double energy(const NormalizedGlcm& g) {
  double sum = 0.0;
  for (double h : g.probs()) sum += h * h;
  return sum;
}

double entropy(const NormalizedGlcm& g) {
  double sum = 0.0;
  for (double h : g.probs()) {
    if (h > 0.0) sum -= h * h * std::log(h);
  }
  return sum;
}

double inverse_variance(const NormalizedGlcm& g) {
  const int n = g.levels();
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double d = i - j;
      sum += g.prob(i, j) / (1.0 + d * d);
    }
  }
  return sum;
}

double contrast(const NormalizedGlcm& g) {
  const int n = g.levels();
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double d = i - j;
      const double h = g.prob(i, j);
      sum += d * d * h * h;
    }
  }
  return sum;
}

TextureStats texture_stats(const NormalizedGlcm& g) {
  return {energy(g), entropy(g), inverse_variance(g), contrast(g)};
}

FeatureVector feature_vector(const GrayImage& img) {
  FeatureVector out{};
  for (std::size_t k = 0; k < kFeatureOffsets.size(); ++k) {
    const TextureStats s = texture_stats(normalize_glcm(compute_glcm(img, kFeatureOffsets[k])));
    out[4 * k + 0] = s.energy;
    out[4 * k + 1] = s.contrast;
    out[4 * k + 2] = 0.0 - s.entropy;  // avoids -0.0 for constant images
    out[4 * k + 3] = s.inverse_variance;
  }
  return out;
}

std::vector<FeatureVector> feature_vectors(std::span<const GrayImage> images, unsigned threads) {
  std::vector<FeatureVector> out(images.size());
  std::vector<std::exception_ptr> errors(images.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, images.size()));

  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < images.size(); i += stride) {
      try {
        out[i] = feature_vector(images[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }
  // Report the first failure in input order, independent of scheduling.
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace opstage
