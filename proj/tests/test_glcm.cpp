#include <random>

#include "doctest.h"
#include "opstage/error.hpp"
#include "opstage/glcm.hpp"
#include "oracles.hpp"

using namespace opstage;

namespace {

GrayImage from_grid(const oracle::Grid& g, int levels) {
  std::vector<std::uint16_t> px;
  for (const auto& row : g)
    for (int v : row) px.push_back(static_cast<std::uint16_t>(v));
  return GrayImage(static_cast<int>(g[0].size()), static_cast<int>(g.size()), levels, px);
}

NormalizedGlcm from_probs(int n, std::vector<double> probs) {
  return NormalizedGlcm(n, {1, 0}, std::move(probs));
}

// Counts of the ramp fixture at (1, 0).
const std::vector<std::pair<std::pair<int, int>, std::uint64_t>> kRampCounts{
    {{0, 1}, 10}, {{1, 2}, 11}, {{2, 3}, 11}, {{3, 0}, 10}};

}  // namespace

TEST_CASE("compute_glcm on the ramp fixture is directed and exact") {
  const Glcm g = compute_glcm(from_grid(oracle::ramp_fixture(), 4), {1, 0});
  CHECK(g.total_pairs() == 42);
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      std::uint64_t expected = 0;
      for (const auto& [cell, v] : kRampCounts)
        if (cell == std::pair{a, b}) expected = v;
      CHECK(g.count(a, b) == expected);
    }
  }
  CHECK(g.count(1, 0) == 0);
}

TEST_CASE("compute_glcm small and degenerate images") {
  const GrayImage zeros(2, 2, 4, {0, 0, 0, 0});
  const Glcm g = compute_glcm(zeros, {1, 0});
  CHECK(g.count(0, 0) == 2);
  CHECK(g.total_pairs() == 2);

  const GrayImage single(1, 1, 4, {2});
  CHECK_THROWS_AS(compute_glcm(single, {1, 0}), Error);
  try {
    compute_glcm(single, {1, 0});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyGlcm);
  }
  CHECK_THROWS_AS(compute_glcm(zeros, {0, 0}), Error);
  CHECK_THROWS_AS(compute_glcm(zeros, {-1, 0}), Error);
}

TEST_CASE("normalize_glcm") {
  const NormalizedGlcm h = normalize_glcm(compute_glcm(from_grid(oracle::ramp_fixture(), 4), {1, 0}));
  CHECK(h.prob(0, 1) == doctest::Approx(10.0 / 42).epsilon(1e-15));
  CHECK(h.prob(1, 2) == doctest::Approx(11.0 / 42).epsilon(1e-15));

  std::vector<std::uint64_t> single(16, 0);
  single[0] = 5;
  CHECK(normalize_glcm(Glcm(4, {1, 0}, single)).prob(0, 0) == 1.0);

  const NormalizedGlcm uni = normalize_glcm(Glcm(4, {1, 0}, std::vector<std::uint64_t>(16, 1)));
  for (double p : uni.probs()) CHECK(p == 1.0 / 16);

  CHECK_THROWS_AS(normalize_glcm(Glcm(4, {1, 0}, std::vector<std::uint64_t>(16, 0))), Error);
}

TEST_CASE("texture statistics on hand fixtures") {
  std::vector<double> mass(16, 0.0);
  mass[0] = 1.0;
  const auto point = from_probs(4, mass);
  CHECK(energy(point) == 1.0);
  CHECK(entropy(point) == 0.0);
  CHECK(inverse_variance(point) == 1.0);
  CHECK(contrast(point) == 0.0);

  const auto uni4 = from_probs(4, std::vector<double>(16, 1.0 / 16));
  CHECK(energy(uni4) == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(entropy(uni4) == doctest::Approx(0.17328679513998632).epsilon(1e-14));

  const auto uni2 = from_probs(2, std::vector<double>(4, 0.25));
  CHECK(inverse_variance(uni2) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(contrast(uni2) == doctest::Approx(0.125).epsilon(1e-15));

  // Diagonal mass only: contrast vanishes.
  std::vector<double> diag(16, 0.0);
  for (int i = 0; i < 4; ++i) diag[i * 4 + i] = 0.25;
  CHECK(contrast(from_probs(4, diag)) == 0.0);
  CHECK(inverse_variance(from_probs(4, diag)) == doctest::Approx(1.0));
}

TEST_CASE("ramp fixture statistics match frozen oracle values") {
  const auto h = normalize_glcm(compute_glcm(from_grid(oracle::ramp_fixture(), 4), {1, 0}));
  // Frozen from the double-loop oracle in oracles.hpp.
  CHECK(energy(h) == doctest::Approx(442.0 / 1764).epsilon(1e-14));
  CHECK(entropy(h) == doctest::Approx(0.3465092384723548).epsilon(1e-13));
  CHECK(inverse_variance(h) == doctest::Approx(17.0 / 42).epsilon(1e-14));
  CHECK(contrast(h) == doctest::Approx(1242.0 / 1764).epsilon(1e-14));
}

TEST_CASE("feature_vector layout") {
  SUBCASE("constant image") {
    const GrayImage flat(5, 4, 8, std::vector<std::uint16_t>(20, 3));
    const FeatureVector f = feature_vector(flat);
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(f[4 * k + 0] == 1.0);
      CHECK(f[4 * k + 1] == 0.0);
      CHECK(f[4 * k + 2] == 0.0);
      CHECK_FALSE(std::signbit(f[4 * k + 2]));
      CHECK(f[4 * k + 3] == 1.0);
    }
  }
  SUBCASE("ramp fixture, all four offsets") {
    const FeatureVector f = feature_vector(from_grid(oracle::ramp_fixture(), 4));
    const FeatureVector expected{
        0.25056689342403626, 0.7040816326530612, -0.3465092384723548, 0.40476190476190477,
        0.25056689342403626, 0.7040816326530612, -0.3465092384723548, 0.40476190476190477,
        0.25061224489795914, 1.0024489795918365, -0.3465159378914605, 0.19999999999999996,
        0.2515432098765432,  1.0061728395061729, -0.3463997102170604, 0.2};
    for (std::size_t i = 0; i < kFeatureDim; ++i) {
      CHECK(f[i] == doctest::Approx(expected[i]).epsilon(1e-13));
    }
  }
  SUBCASE("too narrow for offset (2, 0)") {
    const GrayImage narrow(2, 5, 4, std::vector<std::uint16_t>(10, 0));
    CHECK_THROWS_AS(feature_vector(narrow), Error);
  }
}

TEST_CASE("properties against the naive oracle on random images") {
  std::mt19937_64 gen(20240611);
  std::uniform_int_distribution<int> size(3, 64);
  const int level_choices[] = {2, 4, 8, 16};
  for (int trial = 0; trial < 100; ++trial) {
    const int w = size(gen);
    const int h = size(gen);
    const int n = level_choices[trial % 4];
    const auto grid = oracle::random_grid(gen, w, h, n);
    const GrayImage img = from_grid(grid, n);
    for (const GlcmOffset off : kFeatureOffsets) {
      const Glcm g = compute_glcm(img, off);
      const auto ref = oracle::naive_glcm(grid, n, off.dx, off.dy);
      REQUIRE(g.total_pairs() == static_cast<std::uint64_t>((w - off.dx) * (h - off.dy)));
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) REQUIRE(g.count(a, b) == static_cast<std::uint64_t>(ref[a][b]));

      const NormalizedGlcm p = normalize_glcm(g);
      double mass = 0.0;
      for (double v : p.probs()) mass += v;
      CHECK(std::abs(mass - 1.0) <= 1e-12);

      const TextureStats s = texture_stats(p);
      const oracle::Stats r = oracle::naive_stats(ref);
      CHECK(std::abs(s.energy - r.energy) <= 1e-12);
      CHECK(std::abs(s.entropy - r.entropy) <= 1e-12);
      CHECK(std::abs(s.inverse_variance - r.idm) <= 1e-12);
      CHECK(std::abs(s.contrast - r.contrast) <= 1e-12);

      CHECK(s.energy > 0.0);
      CHECK(s.energy <= 1.0);
      CHECK(s.entropy >= 0.0);
      CHECK(s.inverse_variance > 0.0);
      CHECK(s.inverse_variance <= 1.0 + 1e-15);
      CHECK(s.contrast >= 0.0);

      // Determinism: an identical copy yields an identical matrix.
      CHECK(compute_glcm(from_grid(grid, n), off) == g);
    }
  }
}

TEST_CASE("batch extraction preserves order and matches single-image results") {
  std::mt19937_64 gen(7);
  std::vector<GrayImage> images;
  for (int i = 0; i < 37; ++i) images.push_back(from_grid(oracle::random_grid(gen, 9 + i % 5, 6, 8), 8));
  const auto batch = feature_vectors(images, 4);
  REQUIRE(batch.size() == images.size());
  for (std::size_t i = 0; i < images.size(); ++i) CHECK(batch[i] == feature_vector(images[i]));

  images.push_back(GrayImage(1, 1, 8, {0}));
  CHECK_THROWS_AS(feature_vectors(images, 3), Error);
}
