#include <cmath>
#include <random>

#include "doctest.h"
#include "opstage/error.hpp"
#include "opstage/wbls.hpp"
#include "oracles.hpp"

using namespace opstage;

namespace {

RandomMaps scalar_maps(double wf, double bf, double we, double be) {
  RandomMaps m;
  m.feature_weights = Matrix::Constant(1, 1, wf);
  m.feature_biases = Vector::Constant(1, bf);
  m.enhancement_weights = Matrix::Constant(1, 1, we);
  m.enhancement_biases = Vector::Constant(1, be);
  return m;
}

Matrix random_matrix(std::mt19937_64& gen, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> nd;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = nd(gen);
  return m;
}

// Two tight clusters far apart in every coordinate.
struct Clusters {
  Matrix x;
  std::vector<int> y;
};

Clusters separated_clusters() {
  std::mt19937_64 gen(99);
  std::normal_distribution<double> jitter(0.0, 0.05);
  Clusters c;
  c.x.resize(12, 3);
  for (int i = 0; i < 12; ++i) {
    const int label = i < 8 ? 0 : 1;
    for (int j = 0; j < 3; ++j) c.x(i, j) = (label == 0 ? -2.0 : 2.0) + jitter(gen);
    c.y.push_back(label);
  }
  return c;
}

}  // namespace

TEST_CASE("init_random_maps is deterministic, bounded and seed-dependent") {
  WblsHyperParams h;
  h.seed = 17;
  const RandomMaps a = init_random_maps(16, h);
  const RandomMaps b = init_random_maps(16, h);
  CHECK(a.feature_weights == b.feature_weights);
  CHECK(a.feature_biases == b.feature_biases);
  CHECK(a.enhancement_weights == b.enhancement_weights);
  CHECK(a.enhancement_biases == b.enhancement_biases);
  CHECK(a.feature_weights.rows() == 16);
  CHECK(a.feature_weights.cols() == 10);
  CHECK(a.enhancement_weights.rows() == 10);
  CHECK(a.enhancement_weights.cols() == 10);
  CHECK(a.feature_weights.cwiseAbs().maxCoeff() <= 1.0);
  CHECK(a.enhancement_biases.cwiseAbs().maxCoeff() <= 1.0);

  for (std::uint64_t s = 0; s < 10; ++s) {
    WblsHyperParams h1, h2;
    h1.seed = s;
    h2.seed = s + 1000;
    CHECK(init_random_maps(4, h1).feature_weights != init_random_maps(4, h2).feature_weights);
  }

  WblsHyperParams tiny;
  tiny.feature_nodes = 1;
  tiny.enhancement_nodes = 1;
  const RandomMaps m = init_random_maps(1, tiny);
  CHECK(m.feature_weights.size() == 1);
  CHECK(m.enhancement_weights.size() == 1);

  WblsHyperParams bad;
  bad.feature_nodes = 0;
  CHECK_THROWS_AS(init_random_maps(3, bad), Error);
  bad = {};
  bad.lambda = 0.0;
  CHECK_THROWS_AS(init_random_maps(3, bad), Error);
}

TEST_CASE("feature and enhancement layers") {
  const Matrix x = Matrix::Constant(1, 1, 1.0);
  const RandomMaps unit = scalar_maps(1.0, 0.0, 1.0, 0.0);
  const Matrix z = build_feature_layer(x, unit);
  CHECK(z(0, 0) == doctest::Approx(0.7615941559557649).epsilon(1e-15));
  const Matrix h = build_enhancement_layer(Matrix::Constant(1, 1, 1.0), unit);
  CHECK(h(0, 0) == doctest::Approx(0.7310585786300049).epsilon(1e-15));

  const RandomMaps zero = scalar_maps(0.0, 0.0, 0.0, 0.0);
  CHECK(build_feature_layer(Matrix::Constant(3, 1, 5.0), zero).isZero());
  CHECK(build_enhancement_layer(Matrix::Constant(3, 1, 5.0), zero).isApprox(Matrix::Constant(3, 1, 0.5)));

  std::mt19937_64 gen(3);
  WblsHyperParams hp;
  const RandomMaps maps = init_random_maps(5, hp);
  const Matrix big = random_matrix(gen, 40, 5) * 3.0;
  const Matrix zz = build_feature_layer(big, maps);
  const Matrix hh = build_enhancement_layer(zz, maps);
  CHECK(zz.cwiseAbs().maxCoeff() < 1.0);
  CHECK(hh.minCoeff() > 0.0);
  CHECK(hh.maxCoeff() < 1.0);

  CHECK_THROWS_AS(build_feature_layer(Matrix::Zero(2, 4), maps), Error);
  CHECK_THROWS_AS(build_enhancement_layer(Matrix::Zero(2, 4), maps), Error);
}

TEST_CASE("assemble_hidden concatenates feature columns first") {
  const Matrix a = assemble_hidden(Matrix::Zero(2, 1), Matrix::Constant(2, 1, 0.5));
  Matrix expected(2, 2);
  expected << 0, 0.5, 0, 0.5;
  CHECK(a == expected);
  CHECK(assemble_hidden(Matrix::Zero(3, 4), Matrix::Zero(3, 6)).cols() == 10);
  CHECK_THROWS_AS(assemble_hidden(Matrix::Zero(2, 1), Matrix::Zero(3, 1)), Error);
}

TEST_CASE("compute_class_weights") {
  const std::vector<int> aab{0, 0, 1};
  const ClassWeights w = compute_class_weights(aab, 2, true);
  CHECK(w.diag(0) == 0.5);
  CHECK(w.diag(1) == 0.5);
  CHECK(w.diag(2) == 1.0);
  CHECK(w.diag.sum() == 2.0);

  const std::vector<int> ab{0, 1};
  CHECK(compute_class_weights(ab, 2, true).diag == Vector::Ones(2));
  CHECK(compute_class_weights(aab, 2, false).diag == Vector::Ones(3));

  try {
    compute_class_weights(ab, 3, true);
    FAIL("expected EmptyClass");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyClass);
  }

  // Weight mass equals the class count for any label mix.
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 2 + trial % 4;
    std::vector<int> labels;
    for (int k = 0; k < m; ++k) labels.push_back(k);
    for (int i = 0; i < 60; ++i) labels.push_back(static_cast<int>(gen() % static_cast<unsigned>(m)));
    CHECK(compute_class_weights(labels, m, true).mass() == static_cast<double>(m));
  }
}

TEST_CASE("solve_output_weights hand fixtures") {
  const Matrix eye = Matrix::Identity(2, 2);
  const Matrix w = solve_output_weights(eye, Vector::Ones(2), eye, 1.0);
  CHECK((w - 0.5 * eye).cwiseAbs().maxCoeff() <= 1e-12);

  Matrix a(2, 1);
  a << 1, 2;
  Matrix l(2, 1);
  l << 1, 0;
  const Matrix ws = solve_output_weights(a, Vector::Ones(2), l, 1.0);
  CHECK(std::abs(ws(0, 0) - 1.0 / 6.0) <= 1e-12);

  // Zero gradient of the weighted ridge objective at the solution.
  const Matrix g = oracle::fd_gradient(a, Vector::Ones(2), l, 1.0, ws);
  CHECK(g.cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("solve_output_weights satisfies the optimality conditions on random instances") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 10 + trial * 7;
    const Eigen::Index k = 6;
    const Matrix a = random_matrix(gen, n, k);
    Vector c(n);
    for (Eigen::Index i = 0; i < n; ++i) c(i) = 0.1 + static_cast<double>(gen() % 100) / 50.0;
    const Matrix l = random_matrix(gen, n, 3);
    const double lambda = 1e-2;
    const Matrix w = solve_output_weights(a, c, l, lambda);
    CHECK(normal_equation_residual(a, c, l, lambda, w) <= kSolveTolerance);
    const Matrix grad = oracle::fd_gradient(a, c, l, lambda, w);
    CHECK(grad.cwiseAbs().maxCoeff() <= 1e-5 * (1.0 + oracle::objective(a, c, l, lambda, w)));
  }
}

TEST_CASE("solve_output_weights: scaling weights by c with lambda by c leaves W unchanged") {
  std::mt19937_64 gen(12);
  const Matrix a = random_matrix(gen, 30, 5);
  const Matrix l = random_matrix(gen, 30, 2);
  const Vector c = Vector::Ones(30);
  const Matrix w1 = solve_output_weights(a, c, l, 0.1);
  const Matrix w2 = solve_output_weights(a, 10.0 * c, l, 1.0);
  CHECK((w1 - w2).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("solve_output_weights rejects bad input") {
  Matrix a = Matrix::Identity(2, 2);
  a(0, 0) = std::nan("");
  try {
    solve_output_weights(a, Vector::Ones(2), Matrix::Identity(2, 2), 1.0);
    FAIL("expected NumericError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NumericError);
  }
  CHECK_THROWS_AS(solve_output_weights(Matrix::Identity(2, 2), Vector::Ones(3), Matrix::Identity(2, 2), 1.0),
                  Error);
  CHECK_THROWS_AS(solve_output_weights(Matrix::Identity(2, 2), Vector::Ones(2), Matrix::Identity(2, 2), 0.0),
                  Error);
}

TEST_CASE("argmax ties go to the lowest index") {
  Matrix s(3, 2);
  s << 0.2, 0.8, 0.5, 0.5, 0.9, -1.0;
  CHECK(argmax_rows(s) == std::vector<int>{1, 0, 0});
}

TEST_CASE("train and predict on separated clusters") {
  const Clusters c = separated_clusters();
  WblsHyperParams h;
  h.seed = 4;
  const WblsModel model = train(c.x, c.y, h);
  CHECK(model.class_names() == std::vector<std::string>{"0", "1"});
  CHECK(model.predict(c.x).classes == c.y);

  // Same inputs, same bytes.
  CHECK(train(c.x, c.y, h).serialize() == model.serialize());

  CHECK_THROWS_AS(model.predict(Matrix::Zero(2, 4)), Error);

  const std::vector<int> one_class(12, 0);
  try {
    train(c.x, one_class, h);
    FAIL("expected DegenerateLabels");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateLabels);
  }
}

TEST_CASE("standardizer leaves constant columns unscaled") {
  Matrix x(4, 2);
  x << 1, 7, 2, 7, 3, 7, 4, 7;
  const Standardizer s = Standardizer::fit(x);
  CHECK(s.scales(1) == 1.0);
  const Matrix z = s.apply(x);
  CHECK(z.col(1).isZero());
  CHECK(std::abs(z.col(0).mean()) < 1e-15);
  CHECK(z.col(0).squaredNorm() / 4 == doctest::Approx(1.0));
}

TEST_CASE("model serialization round-trips bit-exactly") {
  const Clusters c = separated_clusters();
  WblsHyperParams h;
  h.seed = 0xfeedfacecafebeefULL;
  h.lambda = 0.1;
  h.weighted = false;
  const WblsModel model = train(c.x, c.y, h, {"benign", "opaque"});
  const std::string text = model.serialize();
  const WblsModel back = WblsModel::deserialize(text);
  CHECK(back.hyper().seed == h.seed);
  CHECK(back.hyper().weighted == false);
  CHECK(back.class_names() == model.class_names());
  CHECK(back.output_weights() == model.output_weights());
  CHECK(back.maps().feature_weights == model.maps().feature_weights);
  CHECK(back.maps().enhancement_weights == model.maps().enhancement_weights);
  CHECK(back.standardizer().means == model.standardizer().means);
  CHECK(back.standardizer().scales == model.standardizer().scales);
  CHECK(back.serialize() == text);
  CHECK(back.predict(c.x).scores == model.predict(c.x).scores);

  CHECK_THROWS_AS(WblsModel::deserialize("{\"format\": \"other\"}"), Error);
  CHECK_THROWS_AS(WblsModel::deserialize("not json"), Error);
}
