#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace opstage {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct WblsHyperParams {
  int feature_nodes = 10;
  int enhancement_nodes = 10;
  double lambda = 1e-3;
  std::uint64_t seed = 0;
  // false selects the unweighted ablation (all sample weights 1).
  bool weighted = true;

  void validate() const;
};

// Random first- and second-layer maps. Column i of feature_weights is W_fi
// (length d); column j of enhancement_weights is W_ej (length p).
struct RandomMaps {
  Matrix feature_weights;      // d x p
  Vector feature_biases;       // p
  Matrix enhancement_weights;  // p x q
  Vector enhancement_biases;   // q

  int input_dim() const { return static_cast<int>(feature_weights.rows()); }
  int feature_nodes() const { return static_cast<int>(feature_weights.cols()); }
  int enhancement_nodes() const { return static_cast<int>(enhancement_weights.cols()); }
};

struct Standardizer {
  Vector means;
  Vector scales;  // strictly positive; constant columns get 1

  static Standardizer fit(const Matrix& x);
  Matrix apply(const Matrix& x) const;
};

struct ClassWeights {
  Vector diag;                        // one per sample
  std::vector<std::size_t> class_counts;  // one per class

  // Sum of diag, accumulated in extended precision and rounded once. Equals
  // the class count exactly when weighted.
  double mass() const;
};

// All entries uniform on [-1, 1], drawn in a fixed order from `hyper.seed`:
// feature weights (column by column), feature biases, enhancement weights,
// enhancement biases.
RandomMaps init_random_maps(int input_dim, const WblsHyperParams& hyper);

// Z = tanh(X W_f + beta_f)
Matrix build_feature_layer(const Matrix& x, const RandomMaps& maps);
// H = sigmoid(Z W_e + beta_e)
Matrix build_enhancement_layer(const Matrix& z, const RandomMaps& maps);
// A = [Z | H]
Matrix assemble_hidden(const Matrix& z, const Matrix& h);

// Inverse class frequency per sample, or all ones when `weighted` is false.
ClassWeights compute_class_weights(std::span<const int> labels, int num_classes, bool weighted);

Matrix one_hot(std::span<const int> labels, int num_classes);

// Solves (lambda I + A^T C A) W = A^T C L with C = diag(weights). Throws
// NumericError on non-finite input or if the relative normal-equation
// residual exceeds kSolveTolerance.
Matrix solve_output_weights(const Matrix& a, const Vector& weights, const Matrix& labels,
                            double lambda);

inline constexpr double kSolveTolerance = 1e-8;

// ||(lambda I + A^T C A) W - A^T C L||_F / ||A^T C L||_F
double normal_equation_residual(const Matrix& a, const Vector& weights, const Matrix& labels,
                                double lambda, const Matrix& w);

struct Prediction {
  std::vector<int> classes;
  Matrix scores;  // t x m
};

// Row-wise argmax; ties go to the lowest index.
std::vector<int> argmax_rows(const Matrix& scores);

class WblsModel {
 public:
  WblsModel(WblsHyperParams hyper, std::vector<std::string> class_names, Standardizer standardizer,
            RandomMaps maps, Matrix output_weights);

  const WblsHyperParams& hyper() const noexcept { return hyper_; }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }
  const Standardizer& standardizer() const noexcept { return standardizer_; }
  const RandomMaps& maps() const noexcept { return maps_; }
  const Matrix& output_weights() const noexcept { return output_weights_; }
  int input_dim() const noexcept { return maps_.input_dim(); }
  int num_classes() const noexcept { return static_cast<int>(class_names_.size()); }

  Matrix hidden(const Matrix& x_raw) const;
  Prediction predict(const Matrix& x_raw) const;

  nlohmann::json to_json() const;
  static WblsModel from_json(const nlohmann::json& doc);

  // Text form with every real printed at 17 significant digits.
  std::string serialize() const;
  static WblsModel deserialize(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static WblsModel load(const std::filesystem::path& path);

 private:
  WblsHyperParams hyper_;
  std::vector<std::string> class_names_;
  Standardizer standardizer_;
  RandomMaps maps_;
  Matrix output_weights_;
};

// Labels are indices into class_names (or 0..m-1 when class_names is empty).
WblsModel train(const Matrix& x_raw, std::span<const int> labels, const WblsHyperParams& hyper,
                std::vector<std::string> class_names = {});

}  // namespace opstage
