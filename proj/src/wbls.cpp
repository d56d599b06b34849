#include "opstage/wbls.hpp"

#include <algorithm>
#include <cmath>

#include "opstage/error.hpp"
#include "opstage/json_io.hpp"
#include "opstage/random.hpp"

namespace opstage {

using nlohmann::json;

void WblsHyperParams::validate() const {
  if (feature_nodes < 1) throw Error(ErrorKind::InvalidArgument, "feature_nodes must be >= 1");
  if (enhancement_nodes < 1) {
    throw Error(ErrorKind::InvalidArgument, "enhancement_nodes must be >= 1");
  }
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorKind::InvalidArgument, "lambda must be positive and finite");
  }
}

Standardizer Standardizer::fit(const Matrix& x) {
  if (x.rows() == 0 || x.cols() == 0) throw Error(ErrorKind::ShapeError, "cannot fit on empty data");
  Standardizer s;
  s.means = x.colwise().mean().transpose();
  s.scales.resize(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const auto col = x.col(c);
    if (col.maxCoeff() == col.minCoeff()) {
      s.scales(c) = 1.0;
      continue;
    }
    const double var = (col.array() - s.means(c)).square().mean();
    const double sd = std::sqrt(var);
    if (!std::isfinite(sd)) throw Error(ErrorKind::NumericError, "feature column overflows");
    s.scales(c) = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  if (x.cols() != means.size()) {
    throw Error(ErrorKind::ShapeError, "expected " + std::to_string(means.size()) +
                                           " input columns, got " + std::to_string(x.cols()));
  }
  return (x.rowwise() - means.transpose()).array().rowwise() / scales.transpose().array();
}

RandomMaps init_random_maps(int input_dim, const WblsHyperParams& hyper) {
  hyper.validate();
  if (input_dim < 1) throw Error(ErrorKind::InvalidArgument, "input_dim must be >= 1");
  Rng rng(hyper.seed);
  auto fill = [&](Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
      for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(-1.0, 1.0);
    return m;
  };
  RandomMaps maps;
  maps.feature_weights = fill(input_dim, hyper.feature_nodes);
  maps.feature_biases = fill(hyper.feature_nodes, 1).col(0);
  maps.enhancement_weights = fill(hyper.feature_nodes, hyper.enhancement_nodes);
  maps.enhancement_biases = fill(hyper.enhancement_nodes, 1).col(0);
  return maps;
}

Matrix build_feature_layer(const Matrix& x, const RandomMaps& maps) {
  if (x.cols() != maps.feature_weights.rows()) {
    throw Error(ErrorKind::ShapeError, "feature layer expects " +
                                           std::to_string(maps.feature_weights.rows()) +
                                           " columns, got " + std::to_string(x.cols()));
  }
  Matrix pre = x * maps.feature_weights;
  pre.rowwise() += maps.feature_biases.transpose();
  return pre.array().tanh().matrix();
}

Matrix build_enhancement_layer(const Matrix& z, const RandomMaps& maps) {
  if (z.cols() != maps.enhancement_weights.rows()) {
    throw Error(ErrorKind::ShapeError, "enhancement layer expects " +
                                           std::to_string(maps.enhancement_weights.rows()) +
                                           " columns, got " + std::to_string(z.cols()));
  }
  Matrix pre = z * maps.enhancement_weights;
  pre.rowwise() += maps.enhancement_biases.transpose();
  return (1.0 / (1.0 + (-pre.array()).exp())).matrix();
}

Matrix assemble_hidden(const Matrix& z, const Matrix& h) {
  if (z.rows() != h.rows()) throw Error(ErrorKind::ShapeError, "feature/enhancement row mismatch");
  Matrix a(z.rows(), z.cols() + h.cols());
  a << z, h;
  return a;
}

double ClassWeights::mass() const {
  long double total = 0.0L;
  for (Eigen::Index i = 0; i < diag.size(); ++i) total += diag(i);
  return static_cast<double>(total);
}

ClassWeights compute_class_weights(std::span<const int> labels, int num_classes, bool weighted) {
  if (num_classes < 1) throw Error(ErrorKind::InvalidArgument, "num_classes must be >= 1");
  ClassWeights cw;
  cw.class_counts.assign(static_cast<std::size_t>(num_classes), 0);
  for (int l : labels) {
    if (l < 0 || l >= num_classes) {
      throw Error(ErrorKind::InvalidArgument, "label " + std::to_string(l) + " out of range");
    }
    ++cw.class_counts[static_cast<std::size_t>(l)];
  }
  cw.diag.resize(static_cast<Eigen::Index>(labels.size()));
  if (!weighted) {
    cw.diag.setOnes();
    return cw;
  }
  for (int k = 0; k < num_classes; ++k) {
    if (cw.class_counts[static_cast<std::size_t>(k)] == 0) {
      throw Error(ErrorKind::EmptyClass, "class " + std::to_string(k) + " has no samples");
    }
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    cw.diag(static_cast<Eigen::Index>(i)) =
        1.0 / static_cast<double>(cw.class_counts[static_cast<std::size_t>(labels[i])]);
  }
  return cw;
}

Matrix one_hot(std::span<const int> labels, int num_classes) {
  Matrix l = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw Error(ErrorKind::InvalidArgument, "label out of range");
    }
    l(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return l;
}

namespace {

struct NormalSystem {
  Matrix lhs;  // lambda I + A^T C A
  Matrix rhs;  // A^T C L
};

NormalSystem normal_system(const Matrix& a, const Vector& weights, const Matrix& labels,
                           double lambda) {
  const Matrix weighted_t = a.transpose() * weights.asDiagonal();
  NormalSystem sys;
  sys.lhs = weighted_t * a;
  sys.lhs.diagonal().array() += lambda;
  sys.rhs = weighted_t * labels;
  return sys;
}

double relative_residual(const NormalSystem& sys, const Matrix& w) {
  const double denom = sys.rhs.norm();
  const double num = (sys.lhs * w - sys.rhs).norm();
  return denom > 0.0 ? num / denom : num;
}

}  // namespace

double normal_equation_residual(const Matrix& a, const Vector& weights, const Matrix& labels,
                                double lambda, const Matrix& w) {
  return relative_residual(normal_system(a, weights, labels, lambda), w);
}

Matrix solve_output_weights(const Matrix& a, const Vector& weights, const Matrix& labels,
                            double lambda) {
  if (a.rows() != weights.size() || a.rows() != labels.rows()) {
    throw Error(ErrorKind::ShapeError, "hidden matrix, weights and labels disagree on sample count");
  }
  if (!a.allFinite() || !weights.allFinite() || !labels.allFinite() || !std::isfinite(lambda)) {
    throw Error(ErrorKind::NumericError, "non-finite input to output-weight solve");
  }
  if (!(lambda > 0.0)) throw Error(ErrorKind::InvalidArgument, "lambda must be positive");
  if (weights.size() > 0 && !(weights.minCoeff() > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "sample weights must be positive");
  }

  const NormalSystem sys = normal_system(a, weights, labels, lambda);
  // The system is symmetric positive definite for lambda > 0.
  Eigen::LLT<Matrix> llt(sys.lhs);
  Matrix w;
  if (llt.info() == Eigen::Success) {
    w = llt.solve(sys.rhs);
    // One round of iterative refinement.
    w += llt.solve(sys.rhs - sys.lhs * w);
  } else {
    Eigen::ColPivHouseholderQR<Matrix> qr(sys.lhs);
    w = qr.solve(sys.rhs);
  }
  if (!w.allFinite()) throw Error(ErrorKind::NumericError, "output-weight solve produced non-finite values");
  const double res = relative_residual(sys, w);
  if (!(res <= kSolveTolerance)) {
    throw Error(ErrorKind::NumericError,
                "normal-equation residual " + std::to_string(res) + " exceeds tolerance");
  }
  return w;
}

std::vector<int> argmax_rows(const Matrix& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()), 0);
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    int best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c) {
      if (scores(r, c) > scores(r, best)) best = static_cast<int>(c);
    }
    out[static_cast<std::size_t>(r)] = best;
  }
  return out;
}

WblsModel::WblsModel(WblsHyperParams hyper, std::vector<std::string> class_names,
                     Standardizer standardizer, RandomMaps maps, Matrix output_weights)
    : hyper_(hyper),
      class_names_(std::move(class_names)),
      standardizer_(std::move(standardizer)),
      maps_(std::move(maps)),
      output_weights_(std::move(output_weights)) {
  hyper_.validate();
  const auto d = maps_.feature_weights.rows();
  const auto p = maps_.feature_weights.cols();
  const auto q = maps_.enhancement_weights.cols();
  const bool ok = p == hyper_.feature_nodes && q == hyper_.enhancement_nodes &&
                  maps_.feature_biases.size() == p && maps_.enhancement_weights.rows() == p &&
                  maps_.enhancement_biases.size() == q && standardizer_.means.size() == d &&
                  standardizer_.scales.size() == d && output_weights_.rows() == p + q &&
                  output_weights_.cols() == static_cast<Eigen::Index>(class_names_.size());
  if (!ok) throw Error(ErrorKind::ShapeError, "inconsistent model dimensions");
  if (standardizer_.scales.size() > 0 && !(standardizer_.scales.minCoeff() > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "standardizer scales must be positive");
  }
}

Matrix WblsModel::hidden(const Matrix& x_raw) const {
  const Matrix z = build_feature_layer(standardizer_.apply(x_raw), maps_);
  return assemble_hidden(z, build_enhancement_layer(z, maps_));
}

Prediction WblsModel::predict(const Matrix& x_raw) const {
  Prediction p;
  p.scores = hidden(x_raw) * output_weights_;
  p.classes = argmax_rows(p.scores);
  return p;
}

WblsModel train(const Matrix& x_raw, std::span<const int> labels, const WblsHyperParams& hyper,
                std::vector<std::string> class_names) {
  hyper.validate();
  if (x_raw.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw Error(ErrorKind::ShapeError, "feature rows and label count differ");
  }
  if (x_raw.cols() < 1) throw Error(ErrorKind::ShapeError, "need at least one feature column");
  if (!x_raw.allFinite()) throw Error(ErrorKind::NumericError, "non-finite feature values");
  if (class_names.empty()) {
    const int m = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    for (int k = 0; k < m; ++k) class_names.push_back(std::to_string(k));
  }
  const int m = static_cast<int>(class_names.size());
  std::vector<bool> seen(static_cast<std::size_t>(m), false);
  int distinct = 0;
  for (int l : labels) {
    if (l < 0 || l >= m) throw Error(ErrorKind::InvalidArgument, "label out of range");
    if (!seen[static_cast<std::size_t>(l)]) {
      seen[static_cast<std::size_t>(l)] = true;
      ++distinct;
    }
  }
  if (distinct < 2) throw Error(ErrorKind::DegenerateLabels, "training needs at least two classes");

  Standardizer standardizer = Standardizer::fit(x_raw);
  RandomMaps maps = init_random_maps(static_cast<int>(x_raw.cols()), hyper);
  const Matrix z = build_feature_layer(standardizer.apply(x_raw), maps);
  const Matrix a = assemble_hidden(z, build_enhancement_layer(z, maps));
  const ClassWeights cw = compute_class_weights(labels, m, hyper.weighted);
  Matrix w = solve_output_weights(a, cw.diag, one_hot(labels, m), hyper.lambda);
  return WblsModel(hyper, std::move(class_names), std::move(standardizer), std::move(maps),
                   std::move(w));
}

// Serialization -------------------------------------------------------------

namespace {

json vector_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

// Row-major nested arrays.
json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_json(m.row(r).transpose()));
  return rows;
}

Vector vector_from_json(const json& arr, const char* what) {
  if (!arr.is_array()) throw Error(ErrorKind::ParseError, std::string(what) + " must be an array");
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw Error(ErrorKind::ParseError, std::string(what) + ": not a number");
    v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
  }
  return v;
}

Matrix matrix_from_json(const json& rows, Eigen::Index expected_cols, const char* what) {
  if (!rows.is_array()) throw Error(ErrorKind::ParseError, std::string(what) + " must be an array");
  Matrix m(static_cast<Eigen::Index>(rows.size()), expected_cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Vector row = vector_from_json(rows[r], what);
    if (row.size() != expected_cols) {
      throw Error(ErrorKind::ParseError, std::string(what) + ": ragged matrix");
    }
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

constexpr const char* kModelFormat = "opstage-wbls";
constexpr int kModelVersion = 1;

}  // namespace

json WblsModel::to_json() const {
  json doc;
  doc["format"] = kModelFormat;
  doc["version"] = kModelVersion;
  doc["hyper"] = {
      {"feature_nodes", hyper_.feature_nodes}, {"enhancement_nodes", hyper_.enhancement_nodes},
      {"lambda", hyper_.lambda},               {"seed", hyper_.seed},
      {"weighted", hyper_.weighted},
  };
  doc["activations"] = {{"feature", "tanh"}, {"enhancement", "sigmoid"}};
  doc["class_names"] = class_names_;
  doc["standardizer"] = {{"means", vector_json(standardizer_.means)},
                         {"scales", vector_json(standardizer_.scales)}};
  // Weight matrices are stored one node per row: feature_weights[i] is W_fi.
  doc["maps"] = {
      {"feature_weights", matrix_json(maps_.feature_weights.transpose())},
      {"feature_biases", vector_json(maps_.feature_biases)},
      {"enhancement_weights", matrix_json(maps_.enhancement_weights.transpose())},
      {"enhancement_biases", vector_json(maps_.enhancement_biases)},
  };
  doc["output_weights"] = matrix_json(output_weights_);
  return doc;
}

WblsModel WblsModel::from_json(const json& doc) {
  try {
    if (doc.at("format").get<std::string>() != kModelFormat) {
      throw Error(ErrorKind::ParseError, "not a WBLS model document");
    }
    if (doc.at("version").get<int>() != kModelVersion) {
      throw Error(ErrorKind::ParseError, "unsupported model version");
    }
    const json& h = doc.at("hyper");
    WblsHyperParams hyper;
    hyper.feature_nodes = h.at("feature_nodes").get<int>();
    hyper.enhancement_nodes = h.at("enhancement_nodes").get<int>();
    hyper.lambda = h.at("lambda").get<double>();
    hyper.seed = h.at("seed").get<std::uint64_t>();
    hyper.weighted = h.at("weighted").get<bool>();
    hyper.validate();

    auto names = doc.at("class_names").get<std::vector<std::string>>();
    Standardizer st;
    st.means = vector_from_json(doc.at("standardizer").at("means"), "means");
    st.scales = vector_from_json(doc.at("standardizer").at("scales"), "scales");
    const auto d = st.means.size();

    const json& mp = doc.at("maps");
    RandomMaps maps;
    maps.feature_weights = matrix_from_json(mp.at("feature_weights"), d, "feature_weights").transpose();
    maps.feature_biases = vector_from_json(mp.at("feature_biases"), "feature_biases");
    maps.enhancement_weights =
        matrix_from_json(mp.at("enhancement_weights"), hyper.feature_nodes, "enhancement_weights")
            .transpose();
    maps.enhancement_biases = vector_from_json(mp.at("enhancement_biases"), "enhancement_biases");
    Matrix w = matrix_from_json(doc.at("output_weights"), static_cast<Eigen::Index>(names.size()),
                                "output_weights");
    return WblsModel(hyper, std::move(names), std::move(st), std::move(maps), std::move(w));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("model document: ") + e.what());
  }
}

std::string WblsModel::serialize() const { return dump_precise(to_json()); }

WblsModel WblsModel::deserialize(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
  return from_json(doc);
}

void WblsModel::save(const std::filesystem::path& path) const { write_text_file(path, serialize()); }

WblsModel WblsModel::load(const std::filesystem::path& path) {
  return deserialize(read_text_file(path));
}

}  // namespace opstage
