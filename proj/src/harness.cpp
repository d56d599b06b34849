#include "opstage/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>
#include <thread>

#include "opstage/error.hpp"
#include "opstage/json_io.hpp"
#include "opstage/random.hpp"

namespace opstage {

using nlohmann::json;

void SyntheticClassSpec::validate() const {
  if (count < 1) throw Error(ErrorKind::DegenerateSpec, "class count must be >= 1");
  if (image_size < 1) throw Error(ErrorKind::DegenerateSpec, "image_size must be >= 1");
  if (levels < 2 || levels > 65536) throw Error(ErrorKind::DegenerateSpec, "levels must be in [2, 65536]");
  if (!(noise >= 0.0 && noise <= 1.0)) throw Error(ErrorKind::DegenerateSpec, "noise must be in [0, 1]");
}

std::vector<SyntheticImage> generate_synthetic(const std::vector<SyntheticClassSpec>& specs,
                                               std::uint64_t seed) {
  if (specs.size() < 2) throw Error(ErrorKind::DegenerateSpec, "need at least two classes");
  for (const auto& s : specs) s.validate();

  Rng rng(seed);
  std::vector<SyntheticImage> out;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const SyntheticClassSpec& s = specs[k];
    const auto size = static_cast<std::size_t>(s.image_size);
    const long long n = s.levels;
    for (int c = 0; c < s.count; ++c) {
      std::vector<std::uint16_t> px(size * size);
      for (std::size_t row = 0; row < size; ++row) {
        for (std::size_t col = 0; col < size; ++col) {
          const long long ramp = static_cast<long long>(s.row_step) * static_cast<long long>(row) +
                                 static_cast<long long>(s.col_step) * static_cast<long long>(col);
          auto value = static_cast<std::uint16_t>(((ramp % n) + n) % n);
          if (s.noise > 0.0 && rng.bernoulli(s.noise)) {
            value = static_cast<std::uint16_t>(rng.below(static_cast<std::uint64_t>(n)));
          }
          px[row * size + col] = value;
        }
      }
      out.push_back({GrayImage(s.image_size, s.image_size, s.levels, std::move(px)),
                     static_cast<int>(k)});
    }
  }
  return out;
}

std::vector<SyntheticClassSpec> synthetic_specs_from_json(const json& doc) {
  const json* classes = &doc;
  if (doc.is_object()) {
    if (!doc.contains("classes")) throw Error(ErrorKind::DegenerateSpec, "spec needs a \"classes\" array");
    classes = &doc.at("classes");
  }
  if (!classes->is_array()) throw Error(ErrorKind::DegenerateSpec, "\"classes\" must be an array");
  std::vector<SyntheticClassSpec> specs;
  try {
    for (const json& c : *classes) {
      for (auto it = c.begin(); it != c.end(); ++it) {
        static const std::array<std::string_view, 6> known{"row_step", "col_step", "noise",
                                                           "count",    "image_size", "levels"};
        if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
          throw Error(ErrorKind::DegenerateSpec, "unknown class field \"" + it.key() + "\"");
        }
      }
      SyntheticClassSpec s;
      s.row_step = c.value("row_step", s.row_step);
      s.col_step = c.value("col_step", s.col_step);
      s.noise = c.value("noise", s.noise);
      s.count = c.value("count", s.count);
      s.image_size = c.value("image_size", s.image_size);
      s.levels = c.value("levels", s.levels);
      s.validate();
      specs.push_back(s);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::DegenerateSpec, e.what());
  }
  if (specs.size() < 2) throw Error(ErrorKind::DegenerateSpec, "need at least two classes");
  return specs;
}

Split split_dataset(const std::vector<LabeledSample>& samples, double train_fraction,
                    std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorKind::SplitError, "train_fraction must be in (0, 1)");
  }
  const std::size_t n = samples.size();
  const auto n_train = static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train >= n) {
    throw Error(ErrorKind::SplitError, "split of " + std::to_string(n) + " samples leaves a side empty");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  Split s;
  s.train.reserve(n_train);
  s.test.reserve(n - n_train);
  for (std::size_t i = 0; i < n; ++i) {
    (i < n_train ? s.train : s.test).push_back(samples[order[i]]);
  }
  return s;
}

std::vector<LabeledSample> balance_test_set(const std::vector<LabeledSample>& test, int num_classes,
                                            std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < test.size(); ++i) {
    const int l = test[i].label;
    if (l < 0 || l >= num_classes) throw Error(ErrorKind::InvalidArgument, "label out of range");
    by_class[static_cast<std::size_t>(l)].push_back(i);
  }
  std::size_t target = test.size();
  for (int k = 0; k < num_classes; ++k) {
    const auto& members = by_class[static_cast<std::size_t>(k)];
    if (members.empty()) {
      throw Error(ErrorKind::MissingClass, "class " + std::to_string(k) + " absent from test set");
    }
    target = std::min(target, members.size());
  }
  Rng rng(seed);
  std::vector<bool> keep(test.size(), false);
  for (auto& members : by_class) {
    rng.shuffle(members);
    for (std::size_t i = 0; i < target; ++i) keep[members[i]] = true;
  }
  std::vector<LabeledSample> out;
  out.reserve(target * static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (keep[i]) out.push_back(test[i]);
  }
  return out;
}

double accuracy(std::span<const int> predictions, std::span<const int> truth) {
  if (predictions.size() != truth.size()) {
    throw Error(ErrorKind::ShapeError, "prediction and truth lengths differ");
  }
  if (truth.empty()) throw Error(ErrorKind::ShapeError, "accuracy of an empty set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += predictions[i] == truth[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

ConfusionReport confusion_and_recall(std::span<const int> predictions, std::span<const int> truth,
                                     int num_classes) {
  if (predictions.size() != truth.size()) {
    throw Error(ErrorKind::ShapeError, "prediction and truth lengths differ");
  }
  const auto m = static_cast<std::size_t>(num_classes);
  ConfusionReport r;
  r.confusion.assign(m, std::vector<std::size_t>(m, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= num_classes || predictions[i] < 0 || predictions[i] >= num_classes) {
      throw Error(ErrorKind::ShapeError, "label outside [0, num_classes)");
    }
    ++r.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predictions[i])];
  }
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t row = std::accumulate(r.confusion[k].begin(), r.confusion[k].end(), std::size_t{0});
    r.empty_class.push_back(row == 0);
    r.recall.push_back(row == 0 ? 0.0 : static_cast<double>(r.confusion[k][k]) / static_cast<double>(row));
  }
  return r;
}

void ExperimentConfig::validate() const {
  if (synthetic.has_value() == features_csv.has_value()) {
    throw Error(ErrorKind::InvalidArgument, "experiment needs exactly one data source");
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "train_fraction must be in (0, 1)");
  }
  if (repeats < 1) throw Error(ErrorKind::InvalidArgument, "repeats must be >= 1");
  hyper.validate();
  if (synthetic) {
    if (synthetic->size() < 2) throw Error(ErrorKind::DegenerateSpec, "need at least two classes");
    for (const auto& s : *synthetic) s.validate();
  }
}

ExperimentConfig ExperimentConfig::from_json(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw Error(ErrorKind::ParseError, "experiment config must be an object");
  static const std::array<std::string_view, 6> known{"source",  "train_fraction", "repeats",
                                                     "master_seed", "hyper", "run_unweighted_baseline"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw Error(ErrorKind::ParseError, "unknown config field \"" + it.key() + "\"");
    }
  }
  ExperimentConfig c;
  try {
    const json& src = doc.at("source");
    if (src.contains("synthetic")) c.synthetic = synthetic_specs_from_json(src.at("synthetic"));
    if (src.contains("features_csv")) {
      std::filesystem::path p = src.at("features_csv").get<std::string>();
      c.features_csv = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    }
    c.train_fraction = doc.value("train_fraction", c.train_fraction);
    c.repeats = doc.value("repeats", c.repeats);
    c.master_seed = doc.value("master_seed", c.master_seed);
    c.run_unweighted_baseline = doc.value("run_unweighted_baseline", c.run_unweighted_baseline);
    if (doc.contains("hyper")) {
      const json& h = doc.at("hyper");
      for (auto it = h.begin(); it != h.end(); ++it) {
        if (it.key() != "feature_nodes" && it.key() != "enhancement_nodes" && it.key() != "lambda") {
          throw Error(ErrorKind::ParseError, "unknown hyper field \"" + it.key() + "\"");
        }
      }
      c.hyper.feature_nodes = h.value("feature_nodes", c.hyper.feature_nodes);
      c.hyper.enhancement_nodes = h.value("enhancement_nodes", c.hyper.enhancement_nodes);
      c.hyper.lambda = h.value("lambda", c.hyper.lambda);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

std::uint64_t repeat_seed(std::uint64_t master_seed, int repeat) {
  return master_seed * kRepeatSeedMultiplier + static_cast<std::uint64_t>(repeat);
}

RepeatSeeds derive_repeat_seeds(std::uint64_t seed) {
  Rng streams(seed);
  RepeatSeeds s{};
  s.split = streams.next();
  s.balance = streams.next();
  s.model = streams.next();
  return s;
}

double sample_stddev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

FeatureTable load_experiment_data(const ExperimentConfig& config) {
  config.validate();
  if (config.features_csv) return read_feature_csv(*config.features_csv);

  const auto corpus = generate_synthetic(*config.synthetic, config.master_seed);
  std::vector<GrayImage> images;
  images.reserve(corpus.size());
  for (const auto& s : corpus) images.push_back(s.image);
  const auto features = feature_vectors(images);
  FeatureTable table;
  for (std::size_t k = 0; k < config.synthetic->size(); ++k) table.class_names.push_back(std::to_string(k));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "s%05zu", i);
    table.samples.push_back({id, features[i], corpus[i].label});
  }
  return table;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  return run_experiment(config, load_experiment_data(config));
}

namespace {

std::vector<std::size_t> class_counts(const std::vector<LabeledSample>& samples, int m) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(m), 0);
  for (const auto& s : samples) ++counts[static_cast<std::size_t>(s.label)];
  return counts;
}

Matrix features_of(const std::vector<LabeledSample>& samples) {
  FeatureTable t;
  t.samples = samples;
  return t.feature_matrix();
}

std::vector<int> labels_of(const std::vector<LabeledSample>& samples) {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.label);
  return out;
}

RepeatRecord run_repeat(const ExperimentConfig& config, const FeatureTable& data, int repeat) {
  const int m = static_cast<int>(data.class_names.size());
  RepeatRecord rec;
  rec.repeat = repeat;
  rec.seed = repeat_seed(config.master_seed, repeat);
  const RepeatSeeds seeds = derive_repeat_seeds(rec.seed);

  const Split split = split_dataset(data.samples, config.train_fraction, seeds.split);
  const auto test = balance_test_set(split.test, m, seeds.balance);
  rec.train_counts = class_counts(split.train, m);
  rec.test_counts = class_counts(test, m);

  const Matrix x_train = features_of(split.train);
  const auto y_train = labels_of(split.train);
  const Matrix x_test = features_of(test);
  const auto y_test = labels_of(test);

  std::vector<bool> variants{true};
  if (config.run_unweighted_baseline) variants.push_back(false);
  for (bool weighted : variants) {
    WblsHyperParams hyper = config.hyper;
    hyper.seed = seeds.model;
    hyper.weighted = weighted;
    const WblsModel model = train(x_train, y_train, hyper, data.class_names);
    const auto pred = model.predict(x_test).classes;
    const ConfusionReport cr = confusion_and_recall(pred, y_test, m);
    rec.runs.push_back({weighted ? "weighted" : "unweighted", accuracy(pred, y_test), cr.confusion, cr.recall});
  }
  return rec;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config, const FeatureTable& data) {
  config.validate();
  const int m = static_cast<int>(data.class_names.size());
  if (m < 2) throw Error(ErrorKind::DegenerateLabels, "experiment needs at least two classes");

  ExperimentReport report;
  report.class_names = data.class_names;
  report.class_counts = class_counts(data.samples, m);
  report.minority_class = static_cast<int>(
      std::min_element(report.class_counts.begin(), report.class_counts.end()) - report.class_counts.begin());

  // Repeats are independent; results are stored by index so order is fixed.
  const auto n = static_cast<std::size_t>(config.repeats);
  std::vector<std::optional<RepeatRecord>> records(n);
  std::vector<std::exception_ptr> errors(n);
  const unsigned threads =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), n));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < n; i += threads) {
          try {
            records[i] = run_repeat(config, data, static_cast<int>(i) + 1);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      throw Error(e.kind(), "repeat " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  for (auto& r : records) report.repeats.push_back(std::move(*r));

  const std::size_t variants = report.repeats.front().runs.size();
  for (std::size_t v = 0; v < variants; ++v) {
    std::vector<double> acc;
    std::vector<double> minority;
    for (const auto& r : report.repeats) {
      acc.push_back(r.runs[v].accuracy);
      minority.push_back(r.runs[v].recall[static_cast<std::size_t>(report.minority_class)]);
    }
    VariantSummary s;
    s.variant = report.repeats.front().runs[v].variant;
    s.accuracy_mean = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
    s.accuracy_std = sample_stddev(acc);
    s.minority_recall_mean =
        std::accumulate(minority.begin(), minority.end(), 0.0) / static_cast<double>(minority.size());
    s.minority_recall_std = sample_stddev(minority);
    report.summaries.push_back(s);
  }
  if (report.summaries.size() == 2) {
    report.minority_recall_margin =
        report.summaries[0].minority_recall_mean - report.summaries[1].minority_recall_mean;
  }
  return report;
}

json ExperimentReport::to_json() const {
  json doc;
  doc["class_names"] = class_names;
  doc["class_counts"] = class_counts;
  doc["minority_class"] = minority_class;
  json reps = json::array();
  for (const auto& r : repeats) {
    json runs = json::array();
    for (const auto& run : r.runs) {
      runs.push_back({{"variant", run.variant},
                      {"accuracy", run.accuracy},
                      {"confusion", run.confusion},
                      {"recall", run.recall}});
    }
    reps.push_back({{"repeat", r.repeat},
                    {"seed", r.seed},
                    {"train_counts", r.train_counts},
                    {"test_counts", r.test_counts},
                    {"runs", std::move(runs)}});
  }
  doc["repeats"] = std::move(reps);
  json sums = json::array();
  for (const auto& s : summaries) {
    sums.push_back({{"variant", s.variant},
                    {"accuracy_mean", s.accuracy_mean},
                    {"accuracy_std", s.accuracy_std},
                    {"minority_recall_mean", s.minority_recall_mean},
                    {"minority_recall_std", s.minority_recall_std}});
  }
  doc["summary"] = std::move(sums);
  doc["minority_recall_margin"] = minority_recall_margin ? json(*minority_recall_margin) : json(nullptr);
  return doc;
}

std::string ExperimentReport::to_csv() const {
  std::ostringstream out;
  out << "repeat,seed,variant,train_size,test_size,accuracy,minority_recall";
  for (const auto& name : class_names) out << ",recall_" << name;
  out << '\n';
  for (const auto& r : repeats) {
    const auto train_size = std::accumulate(r.train_counts.begin(), r.train_counts.end(), std::size_t{0});
    const auto test_size = std::accumulate(r.test_counts.begin(), r.test_counts.end(), std::size_t{0});
    for (const auto& run : r.runs) {
      out << r.repeat << ',' << r.seed << ',' << run.variant << ',' << train_size << ',' << test_size
          << ',' << format_double(run.accuracy) << ','
          << format_double(run.recall[static_cast<std::size_t>(minority_class)]);
      for (double rc : run.recall) out << ',' << format_double(rc);
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace opstage
