// opstage: texture features, weighted BLS classification and staging rules
// from the command line. Exit status: 0 ok, 2 invalid input, 3 numeric failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "opstage/dataset.hpp"
#include "opstage/error.hpp"
#include "opstage/glcm.hpp"
#include "opstage/harness.hpp"
#include "opstage/image.hpp"
#include "opstage/json_io.hpp"
#include "opstage/staging.hpp"
#include "opstage/wbls.hpp"

namespace fs = std::filesystem;
using namespace opstage;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitNumeric = 3;

std::string sample_id(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%05zu", i);
  return buf;
}

struct SynthArgs {
  std::string spec;
  std::string out_dir;
  std::uint64_t seed = 0;
};

int run_synth(const SynthArgs& a) {
  const auto specs = synthetic_specs_from_json(read_json_file(a.spec));
  const auto corpus = generate_synthetic(specs, a.seed);
  fs::create_directories(a.out_dir);
  std::vector<IdLabel> labels;
  std::vector<std::size_t> per_class(specs.size(), 0);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const std::string id = sample_id(i);
    write_pgm(fs::path(a.out_dir) / (id + ".pgm"), corpus[i].image);
    labels.push_back({id, std::to_string(corpus[i].label)});
    ++per_class[static_cast<std::size_t>(corpus[i].label)];
  }
  write_text_file(fs::path(a.out_dir) / "labels.csv", format_labels_csv(labels));
  std::cout << "images " << corpus.size() << '\n';
  for (std::size_t k = 0; k < per_class.size(); ++k) {
    std::cout << "class " << k << ' ' << per_class[k] << '\n';
  }
  return kExitOk;
}

struct ExtractArgs {
  std::string images;
  std::string labels;
  int levels = 16;
  std::string out;
  unsigned threads = 0;
};

int run_extract(const ExtractArgs& a) {
  const auto rows = read_labels_csv(a.labels);
  std::set<std::string> listed;
  for (const auto& r : rows) {
    if (!listed.insert(r.id).second) throw Error(ErrorKind::ParseError, "duplicate id " + r.id);
  }
  if (!fs::is_directory(a.images)) throw Error(ErrorKind::IoError, "not a directory: " + a.images);
  for (const auto& entry : fs::directory_iterator(a.images)) {
    if (entry.path().extension() == ".pgm" && !listed.count(entry.path().stem().string())) {
      throw Error(ErrorKind::ParseError, entry.path().string() + " has no entry in " + a.labels);
    }
  }
  std::vector<GrayImage> images;
  std::vector<std::string> raw_labels;
  for (const auto& r : rows) {
    const fs::path file = fs::path(a.images) / (r.id + ".pgm");
    if (!fs::exists(file)) throw Error(ErrorKind::IoError, "missing image for id " + r.id + ": " + file.string());
    const RawRaster raster = read_pgm(file);
    try {
      images.push_back(quantize_image(raster, raster.max_value, a.levels));
    } catch (const Error& e) {
      throw Error(e.kind(), file.string() + ": " + e.what());
    }
    raw_labels.push_back(r.label);
  }
  std::vector<FeatureVector> features;
  try {
    features = feature_vectors(images, a.threads);
  } catch (const Error& e) {
    // Name the first offending file.
    for (std::size_t i = 0; i < images.size(); ++i) {
      try {
        (void)feature_vector(images[i]);
      } catch (const Error& inner) {
        throw Error(inner.kind(), (fs::path(a.images) / (rows[i].id + ".pgm")).string() + ": " + inner.what());
      }
    }
    throw;
  }
  auto [names, indices] = index_labels(raw_labels);
  FeatureTable table;
  table.class_names = std::move(names);
  for (std::size_t i = 0; i < rows.size(); ++i) table.samples.push_back({rows[i].id, features[i], indices[i]});
  write_text_file(a.out, format_feature_csv(table));
  std::cerr << "extracted " << rows.size() << " feature rows to " << a.out << '\n';
  return kExitOk;
}

struct TrainArgs {
  std::string features;
  std::string out;
  int feature_nodes = 10;
  int enh_nodes = 10;
  double lambda = 1e-3;
  std::uint64_t seed = 0;
  bool unweighted = false;
};

int run_train(const TrainArgs& a) {
  const FeatureTable table = read_feature_csv(a.features);
  WblsHyperParams hyper;
  hyper.feature_nodes = a.feature_nodes;
  hyper.enhancement_nodes = a.enh_nodes;
  hyper.lambda = a.lambda;
  hyper.seed = a.seed;
  hyper.weighted = !a.unweighted;
  const Matrix x = table.feature_matrix();
  const auto y = table.labels();
  const WblsModel model = train(x, y, hyper, table.class_names);
  model.save(a.out);
  const auto pred = model.predict(x).classes;
  std::cerr << "trained on " << y.size() << " samples, " << table.class_names.size()
            << " classes; training accuracy " << accuracy(pred, y) << '\n';
  return kExitOk;
}

struct PredictArgs {
  std::string model;
  std::string features;
  std::string out;
};

int run_predict(const PredictArgs& a) {
  const WblsModel model = WblsModel::load(a.model);
  const FeatureTable table = read_feature_csv(a.features);
  const Prediction p = model.predict(table.feature_matrix());

  std::ostringstream out;
  out << "id,predicted";
  for (const auto& name : model.class_names()) out << ",score_" << name;
  out << '\n';
  for (std::size_t i = 0; i < table.samples.size(); ++i) {
    out << table.samples[i].id << ',' << model.class_names()[static_cast<std::size_t>(p.classes[i])];
    for (Eigen::Index c = 0; c < p.scores.cols(); ++c) {
      out << ',' << format_double(p.scores(static_cast<Eigen::Index>(i), c));
    }
    out << '\n';
  }
  if (a.out.empty()) {
    std::cout << out.str();
  } else {
    write_text_file(a.out, out.str());
  }

  // Score against the label column when every label names a model class.
  std::map<std::string, int> model_index;
  for (std::size_t k = 0; k < model.class_names().size(); ++k) {
    model_index[model.class_names()[k]] = static_cast<int>(k);
  }
  std::vector<int> truth;
  for (const auto& s : table.samples) {
    const auto it = model_index.find(table.class_names[static_cast<std::size_t>(s.label)]);
    if (it == model_index.end()) {
      std::cerr << "predicted " << table.samples.size() << " rows (labels not scored)\n";
      return kExitOk;
    }
    truth.push_back(it->second);
  }
  if (!truth.empty()) std::cerr << "accuracy " << accuracy(p.classes, truth) << '\n';
  return kExitOk;
}

int run_stage(const std::string& path) {
  nlohmann::json doc;
  if (path == "-") {
    try {
      doc = nlohmann::json::parse(std::cin);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::ParseError, e.what());
    }
  } else {
    doc = read_json_file(path);
  }
  std::cout << to_string(determine_final_stage(assessment_from_json(doc))) << '\n';
  return kExitOk;
}

int run_experiment_cmd(const std::string& config_path, const std::string& out_dir) {
  const ExperimentConfig config =
      ExperimentConfig::from_json(read_json_file(config_path), fs::path(config_path).parent_path());
  const ExperimentReport report = run_experiment(config);
  fs::create_directories(out_dir);
  write_text_file(fs::path(out_dir) / "report.json", dump_precise(report.to_json()));
  write_text_file(fs::path(out_dir) / "summary.csv", report.to_csv());
  for (const auto& s : report.summaries) {
    std::cerr << s.variant << ": accuracy " << s.accuracy_mean << " +/- " << s.accuracy_std
              << ", minority recall " << s.minority_recall_mean << " +/- " << s.minority_recall_std << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pneumoconiosis opacity classification and staging pipeline", "opstage"};
  app.require_subcommand(1);
  app.get_formatter()->column_width(40);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic labeled texture corpus");
  synth_cmd->add_option("--spec", synth.spec, "Class specification JSON")->required()->check(CLI::ExistingFile);
  synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory for PGM files and labels.csv")->required();
  synth_cmd->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();

  ExtractArgs extract;
  auto* extract_cmd = app.add_subcommand("extract", "Compute 16-component GLCM feature vectors");
  extract_cmd->add_option("--images", extract.images, "Directory of <id>.pgm images")->required();
  extract_cmd->add_option("--labels", extract.labels, "CSV with header id,label")->required()->check(CLI::ExistingFile);
  extract_cmd->add_option("--levels", extract.levels, "Gray levels after quantization")
      ->capture_default_str()
      ->check(CLI::Range(2, 65536));
  extract_cmd->add_option("--out", extract.out, "Feature CSV to write")->required();
  extract_cmd->add_option("--threads", extract.threads, "Worker threads (0 = all cores)")->capture_default_str();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a weighted broad learning system");
  train_cmd->add_option("--features", tr.features, "Feature CSV")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", tr.out, "Model JSON to write")->required();
  train_cmd->add_option("--feature-nodes", tr.feature_nodes, "Feature-layer width")->capture_default_str();
  train_cmd->add_option("--enh-nodes", tr.enh_nodes, "Enhancement-layer width")->capture_default_str();
  train_cmd->add_option("--lambda", tr.lambda, "Ridge regularizer")->capture_default_str();
  train_cmd->add_option("--seed", tr.seed, "Random-map seed")->capture_default_str();
  train_cmd->add_flag("--unweighted", tr.unweighted, "Disable class weighting (ablation)");

  PredictArgs pr;
  auto* predict_cmd = app.add_subcommand("predict", "Classify feature rows with a trained model");
  predict_cmd->add_option("--model", pr.model, "Model JSON")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--features", pr.features, "Feature CSV")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--out", pr.out, "Predictions CSV (default: standard output)");

  std::string assessment;
  auto* stage_cmd = app.add_subcommand("stage", "Map six sub-region levels to a final stage");
  stage_cmd->add_option("--assessment", assessment, "Assessment JSON ('-' for standard input)")->required();

  std::string config_path;
  std::string report_dir;
  auto* exp_cmd = app.add_subcommand("experiment", "Run the repeated split/train/evaluate protocol");
  exp_cmd->add_option("--config", config_path, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  exp_cmd->add_option("--out-dir", report_dir, "Directory for report.json and summary.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (*synth_cmd) return run_synth(synth);
    if (*extract_cmd) return run_extract(extract);
    if (*train_cmd) return run_train(tr);
    if (*predict_cmd) return run_predict(pr);
    if (*stage_cmd) return run_stage(assessment);
    if (*exp_cmd) return run_experiment_cmd(config_path, report_dir);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::NumericError ? kExitNumeric : kExitInvalid;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitInvalid;
}
