#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "opstage/dataset.hpp"
#include "opstage/image.hpp"
#include "opstage/wbls.hpp"

namespace opstage {

// One texture family: pixel(row, col) = (row_step*row + col_step*col) mod
// levels, then each pixel is replaced by a uniform random level with
// probability `noise`.
struct SyntheticClassSpec {
  int row_step = 1;
  int col_step = 1;
  double noise = 0.0;
  int count = 1;
  int image_size = 32;
  int levels = 8;

  void validate() const;
};

struct SyntheticImage {
  GrayImage image;
  int label;
};

std::vector<SyntheticImage> generate_synthetic(const std::vector<SyntheticClassSpec>& specs,
                                               std::uint64_t seed);

std::vector<SyntheticClassSpec> synthetic_specs_from_json(const nlohmann::json& doc);

struct Split {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> test;
};

// Shuffle by seed, then the first ceil(fraction * n) go to train.
Split split_dataset(const std::vector<LabeledSample>& samples, double train_fraction,
                    std::uint64_t seed);

// Downsample every class to the smallest class count. Survivors keep their
// relative order.
std::vector<LabeledSample> balance_test_set(const std::vector<LabeledSample>& test,
                                            int num_classes, std::uint64_t seed);

double accuracy(std::span<const int> predictions, std::span<const int> truth);

struct ConfusionReport {
  std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted]
  std::vector<double> recall;
  std::vector<bool> empty_class;  // recall reported as 0 for these
};

ConfusionReport confusion_and_recall(std::span<const int> predictions, std::span<const int> truth,
                                     int num_classes);

struct ExperimentConfig {
  // Exactly one source.
  std::optional<std::vector<SyntheticClassSpec>> synthetic;
  std::optional<std::filesystem::path> features_csv;

  double train_fraction = 0.75;
  int repeats = 10;
  std::uint64_t master_seed = 0;
  WblsHyperParams hyper{};  // hyper.seed and hyper.weighted are set per run
  bool run_unweighted_baseline = true;

  void validate() const;
  static ExperimentConfig from_json(const nlohmann::json& doc,
                                    const std::filesystem::path& base_dir = {});
};

inline constexpr std::uint64_t kRepeatSeedMultiplier = 1'000'003;

// master_seed * 1,000,003 + r (mod 2^64), r counted from 1.
std::uint64_t repeat_seed(std::uint64_t master_seed, int repeat);

// Independent sub-seeds for one repeat, drawn from its repeat seed.
struct RepeatSeeds {
  std::uint64_t split;
  std::uint64_t balance;
  std::uint64_t model;
};

RepeatSeeds derive_repeat_seeds(std::uint64_t repeat_seed);

struct RunRecord {
  std::string variant;  // "weighted" or "unweighted"
  double accuracy = 0.0;
  std::vector<std::vector<std::size_t>> confusion;
  std::vector<double> recall;
};

struct RepeatRecord {
  int repeat = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> train_counts;
  std::vector<std::size_t> test_counts;  // after balancing
  std::vector<RunRecord> runs;
};

struct VariantSummary {
  std::string variant;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
  double minority_recall_mean = 0.0;
  double minority_recall_std = 0.0;
};

struct ExperimentReport {
  std::vector<std::string> class_names;
  std::vector<std::size_t> class_counts;
  int minority_class = 0;
  std::vector<RepeatRecord> repeats;
  std::vector<VariantSummary> summaries;
  // weighted minus unweighted mean minority recall, when both ran.
  std::optional<double> minority_recall_margin;

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

// Builds the labeled feature table for the configured source.
FeatureTable load_experiment_data(const ExperimentConfig& config);

ExperimentReport run_experiment(const ExperimentConfig& config);
ExperimentReport run_experiment(const ExperimentConfig& config, const FeatureTable& data);

// Sample standard deviation (n - 1); 0 for fewer than two values.
double sample_stddev(std::span<const double> values);

}  // namespace opstage
