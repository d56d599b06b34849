#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "opstage/glcm.hpp"
#include "opstage/wbls.hpp"

namespace opstage {

struct LabeledSample {
  std::string id;
  FeatureVector features{};
  int label = 0;
};

// Samples plus the class-name table their labels index into.
struct FeatureTable {
  std::vector<std::string> class_names;
  std::vector<LabeledSample> samples;

  Matrix feature_matrix() const;
  std::vector<int> labels() const;
};

struct IdLabel {
  std::string id;
  std::string label;
};

// Maps label strings to dense indices. Names are ordered numerically when
// every label is an integer, lexicographically otherwise.
std::pair<std::vector<std::string>, std::vector<int>> index_labels(
    const std::vector<std::string>& labels);

// id,label
std::vector<IdLabel> read_labels_csv(const std::filesystem::path& path);
std::string format_labels_csv(const std::vector<IdLabel>& rows);

// id,label,f1,...,f16 with 17 significant digits per feature. An empty
// label column is allowed when reading (unlabeled rows get label "").
FeatureTable parse_feature_csv(std::string_view text);
FeatureTable read_feature_csv(const std::filesystem::path& path);
std::string format_feature_csv(const FeatureTable& table);

}  // namespace opstage
