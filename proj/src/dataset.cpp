#include "opstage/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <optional>
#include <sstream>

#include "opstage/error.hpp"
#include "opstage/json_io.hpp"

namespace opstage {

Matrix FeatureTable::feature_matrix() const {
  Matrix x(static_cast<Eigen::Index>(samples.size()), static_cast<Eigen::Index>(kFeatureDim));
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = 0; j < kFeatureDim; ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = samples[i].features[j];
  return x;
}

std::vector<int> FeatureTable::labels() const {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.label);
  return out;
}

namespace {

std::optional<long long> as_integer(const std::string& s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

// Non-empty lines with a trailing '\r' removed.
std::vector<std::string> csv_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string line(text.substr(start, nl - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
    start = nl + 1;
  }
  return lines;
}

void check_field(const std::string& value, const char* what) {
  if (value.find_first_of(",\n\r") != std::string::npos) {
    throw Error(ErrorKind::InvalidArgument, std::string(what) + " may not contain commas or newlines");
  }
}

}  // namespace

std::pair<std::vector<std::string>, std::vector<int>> index_labels(
    const std::vector<std::string>& labels) {
  std::vector<std::string> names(labels.begin(), labels.end());
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  const bool numeric = std::all_of(names.begin(), names.end(),
                                   [](const std::string& s) { return as_integer(s).has_value(); });
  if (numeric) {
    std::sort(names.begin(), names.end(), [](const std::string& a, const std::string& b) {
      return *as_integer(a) < *as_integer(b);
    });
  }
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < names.size(); ++i) index[names[i]] = static_cast<int>(i);
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back(index.at(l));
  return {std::move(names), std::move(out)};
}

std::vector<IdLabel> read_labels_csv(const std::filesystem::path& path) {
  const auto lines = csv_lines(read_text_file(path));
  if (lines.empty() || lines.front() != "id,label") {
    throw Error(ErrorKind::ParseError, path.string() + ": expected header \"id,label\"");
  }
  std::vector<IdLabel> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto f = split_line(lines[i]);
    if (f.size() != 2 || f[0].empty()) {
      throw Error(ErrorKind::ParseError, path.string() + ": malformed row " + std::to_string(i + 1));
    }
    rows.push_back({std::move(f[0]), std::move(f[1])});
  }
  return rows;
}

std::string format_labels_csv(const std::vector<IdLabel>& rows) {
  std::string out = "id,label\n";
  for (const auto& r : rows) {
    check_field(r.id, "id");
    check_field(r.label, "label");
    out += r.id + "," + r.label + "\n";
  }
  return out;
}

namespace {

std::string feature_header() {
  std::string h = "id,label";
  for (std::size_t k = 1; k <= kFeatureDim; ++k) h += ",f" + std::to_string(k);
  return h;
}

}  // namespace

FeatureTable parse_feature_csv(std::string_view text) {
  const auto lines = csv_lines(text);
  if (lines.empty() || lines.front() != feature_header()) {
    throw Error(ErrorKind::ParseError, "feature CSV must start with header " + feature_header());
  }
  std::vector<std::string> ids;
  std::vector<std::string> raw_labels;
  std::vector<FeatureVector> features;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_line(lines[i]);
    if (f.size() != 2 + kFeatureDim) {
      throw Error(ErrorKind::ParseError, "feature CSV row " + std::to_string(i + 1) + " has " +
                                             std::to_string(f.size()) + " fields");
    }
    FeatureVector fv{};
    for (std::size_t k = 0; k < kFeatureDim; ++k) {
      const std::string& s = f[2 + k];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error(ErrorKind::ParseError, "feature CSV row " + std::to_string(i + 1) +
                                               ": bad number \"" + s + "\"");
      }
      fv[k] = v;
    }
    ids.push_back(f[0]);
    raw_labels.push_back(f[1]);
    features.push_back(fv);
  }
  auto [names, indices] = index_labels(raw_labels);
  FeatureTable table;
  table.class_names = std::move(names);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    table.samples.push_back({ids[i], features[i], indices[i]});
  }
  return table;
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
  try {
    return parse_feature_csv(read_text_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::IoError) throw;
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::string format_feature_csv(const FeatureTable& table) {
  std::ostringstream out;
  out << feature_header() << '\n';
  for (const auto& s : table.samples) {
    check_field(s.id, "id");
    const std::string& label =
        s.label >= 0 && static_cast<std::size_t>(s.label) < table.class_names.size()
            ? table.class_names[static_cast<std::size_t>(s.label)]
            : throw Error(ErrorKind::InvalidArgument, "sample label outside class table");
    check_field(label, "label");
    out << s.id << ',' << label;
    for (double v : s.features) out << ',' << format_double(v);
    out << '\n';
  }
  return out.str();
}

}  // namespace opstage
