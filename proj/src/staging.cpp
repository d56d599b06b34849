#include "opstage/staging.hpp"

#include <vector>

#include "opstage/error.hpp"

namespace opstage {

using nlohmann::json;

std::string_view to_string(SubRegion region) {
  switch (region) {
    case SubRegion::LeftTop: return "left-top";
    case SubRegion::LeftMiddle: return "left-middle";
    case SubRegion::LeftBottom: return "left-bottom";
    case SubRegion::RightTop: return "right-top";
    case SubRegion::RightMiddle: return "right-middle";
    case SubRegion::RightBottom: return "right-bottom";
  }
  return "?";
}

std::string_view to_string(FinalStage stage) {
  switch (stage) {
    case FinalStage::Normal: return "normal";
    case FinalStage::StageI: return "stage-1";
    case FinalStage::StageII: return "stage-2";
    case FinalStage::StageIII: return "stage-3";
  }
  return "?";
}

std::optional<SubRegion> parse_sub_region(std::string_view name) {
  for (SubRegion r : kSubRegions) {
    if (to_string(r) == name) return r;
  }
  return std::nullopt;
}

OpacityLevel opacity_level_from_int(int value) {
  if (value < 0 || value > 3) {
    throw Error(ErrorKind::InvalidArgument, "opacity level must be 0..3, got " + std::to_string(value));
  }
  return static_cast<OpacityLevel>(value);
}

OpacityLevel majority_vote(std::span<const OpacityLevel> reader_labels) {
  if (reader_labels.empty()) throw Error(ErrorKind::EmptyVote, "no reader labels to vote on");
  std::array<int, 4> tally{};
  for (OpacityLevel l : reader_labels) ++tally[static_cast<std::size_t>(l)];
  // Scan from most severe so that ties resolve upward.
  int best = 3;
  for (int lvl = 2; lvl >= 0; --lvl) {
    if (tally[static_cast<std::size_t>(lvl)] > tally[static_cast<std::size_t>(best)]) best = lvl;
  }
  return static_cast<OpacityLevel>(best);
}

FinalStage determine_final_stage(const ChestAssessment& a) {
  if (a.large_opacities) return FinalStage::StageIII;
  std::array<int, 4> count{};
  for (OpacityLevel l : a.levels) ++count[static_cast<std::size_t>(l)];
  const int level1 = count[1];
  const int level2 = count[2];
  const int level3 = count[3];
  if (level3 >= 1 || level2 >= 4) return FinalStage::StageII;
  if (level2 >= 1 || level1 >= 3) return FinalStage::StageI;
  return FinalStage::Normal;
}

ChestAssessment assessment_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::ParseError, "assessment must be a JSON object");
  ChestAssessment a;
  std::array<bool, 6> seen{};
  bool have_large = false;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (it.key() == "large_opacities") {
      if (!it.value().is_boolean()) throw Error(ErrorKind::ParseError, "large_opacities must be boolean");
      a.large_opacities = it.value().get<bool>();
      have_large = true;
      continue;
    }
    const auto region = parse_sub_region(it.key());
    if (!region) throw Error(ErrorKind::ParseError, "unknown key \"" + it.key() + "\"");
    const json& v = it.value();
    if (v.is_number_integer()) {
      a[*region] = opacity_level_from_int(v.get<int>());
    } else if (v.is_array()) {
      // Per-reader grades, resolved by vote.
      std::vector<OpacityLevel> votes;
      for (const json& e : v) {
        if (!e.is_number_integer()) throw Error(ErrorKind::ParseError, it.key() + ": votes must be integers");
        votes.push_back(opacity_level_from_int(e.get<int>()));
      }
      a[*region] = majority_vote(votes);
    } else {
      throw Error(ErrorKind::ParseError, it.key() + ": expected an integer level or an array of votes");
    }
    seen[static_cast<std::size_t>(*region)] = true;
  }
  for (SubRegion r : kSubRegions) {
    if (!seen[static_cast<std::size_t>(r)]) {
      throw Error(ErrorKind::ParseError, "missing sub-region \"" + std::string(to_string(r)) + "\"");
    }
  }
  if (!have_large) throw Error(ErrorKind::ParseError, "missing \"large_opacities\"");
  return a;
}

}  // namespace opstage
