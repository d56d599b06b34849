#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>

#include <nlohmann/json.hpp>

namespace opstage {

enum class SubRegion {
  LeftTop,
  LeftMiddle,
  LeftBottom,
  RightTop,
  RightMiddle,
  RightBottom,
};

inline constexpr std::array<SubRegion, 6> kSubRegions{
    SubRegion::LeftTop,  SubRegion::LeftMiddle,  SubRegion::LeftBottom,
    SubRegion::RightTop, SubRegion::RightMiddle, SubRegion::RightBottom,
};

// Opacity profusion of one sub-region, ordered by severity.
enum class OpacityLevel { Normal = 0, Level1 = 1, Level2 = 2, Level3 = 3 };

enum class FinalStage { Normal = 0, StageI = 1, StageII = 2, StageIII = 3 };

std::string_view to_string(SubRegion region);
std::string_view to_string(FinalStage stage);
std::optional<SubRegion> parse_sub_region(std::string_view name);
OpacityLevel opacity_level_from_int(int value);

struct ChestAssessment {
  // Indexed by SubRegion.
  std::array<OpacityLevel, 6> levels{};
  bool large_opacities = false;

  OpacityLevel& operator[](SubRegion r) { return levels[static_cast<std::size_t>(r)]; }
  OpacityLevel operator[](SubRegion r) const { return levels[static_cast<std::size_t>(r)]; }
};

// Most frequent level among the readers; ties go to the more severe level.
OpacityLevel majority_vote(std::span<const OpacityLevel> reader_labels);

// First matching rule, most severe first:
//   large opacities                          -> Stage III
//   any Level 3, or Level 2 in >= 4 regions  -> Stage II
//   any Level 2, or Level 1 in >= 3 regions  -> Stage I
//   otherwise                                -> Normal
FinalStage determine_final_stage(const ChestAssessment& a);

// {"left-top": 0..3 or [reader levels...], ..., "large_opacities": bool}
ChestAssessment assessment_from_json(const nlohmann::json& doc);

}  // namespace opstage
