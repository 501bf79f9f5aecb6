#include "roadfuse/types.hpp"

namespace roadfuse {

std::string_view to_string(MarkingType type) {
  switch (type) {
    case MarkingType::kLaneline:
      return "laneline";
    case MarkingType::kRoadedge:
      return "roadedge";
    case MarkingType::kStopline:
      return "stopline";
  }
  return "laneline";
}

std::optional<MarkingType> parse_marking_type(std::string_view name) {
  for (const MarkingType type : kAllMarkingTypes) {
    if (to_string(type) == name) {
      return type;
    }
  }
  return std::nullopt;
}

}  // namespace roadfuse
