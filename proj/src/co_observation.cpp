#include "roadfuse/co_observation.hpp"

namespace roadfuse {

void CoObservationTable::add_detection(std::span<const VoxelHandle> voxels) {
  for (std::size_t i = 0; i < voxels.size(); ++i) {
    const VoxelHandle a = voxels[i];
    for (std::size_t j = i + 1; j < voxels.size(); ++j) {
      const VoxelHandle b = voxels[j];
      auto [it, inserted] = pairs_.try_emplace(pair_key(a, b), 0u);
      ++it->second;
      if (inserted) {
        neighbors_[a].push_back(b);
        neighbors_[b].push_back(a);
      }
    }
  }
}

std::uint32_t CoObservationTable::count(VoxelHandle a, VoxelHandle b) const {
  if (a == b) {
    return 0;
  }
  const auto it = pairs_.find(pair_key(a, b));
  return it == pairs_.end() ? 0u : it->second;
}

std::span<const VoxelHandle> CoObservationTable::neighbors(VoxelHandle v) const {
  const auto it = neighbors_.find(v);
  if (it == neighbors_.end()) {
    return {};
  }
  return it->second;
}

}  // namespace roadfuse
