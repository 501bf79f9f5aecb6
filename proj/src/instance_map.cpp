#include "roadfuse/instance_map.hpp"

#include <algorithm>
#include <set>

#include <absl/container/flat_hash_set.h>

namespace roadfuse {

double same_instance_probability(std::uint32_t co_observed, std::uint32_t member_count,
                                 std::uint32_t candidate_count) {
  if (member_count == 0 || candidate_count == 0) {
    return 0.0;
  }
  const double a = static_cast<double>(co_observed);
  // A counts joint appearances of any type while n counts the dominant
  // type only, so the raw ratio can exceed 1 on mixed-type voxels.
  return std::min(1.0, std::max(a / member_count, a / candidate_count));
}

MembershipScore membership_score(const ReliableVoxel& candidate, const MarkingInstance& instance,
                                 const SemanticVoxelMap& map, double beta_p) {
  MembershipScore score;
  for (const InstanceVoxel& member : instance.voxels) {
    const std::uint32_t a = map.co_observation().count(member.handle, candidate.handle);
    const double p =
        same_instance_probability(a, map.voxel(member.handle).best_count(), candidate.best_count);
    if (p > beta_p) {
      ++score.h;
    }
  }
  if (!instance.voxels.empty()) {
    score.ratio = static_cast<double>(score.h) / static_cast<double>(instance.voxels.size());
  }
  return score;
}

bool accepts(const MembershipScore& score, const ClusteringParams& params) {
  return score.h > params.beta_n || score.ratio > params.beta_r;
}

InstanceMap::InstanceMap(ClusteringParams clustering, PolylineFitParams fit)
    : clustering_(clustering), fit_(fit) {}

std::optional<InstanceId> InstanceMap::owner(VoxelHandle handle) const {
  const auto it = owner_.find(handle);
  if (it == owner_.end()) {
    return std::nullopt;
  }
  return it->second;
}

InstanceId InstanceMap::assign_or_create(const ReliableVoxel& candidate,
                                         const SemanticVoxelMap& map) {
  // Members never co-observed with the candidate have p = 0 and cannot
  // count towards h, so only the candidate's neighbors need scoring.
  absl::flat_hash_map<InstanceId, std::uint32_t> h;
  const CoObservationTable& table = map.co_observation();
  for (const VoxelHandle neighbor : table.neighbors(candidate.handle)) {
    const auto owner_it = owner_.find(neighbor);
    if (owner_it == owner_.end()) {
      continue;
    }
    const MarkingInstance& instance = instances_.at(owner_it->second);
    if (instance.type != candidate.best_type) {
      continue;
    }
    const double p = same_instance_probability(table.count(neighbor, candidate.handle),
                                               map.voxel(neighbor).best_count(),
                                               candidate.best_count);
    if (p > clustering_.beta_p) {
      ++h[owner_it->second];
    }
  }

  std::optional<InstanceId> chosen;
  std::uint32_t chosen_h = 0;
  for (const auto& [id, count] : h) {
    const auto& instance = instances_.at(id);
    const MembershipScore score{
        count, static_cast<double>(count) / static_cast<double>(instance.voxels.size())};
    if (!accepts(score, clustering_)) {
      continue;
    }
    if (!chosen || count > chosen_h || (count == chosen_h && id < *chosen)) {
      chosen = id;
      chosen_h = count;
    }
  }

  const InstanceVoxel member{candidate.key, candidate.handle, candidate.center,
                             candidate.best_count};
  if (!chosen) {
    const InstanceId id = next_id_++;
    MarkingInstance instance;
    instance.id = id;
    instance.type = candidate.best_type;
    instance.voxels.push_back(member);
    instances_.emplace(id, std::move(instance));
    chosen = id;
  } else {
    instances_.at(*chosen).voxels.push_back(member);
  }
  owner_[candidate.handle] = *chosen;
  return *chosen;
}

bool InstanceMap::refit(MarkingInstance& instance) {
  if (instance.voxels.size() == 1) {
    instance.polyline = {instance.voxels.front().center};
    return true;
  }
  std::vector<Vec3> centers;
  centers.reserve(instance.voxels.size());
  for (const auto& member : instance.voxels) {
    centers.push_back(member.center);
  }
  auto line = estimate_polyline(centers, fit_);
  if (!line) {
    return false;
  }
  instance.polyline = std::move(*line);
  return true;
}

InstanceUpdate InstanceMap::update(std::span<const ReliableVoxel> new_reliable,
                                   const SemanticVoxelMap& map) {
  std::set<InstanceId> dirty;
  for (const ReliableVoxel& candidate : new_reliable) {
    dirty.insert(assign_or_create(candidate, map));
  }
  InstanceUpdate result;
  result.dirty.assign(dirty.begin(), dirty.end());
  for (const InstanceId id : result.dirty) {
    if (!refit(instances_.at(id))) {
      result.warnings.push_back("instance " + std::to_string(id) +
                                ": degenerate voxel set, keeping previous polyline");
    }
  }
  return result;
}

std::vector<InstanceId> InstanceMap::remove_voxels(std::span<const VoxelHandle> removed) {
  std::set<InstanceId> affected;
  absl::flat_hash_set<VoxelHandle> gone;
  for (const VoxelHandle handle : removed) {
    const auto it = owner_.find(handle);
    if (it == owner_.end()) {
      continue;
    }
    affected.insert(it->second);
    gone.insert(handle);
    owner_.erase(it);
  }
  std::vector<InstanceId> dropped;
  for (const InstanceId id : affected) {
    MarkingInstance& instance = instances_.at(id);
    std::erase_if(instance.voxels,
                  [&](const InstanceVoxel& member) { return gone.contains(member.handle); });
    if (instance.voxels.empty()) {
      instances_.erase(id);
      dropped.push_back(id);
    } else {
      refit(instance);
    }
  }
  return dropped;
}

}  // namespace roadfuse
