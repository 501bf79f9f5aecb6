#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "roadfuse/polyline_fit.hpp"
#include "roadfuse/voxel_map.hpp"

namespace roadfuse {

using InstanceId = std::uint64_t;

struct ClusteringParams {
  double beta_p = 0.6;
  std::uint32_t beta_n = 3;
  double beta_r = 0.7;
};

struct InstanceVoxel {
  VoxelKey key;
  VoxelHandle handle = 0;
  Vec3 center = Vec3::Zero();
  std::uint32_t best_count = 0;  // at admission
};

struct MarkingInstance {
  InstanceId id = 0;
  MarkingType type = MarkingType::kLaneline;
  std::vector<InstanceVoxel> voxels;  // admission order
  Polyline polyline;
};

// p = max(A / n_member, A / n_candidate), clamped to [0, 1]. Counts are
// dominant-type counts; 0 when either count is 0.
double same_instance_probability(std::uint32_t co_observed, std::uint32_t member_count,
                                 std::uint32_t candidate_count);

struct MembershipScore {
  std::uint32_t h = 0;  // members with p > beta_p
  double ratio = 0.0;   // h / member count
};

// Direct evaluation over every member of `instance`, with member counts
// read live from the map.
MembershipScore membership_score(const ReliableVoxel& candidate, const MarkingInstance& instance,
                                 const SemanticVoxelMap& map, double beta_p);

bool accepts(const MembershipScore& score, const ClusteringParams& params);

struct InstanceUpdate {
  std::vector<InstanceId> dirty;  // ascending
  std::vector<std::string> warnings;
};

// Incrementally clusters reliable voxels into typed instances using
// co-observation evidence and refits a polyline per changed instance.
class InstanceMap {
 public:
  InstanceMap(ClusteringParams clustering = {}, PolylineFitParams fit = {});

  // Adds the candidate to the qualifying same-type instance with the
  // highest h (lowest id on ties) or opens a new instance. Does not refit.
  InstanceId assign_or_create(const ReliableVoxel& candidate, const SemanticVoxelMap& map);

  // Assigns every voxel in order, then refits the instances that gained
  // voxels.
  InstanceUpdate update(std::span<const ReliableVoxel> new_reliable, const SemanticVoxelMap& map);

  // Forgets evicted voxels; shrunk instances are refitted, emptied ones
  // dropped. Returns the ids of dropped instances.
  std::vector<InstanceId> remove_voxels(std::span<const VoxelHandle> removed);

  const std::map<InstanceId, MarkingInstance>& instances() const { return instances_; }
  std::optional<InstanceId> owner(VoxelHandle handle) const;
  std::size_t size() const { return instances_.size(); }

  const ClusteringParams& clustering() const { return clustering_; }

 private:
  bool refit(MarkingInstance& instance);

  ClusteringParams clustering_;
  PolylineFitParams fit_;
  std::map<InstanceId, MarkingInstance> instances_;
  absl::flat_hash_map<VoxelHandle, InstanceId> owner_;
  InstanceId next_id_ = 1;
};

}  // namespace roadfuse
