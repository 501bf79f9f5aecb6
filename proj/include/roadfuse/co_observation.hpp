#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <absl/container/flat_hash_map.h>

namespace roadfuse {

using VoxelHandle = std::uint32_t;

// Sparse symmetric pair-count table: how often two voxels fell in the same
// detection. Each unordered pair is stored once under its canonical key.
// A per-voxel neighbor list (ids only) makes co-observed voxels
// enumerable without scanning the table.
class CoObservationTable {
 public:
  // Every unordered pair of distinct voxels in `voxels` gains one count.
  // `voxels` must be duplicate-free.
  void add_detection(std::span<const VoxelHandle> voxels);

  std::uint32_t count(VoxelHandle a, VoxelHandle b) const;

  // Voxels sharing at least one detection with `v`, in first-pairing order.
  std::span<const VoxelHandle> neighbors(VoxelHandle v) const;

  std::size_t pair_count() const { return pairs_.size(); }

  // Drops every pair and neighbor entry touching a voxel whose handle
  // satisfies removed(handle).
  template <typename Pred>
  void purge(Pred removed);

  // Visits (a, b, count) with a < b, in unspecified order.
  template <typename Visitor>
  void for_each_pair(Visitor&& visit) const {
    for (const auto& [key, n] : pairs_) {
      visit(static_cast<VoxelHandle>(key >> 32), static_cast<VoxelHandle>(key & 0xffffffffu), n);
    }
  }

  static std::uint64_t pair_key(VoxelHandle a, VoxelHandle b) {
    if (a > b) {
      std::swap(a, b);
    }
    return (static_cast<std::uint64_t>(a) << 32) | b;
  }

 private:
  absl::flat_hash_map<std::uint64_t, std::uint32_t> pairs_;
  absl::flat_hash_map<VoxelHandle, std::vector<VoxelHandle>> neighbors_;
};

template <typename Pred>
void CoObservationTable::purge(Pred removed) {
  absl::erase_if(pairs_, [&](const auto& entry) {
    return removed(static_cast<VoxelHandle>(entry.first >> 32)) ||
           removed(static_cast<VoxelHandle>(entry.first & 0xffffffffu));
  });
  absl::erase_if(neighbors_, [&](const auto& entry) { return removed(entry.first); });
  for (auto& [voxel, list] : neighbors_) {
    std::erase_if(list, removed);
  }
}

}  // namespace roadfuse
