#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "roadfuse/co_observation.hpp"
#include "roadfuse/types.hpp"

namespace roadfuse {

inline constexpr int kBlockSide = 8;
inline constexpr int kVoxelsPerBlock = kBlockSide * kBlockSide * kBlockSide;

struct BlockCoord {
  std::int32_t x = 0;
  std::int32_t y = 0;
  std::int32_t z = 0;

  friend bool operator==(const BlockCoord&, const BlockCoord&) = default;
  friend auto operator<=>(const BlockCoord&, const BlockCoord&) = default;
};

// A voxel is its block plus intra = ix + 8 iy + 64 iz, each in [0, 8).
struct VoxelKey {
  BlockCoord block;
  std::uint16_t intra = 0;

  friend bool operator==(const VoxelKey&, const VoxelKey&) = default;
  friend auto operator<=>(const VoxelKey&, const VoxelKey&) = default;

  // Global integer voxel coordinates.
  Eigen::Vector3i voxel_coords() const;
  static VoxelKey from_voxel_coords(std::int64_t ix, std::int64_t iy, std::int64_t iz);
};

// Key of the voxel whose half-open cube [k s, (k + 1) s)^3 holds `point`.
VoxelKey voxel_key_of(const Vec3& point, double voxel_size);
Vec3 voxel_center(const VoxelKey& key, double voxel_size);

// Multiply-xor hash of the block coordinates.
std::uint64_t hash_block(const BlockCoord& coord);

// Chained hash table from block coordinates to storage slots. A nonzero
// fixed bucket count disables rehashing (used to force collisions).
class BlockHashTable {
 public:
  explicit BlockHashTable(std::size_t fixed_bucket_count = 0);

  std::optional<std::uint32_t> find(const BlockCoord& coord) const;
  // coord must be absent.
  void insert(const BlockCoord& coord, std::uint32_t slot);
  bool erase(const BlockCoord& coord);

  std::size_t size() const { return size_; }
  std::size_t bucket_count() const { return buckets_.size(); }

 private:
  struct Entry {
    BlockCoord coord;
    std::uint32_t slot;
  };

  std::size_t bucket_of(const BlockCoord& coord) const;
  void rehash(std::size_t bucket_count);

  std::vector<std::vector<Entry>> buckets_;
  std::size_t size_ = 0;
  bool fixed_ = false;
  std::size_t mask_ = 0;  // bucket count - 1 when a power of two, else 0
};

struct SemanticVoxel {
  std::array<std::uint32_t, kMarkingTypeCount> counts{};
  // Integration stamp, used to count a voxel once per detection.
  std::uint32_t stamp = 0;
  bool allocated = false;
  bool reliable = false;

  std::uint32_t total() const { return counts[0] + counts[1] + counts[2]; }
  std::uint32_t best_count() const;
  // Argmax of the counters; ties resolve laneline < roadedge < stopline.
  MarkingType best_type() const;
};

struct ReliableVoxel {
  VoxelKey key;
  VoxelHandle handle = 0;
  Vec3 center = Vec3::Zero();
  MarkingType best_type = MarkingType::kLaneline;
  std::uint32_t best_count = 0;
};

struct VoxelMapParams {
  double voxel_size = 0.2;
  // 0 lets the block table grow; any other value pins the bucket count.
  std::size_t bucket_count = 0;
};

// Flat debug record for snapshot tests.
struct VoxelRecord {
  VoxelKey key;
  Vec3 center;
  std::array<std::uint32_t, kMarkingTypeCount> counts{};
  bool reliable = false;

  friend bool operator==(const VoxelRecord&, const VoxelRecord&) = default;
};

struct EvictionResult {
  std::size_t removed_voxels = 0;
  std::size_t removed_blocks = 0;
  std::vector<VoxelHandle> removed_handles;
};

// Sparse semantic voxel map: 8^3 voxel blocks addressed through a chained
// hash table, per-type detection counters, and the co-observation table.
// Handles (slot * 512 + intra) are stable until the block is evicted.
class SemanticVoxelMap {
 public:
  explicit SemanticVoxelMap(VoxelMapParams params = {});

  double voxel_size() const { return params_.voxel_size; }

  // Allocates the voxel holding `point` if needed and bumps its counter.
  VoxelHandle insert(const Vec3& point, MarkingType type);

  // Samples every segment at a step <= voxel_size / 2 (endpoints
  // included); each overlapped voxel's counter for the marking type is
  // incremented exactly once. Returns the voxels in first-visit order.
  std::vector<VoxelHandle> integrate(const RawDetection& marking);

  // Increments the co-observation count of every unordered pair.
  void update_co_observation(std::span<const VoxelHandle> voxels) {
    co_observation_.add_detection(voxels);
  }

  // Touched voxels whose dominant count exceeds alpha_n for the first
  // time. Each voxel is latched reliable once.
  std::vector<ReliableVoxel> extract_new_reliable(std::span<const VoxelHandle> touched,
                                                  std::uint32_t alpha_n);

  // Removes every block that does not intersect `range` (xy) and purges the
  // co-observation entries of the removed voxels.
  EvictionResult evict_outside(const OrientedRect& range);

  std::optional<VoxelHandle> find(const VoxelKey& key) const;
  const SemanticVoxel& voxel(VoxelHandle handle) const;
  VoxelKey key(VoxelHandle handle) const;
  Vec3 center(VoxelHandle handle) const;

  const CoObservationTable& co_observation() const { return co_observation_; }

  std::size_t voxel_count() const { return voxel_count_; }
  std::size_t block_count() const { return table_.size(); }
  std::size_t reliable_count() const { return reliable_count_; }
  std::size_t bucket_count() const { return table_.bucket_count(); }
  std::uint32_t max_count() const;

  // All allocated voxels, sorted by key.
  std::vector<VoxelRecord> dump() const;

 private:
  struct Block {
    BlockCoord coord;
    std::array<SemanticVoxel, kVoxelsPerBlock> voxels{};
  };

  struct ChunkDeleter {
    void operator()(Block* chunk) const;
  };

  VoxelHandle locate_or_allocate(const VoxelKey& key);
  Block* new_block(std::uint32_t slot);
  SemanticVoxel& mutable_voxel(VoxelHandle handle);

  VoxelMapParams params_;
  BlockHashTable table_;
  // Blocks live in large chunks; slot s is block s % kBlocksPerChunk of
  // chunk s / kBlocksPerChunk. Null entries are free slots.
  std::vector<std::unique_ptr<Block, ChunkDeleter>> chunks_;
  std::vector<Block*> slots_;
  std::vector<std::uint32_t> free_slots_;
  CoObservationTable co_observation_;
  std::size_t voxel_count_ = 0;
  std::size_t reliable_count_ = 0;
  std::uint32_t stamp_ = 0;
};

}  // namespace roadfuse
