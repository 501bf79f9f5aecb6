#include "roadfuse/voxel_map.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <new>
#include <type_traits>

#if defined(__linux__)
#include <sys/mman.h>
#endif

namespace roadfuse {

namespace {

constexpr std::size_t kInitialBuckets = 64;

// Chunks are sized and aligned for 2 MiB pages; random access into many
// small blocks is otherwise dominated by TLB misses.
constexpr std::size_t kHugePage = std::size_t{2} << 20;
constexpr std::size_t kChunkBytes = 4 * kHugePage;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) {
    --q;
  }
  return q;
}

VoxelHandle make_handle(std::uint32_t slot, std::uint16_t intra) {
  return slot * static_cast<std::uint32_t>(kVoxelsPerBlock) + intra;
}

std::uint32_t slot_of(VoxelHandle handle) { return handle / kVoxelsPerBlock; }
std::uint16_t intra_of(VoxelHandle handle) {
  return static_cast<std::uint16_t>(handle % kVoxelsPerBlock);
}

}  // namespace

Eigen::Vector3i VoxelKey::voxel_coords() const {
  return {block.x * kBlockSide + intra % kBlockSide,
          block.y * kBlockSide + (intra / kBlockSide) % kBlockSide,
          block.z * kBlockSide + intra / (kBlockSide * kBlockSide)};
}

VoxelKey VoxelKey::from_voxel_coords(std::int64_t ix, std::int64_t iy, std::int64_t iz) {
  const std::int64_t bx = floor_div(ix, kBlockSide);
  const std::int64_t by = floor_div(iy, kBlockSide);
  const std::int64_t bz = floor_div(iz, kBlockSide);
  const auto lx = static_cast<std::uint16_t>(ix - bx * kBlockSide);
  const auto ly = static_cast<std::uint16_t>(iy - by * kBlockSide);
  const auto lz = static_cast<std::uint16_t>(iz - bz * kBlockSide);
  VoxelKey key;
  key.block = {static_cast<std::int32_t>(bx), static_cast<std::int32_t>(by),
               static_cast<std::int32_t>(bz)};
  key.intra = static_cast<std::uint16_t>(lx + kBlockSide * ly + kBlockSide * kBlockSide * lz);
  return key;
}

VoxelKey voxel_key_of(const Vec3& point, double voxel_size) {
  return VoxelKey::from_voxel_coords(static_cast<std::int64_t>(std::floor(point.x() / voxel_size)),
                                     static_cast<std::int64_t>(std::floor(point.y() / voxel_size)),
                                     static_cast<std::int64_t>(std::floor(point.z() / voxel_size)));
}

Vec3 voxel_center(const VoxelKey& key, double voxel_size) {
  const Eigen::Vector3i c = key.voxel_coords();
  return (c.cast<double>() + Vec3::Constant(0.5)) * voxel_size;
}

std::uint64_t hash_block(const BlockCoord& coord) {
  std::uint64_t h = static_cast<std::uint64_t>(static_cast<std::uint32_t>(coord.x)) *
                    0x9E3779B97F4A7C15ull;
  h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(coord.y)) * 0xC2B2AE3D27D4EB4Full;
  h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(coord.z)) * 0x165667B19E3779F9ull;
  h ^= h >> 31;
  h *= 0xBF58476D1CE4E5B9ull;
  h ^= h >> 29;
  return h;
}

// ---------------------------------------------------------------------------
// BlockHashTable

BlockHashTable::BlockHashTable(std::size_t fixed_bucket_count)
    : buckets_(fixed_bucket_count > 0 ? fixed_bucket_count : kInitialBuckets),
      fixed_(fixed_bucket_count > 0) {
  if (std::has_single_bit(buckets_.size())) {
    mask_ = buckets_.size() - 1;
  }
}

std::size_t BlockHashTable::bucket_of(const BlockCoord& coord) const {
  const std::uint64_t h = hash_block(coord);
  // Growth keeps the count a power of two; only pinned counts need the division.
  return mask_ != 0 ? static_cast<std::size_t>(h & mask_)
                    : static_cast<std::size_t>(h % buckets_.size());
}

std::optional<std::uint32_t> BlockHashTable::find(const BlockCoord& coord) const {
  for (const Entry& entry : buckets_[bucket_of(coord)]) {
    if (entry.coord == coord) {
      return entry.slot;
    }
  }
  return std::nullopt;
}

void BlockHashTable::insert(const BlockCoord& coord, std::uint32_t slot) {
  if (!fixed_ && size_ + 1 > buckets_.size()) {
    rehash(buckets_.size() * 2);
  }
  buckets_[bucket_of(coord)].push_back({coord, slot});
  ++size_;
}

bool BlockHashTable::erase(const BlockCoord& coord) {
  auto& chain = buckets_[bucket_of(coord)];
  const auto it =
      std::find_if(chain.begin(), chain.end(), [&](const Entry& e) { return e.coord == coord; });
  if (it == chain.end()) {
    return false;
  }
  *it = chain.back();
  chain.pop_back();
  --size_;
  return true;
}

void BlockHashTable::rehash(std::size_t bucket_count) {
  std::vector<std::vector<Entry>> old = std::move(buckets_);
  buckets_.assign(bucket_count, {});
  mask_ = std::has_single_bit(bucket_count) ? bucket_count - 1 : 0;
  for (const auto& chain : old) {
    for (const Entry& entry : chain) {
      buckets_[bucket_of(entry.coord)].push_back(entry);
    }
  }
}

// ---------------------------------------------------------------------------
// SemanticVoxel

std::uint32_t SemanticVoxel::best_count() const {
  return *std::max_element(counts.begin(), counts.end());
}

MarkingType SemanticVoxel::best_type() const {
  // max_element returns the first maximum, which is the fixed type order.
  return static_cast<MarkingType>(std::max_element(counts.begin(), counts.end()) -
                                  counts.begin());
}

// ---------------------------------------------------------------------------
// SemanticVoxelMap

SemanticVoxelMap::SemanticVoxelMap(VoxelMapParams params)
    : params_(params), table_(params.bucket_count) {}

void SemanticVoxelMap::ChunkDeleter::operator()(Block* chunk) const { std::free(chunk); }

SemanticVoxelMap::Block* SemanticVoxelMap::new_block(std::uint32_t slot) {
  static_assert(std::is_trivially_destructible_v<Block>);
  constexpr std::size_t per_chunk = kChunkBytes / sizeof(Block);
  const std::size_t chunk = slot / per_chunk;
  while (chunks_.size() <= chunk) {
    void* raw = std::aligned_alloc(kHugePage, kChunkBytes);
    if (raw == nullptr) {
      throw std::bad_alloc();
    }
#if defined(MADV_HUGEPAGE)
    madvise(raw, kChunkBytes, MADV_HUGEPAGE);  // advisory; failure is harmless
#endif
    chunks_.emplace_back(static_cast<Block*>(raw));
  }
  return new (chunks_[chunk].get() + slot % per_chunk) Block{};
}

VoxelHandle SemanticVoxelMap::locate_or_allocate(const VoxelKey& key) {
  std::uint32_t slot = 0;
  if (const auto found = table_.find(key.block)) {
    slot = *found;
  } else {
    if (!free_slots_.empty()) {
      slot = free_slots_.back();
      free_slots_.pop_back();
    } else {
      slot = static_cast<std::uint32_t>(slots_.size());
      slots_.emplace_back();
    }
    slots_[slot] = new_block(slot);
    slots_[slot]->coord = key.block;
    table_.insert(key.block, slot);
  }
  Block& block = *slots_[slot];
  SemanticVoxel& voxel = block.voxels[key.intra];
  if (!voxel.allocated) {
    voxel.allocated = true;
    ++voxel_count_;
  }
  return make_handle(slot, key.intra);
}

SemanticVoxel& SemanticVoxelMap::mutable_voxel(VoxelHandle handle) {
  return slots_[slot_of(handle)]->voxels[intra_of(handle)];
}

const SemanticVoxel& SemanticVoxelMap::voxel(VoxelHandle handle) const {
  return slots_[slot_of(handle)]->voxels[intra_of(handle)];
}

VoxelKey SemanticVoxelMap::key(VoxelHandle handle) const {
  return {slots_[slot_of(handle)]->coord, intra_of(handle)};
}

Vec3 SemanticVoxelMap::center(VoxelHandle handle) const {
  return voxel_center(key(handle), params_.voxel_size);
}

std::optional<VoxelHandle> SemanticVoxelMap::find(const VoxelKey& key) const {
  const auto slot = table_.find(key.block);
  if (!slot || !slots_[*slot]->voxels[key.intra].allocated) {
    return std::nullopt;
  }
  return make_handle(*slot, key.intra);
}

VoxelHandle SemanticVoxelMap::insert(const Vec3& point, MarkingType type) {
  const VoxelHandle handle = locate_or_allocate(voxel_key_of(point, params_.voxel_size));
  ++mutable_voxel(handle).counts[index_of(type)];
  return handle;
}

std::vector<VoxelHandle> SemanticVoxelMap::integrate(const RawDetection& marking) {
  std::vector<VoxelHandle> touched;
  if (marking.points.empty()) {
    return touched;
  }
  ++stamp_;
  const double step = params_.voxel_size / 2.0;
  const std::size_t type_index = index_of(marking.type);
  std::optional<VoxelKey> last_key;

  auto visit = [&](const Vec3& p) {
    const VoxelKey key = voxel_key_of(p, params_.voxel_size);
    if (last_key && *last_key == key) {
      return;
    }
    last_key = key;
    const VoxelHandle handle = locate_or_allocate(key);
    SemanticVoxel& voxel = mutable_voxel(handle);
    if (voxel.stamp == stamp_) {
      return;
    }
    voxel.stamp = stamp_;
    ++voxel.counts[type_index];
    touched.push_back(handle);
  };

  visit(marking.points.front());
  for (std::size_t i = 1; i < marking.points.size(); ++i) {
    const Vec3& a = marking.points[i - 1];
    const Vec3& b = marking.points[i];
    const double length = (b - a).norm();
    const auto pieces = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(length / step)));
    for (std::size_t k = 1; k <= pieces; ++k) {
      visit(a + (static_cast<double>(k) / static_cast<double>(pieces)) * (b - a));
    }
  }
  return touched;
}

std::vector<ReliableVoxel> SemanticVoxelMap::extract_new_reliable(
    std::span<const VoxelHandle> touched, std::uint32_t alpha_n) {
  std::vector<ReliableVoxel> emitted;
  for (const VoxelHandle handle : touched) {
    SemanticVoxel& voxel = mutable_voxel(handle);
    if (voxel.reliable || voxel.best_count() <= alpha_n) {
      continue;
    }
    voxel.reliable = true;
    ++reliable_count_;
    emitted.push_back({key(handle), handle, center(handle), voxel.best_type(), voxel.best_count()});
  }
  return emitted;
}

EvictionResult SemanticVoxelMap::evict_outside(const OrientedRect& range) {
  EvictionResult result;
  const double block_side = params_.voxel_size * kBlockSide;
  std::vector<char> removed_slot(slots_.size(), 0);
  for (std::uint32_t slot = 0; slot < slots_.size(); ++slot) {
    const Block* block = slots_[slot];
    if (!block) {
      continue;
    }
    if (range.intersects_square(block->coord.x * block_side, block->coord.y * block_side,
                                block_side)) {
      continue;
    }
    for (int intra = 0; intra < kVoxelsPerBlock; ++intra) {
      const SemanticVoxel& voxel = block->voxels[intra];
      if (!voxel.allocated) {
        continue;
      }
      result.removed_handles.push_back(make_handle(slot, static_cast<std::uint16_t>(intra)));
      ++result.removed_voxels;
      --voxel_count_;
      if (voxel.reliable) {
        --reliable_count_;
      }
    }
    ++result.removed_blocks;
    table_.erase(block->coord);
    removed_slot[slot] = 1;
  }
  if (result.removed_blocks == 0) {
    return result;
  }
  co_observation_.purge([&](VoxelHandle h) { return removed_slot[slot_of(h)] != 0; });
  for (std::uint32_t slot = 0; slot < slots_.size(); ++slot) {
    if (removed_slot[slot]) {
      slots_[slot] = nullptr;
      free_slots_.push_back(slot);
    }
  }
  return result;
}

std::uint32_t SemanticVoxelMap::max_count() const {
  std::uint32_t best = 0;
  for (const Block* block : slots_) {
    if (!block) {
      continue;
    }
    for (const SemanticVoxel& voxel : block->voxels) {
      if (voxel.allocated) {
        best = std::max(best, voxel.best_count());
      }
    }
  }
  return best;
}

std::vector<VoxelRecord> SemanticVoxelMap::dump() const {
  std::vector<VoxelRecord> records;
  records.reserve(voxel_count_);
  for (const Block* block : slots_) {
    if (!block) {
      continue;
    }
    for (int intra = 0; intra < kVoxelsPerBlock; ++intra) {
      const SemanticVoxel& voxel = block->voxels[intra];
      if (!voxel.allocated) {
        continue;
      }
      const VoxelKey key{block->coord, static_cast<std::uint16_t>(intra)};
      records.push_back({key, voxel_center(key, params_.voxel_size), voxel.counts, voxel.reliable});
    }
  }
  std::sort(records.begin(), records.end(),
            [](const VoxelRecord& a, const VoxelRecord& b) { return a.key < b.key; });
  return records;
}

}  // namespace roadfuse
