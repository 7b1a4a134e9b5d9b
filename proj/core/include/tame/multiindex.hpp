#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace tame {

inline constexpr int kMaxDim = 8;

std::uint64_t binomial(int n, int k);

/// Strictly increasing m-tuples over {0,...,n-1} in lexicographic order.
/// The tuple rank fixes the coefficient layout of every degree-m object
/// in this library, including the on-disk field format.
class MultiIndexTable {
  public:
    MultiIndexTable(int n, int m);

    int dim() const { return n_; }
    int degree() const { return m_; }
    int count() const { return static_cast<int>(tuples_.size()); }

    std::span<const int> tuple(int rank) const {
        return {tuples_[rank].data(), static_cast<std::size_t>(m_)};
    }
    std::uint32_t mask(int rank) const { return masks_[rank]; }

    /// Rank of a bitmask with exactly m bits set; -1 if not a valid mask.
    int rank_of_mask(std::uint32_t mask) const { return rank_by_mask_[mask]; }

  private:
    int n_;
    int m_;
    std::vector<std::array<int, kMaxDim>> tuples_;
    std::vector<std::uint32_t> masks_;
    std::vector<int> rank_by_mask_;
};

/// Shared immutable table for (n, m); thread-safe.
const MultiIndexTable& multi_indices(int n, int m);

/// Sign of interleaving two disjoint increasing tuples given as bitmasks:
/// (-1)^{#inversions} when concatenating (I, J) and sorting.
int merge_sign(std::uint32_t mask_i, std::uint32_t mask_j);

} // namespace tame
