#include "tame/multiindex.hpp"

#include <bit>
#include <map>
#include <mutex>
#include <stdexcept>

namespace tame {

std::uint64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / i;
    return r;
}

MultiIndexTable::MultiIndexTable(int n, int m) : n_(n), m_(m) {
    if (n < 0 || n > kMaxDim || m < 0 || m > n)
        throw std::invalid_argument("multi-index table: need 0 <= m <= n <= 8");
    rank_by_mask_.assign(std::size_t{1} << n, -1);
    std::array<int, kMaxDim> idx{};
    for (int i = 0; i < m; ++i) idx[i] = i;
    const auto total = binomial(n, m);
    tuples_.reserve(total);
    masks_.reserve(total);
    for (std::uint64_t r = 0; r < total; ++r) {
        std::uint32_t mask = 0;
        for (int i = 0; i < m; ++i) mask |= 1u << idx[i];
        rank_by_mask_[mask] = static_cast<int>(tuples_.size());
        tuples_.push_back(idx);
        masks_.push_back(mask);
        // advance to the next increasing tuple in lex order
        int j = m - 1;
        while (j >= 0 && idx[j] == n - m + j) --j;
        if (j < 0) break;
        ++idx[j];
        for (int i = j + 1; i < m; ++i) idx[i] = idx[i - 1] + 1;
    }
}

const MultiIndexTable& multi_indices(int n, int m) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, MultiIndexTable> cache;
    std::lock_guard lock(mu);
    auto it = cache.find({n, m});
    if (it == cache.end()) it = cache.emplace(std::make_pair(n, m), MultiIndexTable(n, m)).first;
    return it->second;
}

int merge_sign(std::uint32_t mask_i, std::uint32_t mask_j) {
    // inversions = sum over bits i of mask_i of |{ j in mask_j : j < i }|
    int inv = 0;
    std::uint32_t mi = mask_i;
    while (mi) {
        const int i = std::countr_zero(mi);
        mi &= mi - 1;
        inv += std::popcount(mask_j & ((1u << i) - 1u));
    }
    return (inv & 1) ? -1 : 1;
}

} // namespace tame
