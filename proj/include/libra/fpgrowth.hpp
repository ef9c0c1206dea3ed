#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace libra::fpgrowth {

using Item = std::uint32_t;

struct Itemset {
    std::vector<Item> items;  // ascending
    std::size_t support = 0;

    bool operator==(const Itemset&) const = default;
    auto operator<=>(const Itemset&) const = default;
};

/// Frequent itemsets of size 1..max_len with support >= min_support, mined
/// with an FP-tree and recursive conditional trees. Duplicate items within a
/// transaction count once. The result is sorted by (items, support).
std::vector<Itemset> mine(const std::vector<std::vector<Item>>& transactions, std::size_t min_support,
                          std::size_t max_len);

}  // namespace libra::fpgrowth
