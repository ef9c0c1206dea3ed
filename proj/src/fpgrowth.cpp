#include "libra/fpgrowth.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

namespace libra::fpgrowth {

namespace {

struct Node {
    Item item = 0;
    std::size_t count = 0;
    std::size_t parent = 0;
    std::map<Item, std::size_t> children;
};

// A weighted transaction: items already filtered and ordered by the tree's rank.
struct Path {
    std::vector<Item> items;
    std::size_t count = 0;
};

class Tree {
public:
    Tree(const std::vector<Path>& paths, std::size_t min_support) {
        std::unordered_map<Item, std::size_t> support;
        for (const auto& p : paths)
            for (Item it : p.items) support[it] += p.count;
        for (const auto& [it, s] : support)
            if (s >= min_support) order_.push_back({it, s});
        // Most frequent first; ties by item id so the tree shape is deterministic.
        std::sort(order_.begin(), order_.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });
        for (std::size_t r = 0; r < order_.size(); ++r) rank_[order_[r].first] = r;

        nodes_.push_back(Node{});  // root
        std::vector<Item> sorted;
        for (const auto& p : paths) {
            sorted.clear();
            for (Item it : p.items)
                if (rank_.contains(it)) sorted.push_back(it);
            std::sort(sorted.begin(), sorted.end(), [&](Item a, Item b) { return rank_.at(a) < rank_.at(b); });
            insert(sorted, p.count);
        }
    }

    /// Header entries from least to most frequent.
    std::vector<std::pair<Item, std::size_t>> header_bottom_up() const {
        return {order_.rbegin(), order_.rend()};
    }

    std::vector<Path> conditional_base(Item item) const {
        std::vector<Path> base;
        const auto it = links_.find(item);
        if (it == links_.end()) return base;
        for (std::size_t idx : it->second) {
            Path p;
            p.count = nodes_[idx].count;
            for (std::size_t cur = nodes_[idx].parent; cur != 0; cur = nodes_[cur].parent)
                p.items.push_back(nodes_[cur].item);
            std::reverse(p.items.begin(), p.items.end());
            if (!p.items.empty()) base.push_back(std::move(p));
        }
        return base;
    }

private:
    void insert(const std::vector<Item>& items, std::size_t count) {
        std::size_t cur = 0;
        for (Item it : items) {
            auto found = nodes_[cur].children.find(it);
            if (found == nodes_[cur].children.end()) {
                Node n;
                n.item = it;
                n.parent = cur;
                nodes_.push_back(std::move(n));
                const std::size_t idx = nodes_.size() - 1;
                nodes_[cur].children.emplace(it, idx);
                links_[it].push_back(idx);
                cur = idx;
            } else {
                cur = found->second;
            }
            nodes_[cur].count += count;
        }
    }

    std::vector<Node> nodes_;
    std::vector<std::pair<Item, std::size_t>> order_;
    std::unordered_map<Item, std::size_t> rank_;
    std::unordered_map<Item, std::vector<std::size_t>> links_;
};

void grow(const Tree& tree, std::vector<Item>& suffix, std::size_t min_support, std::size_t max_len,
          std::vector<Itemset>& out) {
    for (const auto& [item, support] : tree.header_bottom_up()) {
        suffix.push_back(item);
        Itemset set;
        set.items = suffix;
        std::sort(set.items.begin(), set.items.end());
        set.support = support;
        out.push_back(std::move(set));
        if (suffix.size() < max_len) {
            const auto base = tree.conditional_base(item);
            if (!base.empty()) {
                const Tree conditional(base, min_support);
                grow(conditional, suffix, min_support, max_len, out);
            }
        }
        suffix.pop_back();
    }
}

}  // namespace

std::vector<Itemset> mine(const std::vector<std::vector<Item>>& transactions, std::size_t min_support,
                          std::size_t max_len) {
    std::vector<Itemset> out;
    if (max_len == 0 || min_support == 0) return out;
    std::vector<Path> paths;
    paths.reserve(transactions.size());
    for (const auto& t : transactions) {
        Path p;
        p.items = t;
        std::sort(p.items.begin(), p.items.end());
        p.items.erase(std::unique(p.items.begin(), p.items.end()), p.items.end());
        p.count = 1;
        paths.push_back(std::move(p));
    }
    const Tree tree(paths, min_support);
    std::vector<Item> suffix;
    grow(tree, suffix, min_support, max_len, out);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace libra::fpgrowth
