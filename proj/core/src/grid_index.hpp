#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "grassproj/common.hpp"

namespace grassproj::detail {

/// Uniform grid hash over R^d (d <= 8). Every point in a cell within one cell
/// of the query's cell is visited exactly once.
class GridIndex {
public:
    static constexpr int kMaxDim = 8;
    using Cell = std::array<std::int64_t, kMaxDim>;

    GridIndex(int dim, double cell) : dim_(dim), inv_cell_(1.0 / cell) {
        require(dim >= 1 && dim <= kMaxDim, "GridIndex: dimension must be in [1, 8]");
        std::uint64_t w = 0x9e3779b97f4a7c15ULL;
        for (int i = 0; i < dim; ++i) {
            weights_[i] = w | 1ULL;
            w = w * 0xbf58476d1ce4e5b9ULL + 0x94d049bb133111ebULL;
        }
        offsets_.push_back(Cell{});
        for (int i = 0; i < dim; ++i) {
            std::vector<Cell> next;
            next.reserve(offsets_.size() * 3);
            for (const Cell& o : offsets_)
                for (int step = -1; step <= 1; ++step) {
                    Cell c = o;
                    c[i] = step;
                    next.push_back(c);
                }
            offsets_.swap(next);
        }
    }

    void insert(std::uint32_t id, const double* x) {
        Cell c = cell_of(x);
        auto& chain = table_[hash(c)];
        for (auto& b : chain)
            if (b.cell == c) {
                b.ids.push_back(id);
                return;
            }
        chain.push_back({c, {id}});
    }

    template <class Fn>
    void for_each_near(const double* x, Fn&& fn) const {
        const Cell base = cell_of(x);
        for (const Cell& o : offsets_) {
            Cell c = base;
            for (int i = 0; i < dim_; ++i) c[i] += o[i];
            auto it = table_.find(hash(c));
            if (it == table_.end()) continue;
            for (const auto& b : it->second)
                if (b.cell == c)
                    for (std::uint32_t id : b.ids) fn(id);
        }
    }

private:
    struct Bucket {
        Cell cell;
        std::vector<std::uint32_t> ids;
    };

    Cell cell_of(const double* x) const {
        Cell c{};
        for (int i = 0; i < dim_; ++i) c[i] = static_cast<std::int64_t>(std::floor(x[i] * inv_cell_));
        return c;
    }
    std::uint64_t hash(const Cell& c) const {
        std::uint64_t h = 0;
        for (int i = 0; i < dim_; ++i) h += static_cast<std::uint64_t>(c[i]) * weights_[i];
        return h ^ (h >> 29);
    }

    int dim_;
    double inv_cell_;
    std::array<std::uint64_t, kMaxDim> weights_{};
    std::vector<Cell> offsets_;
    std::unordered_map<std::uint64_t, std::vector<Bucket>> table_;
};

}  // namespace grassproj::detail
