#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nlpde/errors.hpp"

namespace nlpde {

/// Spatial multi-index in counts-per-axis form: c[a] = how many times
/// axis a is differentiated. Canonical form of the tuple (i_1,...,i_j)
/// with i_1 <= ... <= i_j. d <= 2 throughout.
struct MultiIndex {
    std::array<int, 2> c{0, 0};
    int d = 1;

    int order() const { return c[0] + c[1]; }

    /// Nondecreasing axis tuple as digits, e.g. counts (2,1) -> "112".
    std::string suffix() const {
        std::string s;
        for (int a = 0; a < d; ++a)
            for (int k = 0; k < c[a]; ++k) s += char('1' + a);
        return s;
    }

    /// Number of ordered tuples collapsing to this canonical index:
    /// |I|! / (c1! c2!).
    int multiplicity() const {
        static const int fact[6] = {1, 1, 2, 6, 24, 120};
        return fact[order()] / (fact[c[0]] * fact[c[1]]);
    }

    bool operator==(const MultiIndex& o) const { return c == o.c && d == o.d; }
};

/// Enumeration of all canonical multi-indices with order <= max_order,
/// sorted by order then lexicographically by counts. Index ids are stable
/// for fixed (d, max_order) and used everywhere jets are stored.
class MultiIndexTable {
public:
    MultiIndexTable() = default;

    MultiIndexTable(int d, int max_order) : d_(d), max_order_(max_order) {
        if (d < 1 || d > 2)
            fail(ErrorCode::InvalidParameter, "grid::multiindex", "d must be 1 or 2");
        for (int ord = 0; ord <= max_order; ++ord) {
            for (int c0 = ord; c0 >= 0; --c0) {
                int c1 = ord - c0;
                if (d == 1 && c1 > 0) continue;
                MultiIndex mi;
                mi.d = d;
                mi.c = {c0, c1};
                list_.push_back(mi);
            }
        }
    }

    int d() const { return d_; }
    int max_order() const { return max_order_; }
    int size() const { return static_cast<int>(list_.size()); }
    const MultiIndex& at(int id) const { return list_[static_cast<size_t>(id)]; }

    int id_of(const MultiIndex& mi) const {
        for (int i = 0; i < size(); ++i)
            if (list_[static_cast<size_t>(i)].c == mi.c) return i;
        fail(ErrorCode::IndexOutOfRange, "grid::multiindex", "multi-index not in table");
    }

    /// Ids of all indices with exactly the given order.
    std::vector<int> ids_of_order(int ord) const {
        std::vector<int> out;
        for (int i = 0; i < size(); ++i)
            if (list_[static_cast<size_t>(i)].order() == ord) out.push_back(i);
        return out;
    }

    /// Count of indices with order <= ord.
    int count_up_to(int ord) const {
        int n = 0;
        for (const auto& mi : list_)
            if (mi.order() <= ord) ++n;
        return n;
    }

    auto begin() const { return list_.begin(); }
    auto end() const { return list_.end(); }

private:
    int d_ = 1;
    int max_order_ = 0;
    std::vector<MultiIndex> list_;
};

inline MultiIndex make_multiindex(int d, int c0, int c1 = 0) {
    MultiIndex mi;
    mi.d = d;
    mi.c = {c0, c1};
    return mi;
}

} // namespace nlpde
