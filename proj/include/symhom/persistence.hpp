#pragma once

// Grid homology backend for the action selector on tiny problems. The level
// sets of a functional quadratic at infinity are gridded on a compact window
// (periodic in the base directions, boxed in the fiber directions); the
// selector of the class [base] x [negative-space generator] is the smallest
// sublevel a whose relative homology already carries that class. Over Z_2
// this reduces to a minimax over an affine family of cubical chains:
//
//   l = min over chains c in (z_ref + im boundary) of max cell value of c,
//
// where z_ref is the slab spanning the base and negative axes at the zero
// layer of the positive axes. Echelonizing the boundary columns against the
// value order makes the greedy top-down sweep exact.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "symhom/core.hpp"

namespace symhom {

struct MinimaxAxis {
    double lo = 0.0, hi = 1.0;
    int cells = 16;
    bool periodic = false;
    int sign = 0;  // 0: base axis, -1: negative fiber axis, +1: positive fiber axis
};

struct MinimaxResult {
    double level = 0.0;
    double error_bar = 0.0;       // value spread across the deciding cell
    Vec witness;                  // coordinates of the deciding cell center
    std::size_t cells_used = 0;
};

namespace cubical {

struct Complex {
    std::vector<MinimaxAxis> axes;
    std::vector<int> verts_per_axis;  // number of distinct vertex indices
    std::vector<double> vertex_values;
    std::vector<std::size_t> vstride;

    std::size_t vertex_index(const std::vector<int>& idx) const {
        std::size_t s = 0;
        for (std::size_t d = 0; d < axes.size(); ++d) s += std::size_t(idx[d]) * vstride[d];
        return s;
    }

    double coord(std::size_t d, int i) const {
        const auto& a = axes[d];
        return a.lo + (a.hi - a.lo) * double(i) / double(a.cells);
    }
};

/// Cell = extent bitmask + anchor multi-index (anchor in cell units).
struct Cell {
    std::uint32_t mask = 0;
    std::vector<int> anchor;
};

inline void build_vertices(Complex& cx, const std::function<double(const Vec&)>& f) {
    const std::size_t dim = cx.axes.size();
    cx.verts_per_axis.resize(dim);
    for (std::size_t d = 0; d < dim; ++d)
        cx.verts_per_axis[d] = cx.axes[d].periodic ? cx.axes[d].cells : cx.axes[d].cells + 1;
    cx.vstride.assign(dim, 1);
    for (std::size_t d = 1; d < dim; ++d) cx.vstride[d] = cx.vstride[d - 1] * cx.verts_per_axis[d - 1];
    std::size_t total = cx.vstride[dim - 1] * cx.verts_per_axis[dim - 1];
    cx.vertex_values.resize(total);
    std::vector<int> idx(dim, 0);
    Vec x(dim);
    for (std::size_t v = 0; v < total; ++v) {
        for (std::size_t d = 0; d < dim; ++d) x[d] = cx.coord(d, idx[d]);
        cx.vertex_values[v] = f(x);
        for (std::size_t d = 0; d < dim; ++d) {
            if (++idx[d] < cx.verts_per_axis[d]) break;
            idx[d] = 0;
        }
    }
}

/// Enumerate all cells with a given extent mask; calls fn(anchor).
template <typename F>
void for_each_cell(const Complex& cx, std::uint32_t mask, F&& fn) {
    const std::size_t dim = cx.axes.size();
    std::vector<int> limit(dim);
    for (std::size_t d = 0; d < dim; ++d) {
        bool ext = (mask >> d) & 1;
        limit[d] = ext ? cx.axes[d].cells
                       : (cx.axes[d].periodic ? cx.axes[d].cells : cx.axes[d].cells + 1);
    }
    std::vector<int> idx(dim, 0);
    while (true) {
        fn(idx);
        std::size_t d = 0;
        for (; d < dim; ++d) {
            if (++idx[d] < limit[d]) break;
            idx[d] = 0;
        }
        if (d == dim) break;
    }
}

/// Lower-star value of a cell: max over its vertices.
inline double cell_value(const Complex& cx, std::uint32_t mask, const std::vector<int>& anchor) {
    const std::size_t dim = cx.axes.size();
    double best = -1e300;
    int corners = 1 << __builtin_popcount(mask);
    std::vector<std::size_t> ext_axes;
    for (std::size_t d = 0; d < dim; ++d)
        if ((mask >> d) & 1) ext_axes.push_back(d);
    std::vector<int> idx(dim);
    for (int c = 0; c < corners; ++c) {
        for (std::size_t d = 0; d < dim; ++d) idx[d] = anchor[d];
        for (std::size_t e = 0; e < ext_axes.size(); ++e)
            if ((c >> e) & 1) {
                std::size_t d = ext_axes[e];
                idx[d] = anchor[d] + 1;
                if (cx.axes[d].periodic && idx[d] >= cx.verts_per_axis[d]) idx[d] = 0;
            }
        best = std::max(best, cx.vertex_values[cx.vertex_index(idx)]);
    }
    return best;
}

}  // namespace cubical

/// Selector level of the class [base] x [e_minus] for a functional given in
/// split coordinates. Axes must include every base axis (periodic) and the
/// fiber axes tagged by the sign of the background form along them.
inline MinimaxResult minimax_level(const std::function<double(const Vec&)>& f,
                                   const std::vector<MinimaxAxis>& axes) {
    const std::size_t dim = axes.size();
    if (dim > 4)
        throw FeasibilityError("grid persistence limited to total dimension 4; "
                               "use the continuation backend");
    for (const auto& a : axes)
        if (a.cells < 2 || !(a.hi > a.lo)) throw InvalidInput("minimax_level: bad axis");

    cubical::Complex cx;
    cx.axes = axes;
    cubical::build_vertices(cx, f);

    // reference slab: extent over base + negative axes, positive axes pinned
    // to the vertex layer nearest coordinate zero
    std::uint32_t slab_mask = 0;
    for (std::size_t d = 0; d < dim; ++d)
        if (axes[d].sign <= 0) slab_mask |= (1u << d);
    const int q_dim = __builtin_popcount(slab_mask);

    // collect q-cells and (q+1)-cells
    struct CellRec {
        std::uint32_t mask;
        std::vector<int> anchor;
        double value;
    };
    std::vector<CellRec> qcells, q1cells;
    auto collect = [&](int want_dim, std::vector<CellRec>& out) {
        for (std::uint32_t mask = 0; mask < (1u << dim); ++mask) {
            if (__builtin_popcount(mask) != want_dim) continue;
            cubical::for_each_cell(cx, mask, [&](const std::vector<int>& anchor) {
                out.push_back({mask, anchor, cubical::cell_value(cx, mask, anchor)});
            });
        }
    };
    collect(q_dim, qcells);
    if (q_dim < int(dim)) collect(q_dim + 1, q1cells);

    // rank q-cells by (value, position) so pivots follow the filtration
    std::vector<std::size_t> order(qcells.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (qcells[a].value != qcells[b].value) return qcells[a].value < qcells[b].value;
        if (qcells[a].mask != qcells[b].mask) return qcells[a].mask < qcells[b].mask;
        return qcells[a].anchor < qcells[b].anchor;
    });
    std::vector<std::uint32_t> rank(qcells.size());
    for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = std::uint32_t(r);

    // index q-cells for boundary lookup
    std::map<std::pair<std::uint32_t, std::vector<int>>, std::uint32_t> lookup;
    for (std::size_t i = 0; i < qcells.size(); ++i)
        lookup[{qcells[i].mask, qcells[i].anchor}] = rank[i];

    auto face_ranks = [&](const CellRec& c) {
        std::vector<std::uint32_t> col;
        for (std::size_t d = 0; d < dim; ++d) {
            if (!((c.mask >> d) & 1)) continue;
            std::uint32_t fmask = c.mask & ~(1u << d);
            std::vector<int> lo = c.anchor;
            auto it = lookup.find({fmask, lo});
            if (it != lookup.end()) col.push_back(it->second);
            std::vector<int> hi = c.anchor;
            hi[d] += 1;
            if (cx.axes[d].periodic && hi[d] >= cx.verts_per_axis[d]) hi[d] = 0;
            if (!cx.axes[d].periodic && hi[d] > cx.axes[d].cells) continue;  // outside box
            it = lookup.find({fmask, hi});
            if (it != lookup.end()) col.push_back(it->second);
        }
        std::sort(col.begin(), col.end());
        // mod-2 cancellation of duplicated faces (periodic wrap of a 1-cell ring)
        std::vector<std::uint32_t> out;
        for (std::size_t i = 0; i < col.size();) {
            std::size_t j = i;
            while (j < col.size() && col[j] == col[i]) ++j;
            if ((j - i) % 2 == 1) out.push_back(col[i]);
            i = j;
        }
        return out;
    };

    auto xor_cols = [](std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
        std::vector<std::uint32_t> out;
        out.reserve(a.size() + b.size());
        std::size_t i = 0, j = 0;
        while (i < a.size() && j < b.size()) {
            if (a[i] < b[j]) out.push_back(a[i++]);
            else if (b[j] < a[i]) out.push_back(b[j++]);
            else { ++i; ++j; }
        }
        while (i < a.size()) out.push_back(a[i++]);
        while (j < b.size()) out.push_back(b[j++]);
        a = std::move(out);
    };

    // echelonize the boundary columns: distinct pivots (largest rank entry)
    std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> pivot_col;
    for (const auto& c : q1cells) {
        std::vector<std::uint32_t> col = face_ranks(c);
        while (!col.empty()) {
            auto it = pivot_col.find(col.back());
            if (it == pivot_col.end()) break;
            xor_cols(col, it->second);
        }
        if (!col.empty()) pivot_col.emplace(col.back(), std::move(col));
    }

    // zero layer of each positive axis (vertex nearest coordinate zero)
    std::vector<int> layer(dim, -1);
    for (std::size_t d = 0; d < dim; ++d) {
        if ((slab_mask >> d) & 1) continue;
        int best_i = 0;
        double best_c = 1e300;
        for (int i = 0; i < cx.verts_per_axis[d]; ++i) {
            double c = std::abs(cx.coord(d, i));
            if (c < best_c) { best_c = c; best_i = i; }
        }
        layer[d] = best_i;
    }
    auto on_layer = [&](const std::vector<int>& anchor) {
        for (std::size_t d = 0; d < dim; ++d)
            if (!((slab_mask >> d) & 1) && anchor[d] != layer[d]) return false;
        return true;
    };

    // reference slab chain
    std::vector<std::uint32_t> z;
    cubical::for_each_cell(cx, slab_mask, [&](const std::vector<int>& anchor) {
        if (on_layer(anchor)) z.push_back(lookup.at({slab_mask, anchor}));
    });
    std::sort(z.begin(), z.end());

    // sweep from the top: eliminate whatever the echelon can reach
    while (!z.empty()) {
        auto it = pivot_col.find(z.back());
        if (it == pivot_col.end()) break;
        xor_cols(z, it->second);
    }
    if (z.empty())
        throw WindowExhaustion("selector class died on the window; enlarge it");

    const CellRec& deciding = qcells[order[z.back()]];

    // relative-cycle health: the slab's geometric boundary (window ends of
    // the negative axes) plays the role of the deep sublevel X_b, so every
    // boundary value must sit strictly below the reported level
    double end_max = -1e300;
    cubical::for_each_cell(cx, slab_mask, [&](const std::vector<int>& anchor) {
        if (!on_layer(anchor)) return;
        for (std::size_t d = 0; d < dim; ++d) {
            if (!((slab_mask >> d) & 1) || axes[d].sign != -1) continue;
            if (anchor[d] == 0 || anchor[d] == axes[d].cells - 1) {
                end_max = std::max(end_max, cubical::cell_value(cx, slab_mask, anchor));
                break;
            }
        }
    });
    if (end_max > -1e300 && deciding.value <= end_max + 1e-12)
        throw WindowExhaustion("selector class not separated from the window boundary; enlarge it");

    MinimaxResult res;
    res.level = deciding.value;
    res.cells_used = qcells.size();
    // witness = cell center; error bar = value spread over the cell vertices
    res.witness.assign(dim, 0.0);
    double vmin = 1e300;
    {
        int corners = 1 << __builtin_popcount(deciding.mask);
        std::vector<std::size_t> ext;
        for (std::size_t d = 0; d < dim; ++d)
            if ((deciding.mask >> d) & 1) ext.push_back(d);
        std::vector<int> idx(dim);
        for (int c = 0; c < corners; ++c) {
            for (std::size_t d = 0; d < dim; ++d) idx[d] = deciding.anchor[d];
            for (std::size_t e = 0; e < ext.size(); ++e)
                if ((c >> e) & 1) {
                    std::size_t d = ext[e];
                    idx[d] = deciding.anchor[d] + 1;
                    if (cx.axes[d].periodic && idx[d] >= cx.verts_per_axis[d]) idx[d] = 0;
                }
            vmin = std::min(vmin, cx.vertex_values[cx.vertex_index(idx)]);
        }
        for (std::size_t d = 0; d < dim; ++d) {
            double lo = cx.coord(d, deciding.anchor[d]);
            double hi = ((deciding.mask >> d) & 1) ? cx.coord(d, deciding.anchor[d] + 1) : lo;
            res.witness[d] = 0.5 * (lo + hi);
        }
    }
    res.error_bar = res.level - vmin;
    return res;
}

}  // namespace symhom
