#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "perciso/lattice.hpp"
#include "perciso/rng.hpp"

namespace perciso {

struct GridSpec {
    int n = 1;
    double p = 0.5;
    std::uint64_t master_seed = 0;

    void validate() const {
        if (n < 1) throw std::invalid_argument("GridSpec: n must be >= 1");
        if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("GridSpec: p must be in (0,1]");
    }
};

// Immutable edge environment on B(n). The base state of every edge is a pure
// function of (master_seed, sample_index, edge_id); forced edges override it
// and are recorded so plants stay auditable.
class Configuration {
public:
    Configuration(GridSpec spec, std::uint64_t sample_index)
        : Configuration(spec, sample_index, Unsampled{}) {
        const long long m = box_.edge_count();
        const std::uint64_t thr = open_threshold(spec.p);
        const bool all_open = spec.p >= 1.0;
        for (long long e = 0; e < m; ++e) {
            const bool open = all_open ||
                              mix3(spec.master_seed, sample_index, static_cast<std::uint64_t>(e)) < thr;
            if (open) bits_[static_cast<std::size_t>(e >> 6)] |= (1ULL << (e & 63));
        }
    }

    const GridSpec& spec() const { return spec_; }
    const Box& box() const { return box_; }
    std::uint64_t sample_index() const { return sample_index_; }
    const std::vector<std::pair<long long, bool>>& forced_edges() const { return forced_; }

    bool is_open(long long edge_id) const {
        return (bits_[static_cast<std::size_t>(edge_id >> 6)] >> (edge_id & 63)) & 1ULL;
    }
    bool is_open(Vec2i a, Vec2i b) const { return is_open(box_.edge_id(a, b)); }

    // Returns a copy with the listed edges pinned to `state`; nothing else moves.
    Configuration forced(const std::vector<std::pair<Vec2i, Vec2i>>& edges, bool state) const {
        Configuration out(*this);
        for (const auto& [a, b] : edges) {
            const long long e = box_.edge_id(a, b);  // throws if outside B(n)
            out.set_bit(e, state);
            out.forced_.emplace_back(e, state);
        }
        return out;
    }

    std::uint64_t raw_word(std::size_t i) const { return bits_[i]; }
    std::size_t word_count() const { return bits_.size(); }

    void save(const std::string& path) const;
    static Configuration load(const std::string& path);

private:
    struct Unsampled {};
    Configuration(GridSpec spec, std::uint64_t sample_index, Unsampled)
        : spec_(spec), box_(spec.n), sample_index_(sample_index) {
        spec.validate();
        bits_.assign(static_cast<std::size_t>((box_.edge_count() + 63) / 64), 0);
    }

    void set_bit(long long e, bool v) {
        const std::uint64_t mask = 1ULL << (e & 63);
        if (v)
            bits_[static_cast<std::size_t>(e >> 6)] |= mask;
        else
            bits_[static_cast<std::size_t>(e >> 6)] &= ~mask;
    }

    GridSpec spec_;
    Box box_;
    std::uint64_t sample_index_ = 0;
    std::vector<std::uint64_t> bits_;
    std::vector<std::pair<long long, bool>> forced_;
};

inline Configuration sample_configuration(const GridSpec& spec, std::uint64_t sample_index) {
    spec.validate();
    return Configuration(spec, sample_index);
}

inline Configuration force_edges(const Configuration& config,
                                 const std::vector<std::pair<Vec2i, Vec2i>>& edges, bool state) {
    return config.forced(edges, state);
}

struct ClusterLabeling {
    Box box;
    std::vector<std::int32_t> label;   // dense labels, one per vertex id
    std::vector<long long> size;       // per label
    std::vector<int> l1_diameter;      // per label, max l1 distance between members
    int label_count = 0;

    std::int32_t label_of(Vec2i v) const { return label[static_cast<std::size_t>(box.vertex_id(v))]; }
};

// Union-find over open edges; diameters come from per-label extents of the
// rotated coordinates u = x+y, w = x-y (|dx|+|dy| = max(|du|,|dw|)).
inline ClusterLabeling label_clusters(const Configuration& config) {
    const Box& box = config.box();
    const long long nv = box.vertex_count();
    std::vector<std::int32_t> parent(static_cast<std::size_t>(nv));
    std::iota(parent.begin(), parent.end(), 0);

    auto find = [&](std::int32_t v) {
        while (parent[v] != v) {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        return v;
    };
    auto unite = [&](std::int32_t a, std::int32_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    };

    const int side = box.side();
    const int n = box.n();
    for (long long e = 0; e < box.edge_count(); ++e) {
        if (!config.is_open(e)) continue;
        auto [a, b] = box.edge_at(e);
        unite(static_cast<std::int32_t>((a.x + n) + side * (a.y + n)),
              static_cast<std::int32_t>((b.x + n) + side * (b.y + n)));
    }

    ClusterLabeling out{box, {}, {}, {}, 0};
    out.label.assign(static_cast<std::size_t>(nv), -1);
    std::vector<std::int32_t> root_to_label(static_cast<std::size_t>(nv), -1);
    std::vector<int> umin, umax, wmin, wmax;
    for (long long v = 0; v < nv; ++v) {
        const std::int32_t r = find(static_cast<std::int32_t>(v));
        std::int32_t lbl = root_to_label[r];
        if (lbl < 0) {
            lbl = out.label_count++;
            root_to_label[r] = lbl;
            out.size.push_back(0);
            umin.push_back(INT32_MAX);
            umax.push_back(INT32_MIN);
            wmin.push_back(INT32_MAX);
            wmax.push_back(INT32_MIN);
        }
        out.label[static_cast<std::size_t>(v)] = lbl;
        out.size[lbl]++;
        const Vec2i pt = box.vertex_at(v);
        umin[lbl] = std::min(umin[lbl], pt.x + pt.y);
        umax[lbl] = std::max(umax[lbl], pt.x + pt.y);
        wmin[lbl] = std::min(wmin[lbl], pt.x - pt.y);
        wmax[lbl] = std::max(wmax[lbl], pt.x - pt.y);
    }
    out.l1_diameter.resize(out.label_count);
    for (int l = 0; l < out.label_count; ++l)
        out.l1_diameter[l] = std::max(umax[l] - umin[l], wmax[l] - wmin[l]);
    return out;
}

struct GiantReport {
    bool uniq_event_holds = false;
    std::optional<std::int32_t> giant_label;
    long long giant_size = 0;
    long long second_largest = 0;
    double theta_n_global = 0.0;
};

// Uniqueness event: exactly one cluster of size >= kappa*(2n)^2 and every
// other cluster of size <= ceil((ln n)^5). Natural log, n from the box.
inline GiantReport check_uniq_event(const ClusterLabeling& labeling, double kappa) {
    if (!(kappa > 0.0) || !(kappa < 1.0))
        throw std::invalid_argument("check_uniq_event: kappa must be in (0,1)");
    const int n = labeling.box.n();
    const double giant_threshold = kappa * 4.0 * n * n;
    const double small_threshold = std::ceil(std::pow(std::log(static_cast<double>(n)), 5.0));

    GiantReport rep;
    std::int32_t best = -1;
    for (std::int32_t l = 0; l < labeling.label_count; ++l) {
        if (best < 0 || labeling.size[l] > labeling.size[best] ||
            (labeling.size[l] == labeling.size[best] && l < best))
            best = l;
    }
    if (best < 0) return rep;
    rep.giant_size = labeling.size[best];
    for (std::int32_t l = 0; l < labeling.label_count; ++l)
        if (l != best) rep.second_largest = std::max(rep.second_largest, labeling.size[l]);
    rep.theta_n_global =
        static_cast<double>(rep.giant_size) / static_cast<double>(labeling.box.vertex_count());

    const bool giant_big = static_cast<double>(rep.giant_size) >= giant_threshold;
    const bool others_small = static_cast<double>(rep.second_largest) <= small_threshold;
    // "exactly one" above the giant threshold: the runner-up must be below it too.
    const bool unique_giant = static_cast<double>(rep.second_largest) < giant_threshold;
    rep.uniq_event_holds = giant_big && others_small && unique_giant;
    if (rep.uniq_event_holds || giant_big) rep.giant_label = best;
    return rep;
}

// Label of the largest cluster regardless of the uniqueness event (ties to
// the smallest label). Used as the finite-volume stand-in for the infinite
// cluster when estimating theta.
inline std::int32_t largest_cluster_label(const ClusterLabeling& labeling) {
    std::int32_t best = 0;
    for (std::int32_t l = 1; l < labeling.label_count; ++l)
        if (labeling.size[l] > labeling.size[best]) best = l;
    return best;
}

struct ThetaEstimate {
    double theta_hat = 0.0;
    double stderr_ = 0.0;
    long long samples = 0;
};

inline ThetaEstimate estimate_theta(double p, int n, long long samples,
                                    std::uint64_t master_seed = 0x7468657461ULL) {
    GridSpec spec{n, p, master_seed};
    spec.validate();
    if (samples < 1) throw std::invalid_argument("estimate_theta: samples must be >= 1");
    long long hits = 0;
    for (long long s = 0; s < samples; ++s) {
        Configuration cfg = sample_configuration(spec, static_cast<std::uint64_t>(s));
        ClusterLabeling lab = label_clusters(cfg);
        if (lab.label_of({0, 0}) == largest_cluster_label(lab)) ++hits;
    }
    ThetaEstimate est;
    est.samples = samples;
    est.theta_hat = static_cast<double>(hits) / static_cast<double>(samples);
    est.stderr_ = std::sqrt(est.theta_hat * (1.0 - est.theta_hat) / static_cast<double>(samples));
    return est;
}

// ---- Crossing clusters ------------------------------------------------------

struct CrossingReport {
    Rect rect;
    std::vector<std::int32_t> local_label;  // per rect vertex, -1 for isolated indexing base
    std::vector<bool> crossing;             // per local label
    int label_count = 0;

    std::int32_t label_of(Vec2i v) const {
        const long long w = rect.x1 - rect.x0 + 1;
        return local_label[static_cast<std::size_t>((v.x - rect.x0) + w * (v.y - rect.y0))];
    }
    bool any_crossing() const {
        return std::any_of(crossing.begin(), crossing.end(), [](bool b) { return b; });
    }
};

namespace detail {

// Clusters of the subgraph induced by open edges inside `rect`.
inline std::pair<std::vector<std::int32_t>, int> label_in_rect(const Configuration& config,
                                                               const Rect& rect) {
    const long long w = rect.x1 - rect.x0 + 1;
    const long long h = rect.y1 - rect.y0 + 1;
    const long long nv = w * h;
    std::vector<std::int32_t> parent(static_cast<std::size_t>(nv));
    std::iota(parent.begin(), parent.end(), 0);
    auto idx = [&](Vec2i v) {
        return static_cast<std::int32_t>((v.x - rect.x0) + w * (v.y - rect.y0));
    };
    auto find = [&](std::int32_t v) {
        while (parent[v] != v) {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        return v;
    };
    for (int y = rect.y0; y <= rect.y1; ++y) {
        for (int x = rect.x0; x <= rect.x1; ++x) {
            const Vec2i a{x, y};
            if (x + 1 <= rect.x1 && config.is_open(a, {x + 1, y})) {
                auto ra = find(idx(a)), rb = find(idx({x + 1, y}));
                if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
            }
            if (y + 1 <= rect.y1 && config.is_open(a, {x, y + 1})) {
                auto ra = find(idx(a)), rb = find(idx({x, y + 1}));
                if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
            }
        }
    }
    std::vector<std::int32_t> label(static_cast<std::size_t>(nv), -1);
    int count = 0;
    for (long long v = 0; v < nv; ++v) {
        const std::int32_t r = find(static_cast<std::int32_t>(v));
        if (label[r] < 0) label[r] = count++;
        label[static_cast<std::size_t>(v)] = label[r];
    }
    return {std::move(label), count};
}

}  // namespace detail

// A cluster in `rect` is crossing iff it touches both vertical sides and both
// horizontal sides (connectivity inside the rectangle only).
inline CrossingReport crossing_check(const Configuration& config, const Rect& rect) {
    if (rect.degenerate()) throw std::invalid_argument("crossing_check: degenerate rectangle");
    if (!config.box().rect().contains({rect.x0, rect.y0}) ||
        !config.box().rect().contains({rect.x1, rect.y1}))
        throw std::invalid_argument("crossing_check: rect outside B(n)");

    CrossingReport rep;
    rep.rect = rect;
    auto [label, count] = detail::label_in_rect(config, rect);
    rep.local_label = std::move(label);
    rep.label_count = count;

    std::vector<std::uint8_t> left(count, 0), right(count, 0), bottom(count, 0), top(count, 0);
    for (int y = rect.y0; y <= rect.y1; ++y) {
        left[rep.label_of({rect.x0, y})] = 1;
        right[rep.label_of({rect.x1, y})] = 1;
    }
    for (int x = rect.x0; x <= rect.x1; ++x) {
        bottom[rep.label_of({x, rect.y0})] = 1;
        top[rep.label_of({x, rect.y1})] = 1;
    }
    rep.crossing.resize(count);
    for (int l = 0; l < count; ++l)
        rep.crossing[l] = left[l] && right[l] && bottom[l] && top[l];
    // Singleton "clusters" that merely sit on the boundary do not cross; they
    // are ruled out because a crossing cluster must span both directions, which
    // a single vertex can only do in a degenerate rect (already rejected).
    return rep;
}

struct StronglyCrossingReport {
    std::vector<std::int32_t> label;  // per box vertex id, -1 if outside the union
    std::vector<bool> strongly_crossing;
    int label_count = 0;
};

namespace detail {

// Boundary cycle of a rect, counterclockwise from (x0,y0), no repeated corner.
inline std::vector<Vec2i> boundary_cycle(const Rect& r) {
    std::vector<Vec2i> cyc;
    for (int x = r.x0; x < r.x1; ++x) cyc.push_back({x, r.y0});
    for (int y = r.y0; y < r.y1; ++y) cyc.push_back({r.x1, y});
    for (int x = r.x1; x > r.x0; --x) cyc.push_back({x, r.y1});
    for (int y = r.y1; y > r.y0; --y) cyc.push_back({r.x0, y});
    return cyc;
}

}  // namespace detail

// Strong crossing over a union of rectangles: the cluster must meet every
// boundary interval of length >= interval_len of every listed rectangle,
// i.e. no cyclic run of missed boundary vertices may exceed interval_len.
inline StronglyCrossingReport strongly_crossing_check(const Configuration& config,
                                                      const std::vector<Rect>& rects,
                                                      int interval_len) {
    if (rects.empty()) throw std::invalid_argument("strongly_crossing_check: no rectangles");
    for (const Rect& r : rects)
        if (r.degenerate()) throw std::invalid_argument("strongly_crossing_check: degenerate rect");

    // Overlap graph: rectangles adjacent iff their intersection has positive area.
    std::vector<int> comp(rects.size());
    std::iota(comp.begin(), comp.end(), 0);
    auto find = [&](int v) {
        while (comp[v] != v) v = comp[v] = comp[comp[v]];
        return v;
    };
    for (std::size_t i = 0; i < rects.size(); ++i)
        for (std::size_t j = i + 1; j < rects.size(); ++j)
            if (rects[i].intersects_2d(rects[j])) {
                int a = find(static_cast<int>(i)), b = find(static_cast<int>(j));
                if (a != b) comp[std::max(a, b)] = std::min(a, b);
            }
    for (std::size_t i = 0; i < rects.size(); ++i)
        if (find(static_cast<int>(i)) != find(0))
            throw std::invalid_argument("strongly_crossing_check: overlap graph disconnected");

    const Box& box = config.box();
    const long long nv = box.vertex_count();
    std::vector<std::int32_t> parent(static_cast<std::size_t>(nv));
    std::iota(parent.begin(), parent.end(), 0);
    auto ufind = [&](std::int32_t v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    auto in_union = [&](Vec2i v) {
        for (const Rect& r : rects)
            if (r.contains(v)) return true;
        return false;
    };
    auto edge_in_union = [&](Vec2i a, Vec2i b) {
        for (const Rect& r : rects)
            if (r.contains(a) && r.contains(b)) return true;
        return false;
    };
    for (long long e = 0; e < box.edge_count(); ++e) {
        if (!config.is_open(e)) continue;
        auto [a, b] = box.edge_at(e);
        if (!edge_in_union(a, b)) continue;
        auto ra = ufind(static_cast<std::int32_t>(box.vertex_id(a)));
        auto rb = ufind(static_cast<std::int32_t>(box.vertex_id(b)));
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }

    StronglyCrossingReport rep;
    rep.label.assign(static_cast<std::size_t>(nv), -1);
    std::vector<std::int32_t> root_to_label(static_cast<std::size_t>(nv), -1);
    for (long long v = 0; v < nv; ++v) {
        if (!in_union(box.vertex_at(v))) continue;
        const std::int32_t r = ufind(static_cast<std::int32_t>(v));
        if (root_to_label[r] < 0) root_to_label[r] = rep.label_count++;
        rep.label[static_cast<std::size_t>(v)] = root_to_label[r];
    }

    rep.strongly_crossing.assign(static_cast<std::size_t>(rep.label_count), true);
    for (const Rect& r : rects) {
        const auto cyc = detail::boundary_cycle(r);
        for (int l = 0; l < rep.label_count; ++l) {
            if (!rep.strongly_crossing[l]) continue;
            // longest cyclic run of boundary vertices not in cluster l
            int longest = 0, run = 0;
            bool any_hit = false;
            for (int pass = 0; pass < 2; ++pass) {
                for (const Vec2i& v : cyc) {
                    if (rep.label[static_cast<std::size_t>(box.vertex_id(v))] == l) {
                        any_hit = true;
                        run = 0;
                    } else {
                        ++run;
                        longest = std::max(longest, run);
                    }
                }
                if (!any_hit) break;
            }
            if (!any_hit || longest > interval_len ||
                longest >= static_cast<int>(cyc.size()))
                rep.strongly_crossing[l] = false;
        }
    }
    return rep;
}

// ---- Domino covers ----------------------------------------------------------

// Dominos are m x 2m or 2m x m rectangles. Grid-aligned placements
// [im,(i+2)m] x [jm,(j+1)m] and [im,(i+1)m] x [jm,(j+2)m] are used wherever
// they fit inside the region; residual boundary vertices get clamped
// placements, which may overhang regions smaller than one domino.
inline std::vector<Rect> domino_cover(const std::vector<Rect>& region, int m) {
    if (m < 1) throw std::invalid_argument("domino_cover: m must be >= 1");
    if (region.empty()) throw std::invalid_argument("domino_cover: empty region");
    for (const Rect& r : region)
        if (r.x1 < r.x0 || r.y1 < r.y0) throw std::invalid_argument("domino_cover: bad rect");

    auto contained = [&](const Rect& d) {
        for (const Rect& r : region)
            if (d.x0 >= r.x0 && d.x1 <= r.x1 && d.y0 >= r.y0 && d.y1 <= r.y1) return true;
        return false;
    };

    std::vector<Rect> dominos;
    Rect bbox = region[0];
    for (const Rect& r : region) {
        bbox.x0 = std::min(bbox.x0, r.x0);
        bbox.y0 = std::min(bbox.y0, r.y0);
        bbox.x1 = std::max(bbox.x1, r.x1);
        bbox.y1 = std::max(bbox.y1, r.y1);
    }

    auto floor_div = [](int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
    const int i0 = floor_div(bbox.x0, m), i1 = floor_div(bbox.x1, m);
    const int j0 = floor_div(bbox.y0, m), j1 = floor_div(bbox.y1, m);
    for (int i = i0; i <= i1; ++i) {
        for (int j = j0; j <= j1; ++j) {
            Rect horiz{i * m, j * m, (i + 2) * m, (j + 1) * m};
            if (contained(horiz)) dominos.push_back(horiz);
            Rect vert{i * m, j * m, (i + 1) * m, (j + 2) * m};
            if (contained(vert)) dominos.push_back(vert);
        }
    }

    auto covered = [&](Vec2i v) {
        for (const Rect& d : dominos)
            if (d.contains(v)) return true;
        return false;
    };

    // Clamp a horizontal domino into (or around) the rectangle holding v.
    for (const Rect& r : region) {
        for (int y = r.y0; y <= r.y1; ++y) {
            for (int x = r.x0; x <= r.x1; ++x) {
                const Vec2i v{x, y};
                if (covered(v)) continue;
                Rect d{x, y, x + 2 * m, y + m};
                if (d.x1 > r.x1) {
                    d.x0 = std::max(r.x0, r.x1 - 2 * m);
                    d.x1 = d.x0 + 2 * m;
                }
                if (d.y1 > r.y1) {
                    d.y0 = std::max(r.y0, r.y1 - m);
                    d.y1 = d.y0 + m;
                }
                dominos.push_back(d);
            }
        }
    }
    return dominos;
}

// ---- Bitset persistence ------------------------------------------------------

// 16-byte core header (magic "PERC", u16 version, u16 n, f64 p IEEE-754),
// 16-byte extension (u64 seed, u64 sample_index), then the edge bitset words.
// Little endian throughout. The seed does not fit the core 16 bytes at full
// width, hence the extension block.
inline void Configuration::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("Configuration::save: cannot open " + path);
    const char magic[4] = {'P', 'E', 'R', 'C'};
    const std::uint16_t version = 1;
    const std::uint16_t n16 = static_cast<std::uint16_t>(spec_.n);
    f.write(magic, 4);
    f.write(reinterpret_cast<const char*>(&version), 2);
    f.write(reinterpret_cast<const char*>(&n16), 2);
    f.write(reinterpret_cast<const char*>(&spec_.p), 8);
    f.write(reinterpret_cast<const char*>(&spec_.master_seed), 8);
    f.write(reinterpret_cast<const char*>(&sample_index_), 8);
    f.write(reinterpret_cast<const char*>(bits_.data()),
            static_cast<std::streamsize>(bits_.size() * 8));
    if (!f) throw std::runtime_error("Configuration::save: write failed for " + path);
}

inline Configuration Configuration::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("Configuration::load: cannot open " + path);
    char magic[4];
    std::uint16_t version = 0, n16 = 0;
    double p = 0.0;
    std::uint64_t seed = 0, index = 0;
    f.read(magic, 4);
    f.read(reinterpret_cast<char*>(&version), 2);
    f.read(reinterpret_cast<char*>(&n16), 2);
    f.read(reinterpret_cast<char*>(&p), 8);
    f.read(reinterpret_cast<char*>(&seed), 8);
    f.read(reinterpret_cast<char*>(&index), 8);
    if (!f || std::memcmp(magic, "PERC", 4) != 0 || version != 1)
        throw std::runtime_error("Configuration::load: bad header in " + path);
    Configuration cfg(GridSpec{n16, p, seed}, index, Unsampled{});
    f.read(reinterpret_cast<char*>(cfg.bits_.data()),
           static_cast<std::streamsize>(cfg.bits_.size() * 8));
    if (!f) throw std::runtime_error("Configuration::load: truncated file " + path);
    return cfg;
}

}  // namespace perciso
