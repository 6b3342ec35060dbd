#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "perciso/constants.hpp"
#include "perciso/geometry.hpp"
#include "perciso/metric.hpp"
#include "perciso/percolation.hpp"
#include "perciso/wulff.hpp"

namespace perciso {

struct PhiResult {
    bool event_failed = false;    // uniqueness event did not hold
    bool empty_feasible = false;  // no open circuit in the giant (infimum +inf)
    double lower_bound = 0.0;     // certified bounds on Phi_n itself
    double upper_bound = std::numeric_limits<double>::infinity();
    std::optional<Circuit> witness;
    long long witness_vol = 0;
    long long witness_interior_count = 0;  // giant vertices in vol(witness)
    long long cap = 0;
    std::vector<std::string> methods;
};

enum class SolverStrategy { BruteForce, Candidates, Parametric };

struct SolverConfig {
    SolverStrategy strategy = SolverStrategy::Candidates;
    double kappa = 0.25;
    double eps = 0.1;  // Wulff construction parameter, in (0, 1/4)
    long long local_search_budget = 50000;
    const NormModel* norm = nullptr;  // enables the Wulff-guided candidate
    const WulffShape* wulff = nullptr;
};

// ---- Deterministic lower bound ---------------------------------------------------

// Floor on n|gamma|/vol(gamma) over every circuit with vol <= cap, valid in
// any configuration since |C^n cap vol| <= vol. Combines the universal
// c0*sqrt(vol) inequality with the three-case (4-eps) route, maximizing over
// eps; R(eps) = (16/(8 eps - eps^2))^3 is the volume above which the (4-eps)
// inequality applies to circuits with |gamma| <= vol^(2/3).
inline double certificate_lower_bound(int n, long long cap, double c0 = kIsoC0) {
    if (cap < 4) return 0.0;
    const double nn = static_cast<double>(n);
    const double capd = static_cast<double>(cap);
    double best = c0 * nn / std::sqrt(capd);
    for (double eps = 0.05; eps < 3.95; eps += 0.01) {
        const double r_eps = std::pow(16.0 / (8.0 * eps - eps * eps), 3.0);
        const double case_main = (4.0 - eps) * nn / std::sqrt(capd);
        const double case_small = 4.0 * nn / r_eps;
        const double case_long = nn / std::cbrt(capd);
        best = std::max(best, std::min({case_main, case_small, case_long}));
    }
    return best;
}

// ---- Guided ring construction -----------------------------------------------------

// Projects the waypoints of a closed polygon into the giant, joins successive
// projections by geodesics and trims the concatenation into a simple open
// path; the loop is then closed by a geodesic whose interior avoids the path,
// so the result is simple by construction. Returns nullopt when the walk
// cannot close into a valid circuit.
inline std::optional<Circuit> traced_ring(const Configuration& config, const GiantContext& ctx,
                                          const ClosestVertexIndex& idx,
                                          const std::vector<Vec2d>& closed_waypoints,
                                          BfsWorkspace& ws) {
    if (closed_waypoints.size() < 3) return std::nullopt;
    std::vector<Vec2d> pts = closed_waypoints;
    if (!(pts.front() == pts.back())) pts.push_back(pts.front());

    std::vector<Vec2i> path;
    Vec2i prev = idx.closest(pts.front());
    path.push_back(prev);
    for (std::size_t k = 1; k + 1 < pts.size(); ++k) {
        const Vec2i cur = idx.closest(pts[k]);
        if (cur == prev || cur == path.front()) continue;
        auto seg = ws.path(config, prev, cur);
        if (!seg) return std::nullopt;
        path = concatenate(path, *seg);
        prev = path.back();
    }
    if (path.size() < 4) return std::nullopt;

    std::vector<std::uint8_t> blocked(static_cast<std::size_t>(ctx.box.vertex_count()), 0);
    for (const Vec2i& v : path) blocked[static_cast<std::size_t>(ctx.box.vertex_id(v))] = 1;
    const auto closing = ws.path_avoiding(config, path.back(), path.front(), blocked);
    if (!closing) return std::nullopt;
    path.insert(path.end(), closing->begin() + 1, closing->end() - 1);
    try {
        return Circuit::from_vertices(path);
    } catch (const std::invalid_argument&) {
        return std::nullopt;
    }
}

// Closed waypoint polygon for an axis-aligned rectangle ring, pieces per side
// proportional to its length.
inline std::vector<Vec2d> rect_waypoints(const Rect& r, int pieces_per_side = 4) {
    std::vector<Vec2d> out;
    const Vec2d c0{static_cast<double>(r.x0), static_cast<double>(r.y0)};
    const Vec2d c1{static_cast<double>(r.x1), static_cast<double>(r.y0)};
    const Vec2d c2{static_cast<double>(r.x1), static_cast<double>(r.y1)};
    const Vec2d c3{static_cast<double>(r.x0), static_cast<double>(r.y1)};
    auto side = [&](Vec2d a, Vec2d b) {
        for (int k = 0; k < pieces_per_side; ++k)
            out.push_back(a + (static_cast<double>(k) / pieces_per_side) * (b - a));
    };
    side(c0, c1);
    side(c1, c2);
    side(c2, c3);
    side(c3, c0);
    out.push_back(c0);
    return out;
}

// ---- Candidate evaluation over the giant ------------------------------------------

namespace solver_detail {

struct GiantPrefix {
    Box box;
    std::vector<long long> pref;  // inclusive 2D prefix of giant marks

    explicit GiantPrefix(const GiantContext& ctx) : box(ctx.box) {
        const int side = box.side();
        pref.assign(static_cast<std::size_t>(side + 1) * (side + 1), 0);
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x)
                at(x + 1, y + 1) = at(x, y + 1) + at(x + 1, y) - at(x, y) +
                                   (ctx.in_giant[static_cast<std::size_t>(y) * side + x] ? 1 : 0);
    }

    long long& at(int x, int y) { return pref[static_cast<std::size_t>(y) * (box.side() + 1) + x]; }
    long long at(int x, int y) const {
        return pref[static_cast<std::size_t>(y) * (box.side() + 1) + x];
    }

    long long count(int x0, int y0, int x1, int y1) const {
        if (x1 < x0 || y1 < y0) return 0;
        const int n = box.n();
        x0 += n + 1;
        x1 += n + 1;
        y0 += n + 1;
        y1 += n + 1;
        return at(x1, y1) - at(x0 - 1, y1) - at(x1, y0 - 1) + at(x0 - 1, y0 - 1);
    }
};

inline std::vector<Vec2i> rect_circuit_vertices(const Rect& r) {
    std::vector<Vec2i> v;
    for (int x = r.x0; x < r.x1; ++x) v.push_back({x, r.y0});
    for (int y = r.y0; y < r.y1; ++y) v.push_back({r.x1, y});
    for (int x = r.x1; x > r.x0; --x) v.push_back({x, r.y1});
    for (int y = r.y1; y > r.y0; --y) v.push_back({r.x0, y});
    return v;
}

// Ratio |gamma| / (giant in vol) for an exact rectangle ring; nullopt when a
// boundary edge is closed or a boundary vertex leaves the giant.
inline std::optional<double> rect_ratio(const Configuration& config, const GiantContext& ctx,
                                        const GiantPrefix& pref, const Rect& r) {
    const std::vector<Vec2i> ring = rect_circuit_vertices(r);
    for (std::size_t i = 0; i < ring.size(); ++i) {
        const Vec2i a = ring[i], b = ring[(i + 1) % ring.size()];
        if (!ctx.contains(a)) return std::nullopt;
        if (!config.is_open(a, b)) return std::nullopt;
    }
    const long long boundary = static_cast<long long>(ring.size());
    const long long interior = pref.count(r.x0 + 1, r.y0 + 1, r.x1 - 1, r.y1 - 1);
    return static_cast<double>(boundary) / static_cast<double>(interior + boundary);
}

}  // namespace solver_detail

// ---- Local search ------------------------------------------------------------------

// Greedy ratio descent with two move families:
//   corner flip outward  (vertex swaps to the far cell corner; vol grows by 1)
//   U-pull               (a two-vertex notch is cut; length drops by 2)
// Moves keep the circuit simple (new vertices are off-circuit; lattice paths
// cannot cross without sharing a vertex), open, inside the giant, and under
// the volume cap.
class LocalSearch {
public:
    LocalSearch(const Configuration& config, const GiantContext& ctx, long long cap)
        : config_(config), ctx_(ctx), cap_(cap) {}

    Circuit improve(const Circuit& start, long long budget) {
        load(start);
        long long ops = 0;
        std::size_t cursor = 0;
        long long since_improvement = 0;
        while (ops < budget && since_improvement <= static_cast<long long>(verts_.size())) {
            ++ops;
            ++since_improvement;
            if (cursor >= verts_.size()) cursor = 0;
            if (try_u_pull(cursor) || try_corner_flip(cursor)) since_improvement = 0;
            ++cursor;
        }
        return Circuit::from_vertices(verts_);
    }

private:
    void load(const Circuit& c) {
        verts_ = c.vertices();
        const Box& box = ctx_.box;
        on_circuit_.assign(static_cast<std::size_t>(box.vertex_count()), 0);
        in_vol_.assign(static_cast<std::size_t>(box.vertex_count()), 0);
        for (const Vec2i& v : verts_) on_circuit_[vid(v)] = 1;

        // scanline parity fill of the strict interior
        const Rect bb = c.bbox();
        for (int y = bb.y0; y <= bb.y1; ++y) {
            std::vector<int> cols;
            for (std::size_t i = 0; i < verts_.size(); ++i) {
                const Vec2i a = verts_[i], b = verts_[(i + 1) % verts_.size()];
                if (a.x == b.x && std::min(a.y, b.y) == y) cols.push_back(a.x);
            }
            std::sort(cols.begin(), cols.end());
            bool inside = false;
            std::size_t j = cols.size();
            for (int x = bb.x1; x >= bb.x0; --x) {
                while (j > 0 && cols[j - 1] >= x) {
                    --j;
                    inside = !inside;
                }
                const Vec2i q{x, y};
                if (on_circuit_[vid(q)] || inside) in_vol_[vid(q)] = 1;
            }
        }
        length_ = static_cast<long long>(verts_.size());
        vol_ = c.vol();
        weight_ = 0;
        for (int y = bb.y0; y <= bb.y1; ++y)
            for (int x = bb.x0; x <= bb.x1; ++x)
                if (in_vol_[vid({x, y})] && ctx_.contains({x, y})) ++weight_;
    }

    std::size_t vid(Vec2i v) const { return static_cast<std::size_t>(ctx_.box.vertex_id(v)); }

    double ratio(long long len, long long w) const {
        return static_cast<double>(len) / static_cast<double>(w);
    }

    bool open_edge(Vec2i a, Vec2i b) const {
        return ctx_.box.has_edge(a, b) && config_.is_open(a, b);
    }

    // (q0,q1,q2,q3) with q3-q2 == -(q1-q0): replace by the direct edge q0-q3.
    bool try_u_pull(std::size_t i) {
        const std::size_t m = verts_.size();
        if (m < 6) return false;
        const Vec2i q0 = verts_[i], q1 = verts_[(i + 1) % m], q2 = verts_[(i + 2) % m],
                    q3 = verts_[(i + 3) % m];
        const Vec2i d = q1 - q0, e = q2 - q1;
        if (!(q3 - q2 == Vec2i{-d.x, -d.y})) return false;
        if (!open_edge(q0, q3)) return false;

        // a left-turn U encloses its cell, so pulling expels q1,q2 from vol
        const long long c = static_cast<long long>(d.x) * e.y - static_cast<long long>(d.y) * e.x;
        long long dvol = 0, dw = 0;
        if (c > 0) {
            dvol = -2;
            dw = -(ctx_.contains(q1) ? 1 : 0) - (ctx_.contains(q2) ? 1 : 0);
        }
        const long long nlen = length_ - 2, nw = weight_ + dw;
        if (nw <= 0) return false;
        if (ratio(nlen, nw) >= ratio(length_, weight_) - 1e-15) return false;

        if (c > 0) {
            in_vol_[vid(q1)] = 0;
            in_vol_[vid(q2)] = 0;
        }
        on_circuit_[vid(q1)] = 0;
        on_circuit_[vid(q2)] = 0;
        std::vector<Vec2i> next;
        next.reserve(m - 2);
        for (std::size_t k = 0; k < m; ++k)
            if (k != (i + 1) % m && k != (i + 2) % m) next.push_back(verts_[k]);
        verts_ = std::move(next);
        length_ = nlen;
        vol_ += dvol;
        weight_ = nw;
        return true;
    }

    // Corner (u,v,w) flips outward to v' = u+w-v when v' is off-circuit and
    // outside vol; v becomes interior, v' joins the boundary.
    bool try_corner_flip(std::size_t i) {
        const std::size_t m = verts_.size();
        const Vec2i u = verts_[(i + m - 1) % m], v = verts_[i], w = verts_[(i + 1) % m];
        if (u.x == w.x || u.y == w.y) return false;  // straight, not a corner
        const Vec2i vp = u + w - v;
        if (!ctx_.box.contains(vp)) return false;
        if (on_circuit_[vid(vp)] || in_vol_[vid(vp)]) return false;
        if (!ctx_.contains(vp)) return false;
        if (!open_edge(u, vp) || !open_edge(vp, w)) return false;
        if (vol_ + 1 > cap_) return false;
        const long long nw = weight_ + 1;
        if (ratio(length_, nw) >= ratio(length_, weight_) - 1e-15) return false;

        on_circuit_[vid(v)] = 0;
        on_circuit_[vid(vp)] = 1;
        in_vol_[vid(vp)] = 1;  // v stays in vol as interior
        verts_[i] = vp;
        vol_ += 1;
        weight_ = nw;
        return true;
    }

    const Configuration& config_;
    const GiantContext& ctx_;
    long long cap_;
    std::vector<Vec2i> verts_;
    std::vector<std::uint8_t> on_circuit_, in_vol_;
    long long length_ = 0, vol_ = 0, weight_ = 0;
};

inline Circuit local_search_improve(const Configuration& config, const GiantContext& ctx,
                                    const Circuit& circuit, long long budget,
                                    long long cap = std::numeric_limits<long long>::max()) {
    if (budget <= 0) return circuit;
    LocalSearch ls(config, ctx, cap);
    return ls.improve(circuit, budget);
}

// ---- Wulff-guided candidate ---------------------------------------------------------

struct WulffGuided {
    Circuit circuit;
    double ratio = 0.0;
    // diagnostics for the two target conditions of the construction
    bool hausdorff_ok = false;
    bool length_ok = false;
    double hausdorff_to_polygon = 0.0;
    double length_budget = 0.0;
};

// Scale the normalized Wulff boundary by N = (1-eps)*sqrt(2)*n, polygonalize
// at r = eps^2*N/8, trace through the giant. Fails when the walk does not
// close into a valid circuit with vol <= |B(n)|/2.
inline std::optional<WulffGuided> wulff_guided_circuit(const Configuration& config,
                                                       const GiantContext& ctx,
                                                       const WulffShape& wulff, double eps,
                                                       const NormModel& norm,
                                                       std::uint64_t eta_seed = 0x77ULL) {
    if (!(eps > 0.0) || !(eps < 0.25))
        throw std::invalid_argument("wulff_guided_circuit: eps must be in (0, 1/4)");
    if (ctx.giant_size == 0) throw std::runtime_error("wulff_guided_circuit: giant missing");

    const int n = ctx.box.n();
    const double N = (1.0 - eps) * std::sqrt(2.0) * n;
    PolyCurve scaled;
    scaled.closed = true;
    for (const Vec2d& p : wulff.normalized) scaled.pts.push_back({N * p.x, N * p.y});
    scaled.pts.push_back(scaled.pts.front());

    const double r = eps * eps * N / 8.0;
    const PolyCurve poly = polygonal_approx(scaled, r);

    const ClosestVertexIndex idx = ctx.closest_index(eta_seed);
    BfsWorkspace ws(ctx.box);
    const auto circuit = traced_ring(config, ctx, idx, poly.pts, ws);
    if (!circuit) return std::nullopt;

    const long long cap = ctx.box.vertex_count() / 2;
    if (circuit->vol() > cap) return std::nullopt;

    const InteriorCounts ic = interior_counts(*circuit, [&](Vec2i v) { return ctx.contains(v); });

    WulffGuided out{*circuit, 0.0, false, false, 0.0, 0.0};
    out.ratio = static_cast<double>(circuit->length()) /
                static_cast<double>(ic.strict_marked + ic.boundary_marked);

    const std::vector<Vec2d> polypts = sample_curve(poly, 0.25);
    double worst = 0.0;
    for (const Vec2i& v : circuit->vertices()) {
        double best = std::numeric_limits<double>::infinity();
        for (const Vec2d& q : polypts) best = std::min(best, linf_norm(to_real(v) - q));
        worst = std::max(worst, best);
    }
    out.hausdorff_to_polygon = worst;
    out.hausdorff_ok = worst <= eps * eps * N;
    out.length_budget = (1.0 + eps) * len_norm(poly.pts, norm);
    out.length_ok = static_cast<double>(circuit->length()) <= out.length_budget;
    return out;
}

// ---- Exact enumeration ---------------------------------------------------------------

namespace solver_detail {

// DFS enumeration of all simple open circuits inside the giant cluster.
// Cycles are rooted at their minimal vertex id and oriented by second < last.
// The visitor receives (vertices, twice_area_signed, nw_green_sum_signed).
template <typename Visitor>
void enumerate_circuits(const Configuration& config, const GiantContext& ctx, long long max_len,
                        long long node_budget, Visitor&& visit) {
    const Box& box = ctx.box;
    const int side = box.side();
    const long long nv = box.vertex_count();

    // per-row suffix counts of giant marks, for the per-edge green values
    std::vector<long long> row_suffix(static_cast<std::size_t>(side + 1) * side, 0);
    auto suf = [&](int x, int y) -> long long& {
        return row_suffix[static_cast<std::size_t>(y + box.n()) * (side + 1) + (x + box.n())];
    };
    for (int y = -box.n(); y <= box.n(); ++y)
        for (int x = box.n(); x >= -box.n(); --x)
            suf(x, y) = suf(x + 1, y) + (ctx.contains({x, y}) ? 1 : 0);

    auto green = [&](Vec2i a, Vec2i b) -> long long {
        if (a.x != b.x) return 0;
        const int row = std::min(a.y, b.y);
        const long long cnt = (a.x + 1 <= box.n()) ? suf(a.x + 1, row) : 0;
        return (b.y > a.y) ? -cnt : cnt;
    };
    auto shoelace = [](Vec2i a, Vec2i b) -> long long {
        return static_cast<long long>(a.x) * b.y - static_cast<long long>(b.x) * a.y;
    };

    std::vector<std::uint8_t> on_path(static_cast<std::size_t>(nv), 0);
    std::vector<Vec2i> path;
    long long visited = 0;

    struct Frame {
        Vec2i v;
        int next_dir;
    };

    for (long long s = 0; s < nv; ++s) {
        const Vec2i sv = box.vertex_at(s);
        if (!ctx.contains(sv)) continue;
        path.clear();
        path.push_back(sv);
        on_path[static_cast<std::size_t>(s)] = 1;
        std::vector<Frame> stack{{sv, 0}};
        long long area2 = 0, nw = 0;

        while (!stack.empty()) {
            Frame& f = stack.back();
            if (f.next_dir >= 4) {
                on_path[static_cast<std::size_t>(box.vertex_id(f.v))] = 0;
                path.pop_back();
                if (!path.empty()) {
                    area2 -= shoelace(path.back(), f.v);
                    nw -= green(path.back(), f.v);
                }
                stack.pop_back();
                continue;
            }
            const Vec2i step = kNeighborSteps[f.next_dir++];
            const Vec2i w = f.v + step;
            if (!box.contains(w)) continue;
            const long long wid = box.vertex_id(w);
            if (wid < s) continue;
            if (!ctx.contains(w)) continue;
            if (!config.is_open(f.v, w)) continue;
            if (++visited > node_budget)
                throw std::runtime_error("enumerate_circuits: node budget exceeded");

            if (wid == s) {
                if (path.size() >= 3 && box.vertex_id(path[1]) < box.vertex_id(path.back())) {
                    const long long a2 = area2 + shoelace(f.v, w);
                    const long long g = nw + green(f.v, w);
                    if (a2 != 0) visit(path, a2, g);
                }
                continue;
            }
            if (on_path[static_cast<std::size_t>(wid)]) continue;
            if (static_cast<long long>(path.size()) + l1_norm(w - sv) > max_len) continue;

            area2 += shoelace(f.v, w);
            nw += green(f.v, w);
            on_path[static_cast<std::size_t>(wid)] = 1;
            path.push_back(w);
            stack.push_back({w, 0});
        }
        on_path[static_cast<std::size_t>(s)] = 0;
    }
}

// #circuit vertices whose displaced copy is interior, for a ccw vertex list.
inline long long nw_boundary_count(const std::vector<Vec2i>& verts) {
    const std::size_t m = verts.size();
    long long c = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const Vec2i prev = verts[(i + m - 1) % m], cur = verts[i], next = verts[(i + 1) % m];
        if (detail::nw_displaced_inside(cur - prev, next - cur)) ++c;
    }
    return c;
}

inline std::vector<Vec2i> canonical_cycle(std::vector<Vec2i> v, long long area2) {
    if (area2 < 0) std::reverse(v.begin(), v.end());
    const auto mn = std::min_element(v.begin(), v.end());
    std::rotate(v.begin(), mn, v.end());
    return v;
}

}  // namespace solver_detail

// Exact capped optimum by exhaustive enumeration. Intended for n <= 4; the
// node budget guards against accidental use on dense large boxes.
inline PhiResult brute_force_phi(const Configuration& config, const GiantContext& ctx,
                                 long long cap, long long node_budget = 400000000LL) {
    PhiResult res;
    res.cap = cap;
    res.methods = {"bruteforce"};

    long long best_len = 0, best_den = 1;
    bool found = false;
    std::vector<Vec2i> best_cycle;

    solver_detail::enumerate_circuits(
        config, ctx, cap, node_budget,
        [&](const std::vector<Vec2i>& path, long long area2, long long nw_signed) {
            const long long len = static_cast<long long>(path.size());
            const long long a2 = std::llabs(area2);
            const long long volume = a2 / 2 + len / 2 + 1;
            if (volume > cap) return;
            std::vector<Vec2i> ccw = solver_detail::canonical_cycle(path, area2);
            const long long f_nw = area2 > 0 ? nw_signed : -nw_signed;
            const long long interior = f_nw - solver_detail::nw_boundary_count(ccw);
            const long long den = interior + len;  // circuit vertices are all giant
            // exact rational comparison, ties to the lexicographically smaller list
            if (!found || len * best_den < best_len * den ||
                (len * best_den == best_len * den && ccw < best_cycle)) {
                found = true;
                best_len = len;
                best_den = den;
                best_cycle = std::move(ccw);
            }
        });

    if (!found) {
        res.empty_feasible = true;
        return res;
    }
    res.witness = Circuit::from_vertices(best_cycle);
    res.upper_bound = static_cast<double>(best_len) / static_cast<double>(best_den);
    res.lower_bound = res.upper_bound;
    res.witness_vol = res.witness->vol();
    res.witness_interior_count = best_den;
    return res;
}

// Exact minimum of |gamma| / F(gamma) with F the displaced-interior giant
// count (the functional the parametric test optimizes), no volume cap.
// Returns +inf when no circuit has F >= 1.
inline double brute_force_uncapped_ratio(const Configuration& config, const GiantContext& ctx,
                                         long long node_budget = 400000000LL) {
    long long best_len = 0, best_f = 0;
    solver_detail::enumerate_circuits(
        config, ctx, ctx.box.vertex_count(), node_budget,
        [&](const std::vector<Vec2i>& path, long long area2, long long nw_signed) {
            const long long len = static_cast<long long>(path.size());
            const long long f = area2 > 0 ? nw_signed : -nw_signed;
            if (f < 1) return;
            if (best_f == 0 || len * best_f < best_len * f) {
                best_len = len;
                best_f = f;
            }
        });
    if (best_f == 0) return std::numeric_limits<double>::infinity();
    return static_cast<double>(best_len) / static_cast<double>(best_f);
}

// ---- Parametric min-ratio test --------------------------------------------------------

// Directed negative-cycle test for the functional |gamma|/F(gamma): every open
// giant edge gets weight 1 - t*a(e) where a is the per-edge green value of the
// displaced-interior count. Predecessor cycles from Bellman-Ford relaxation
// are vertex-simple, so a negative cycle IS a simple open circuit with ratio
// < t; conversely any such circuit is itself a negative cycle.
inline bool parametric_ratio_test(const Configuration& config, const GiantContext& ctx, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("parametric_ratio_test: t must be positive");
    const Box& box = ctx.box;
    const int side = box.side();

    std::vector<std::int32_t> compact(static_cast<std::size_t>(box.vertex_count()), -1);
    std::vector<Vec2i> verts;
    for (long long v = 0; v < box.vertex_count(); ++v)
        if (ctx.in_giant[static_cast<std::size_t>(v)]) {
            compact[static_cast<std::size_t>(v)] = static_cast<std::int32_t>(verts.size());
            verts.push_back(box.vertex_at(v));
        }
    const std::int32_t V = static_cast<std::int32_t>(verts.size());
    if (V == 0) return false;

    std::vector<long long> row_suffix(static_cast<std::size_t>(side + 1) * side, 0);
    auto suf = [&](int x, int y) -> long long& {
        return row_suffix[static_cast<std::size_t>(y + box.n()) * (side + 1) + (x + box.n())];
    };
    for (int y = -box.n(); y <= box.n(); ++y)
        for (int x = box.n(); x >= -box.n(); --x)
            suf(x, y) = suf(x + 1, y) + (ctx.contains({x, y}) ? 1 : 0);

    struct Arc {
        std::int32_t from, to;
        double w;
    };
    std::vector<Arc> arcs;
    for (std::int32_t i = 0; i < V; ++i) {
        const Vec2i a = verts[i];
        for (const Vec2i step : {Vec2i{1, 0}, Vec2i{0, 1}}) {
            const Vec2i b = a + step;
            if (!box.contains(b)) continue;
            const std::int32_t j = compact[static_cast<std::size_t>(box.vertex_id(b))];
            if (j < 0) continue;
            if (!config.is_open(a, b)) continue;
            double green = 0.0;
            if (step.y == 1) {
                const long long cnt = (a.x + 1 <= box.n()) ? suf(a.x + 1, a.y) : 0;
                green = static_cast<double>(-cnt);
            }
            arcs.push_back({i, j, 1.0 - t * green});
            arcs.push_back({j, i, 1.0 + t * green});
        }
    }

    // Bellman-Ford with a virtual source at distance 0 everywhere.
    std::vector<double> dist(static_cast<std::size_t>(V), 0.0);
    for (std::int32_t round = 0; round < V; ++round) {
        bool any = false;
        for (const Arc& e : arcs) {
            const double cand = dist[static_cast<std::size_t>(e.from)] + e.w;
            if (cand < dist[static_cast<std::size_t>(e.to)] - 1e-12) {
                dist[static_cast<std::size_t>(e.to)] = cand;
                any = true;
            }
        }
        if (!any) return false;
    }
    return true;
}

struct ParametricThreshold {
    double threshold = std::numeric_limits<double>::infinity();
    bool feasible = false;
};

// Binary search for the uncapped min ratio, to 1e-6 relative tolerance.
inline ParametricThreshold parametric_threshold(const Configuration& config,
                                                const GiantContext& ctx) {
    const double hi0 = static_cast<double>(ctx.box.edge_count() + 2);
    ParametricThreshold out;
    if (!parametric_ratio_test(config, ctx, hi0)) return out;  // no circuit encloses a mark
    out.feasible = true;
    double lo = 1.0 / static_cast<double>(ctx.box.vertex_count());
    double hi = hi0;
    while (hi - lo > 1e-6 * std::max(1.0, lo)) {
        const double mid = 0.5 * (lo + hi);
        if (parametric_ratio_test(config, ctx, mid))
            hi = mid;
        else
            lo = mid;
    }
    out.threshold = 0.5 * (lo + hi);
    return out;
}

// ---- Combined solver -------------------------------------------------------------------

// Candidate search plus certificates over an explicit giant context; the
// conditioning event is the caller's business.
inline PhiResult phi_with_context(const Configuration& config, const GiantContext& ctx,
                                  const SolverConfig& solver) {
    const Box& box = config.box();
    const int n = box.n();
    const long long cap = box.vertex_count() / 2;
    PhiResult res;
    res.cap = cap;

    if (solver.strategy == SolverStrategy::BruteForce) {
        if (n > 4) throw std::invalid_argument("phi: brute force permitted only for n <= 4");
        PhiResult exact = brute_force_phi(config, ctx, cap);
        if (exact.empty_feasible) exact.lower_bound = certificate_lower_bound(n, cap) / n;
        return exact;
    }

    res.methods.push_back("candidates");
    const solver_detail::GiantPrefix pref(ctx);

    std::optional<Circuit> best;
    double best_ratio = std::numeric_limits<double>::infinity();
    auto offer_circuit = [&](const Circuit& c) {
        if (c.vol() > cap) return;
        const long long w = weighted_interior_count(c, [&](Vec2i v) { return ctx.contains(v); });
        const double r = static_cast<double>(c.length()) / static_cast<double>(w);
        if (r < best_ratio) {
            best_ratio = r;
            best = c;
        }
    };
    auto offer_rect = [&](const Rect& r) {
        if (r.x1 - r.x0 < 1 || r.y1 - r.y0 < 1) return;
        if (r.x0 < -n || r.y0 < -n || r.x1 > n || r.y1 > n) return;
        if (static_cast<long long>(r.x1 - r.x0 + 1) * (r.y1 - r.y0 + 1) > cap) return;
        const auto ratio = solver_detail::rect_ratio(config, ctx, pref, r);
        if (ratio && *ratio < best_ratio) {
            best_ratio = *ratio;
            best = Circuit::from_vertices(solver_detail::rect_circuit_vertices(r));
        }
    };

    // Exact square rings at every admissible size (these realize the planted
    // annulus candidate and the p ~ 1 optimum).
    for (int m = 1; m <= n; ++m) offer_rect({-m, -m, m, m});

    // Traced rings survive closed edges by wiggling through the giant: squares
    // near the half-volume optimum plus wide strips for barrier geometries.
    {
        const ClosestVertexIndex idx = ctx.closest_index(config.spec().master_seed);
        BfsWorkspace ws(box);
        auto offer_traced = [&](const Rect& r, int pieces) {
            const auto c = traced_ring(config, ctx, idx, rect_waypoints(r, pieces), ws);
            if (c) offer_circuit(*c);
        };
        // the optimum hugs the volume cap: descend from the largest square
        // that could fit, then add a sparse ladder of smaller sizes
        const int m0 = static_cast<int>((std::sqrt(static_cast<double>(cap)) - 1.0) / 2.0);
        for (int m = std::min(m0, n - 1); m >= std::max(1, m0 - 4); --m)
            offer_traced({-m, -m, m, m}, 2);
        for (const double f : {0.45, 0.55, 0.62}) {
            const int m = std::max(1, static_cast<int>(f * n));
            if (m < m0 - 4) offer_traced({-m, -m, m, m}, 2);
        }
        if (n >= 8) {
            const int margin = std::max(1, n / 32);
            const int x0 = -n + margin, x1 = n - margin;
            for (const int h : {n / 4, n / 2, (3 * n) / 4}) {
                if (h < 2) continue;
                for (int y0 = -n + margin; y0 + h <= n - margin; y0 += std::max(2, h / 2))
                    offer_traced({x0, y0, x1, y0 + h}, std::max(2, n / 16));
            }
        }
    }

    if (solver.norm && solver.wulff) {
        try {
            const auto wg = wulff_guided_circuit(config, ctx, *solver.wulff, solver.eps,
                                                 *solver.norm, config.spec().master_seed);
            if (wg && wg->ratio < best_ratio) {
                best_ratio = wg->ratio;
                best = wg->circuit;
                res.methods.push_back("wulff");
            }
        } catch (const std::exception&) {
            // construction may fail on sparse samples; other candidates stand
        }
    }

    // Fallback seed: any open unit cell in the giant.
    if (!best) {
        for (int y = -n; y < n && !best; ++y) {
            for (int x = -n; x < n && !best; ++x) {
                const Vec2i a{x, y}, b{x + 1, y}, c{x + 1, y + 1}, d{x, y + 1};
                if (ctx.contains(a) && config.is_open(a, b) && config.is_open(b, c) &&
                    config.is_open(c, d) && config.is_open(d, a))
                    offer_circuit(Circuit::from_vertices({a, b, c, d}));
            }
        }
    }

    if (best && solver.local_search_budget > 0) {
        res.methods.push_back("local-search");
        const Circuit improved =
            local_search_improve(config, ctx, *best, solver.local_search_budget, cap);
        offer_circuit(improved);
    }

    res.lower_bound = certificate_lower_bound(n, cap) / n;
    if (solver.strategy == SolverStrategy::Parametric) {
        res.methods.push_back("parametric");
        const ParametricThreshold thr = parametric_threshold(config, ctx);
        if (thr.feasible)
            res.lower_bound = std::max(res.lower_bound, thr.threshold / (1.0 + thr.threshold));
    }

    if (!best) {
        res.empty_feasible = true;
        return res;
    }
    res.witness = best;
    res.witness_vol = best->vol();
    res.witness_interior_count =
        weighted_interior_count(*best, [&](Vec2i v) { return ctx.contains(v); });
    res.upper_bound =
        static_cast<double>(best->length()) / static_cast<double>(res.witness_interior_count);
    res.lower_bound = std::min(res.lower_bound, res.upper_bound);
    return res;
}

inline PhiResult phi(const Configuration& config, const SolverConfig& solver) {
    const ClusterLabeling lab = label_clusters(config);
    const GiantReport rep = check_uniq_event(lab, solver.kappa);
    if (!rep.uniq_event_holds) {
        PhiResult res;
        res.cap = config.box().vertex_count() / 2;
        res.event_failed = true;
        return res;
    }
    const auto ctx = GiantContext::from_labeling(lab, *rep.giant_label);
    return phi_with_context(config, *ctx, solver);
}

}  // namespace perciso
