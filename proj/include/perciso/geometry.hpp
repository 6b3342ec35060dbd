#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "perciso/constants.hpp"
#include "perciso/lattice.hpp"

namespace perciso {

// ---- Lattice circuits --------------------------------------------------------

// Simple closed lattice path of unit steps, stored counterclockwise without a
// repeated endpoint. |gamma| equals the vertex count, which equals the edge
// count.
class Circuit {
public:
    static Circuit from_vertices(std::vector<Vec2i> verts) {
        if (verts.size() >= 2 && verts.front() == verts.back()) verts.pop_back();
        if (verts.size() < 4) throw std::invalid_argument("Circuit: needs at least 4 vertices");
        const std::size_t m = verts.size();
        std::unordered_set<Vec2i, Vec2iHash> seen;
        for (std::size_t i = 0; i < m; ++i) {
            if (!seen.insert(verts[i]).second)
                throw std::invalid_argument("Circuit: repeated vertex");
            if (l1_norm(verts[(i + 1) % m] - verts[i]) != 1)
                throw std::invalid_argument("Circuit: non-unit step");
        }
        long long a2 = 0;
        for (std::size_t i = 0; i < m; ++i) {
            const Vec2i u = verts[i], w = verts[(i + 1) % m];
            a2 += static_cast<long long>(u.x) * w.y - static_cast<long long>(w.x) * u.y;
        }
        if (a2 == 0) throw std::invalid_argument("Circuit: zero enclosed area");
        if (a2 < 0) {
            std::reverse(verts.begin(), verts.end());
            a2 = -a2;
        }
        Circuit c;
        c.verts_ = std::move(verts);
        c.twice_area_ = a2;
        return c;
    }

    const std::vector<Vec2i>& vertices() const { return verts_; }
    long long length() const { return static_cast<long long>(verts_.size()); }
    long long twice_area() const { return twice_area_; }
    // Pick: area = I + B/2 - 1, so I = A - B/2 + 1 and vol = I + B.
    long long interior_points() const { return twice_area_ / 2 - length() / 2 + 1; }
    long long vol() const { return interior_points() + length(); }

    Rect bbox() const {
        Rect r{verts_[0].x, verts_[0].y, verts_[0].x, verts_[0].y};
        for (const Vec2i& v : verts_) {
            r.x0 = std::min(r.x0, v.x);
            r.y0 = std::min(r.y0, v.y);
            r.x1 = std::max(r.x1, v.x);
            r.y1 = std::max(r.y1, v.y);
        }
        return r;
    }

    int l1_diameter() const {
        int umin = INT32_MAX, umax = INT32_MIN, wmin = INT32_MAX, wmax = INT32_MIN;
        for (const Vec2i& v : verts_) {
            umin = std::min(umin, v.x + v.y);
            umax = std::max(umax, v.x + v.y);
            wmin = std::min(wmin, v.x - v.y);
            wmax = std::max(wmax, v.x - v.y);
        }
        return std::max(umax - umin, wmax - wmin);
    }

private:
    std::vector<Vec2i> verts_;
    long long twice_area_ = 0;
};

inline long long vol(const Circuit& c) { return c.vol(); }

// ---- Interior counting by per-edge row sums ---------------------------------

// Winding device: the leftward ray from the infinitesimally displaced point
// q + (-eps, +eps) crosses exactly the vertical circuit edges in row q.y that
// lie strictly left of q; a downward crossing counts +1 for a ccw circuit.
// Summing row-suffix counts per vertical edge therefore yields
//   sum_e a(e) = #{marked q : q + (-eps,+eps) strictly inside}.
// Marked points on the circuit itself enter that count exactly when their
// displaced copy is interior, which is a pure function of the local turn.

namespace detail {

inline int dir_index(Vec2i d) {
    if (d == Vec2i{1, 0}) return 0;   // E
    if (d == Vec2i{0, 1}) return 1;   // N
    if (d == Vec2i{-1, 0}) return 2;  // W
    return 3;                         // S
}

// True iff the 135-degree direction lies in the open sector swept ccw from
// d_out to -d_in, i.e. the displaced copy of the turn vertex is interior for
// a ccw traversal.
inline bool nw_displaced_inside(Vec2i d_in, Vec2i d_out) {
    static constexpr int angle[4] = {0, 90, 180, 270};
    const int from = angle[dir_index(d_out)];
    int to = angle[(dir_index(d_in) + 2) % 4];
    int target = 135;
    int span = to - from;
    if (span <= 0) span += 360;
    int off = target - from;
    if (off <= 0) off += 360;
    return off < span;
}

}  // namespace detail

struct InteriorCounts {
    long long strict_marked = 0;    // marked vertices strictly inside
    long long boundary_marked = 0;  // marked vertices on the circuit
    long long nw_marked = 0;        // marked vertices whose displaced copy is inside
    long long volume = 0;           // vol(circuit)
};

// `marks` must be callable on the circuit's bounding box.
inline InteriorCounts interior_counts(const Circuit& c,
                                      const std::function<bool(Vec2i)>& marks) {
    const Rect bb = c.bbox();
    const int w = bb.width() + 1, h = bb.height() + 1;
    const auto& vs = c.vertices();

    std::unordered_set<Vec2i, Vec2iHash> on(vs.begin(), vs.end());

    // suffix[y][x] = number of marked, off-circuit vertices (x..x1, y)
    std::vector<long long> suffix(static_cast<std::size_t>(w + 1) * h, 0);
    auto suf = [&](int x, int y) -> long long& {
        return suffix[static_cast<std::size_t>(y - bb.y0) * (w + 1) + (x - bb.x0)];
    };
    long long boundary_marked = 0;
    for (int y = bb.y0; y <= bb.y1; ++y) {
        for (int x = bb.x1; x >= bb.x0; --x) {
            const Vec2i q{x, y};
            const bool m = marks(q);
            const bool b = on.count(q) > 0;
            if (m && b) ++boundary_marked;
            suf(x, y) = suf(x + 1, y) + ((m && !b) ? 1 : 0);
        }
    }

    long long strict = 0;
    const std::size_t nvert = vs.size();
    for (std::size_t i = 0; i < nvert; ++i) {
        const Vec2i a = vs[i], b = vs[(i + 1) % nvert];
        if (a.x != b.x) continue;
        const int row = std::min(a.y, b.y);
        const long long cnt = (a.x + 1 <= bb.x1) ? suf(a.x + 1, row) : 0;
        strict += (b.y > a.y) ? -cnt : cnt;
    }

    long long nw_boundary = 0;
    for (std::size_t i = 0; i < nvert; ++i) {
        const Vec2i prev = vs[(i + nvert - 1) % nvert];
        const Vec2i cur = vs[i];
        const Vec2i next = vs[(i + 1) % nvert];
        if (marks(cur) && detail::nw_displaced_inside(cur - prev, next - cur)) ++nw_boundary;
    }

    InteriorCounts out;
    out.strict_marked = strict;
    out.boundary_marked = boundary_marked;
    out.nw_marked = strict + nw_boundary;
    out.volume = c.vol();
    return out;
}

// Marked vertices in vol(gamma): strictly interior ones plus marked circuit
// vertices.
inline long long weighted_interior_count(const Circuit& c,
                                         const std::function<bool(Vec2i)>& marks) {
    const InteriorCounts ic = interior_counts(c, marks);
    return ic.strict_marked + ic.boundary_marked;
}

// ---- Discrete isoperimetric checks ------------------------------------------

struct IsoCheck {
    std::optional<bool> holds_4eps;  // null when the side conditions fail
    bool holds_c0 = false;
    double c0_used = kIsoC0;
    double side_threshold_R = 0.0;
};

inline IsoCheck discrete_iso_check(const Circuit& c, double eps, double R) {
    if (!(eps > 0.0) || !(eps < 4.0))
        throw std::invalid_argument("discrete_iso_check: eps must be in (0,4)");
    IsoCheck out;
    out.side_threshold_R = R;
    const double v = static_cast<double>(c.vol());
    const double len = static_cast<double>(c.length());
    if (v > R && len <= std::pow(v, 2.0 / 3.0))
        out.holds_4eps = len >= (4.0 - eps) * std::sqrt(v);
    out.holds_c0 = len >= kIsoC0 * std::sqrt(v);
    return out;
}

// ---- Polygonal curves --------------------------------------------------------

struct PolyCurve {
    std::vector<Vec2d> pts;
    bool closed = false;

    static PolyCurve from_circuit(const Circuit& c) {
        PolyCurve p;
        p.pts.reserve(c.vertices().size() + 1);
        for (const Vec2i& v : c.vertices()) p.pts.push_back(to_real(v));
        p.pts.push_back(to_real(c.vertices().front()));
        p.closed = true;
        return p;
    }

    double length(const std::function<double(Vec2d)>& norm) const {
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) s += norm(pts[i + 1] - pts[i]);
        return s;
    }
    double l1_length() const {
        return length([](Vec2d v) { return l1_norm(v); });
    }
};

// Dense samples along the curve at spacing <= step (always includes vertices).
inline std::vector<Vec2d> sample_curve(const PolyCurve& c, double step) {
    std::vector<Vec2d> out;
    if (c.pts.empty()) return out;
    for (std::size_t i = 0; i + 1 < c.pts.size(); ++i) {
        const Vec2d a = c.pts[i], b = c.pts[i + 1];
        const double len = linf_norm(b - a);
        const int pieces = std::max(1, static_cast<int>(std::ceil(len / step)));
        for (int k = 0; k < pieces; ++k) out.push_back(a + (static_cast<double>(k) / pieces) * (b - a));
    }
    out.push_back(c.pts.back());
    return out;
}

// Greedy breakpoints: next breakpoint is the first sample whose l-inf
// deviation from the previous breakpoint exceeds r. The final curve point is
// always appended, so for closed inputs the approximation closes up.
inline PolyCurve polygonal_approx(const PolyCurve& curve, double r, double sample_step = 0.0) {
    if (!(r > 0.0)) throw std::invalid_argument("polygonal_approx: r must be positive");
    if (curve.pts.empty()) throw std::invalid_argument("polygonal_approx: empty curve");
    const double step = sample_step > 0.0 ? sample_step : std::max(r / 4.0, 1e-9);
    const std::vector<Vec2d> samples = sample_curve(curve, step);

    PolyCurve out;
    out.closed = curve.closed;
    out.pts.push_back(samples.front());
    Vec2d anchor = samples.front();
    for (std::size_t i = 1; i + 1 < samples.size(); ++i) {
        if (linf_norm(samples[i] - anchor) > r) {
            anchor = samples[i];
            out.pts.push_back(anchor);
        }
    }
    out.pts.push_back(samples.back());
    return out;
}

inline PolyCurve polygonal_approx(const Circuit& c, double r) {
    // Lattice circuits are walked vertex by vertex (unit sample step), so
    // breakpoints land on lattice points whenever r is an integer.
    PolyCurve in = PolyCurve::from_circuit(c);
    return polygonal_approx(in, r, 1.0);
}

// ---- Winding hulls ------------------------------------------------------------

namespace detail {

inline bool on_segment(Vec2d p, Vec2d a, Vec2d b, double tol = 1e-12) {
    const double c = cross(b - a, p - a);
    if (std::abs(c) > tol * (1.0 + linf_norm(b - a))) return false;
    const double d = dot(p - a, b - a);
    return d >= -tol && d <= dot(b - a, b - a) + tol;
}

// Crossing parity of the rightward horizontal ray from p (half-open rule).
inline bool odd_winding(const std::vector<Vec2d>& pts, Vec2d p) {
    bool in = false;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const Vec2d a = pts[i], b = pts[i + 1];
        if ((a.y <= p.y) != (b.y <= p.y)) {
            const double xcross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if (xcross > p.x) in = !in;
        }
    }
    return in;
}

}  // namespace detail

class WindingHull {
public:
    explicit WindingHull(PolyCurve curve) : curve_(std::move(curve)) {
        if (!curve_.closed || curve_.pts.size() < 2)
            throw std::invalid_argument("WindingHull: closed curve required");
        if (!(curve_.pts.front() == curve_.pts.back())) curve_.pts.push_back(curve_.pts.front());
    }

    const PolyCurve& curve() const { return curve_; }

    // On the trace, or odd winding number.
    bool contains(Vec2d p) const {
        for (std::size_t i = 0; i + 1 < curve_.pts.size(); ++i)
            if (detail::on_segment(p, curve_.pts[i], curve_.pts[i + 1])) return true;
        return detail::odd_winding(curve_.pts, p);
    }

    Rect cell_bbox() const {
        double x0 = curve_.pts[0].x, x1 = x0, y0 = curve_.pts[0].y, y1 = y0;
        for (const Vec2d& p : curve_.pts) {
            x0 = std::min(x0, p.x);
            x1 = std::max(x1, p.x);
            y0 = std::min(y0, p.y);
            y1 = std::max(y1, p.y);
        }
        return Rect{static_cast<int>(std::floor(x0)) - 1, static_cast<int>(std::floor(y0)) - 1,
                    static_cast<int>(std::ceil(x1)) + 1, static_cast<int>(std::ceil(y1)) + 1};
    }

    // Lattice-aligned curves get the pixel-exact area (unit cells are uniformly
    // in or out, sampled at their centers). Other curves are refined until two
    // successive resolutions agree within 1e-6 of the bounding-box area.
    double area() const {
        const Rect bb = cell_bbox();
        const double bbox_area = static_cast<double>(bb.width()) * bb.height();
        if (lattice_aligned()) return raster_area(1.0);
        double prev = raster_area(0.5);
        for (double cell = 0.25; cell >= 1.0 / 512.0; cell *= 0.5) {
            const double cur = raster_area(cell);
            if (std::abs(cur - prev) <= 1e-6 * std::max(1.0, bbox_area)) return cur;
            prev = cur;
        }
        return prev;
    }

private:
    bool lattice_aligned() const {
        for (const Vec2d& p : curve_.pts)
            if (p.x != std::floor(p.x) || p.y != std::floor(p.y)) return false;
        for (std::size_t i = 0; i + 1 < curve_.pts.size(); ++i) {
            const Vec2d d = curve_.pts[i + 1] - curve_.pts[i];
            if (d.x != 0.0 && d.y != 0.0) return false;
        }
        return true;
    }

    double raster_area(double cell) const {
        const Rect bb = cell_bbox();
        long long hits = 0;
        for (double y = bb.y0 + cell / 2; y < bb.y1; y += cell)
            for (double x = bb.x0 + cell / 2; x < bb.x1; x += cell)
                if (detail::odd_winding(curve_.pts, {x, y})) ++hits;
        return static_cast<double>(hits) * cell * cell;
    }

    PolyCurve curve_;
};

inline WindingHull winding_hull(const PolyCurve& curve) { return WindingHull(curve); }

// ---- Hausdorff distance --------------------------------------------------------

// l-inf Hausdorff between finite samplings; error is bounded by the sampling
// resolution of the inputs.
inline double hausdorff(const std::vector<Vec2d>& a, const std::vector<Vec2d>& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("hausdorff: empty input");
    auto directed = [](const std::vector<Vec2d>& from, const std::vector<Vec2d>& to) {
        double worst = 0.0;
        for (const Vec2d& p : from) {
            double best = std::numeric_limits<double>::infinity();
            for (const Vec2d& q : to) best = std::min(best, linf_norm(p - q));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(directed(a, b), directed(b, a));
}

inline double hausdorff(const PolyCurve& a, const PolyCurve& b, double h = 0.25) {
    return hausdorff(sample_curve(a, h), sample_curve(b, h));
}

namespace detail {

struct RasterGrid {
    int nx = 0, ny = 0;
    double x0 = 0, y0 = 0, h = 0.25;
    std::vector<std::uint8_t> in;

    bool at(int ix, int iy) const { return in[static_cast<std::size_t>(iy) * nx + ix] != 0; }
};

inline RasterGrid rasterize_hull(const WindingHull& hull, const Rect& bb, double h) {
    RasterGrid g;
    g.x0 = bb.x0;
    g.y0 = bb.y0;
    g.h = h;
    g.nx = static_cast<int>(std::ceil((bb.x1 - bb.x0) / h)) + 1;
    g.ny = static_cast<int>(std::ceil((bb.y1 - bb.y0) / h)) + 1;
    g.in.assign(static_cast<std::size_t>(g.nx) * g.ny, 0);
    // Mark the trace first so thin features survive rasterization, then fill
    // by winding parity.
    for (const Vec2d& p : sample_curve(hull.curve(), h / 2)) {
        const int ix = static_cast<int>(std::lround((p.x - g.x0) / h));
        const int iy = static_cast<int>(std::lround((p.y - g.y0) / h));
        if (ix >= 0 && ix < g.nx && iy >= 0 && iy < g.ny)
            g.in[static_cast<std::size_t>(iy) * g.nx + ix] = 1;
    }
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix)
            if (!g.at(ix, iy) &&
                detail::odd_winding(hull.curve().pts, {g.x0 + ix * h, g.y0 + iy * h}))
                g.in[static_cast<std::size_t>(iy) * g.nx + ix] = 1;
    return g;
}

// Exact chessboard (l-inf) distance in grid steps from the marked cells.
inline std::vector<int> chessboard_distance(const RasterGrid& g) {
    std::vector<int> dist(g.in.size(), INT32_MAX);
    std::vector<std::pair<int, int>> frontier;
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix)
            if (g.at(ix, iy)) {
                dist[static_cast<std::size_t>(iy) * g.nx + ix] = 0;
                frontier.emplace_back(ix, iy);
            }
    int d = 0;
    while (!frontier.empty()) {
        ++d;
        std::vector<std::pair<int, int>> next;
        for (auto [ix, iy] : frontier) {
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int jx = ix + dx, jy = iy + dy;
                    if (jx < 0 || jx >= g.nx || jy < 0 || jy >= g.ny) continue;
                    auto& cell = dist[static_cast<std::size_t>(jy) * g.nx + jx];
                    if (cell > d) {
                        cell = d;
                        next.emplace_back(jx, jy);
                    }
                }
            }
        }
        frontier = std::move(next);
    }
    return dist;
}

}  // namespace detail

// Hausdorff between hull regions via rasterization at step h and an exact
// chessboard distance transform; total error is O(h).
inline double hull_hausdorff(const WindingHull& A, const WindingHull& B, double h = 0.25) {
    Rect bb = A.cell_bbox();
    const Rect bbB = B.cell_bbox();
    bb.x0 = std::min(bb.x0, bbB.x0);
    bb.y0 = std::min(bb.y0, bbB.y0);
    bb.x1 = std::max(bb.x1, bbB.x1);
    bb.y1 = std::max(bb.y1, bbB.y1);
    const detail::RasterGrid ga = detail::rasterize_hull(A, bb, h);
    const detail::RasterGrid gb = detail::rasterize_hull(B, bb, h);
    const std::vector<int> da = detail::chessboard_distance(ga);
    const std::vector<int> db = detail::chessboard_distance(gb);
    int worst = 0;
    for (std::size_t i = 0; i < ga.in.size(); ++i) {
        if (ga.in[i]) worst = std::max(worst, db[i]);
        if (gb.in[i]) worst = std::max(worst, da[i]);
    }
    return worst * h;
}

// ---- Simplification to a simple curve -----------------------------------------

namespace detail {

inline bool proper_cross(Vec2d a, Vec2d b, Vec2d c, Vec2d d) {
    const double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
    const double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 &&
           d4 != 0;
}

inline bool closed_curve_is_simple(const std::vector<Vec2d>& pts) {
    // pts closed with repeated endpoint
    const std::size_t m = pts.size() - 1;
    if (m < 3) return false;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            if (pts[i] == pts[j]) return false;
            if (detail::proper_cross(pts[i], pts[i + 1], pts[j], pts[j + 1])) return false;
            // overlapping collinear segments also disqualify
            if (j != i + 1 && (j + 1) % m != i) {
                if (on_segment(pts[j], pts[i], pts[i + 1]) &&
                    !(pts[j] == pts[i]) && !(pts[j] == pts[i + 1]))
                    return false;
            }
        }
    }
    return true;
}

// Outer contour of the in-region of a raster grid, traced along cell borders.
// Saddles are resolved as connected, which fills pinch points.
inline std::vector<Vec2d> trace_outer_contour(const RasterGrid& g) {
    auto inside = [&](int ix, int iy) {
        return ix >= 0 && ix < g.nx && iy >= 0 && iy < g.ny && g.at(ix, iy);
    };
    // start: lowest-leftmost in-cell; walk its bottom-left corner ccw keeping
    // the region on the left.
    int sx = -1, sy = -1;
    for (int iy = 0; iy < g.ny && sx < 0; ++iy)
        for (int ix = 0; ix < g.nx; ++ix)
            if (g.at(ix, iy)) {
                sx = ix;
                sy = iy;
                break;
            }
    if (sx < 0) return {};

    // Corner-lattice walk: position = cell corner, direction in {E,N,W,S}.
    std::vector<Vec2d> out;
    int cx = sx, cy = sy;  // current corner (corner (cx,cy) = lower-left of cell (cx,cy))
    int dir = 0;           // start heading east along the bottom of the start cell
    const int steps_limit = 8 * g.nx * g.ny + 16;
    auto cell_at_left = [&](int x, int y, int d) {
        // cell on the left of the directed corner step from (x,y)
        switch (d) {
            case 0: return std::pair<int, int>{x, y};          // E: left cell above the edge
            case 1: return std::pair<int, int>{x - 1, y};      // N
            case 2: return std::pair<int, int>{x - 1, y - 1};  // W
            default: return std::pair<int, int>{x, y - 1};     // S
        }
    };
    auto cell_at_right = [&](int x, int y, int d) {
        switch (d) {
            case 0: return std::pair<int, int>{x, y - 1};
            case 1: return std::pair<int, int>{x, y};
            case 2: return std::pair<int, int>{x - 1, y};
            default: return std::pair<int, int>{x - 1, y - 1};
        }
    };
    static constexpr int dx[4] = {1, 0, -1, 0};
    static constexpr int dy[4] = {0, 1, 0, -1};

    const int startx = cx, starty = cy;
    int steps = 0;
    do {
        out.push_back({g.x0 + (cx - 0.5) * g.h, g.y0 + (cy - 0.5) * g.h});
        // prefer turning right, then straight, then left: keeps the in-region
        // on the left and treats diagonal saddles as filler
        int next = -1;
        for (int turn : {3, 0, 1, 2}) {  // right, straight, left, back
            const int nd = (dir + turn) % 4;
            auto [lx, ly] = cell_at_left(cx, cy, nd);
            auto [rx, ry] = cell_at_right(cx, cy, nd);
            if (inside(lx, ly) && !inside(rx, ry)) {
                next = nd;
                break;
            }
        }
        if (next < 0) break;
        dir = next;
        cx += dx[dir];
        cy += dy[dir];
    } while ((cx != startx || cy != starty) && ++steps < steps_limit);
    out.push_back(out.front());
    return out;
}

inline void merge_collinear(std::vector<Vec2d>& pts) {
    if (pts.size() < 4) return;
    std::vector<Vec2d> out;
    const std::size_t m = pts.size() - 1;
    for (std::size_t i = 0; i < m; ++i) {
        const Vec2d prev = pts[(i + m - 1) % m], cur = pts[i], next = pts[i + 1];
        if (std::abs(cross(cur - prev, next - cur)) > 1e-12) out.push_back(cur);
    }
    if (out.size() >= 3) {
        out.push_back(out.front());
        pts = std::move(out);
    }
}

}  // namespace detail

// Rewrites a closed polygonal curve into a simple one whose interior differs
// from hull(input) by less than eps in area and whose rho-length grows by at
// most eps. Simple inputs pass through unchanged; degenerate (zero-hull)
// inputs become a small square; self-touching inputs are retraced along the
// rasterized hull boundary and then chord-shortcut within the area budget.
inline PolyCurve simplify_to_simple(const PolyCurve& curve, double eps,
                                    const std::function<double(Vec2d)>& norm) {
    if (!(eps > 0.0)) throw std::invalid_argument("simplify_to_simple: eps must be positive");
    if (!curve.closed) throw std::invalid_argument("simplify_to_simple: closed curve required");
    PolyCurve in = curve;
    if (!(in.pts.front() == in.pts.back())) in.pts.push_back(in.pts.front());

    if (detail::closed_curve_is_simple(in.pts)) return curve;

    const WindingHull hull(in);
    const double hull_area = hull.area();
    const Vec2d base = in.pts.front();
    if (hull_area < eps / 2.0) {
        const double s = std::sqrt(std::max(1e-12, eps / 4.0));
        PolyCurve sq;
        sq.closed = true;
        sq.pts = {base, base + Vec2d{s, 0}, base + Vec2d{s, s}, base + Vec2d{0, s}, base};
        return sq;
    }

    const Rect bb = hull.cell_bbox();
    const double span = std::max(bb.width(), bb.height());
    double h = std::max(span / 256.0, 1e-6);
    // refine until the rasterization error fits inside half the area budget
    while (h * in.l1_length() > eps / 4.0 && h > span / 4096.0) h /= 2.0;

    const detail::RasterGrid grid = detail::rasterize_hull(hull, bb, h);
    std::vector<Vec2d> contour = detail::trace_outer_contour(grid);
    if (contour.size() < 4) throw std::runtime_error("simplify_to_simple: tracing failed");
    detail::merge_collinear(contour);

    // Chord shortcuts only ever reduce rho-length (triangle inequality); each
    // one changes area by the cut triangle, charged against the budget.
    double area_budget = eps / 4.0;
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<Vec2d> next;
        std::size_t i = 0;
        const std::size_t m = contour.size() - 1;
        while (i < m) {
            if (i + 2 <= m) {
                const Vec2d a = contour[i], b = contour[i + 1], c = contour[i + 2];
                const double tri = 0.5 * std::abs(cross(b - a, c - a));
                if (tri > 0.0 && tri <= area_budget) {
                    next.push_back(a);
                    area_budget -= tri;
                    i += 2;
                    changed = true;
                    continue;
                }
            }
            next.push_back(contour[i]);
            ++i;
        }
        next.push_back(next.front());
        if (detail::closed_curve_is_simple(next))
            contour = std::move(next);
        else
            break;
    }

    PolyCurve out;
    out.closed = true;
    out.pts = std::move(contour);
    return out;
}

// ---- Path concatenation ---------------------------------------------------------

// gamma * gamma': truncate gamma at its first vertex that lies on gamma' and
// continue along gamma' from there. Both inputs simple, sharing the junction
// endpoint; the output is simple with endpoints gamma.front(), gamma'.back().
inline std::vector<Vec2i> concatenate(const std::vector<Vec2i>& gamma,
                                      const std::vector<Vec2i>& gamma_prime) {
    if (gamma.empty() || gamma_prime.empty())
        throw std::invalid_argument("concatenate: empty path");
    if (!(gamma.back() == gamma_prime.front()))
        throw std::invalid_argument("concatenate: endpoint mismatch");
    std::unordered_map<Vec2i, std::size_t, Vec2iHash> where;
    for (std::size_t j = 0; j < gamma_prime.size(); ++j) where.emplace(gamma_prime[j], j);
    std::size_t k = 0;
    while (k < gamma.size() && where.find(gamma[k]) == where.end()) ++k;
    // k exists: gamma.back() is on gamma_prime
    const std::size_t ell = where.at(gamma[k]);
    std::vector<Vec2i> out(gamma.begin(), gamma.begin() + static_cast<std::ptrdiff_t>(k) + 1);
    out.insert(out.end(), gamma_prime.begin() + static_cast<std::ptrdiff_t>(ell) + 1,
               gamma_prime.end());
    return out;
}

}  // namespace perciso
