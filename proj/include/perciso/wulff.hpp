#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "perciso/lattice.hpp"

namespace perciso {

struct DirectionalSample {
    Vec2d direction;  // any nonzero vector
    double value = 1.0;  // norm of `direction` (not per unit length)
    double stderr_ = 0.0;
};

// Symmetric piecewise-linear norm built from directional samples. The unit
// ball is the convex hull of the D4 images of direction/value, so the model is
// a genuine norm (the hull step is the double-dual regularization of the raw
// piecewise-linear interpolant). Chemical-distance models additionally clamp
// sampled values from below by the l1 norm.
class NormModel {
public:
    static NormModel from_samples(std::vector<DirectionalSample> samples, bool enforce_l1_floor) {
        if (samples.empty()) throw std::invalid_argument("NormModel: no samples");
        NormModel m;
        m.l1_floor_ = enforce_l1_floor;
        for (DirectionalSample& s : samples) {
            if (s.direction.x == 0.0 && s.direction.y == 0.0)
                throw std::invalid_argument("NormModel: zero direction");
            if (!(s.value > 0.0)) throw std::invalid_argument("NormModel: nonpositive value");
            // fold into the first octant; D4 symmetry makes this lossless
            Vec2d d{std::abs(s.direction.x), std::abs(s.direction.y)};
            if (d.x < d.y) std::swap(d.x, d.y);
            double v = s.value;
            if (enforce_l1_floor) v = std::max(v, l1_norm(d));
            m.samples_.push_back({d, v, s.stderr_});
        }
        std::sort(m.samples_.begin(), m.samples_.end(), [](const auto& a, const auto& b) {
            return std::atan2(a.direction.y, a.direction.x) <
                   std::atan2(b.direction.y, b.direction.x);
        });
        m.build_ball();
        return m;
    }

    static NormModel l1() {
        return from_samples({{{1.0, 0.0}, 1.0, 0.0}, {{1.0, 1.0}, 2.0, 0.0}}, false);
    }

    // Regular polyhedral stand-in for the euclidean norm.
    static NormModel euclidean(int directions_per_octant = 64) {
        std::vector<DirectionalSample> s;
        for (int k = 0; k <= directions_per_octant; ++k) {
            const double a = (M_PI / 4.0) * k / directions_per_octant;
            s.push_back({{std::cos(a), std::sin(a)}, 1.0, 0.0});
        }
        return from_samples(std::move(s), false);
    }

    double operator()(Vec2d x) const {
        if (x.x == 0.0 && x.y == 0.0) return 0.0;
        double best = 0.0;
        for (const Face& f : faces_) best = std::max(best, dot(f.normal, x) / f.offset);
        return best;
    }

    // Dual norm: sup over the unit ball, attained at a ball vertex.
    double dual(Vec2d y) const {
        double best = 0.0;
        for (const Vec2d& p : ball_) best = std::max(best, dot(p, y));
        return best;
    }

    const std::vector<Vec2d>& ball_vertices() const { return ball_; }
    const std::vector<DirectionalSample>& folded_samples() const { return samples_; }
    bool l1_floor() const { return l1_floor_; }

    // max over directions of rho(u)/|u|_1; extremal at a ball vertex of either
    // gauge, so the finite candidate set is exact for polyhedral models.
    double max_l1_ratio() const {
        double best = 0.0;
        auto consider = [&](Vec2d u) {
            const double l1 = l1_norm(u);
            if (l1 > 0) best = std::max(best, (*this)(u) / l1);
        };
        for (const Vec2d& p : ball_) consider(p);
        consider({1.0, 0.0});
        consider({1.0, 1.0});
        return best;
    }

    // First-order sensitivity of rho(x) to the folded sample values: the cone
    // decomposition x_folded = alpha d_a + beta d_b gives d rho / d v_a = alpha.
    std::vector<double> value_gradient(Vec2d x) const {
        std::vector<double> g(samples_.size(), 0.0);
        Vec2d d{std::abs(x.x), std::abs(x.y)};
        if (d.x < d.y) std::swap(d.x, d.y);
        if (d.x == 0.0 && d.y == 0.0) return g;
        if (samples_.size() == 1) {
            const Vec2d s = samples_[0].direction;
            g[0] = l2_norm(d) / l2_norm(s);
            return g;
        }
        for (std::size_t i = 0; i + 1 < samples_.size(); ++i) {
            const Vec2d a = samples_[i].direction, b = samples_[i + 1].direction;
            const double det = cross(a, b);
            if (det == 0.0) continue;
            const double alpha = cross(d, b) / det;
            const double beta = cross(a, d) / det;
            if (alpha >= -1e-12 && beta >= -1e-12) {
                g[i] = std::max(0.0, alpha);
                g[i + 1] = std::max(0.0, beta);
                return g;
            }
        }
        // outside all sample cones (below the first or above the last ray)
        const std::size_t j = cross(samples_.front().direction, d) < 0 ? 0 : samples_.size() - 1;
        const Vec2d s = samples_[j].direction;
        g[j] = l2_norm(d) / l2_norm(s);
        return g;
    }

private:
    struct Face {
        Vec2d normal;
        double offset = 1.0;
    };

    void build_ball() {
        std::vector<Vec2d> pts;
        for (const DirectionalSample& s : samples_) {
            const Vec2d p{s.direction.x / s.value, s.direction.y / s.value};
            for (const Vec2d q : {Vec2d{p.x, p.y}, Vec2d{p.y, p.x}}) {
                pts.push_back({q.x, q.y});
                pts.push_back({-q.x, q.y});
                pts.push_back({q.x, -q.y});
                pts.push_back({-q.x, -q.y});
            }
        }
        ball_ = convex_hull(pts);
        if (ball_.size() < 3) throw std::invalid_argument("NormModel: degenerate unit ball");
        faces_.clear();
        for (std::size_t i = 0; i < ball_.size(); ++i) {
            const Vec2d a = ball_[i], b = ball_[(i + 1) % ball_.size()];
            const Vec2d n{b.y - a.y, a.x - b.x};  // outward for ccw
            const double c = dot(n, a);
            if (!(c > 0.0)) throw std::invalid_argument("NormModel: ball does not contain origin");
            faces_.push_back({n, c});
        }
    }

    static std::vector<Vec2d> convex_hull(std::vector<Vec2d> pts) {
        std::sort(pts.begin(), pts.end(), [](Vec2d a, Vec2d b) {
            return a.x != b.x ? a.x < b.x : a.y < b.y;
        });
        pts.erase(std::unique(pts.begin(), pts.end(),
                              [](Vec2d a, Vec2d b) {
                                  return std::abs(a.x - b.x) < 1e-14 && std::abs(a.y - b.y) < 1e-14;
                              }),
                  pts.end());
        if (pts.size() < 3) return pts;
        auto half = [&](auto begin, auto end, std::vector<Vec2d>& out) {
            for (auto it = begin; it != end; ++it) {
                while (out.size() >= 2 &&
                       cross(out[out.size() - 1] - out[out.size() - 2], *it - out[out.size() - 2]) <=
                           0.0)
                    out.pop_back();
                out.push_back(*it);
            }
        };
        std::vector<Vec2d> lower, upper;
        half(pts.begin(), pts.end(), lower);
        half(pts.rbegin(), pts.rend(), upper);
        lower.pop_back();
        upper.pop_back();
        lower.insert(lower.end(), upper.begin(), upper.end());
        return lower;  // ccw
    }

    std::vector<DirectionalSample> samples_;  // folded to the first octant
    std::vector<Vec2d> ball_;                 // ccw unit-ball polygon
    std::vector<Face> faces_;
    bool l1_floor_ = false;
};

inline double dual_norm_eval(const NormModel& norm, Vec2d y) { return norm.dual(y); }

inline double len_norm(const std::vector<Vec2d>& closed_or_open_polyline, const NormModel& norm) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < closed_or_open_polyline.size(); ++i)
        s += norm(closed_or_open_polyline[i + 1] - closed_or_open_polyline[i]);
    return s;
}

struct WulffShape {
    std::vector<Vec2d> polygon;     // ccw
    double area = 0.0;
    std::vector<Vec2d> normalized;  // scaled to unit area
};

namespace wulff_detail {

inline double polygon_area(const std::vector<Vec2d>& poly) {
    double a2 = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2d u = poly[i], w = poly[(i + 1) % poly.size()];
        a2 += u.x * w.y - w.x * u.y;
    }
    return a2 / 2.0;
}

inline std::vector<Vec2d> clip_halfplane(const std::vector<Vec2d>& poly, Vec2d n, double c) {
    std::vector<Vec2d> out;
    const std::size_t m = poly.size();
    for (std::size_t i = 0; i < m; ++i) {
        const Vec2d a = poly[i], b = poly[(i + 1) % m];
        const double da = dot(n, a) - c, db = dot(n, b) - c;
        const bool ina = da <= 1e-12, inb = db <= 1e-12;
        if (ina) out.push_back(a);
        if (ina != inb && da != db) {
            const double t = da / (da - db);
            out.push_back(a + t * (b - a));
        }
    }
    return out;
}

inline void tidy(std::vector<Vec2d>& poly, double scale) {
    // drop near-duplicate and collinear vertices
    std::vector<Vec2d> out;
    const double tol = 1e-11 * std::max(1.0, scale);
    for (const Vec2d& p : poly) {
        if (out.empty() || linf_norm(p - out.back()) > tol) out.push_back(p);
    }
    while (out.size() >= 2 && linf_norm(out.front() - out.back()) <= tol) out.pop_back();
    std::vector<Vec2d> final_;
    const std::size_t m = out.size();
    for (std::size_t i = 0; i < m; ++i) {
        const Vec2d prev = out[(i + m - 1) % m], cur = out[i], next = out[(i + 1) % m];
        if (std::abs(cross(cur - prev, next - cur)) > tol * std::max(1.0, scale)) final_.push_back(cur);
    }
    if (final_.size() >= 3) poly = std::move(final_);
    else poly = std::move(out);
}

}  // namespace wulff_detail

// Intersection of K equiangular support half-planes {x : n.x <= rho(n)}
// augmented by the ball-vertex constraints {x : p.x <= 1}, which make the
// polygon exact for polyhedral norms (the Wulff shape is the dual unit ball).
inline WulffShape wulff_shape(const NormModel& norm, int K = 256) {
    if (K < 8 || K % 4 != 0) throw std::invalid_argument("wulff_shape: K must be >= 8, 4 | K");
    double extent = 0.0;
    for (int k = 0; k < 4; ++k) {
        const Vec2d n{std::cos(k * M_PI / 2), std::sin(k * M_PI / 2)};
        extent = std::max(extent, norm(n));
    }
    const double R = 8.0 * std::max(1.0, extent);
    std::vector<Vec2d> poly = {{-R, -R}, {R, -R}, {R, R}, {-R, R}};
    // Ball-vertex constraints carve the exact dual polygon for polyhedral
    // norms; the equiangular support planes are then tangent and leave exact
    // vertices untouched.
    for (const Vec2d& p : norm.ball_vertices()) {
        poly = wulff_detail::clip_halfplane(poly, p, 1.0);
        if (poly.size() < 3) throw std::invalid_argument("wulff_shape: degenerate norm");
    }
    for (int k = 0; k < K; ++k) {
        const double a = 2.0 * M_PI * k / K;
        const Vec2d n{std::cos(a), std::sin(a)};
        poly = wulff_detail::clip_halfplane(poly, n, norm(n));
        if (poly.size() < 3) throw std::invalid_argument("wulff_shape: degenerate norm");
    }
    wulff_detail::tidy(poly, R);

    WulffShape w;
    w.polygon = poly;
    w.area = wulff_detail::polygon_area(poly);
    const double s = 1.0 / std::sqrt(w.area);
    w.normalized.reserve(poly.size());
    for (const Vec2d& p : poly) w.normalized.push_back({p.x * s, p.y * s});
    return w;
}

struct IsoConstant {
    double value = 0.0;       // rho-length of the normalized Wulff boundary
    double resolution_bound = 0.0;
    double propagated_stderr = 0.0;
    int K = 0;
};

inline IsoConstant iso_constant(const NormModel& norm, int K = 256) {
    const WulffShape w = wulff_shape(norm, K);
    auto boundary_len = [&](const std::vector<Vec2d>& poly) {
        double s = 0.0;
        for (std::size_t i = 0; i < poly.size(); ++i)
            s += norm(poly[(i + 1) % poly.size()] - poly[i]);
        return s;
    };
    IsoConstant out;
    out.K = K;
    out.value = boundary_len(w.normalized);
    const WulffShape w2 = wulff_shape(norm, std::max(8, K / 2));
    out.resolution_bound = std::abs(out.value - boundary_len(w2.normalized)) + 1e-9;

    // First-order propagation: the shape is the minimizer, so only the direct
    // dependence of edge lengths on the sampled values survives.
    const auto& samples = norm.folded_samples();
    std::vector<double> grad(samples.size(), 0.0);
    for (std::size_t i = 0; i < w.normalized.size(); ++i) {
        const Vec2d e = w.normalized[(i + 1) % w.normalized.size()] - w.normalized[i];
        const std::vector<double> g = norm.value_gradient(e);
        for (std::size_t j = 0; j < g.size(); ++j) grad[j] += g[j];
    }
    double var = 0.0;
    for (std::size_t j = 0; j < samples.size(); ++j)
        var += grad[j] * grad[j] * samples[j].stderr_ * samples[j].stderr_;
    out.propagated_stderr = std::sqrt(var);
    return out;
}

}  // namespace perciso
