#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace perciso {

struct Vec2i {
    int x = 0;
    int y = 0;

    friend constexpr bool operator==(Vec2i a, Vec2i b) { return a.x == b.x && a.y == b.y; }
    friend constexpr bool operator!=(Vec2i a, Vec2i b) { return !(a == b); }
    friend constexpr bool operator<(Vec2i a, Vec2i b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    }
    friend constexpr Vec2i operator+(Vec2i a, Vec2i b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2i operator-(Vec2i a, Vec2i b) { return {a.x - b.x, a.y - b.y}; }
};

struct Vec2d {
    double x = 0.0;
    double y = 0.0;

    friend constexpr Vec2d operator+(Vec2d a, Vec2d b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2d operator-(Vec2d a, Vec2d b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2d operator*(double s, Vec2d a) { return {s * a.x, s * a.y}; }
    friend constexpr bool operator==(Vec2d a, Vec2d b) { return a.x == b.x && a.y == b.y; }
};

inline Vec2d to_real(Vec2i v) { return {static_cast<double>(v.x), static_cast<double>(v.y)}; }

inline int l1_norm(Vec2i v) { return std::abs(v.x) + std::abs(v.y); }
inline int linf_norm(Vec2i v) { return std::max(std::abs(v.x), std::abs(v.y)); }
inline double l1_norm(Vec2d v) { return std::abs(v.x) + std::abs(v.y); }
inline double l2_norm(Vec2d v) { return std::hypot(v.x, v.y); }
inline double linf_norm(Vec2d v) { return std::max(std::abs(v.x), std::abs(v.y)); }
inline double dot(Vec2d a, Vec2d b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2d a, Vec2d b) { return a.x * b.y - a.y * b.x; }

struct Vec2iHash {
    std::size_t operator()(Vec2i v) const {
        std::uint64_t k = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(v.x)) << 32) |
                          static_cast<std::uint32_t>(v.y);
        k ^= k >> 33;
        k *= 0xff51afd7ed558ccdULL;
        k ^= k >> 33;
        return static_cast<std::size_t>(k);
    }
};

// Axis-aligned lattice rectangle, corners included: [x0,x1] x [y0,y1].
struct Rect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    long long vertex_count() const {
        return static_cast<long long>(width() + 1) * (height() + 1);
    }
    bool contains(Vec2i v) const { return v.x >= x0 && v.x <= x1 && v.y >= y0 && v.y <= y1; }
    bool degenerate() const { return x1 <= x0 || y1 <= y0; }
    bool intersects_2d(const Rect& o) const {
        return std::min(x1, o.x1) > std::max(x0, o.x0) && std::min(y1, o.y1) > std::max(y0, o.y0);
    }
    friend bool operator==(const Rect& a, const Rect& b) {
        return a.x0 == b.x0 && a.y0 == b.y0 && a.x1 == b.x1 && a.y1 == b.y1;
    }
};

// The box B(n) = [-n,n]^2 with dense vertex and edge indexing. Horizontal
// edges come first; a vertical edge (x,y)-(x,y+1) is offset by h_count().
class Box {
public:
    Box() = default;
    explicit Box(int n) : n_(n) {
        if (n < 1) throw std::invalid_argument("Box: n must be >= 1");
    }

    int n() const { return n_; }
    int side() const { return 2 * n_ + 1; }
    long long vertex_count() const { return static_cast<long long>(side()) * side(); }
    long long h_count() const { return static_cast<long long>(2 * n_) * side(); }
    long long edge_count() const { return 2 * h_count(); }
    Rect rect() const { return {-n_, -n_, n_, n_}; }

    bool contains(Vec2i v) const {
        return v.x >= -n_ && v.x <= n_ && v.y >= -n_ && v.y <= n_;
    }

    long long vertex_id(Vec2i v) const {
        return static_cast<long long>(v.x + n_) + static_cast<long long>(side()) * (v.y + n_);
    }
    Vec2i vertex_at(long long id) const {
        return {static_cast<int>(id % side()) - n_, static_cast<int>(id / side()) - n_};
    }

    bool has_edge(Vec2i a, Vec2i b) const {
        if (!contains(a) || !contains(b)) return false;
        return l1_norm(b - a) == 1;
    }

    // Canonical id of the edge {a,b}; throws if not an edge of B(n).
    long long edge_id(Vec2i a, Vec2i b) const {
        if (!has_edge(a, b)) throw std::invalid_argument("edge outside B(n)");
        if (b < a) std::swap(a, b);
        if (b.x == a.x + 1) {  // horizontal (x,y)-(x+1,y), x in [-n, n-1]
            return static_cast<long long>(a.x + n_) + static_cast<long long>(2 * n_) * (a.y + n_);
        }
        return h_count() + static_cast<long long>(a.x + n_) +
               static_cast<long long>(side()) * (a.y + n_);
    }

    std::pair<Vec2i, Vec2i> edge_at(long long id) const {
        if (id < h_count()) {
            Vec2i a{static_cast<int>(id % (2 * n_)) - n_, static_cast<int>(id / (2 * n_)) - n_};
            return {a, {a.x + 1, a.y}};
        }
        long long k = id - h_count();
        Vec2i a{static_cast<int>(k % side()) - n_, static_cast<int>(k / side()) - n_};
        return {a, {a.x, a.y + 1}};
    }

private:
    int n_ = 1;
};

// Neighbor order is load-bearing for geodesic determinism: east, north, west, south.
inline constexpr std::array<Vec2i, 4> kNeighborSteps = {Vec2i{1, 0}, Vec2i{0, 1}, Vec2i{-1, 0},
                                                        Vec2i{0, -1}};

}  // namespace perciso
