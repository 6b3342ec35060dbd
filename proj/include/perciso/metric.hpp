#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "perciso/geometry.hpp"
#include "perciso/percolation.hpp"
#include "perciso/stats.hpp"
#include "perciso/wulff.hpp"

namespace perciso {

// ---- Breadth-first search over open edges -------------------------------------

struct DistanceField {
    Vec2i source;
    std::vector<std::int32_t> dist;  // -1 where unreachable

    std::int32_t at(const Box& box, Vec2i v) const {
        return dist[static_cast<std::size_t>(box.vertex_id(v))];
    }
};

// Reusable BFS scratch space; epoch stamping avoids clearing O(V) arrays for
// every short query.
class BfsWorkspace {
public:
    explicit BfsWorkspace(const Box& box)
        : box_(box),
          dist_(static_cast<std::size_t>(box.vertex_count()), 0),
          parent_(static_cast<std::size_t>(box.vertex_count()), -1),
          stamp_(static_cast<std::size_t>(box.vertex_count()), 0) {}

    // Shortest open-path hop count, or nullopt when disconnected. Neighbor
    // order E,N,W,S fixes the parent tree, and with it the geodesic.
    std::optional<long long> distance(const Configuration& config, Vec2i from, Vec2i to) {
        if (run(config, from, &to)) return dist_at(to);
        return std::nullopt;
    }

    std::optional<std::vector<Vec2i>> path(const Configuration& config, Vec2i from, Vec2i to) {
        if (!run(config, from, &to)) return std::nullopt;
        return reconstruct(to);
    }

    // Shortest open path whose interior avoids the blocked vertices (the
    // endpoints themselves may be blocked).
    std::optional<std::vector<Vec2i>> path_avoiding(const Configuration& config, Vec2i from,
                                                    Vec2i to,
                                                    const std::vector<std::uint8_t>& blocked) {
        blocked_ = &blocked;
        const bool ok = run(config, from, &to);
        blocked_ = nullptr;
        if (!ok) return std::nullopt;
        return reconstruct(to);
    }

    DistanceField field(const Configuration& config, Vec2i from) {
        run(config, from, nullptr);
        DistanceField f;
        f.source = from;
        f.dist.assign(static_cast<std::size_t>(box_.vertex_count()), -1);
        for (std::size_t i = 0; i < f.dist.size(); ++i)
            if (stamp_[i] == epoch_) f.dist[i] = dist_[i];
        return f;
    }

private:
    long long dist_at(Vec2i v) const { return dist_[static_cast<std::size_t>(box_.vertex_id(v))]; }

    std::vector<Vec2i> reconstruct(Vec2i to) const {
        std::vector<Vec2i> out;
        long long cur = box_.vertex_id(to);
        while (cur >= 0) {
            out.push_back(box_.vertex_at(cur));
            cur = parent_[static_cast<std::size_t>(cur)];
        }
        std::reverse(out.begin(), out.end());
        return out;
    }

    bool run(const Configuration& config, Vec2i from, const Vec2i* target) {
        if (!box_.contains(from) || (target && !box_.contains(*target)))
            throw std::invalid_argument("bfs: vertex outside B(n)");
        ++epoch_;
        queue_.clear();
        const long long s = box_.vertex_id(from);
        visit(s, 0, -1);
        queue_.push_back(s);
        while (!queue_.empty()) {
            const long long u = queue_.front();
            queue_.pop_front();
            const Vec2i uv = box_.vertex_at(u);
            if (target && uv == *target) return true;
            const std::int32_t du = dist_[static_cast<std::size_t>(u)];
            for (const Vec2i step : kNeighborSteps) {
                const Vec2i w = uv + step;
                if (!box_.contains(w)) continue;
                const long long wid = box_.vertex_id(w);
                if (stamp_[static_cast<std::size_t>(wid)] == epoch_) continue;
                if (blocked_ && (*blocked_)[static_cast<std::size_t>(wid)] &&
                    !(target && w == *target))
                    continue;
                if (!config.is_open(box_.edge_id(uv, w))) continue;
                visit(wid, du + 1, u);
                queue_.push_back(wid);
            }
        }
        return target == nullptr || stamp_[static_cast<std::size_t>(box_.vertex_id(*target))] == epoch_;
    }

    void visit(long long v, std::int32_t d, long long par) {
        dist_[static_cast<std::size_t>(v)] = d;
        parent_[static_cast<std::size_t>(v)] = par;
        stamp_[static_cast<std::size_t>(v)] = epoch_;
    }

    Box box_;
    std::vector<std::int32_t> dist_;
    std::vector<long long> parent_;
    std::vector<std::uint32_t> stamp_;
    std::uint32_t epoch_ = 0;
    std::deque<long long> queue_;
    const std::vector<std::uint8_t>* blocked_ = nullptr;
};

inline std::optional<long long> chemical_distance(const Configuration& config, Vec2i x, Vec2i y) {
    BfsWorkspace ws(config.box());
    return ws.distance(config, x, y);
}

inline std::optional<std::vector<Vec2i>> geodesic(const Configuration& config, Vec2i x, Vec2i y) {
    BfsWorkspace ws(config.box());
    return ws.path(config, x, y);
}

inline DistanceField distance_field(const Configuration& config, Vec2i source) {
    BfsWorkspace ws(config.box());
    return ws.field(config, source);
}

// ---- Closest vertex in the giant ----------------------------------------------

// Projection [x]: the giant vertex nearest to x in l-infinity, ties broken by
// the smallest eta mark. Eta marks are a pure hash of (seed, vertex).
class ClosestVertexIndex {
public:
    ClosestVertexIndex(const Box& box, std::vector<std::uint8_t> in_giant, std::uint64_t seed)
        : box_(box), in_giant_(std::move(in_giant)), seed_(seed) {
        giant_empty_ = std::none_of(in_giant_.begin(), in_giant_.end(),
                                    [](std::uint8_t b) { return b != 0; });
    }

    bool contains(Vec2i v) const {
        return box_.contains(v) && in_giant_[static_cast<std::size_t>(box_.vertex_id(v))];
    }
    double eta(Vec2i v) const { return eta_mark(seed_, v); }
    bool empty() const { return giant_empty_; }
    const Box& box() const { return box_; }

    Vec2i closest(Vec2d x) const {
        if (giant_empty_) throw std::runtime_error("ClosestVertexIndex: empty giant");
        const int n = box_.n();
        const Vec2i anchor{std::clamp(static_cast<int>(std::lround(x.x)), -n, n),
                           std::clamp(static_cast<int>(std::lround(x.y)), -n, n)};
        bool found = false;
        double best_d = 0.0;
        double best_eta = 0.0;
        Vec2i best{0, 0};
        auto offer = [&](Vec2i v) {
            if (!contains(v)) return;
            const double d = std::max(std::abs(v.x - x.x), std::abs(v.y - x.y));
            const double e = eta(v);
            if (!found || d < best_d || (d == best_d && e < best_eta)) {
                found = true;
                best_d = d;
                best_eta = e;
                best = v;
            }
        };
        for (int k = 0; k <= 4 * n + 2; ++k) {
            if (k == 0) {
                offer(anchor);
            } else {
                for (int t = -k; t <= k; ++t) {
                    offer({anchor.x - k, anchor.y + t});
                    offer({anchor.x + k, anchor.y + t});
                    if (t > -k && t < k) {
                        offer({anchor.x + t, anchor.y - k});
                        offer({anchor.x + t, anchor.y + k});
                    }
                }
            }
            // ring k+1 vertices sit at true distance >= k+0.5 from x
            if (found && best_d <= static_cast<double>(k) + 0.5) break;
        }
        return best;
    }

private:
    Box box_;
    std::vector<std::uint8_t> in_giant_;
    std::uint64_t seed_;
    bool giant_empty_ = true;
};

// Per-configuration giant-cluster context shared by the metric and solver
// layers.
struct GiantContext {
    Box box;
    std::int32_t giant_label = -1;
    std::vector<std::uint8_t> in_giant;
    long long giant_size = 0;

    static std::optional<GiantContext> from_labeling(const ClusterLabeling& labeling,
                                                     std::int32_t giant_label) {
        if (giant_label < 0 || giant_label >= labeling.label_count) return std::nullopt;
        GiantContext ctx;
        ctx.box = labeling.box;
        ctx.giant_label = giant_label;
        ctx.in_giant.assign(labeling.label.size(), 0);
        for (std::size_t i = 0; i < labeling.label.size(); ++i)
            if (labeling.label[i] == giant_label) {
                ctx.in_giant[i] = 1;
                ++ctx.giant_size;
            }
        return ctx;
    }

    bool contains(Vec2i v) const {
        return box.contains(v) && in_giant[static_cast<std::size_t>(box.vertex_id(v))];
    }

    ClosestVertexIndex closest_index(std::uint64_t seed) const {
        return ClosestVertexIndex(box, in_giant, seed);
    }
};

// ---- Time constant estimation ---------------------------------------------------

struct LengthStat {
    int length = 0;
    long long used = 0;
    long long dropped = 0;
    double mean_distance = 0.0;
    double stderr_ = 0.0;
};

struct TimeConstantEstimate {
    Vec2i direction;
    double mu_hat = 1.0;     // slope per unit l1 length, floored at 1
    double raw_slope = 1.0;  // unfloored fit
    double intercept = 0.0;
    double stderr_ = 0.0;
    std::vector<LengthStat> per_length;
    bool floored = false;
};

struct TimeConstantOptions {
    std::uint64_t master_seed = 0x6d75ULL;
    double kappa = 0.25;       // giant-size threshold for the uniqueness check
    double margin = 0.25;      // box margin as a fraction of the endpoint span
    bool condition_on_uniq = true;
};

// Mean chemical distance between the giant projections of 0 and L*dir, fitted
// against the l1 length of the displacement. Samples failing the uniqueness
// event are dropped and counted.
inline TimeConstantEstimate estimate_time_constant(double p, Vec2i direction,
                                                   const std::vector<int>& lengths,
                                                   long long samples_per_length,
                                                   const TimeConstantOptions& opts = {}) {
    if (direction == Vec2i{0, 0})
        throw std::invalid_argument("estimate_time_constant: zero direction");
    if (lengths.empty() || !std::is_sorted(lengths.begin(), lengths.end()))
        throw std::invalid_argument("estimate_time_constant: lengths must be increasing");

    TimeConstantEstimate est;
    est.direction = direction;
    std::vector<double> xs, ys, ws;
    for (const int L : lengths) {
        const Vec2i a{-(L / 2) * direction.x, -(L / 2) * direction.y};
        const Vec2i b{a.x + L * direction.x, a.y + L * direction.y};
        const int span = std::max(linf_norm(a), linf_norm(b));
        const int n_box = span + std::max(1, static_cast<int>(std::ceil(
                                                 opts.margin * L * linf_norm(direction))));
        GridSpec spec{n_box, p, opts.master_seed + static_cast<std::uint64_t>(L) * 0x9e37ULL};

        std::vector<double> dists;
        long long dropped = 0;
        BfsWorkspace ws_bfs((Box(n_box)));
        for (long long s = 0; s < samples_per_length; ++s) {
            const Configuration cfg = sample_configuration(spec, static_cast<std::uint64_t>(s));
            const ClusterLabeling lab = label_clusters(cfg);
            std::int32_t glabel;
            if (opts.condition_on_uniq) {
                const GiantReport rep = check_uniq_event(lab, opts.kappa);
                if (!rep.uniq_event_holds) {
                    ++dropped;
                    continue;
                }
                glabel = *rep.giant_label;
            } else {
                glabel = largest_cluster_label(lab);
            }
            const auto ctx = GiantContext::from_labeling(lab, glabel);
            const ClosestVertexIndex idx = ctx->closest_index(spec.master_seed);
            const Vec2i pa = idx.closest(to_real(a));
            const Vec2i pb = idx.closest(to_real(b));
            const auto d = ws_bfs.distance(cfg, pa, pb);
            if (!d) {  // same cluster by construction; defensive drop
                ++dropped;
                continue;
            }
            if (*d < l1_norm(pb - pa))
                throw std::logic_error("estimate_time_constant: distance below the l1 floor");
            dists.push_back(static_cast<double>(*d));
        }
        if (dists.empty())
            throw std::runtime_error("estimate_time_constant: all samples unusable at L=" +
                                     std::to_string(L));
        LengthStat st;
        st.length = L;
        st.used = static_cast<long long>(dists.size());
        st.dropped = dropped;
        st.mean_distance = mean(dists);
        st.stderr_ = stderr_of_mean(dists);
        est.per_length.push_back(st);
        xs.push_back(static_cast<double>(L) * l1_norm(direction));
        ys.push_back(st.mean_distance);
        ws.push_back(1.0 / std::max(st.stderr_ * st.stderr_, 1e-12));
    }

    if (xs.size() == 1) {
        est.raw_slope = ys[0] / xs[0];
        est.stderr_ = est.per_length[0].stderr_ / xs[0];
    } else {
        const LineFit fit = fit_line(xs, ys, ws);
        est.raw_slope = fit.slope;
        est.intercept = fit.intercept;
        est.stderr_ = fit.slope_stderr;
    }
    est.mu_hat = std::max(est.raw_slope, 1.0);
    est.floored = est.raw_slope < 1.0;
    return est;
}

// Norm model from time-constant estimates over a direction fan, D4-completed.
inline NormModel norm_from_time_constants(const std::vector<TimeConstantEstimate>& estimates) {
    std::vector<DirectionalSample> samples;
    for (const TimeConstantEstimate& e : estimates) {
        const double l1 = l1_norm(e.direction);
        samples.push_back({to_real(e.direction), e.mu_hat * l1, e.stderr_ * l1});
    }
    return NormModel::from_samples(std::move(samples), /*enforce_l1_floor=*/true);
}

// ---- Epsilon-optimal paths -------------------------------------------------------

struct EpsOptimalPath {
    std::vector<Vec2i> path;
    double hausdorff_to_segment = 0.0;
    double length_budget = 0.0;
    int pieces = 0;
};

// Partition [x,y] into M pieces, join successive giant projections by
// geodesics, concatenate with trimming. Fails (nullopt) when the trimmed
// length exceeds (1+eps) * norm(y-x).
inline std::optional<EpsOptimalPath> epsilon_optimal_path(const Configuration& config,
                                                          const GiantContext& ctx,
                                                          const ClosestVertexIndex& idx, Vec2d x,
                                                          Vec2d y, double eps,
                                                          const NormModel& norm) {
    if (!(eps > 0.0)) throw std::invalid_argument("epsilon_optimal_path: eps must be positive");
    if (idx.empty()) throw std::runtime_error("epsilon_optimal_path: giant missing");

    EpsOptimalPath out;
    if (x == y) {
        const Vec2i px = idx.closest(x);
        out.path = {px};
        out.hausdorff_to_segment = std::max(std::abs(px.x - x.x), std::abs(px.y - x.y));
        out.pieces = 0;
        return out;
    }

    const double eps_prime = l1_norm(y - x) / static_cast<double>(config.box().n());
    const double a_max = norm.max_l1_ratio();
    const int M = std::max(1, static_cast<int>(std::ceil(16.0 * a_max / (eps * eps_prime))));

    BfsWorkspace ws(config.box());
    std::vector<Vec2i> path;
    Vec2i prev = idx.closest(x);
    path.push_back(prev);
    for (int k = 1; k <= M; ++k) {
        const Vec2d u = x + (static_cast<double>(k) / M) * (y - x);
        const Vec2i cur = idx.closest(u);
        if (cur == prev) continue;
        auto seg = ws.path(config, prev, cur);
        if (!seg) return std::nullopt;  // cannot happen inside one cluster
        path = concatenate(path, *seg);
        prev = cur;
    }

    out.path = std::move(path);
    out.pieces = M;
    out.length_budget = (1.0 + eps) * norm(y - x);
    const double length = static_cast<double>(out.path.size()) - 1.0;
    if (length > out.length_budget) return std::nullopt;

    // Hausdorff against the segment, both sampled at quarter-lattice steps.
    PolyCurve pc;
    for (const Vec2i& v : out.path) pc.pts.push_back(to_real(v));
    std::vector<Vec2d> pa = sample_curve(pc, 0.25);
    PolyCurve seg;
    seg.pts = {x, y};
    std::vector<Vec2d> pb = sample_curve(seg, 0.25);
    out.hausdorff_to_segment = hausdorff(pa, pb);
    return out;
}

}  // namespace perciso
