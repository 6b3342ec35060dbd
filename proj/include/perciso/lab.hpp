#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "perciso/constants.hpp"
#include "perciso/isosolver.hpp"
#include "perciso/parallel.hpp"
#include "perciso/stats.hpp"

namespace perciso {

// ---- Shared per-p calibration -------------------------------------------------

// theta estimate cache; the default giant-size threshold is kappa = theta/2.
inline double theta_hat_for(double p, int n = 64, long long samples = 300,
                            std::uint64_t seed = 0x746865746130ULL) {
    static std::map<std::pair<double, int>, double> cache;
    static std::mutex mu;
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find({p, n});
        if (it != cache.end()) return it->second;
    }
    const double value = estimate_theta(p, n, samples, seed).theta_hat;
    std::lock_guard<std::mutex> lock(mu);
    cache[{p, n}] = value;
    return value;
}

inline double kappa_for(double p) { return std::max(1e-6, theta_hat_for(p) / 2.0); }

// ---- Experiment specification ---------------------------------------------------

struct ExperimentSpec {
    std::vector<int> n_values;
    double p = 0.75;
    std::vector<double> thresholds;  // t values, on the n*Phi_n scale
    long long samples = 100;
    double kappa = 0.0;  // 0 resolves to theta_hat/2
    double delta = 0.1;
    double eps = 0.1;
    std::uint64_t master_seed = 1;
    std::string kind = "tail";

    void validate() const {
        if (n_values.empty()) throw std::invalid_argument("ExperimentSpec: no n values");
        if (samples < 1) throw std::invalid_argument("ExperimentSpec: samples must be >= 1");
        for (double t : thresholds)
            if (!(t > 0.0)) throw std::invalid_argument("ExperimentSpec: thresholds must be positive");
    }
    double resolved_kappa() const { return kappa > 0.0 ? kappa : kappa_for(p); }
};

// ---- Tail experiment --------------------------------------------------------------

// One-sided-safe tallies. A lower-tail event {n Phi <= t} is certified by
// n*UB <= t, an upper-tail event by n*LB >= t; samples whose interval strides
// t are ambiguous and tallied separately.
struct TailCell {
    int n = 0;
    double t = 0.0;
    long long trials = 0;  // conditioned on the uniqueness event
    long long lower_certified = 0;
    long long lower_ambiguous = 0;
    long long upper_certified = 0;
    long long upper_ambiguous = 0;

    double lower_rate() const { return trials ? static_cast<double>(lower_certified) / trials : 0; }
    double upper_rate() const { return trials ? static_cast<double>(upper_certified) / trials : 0; }
    WilsonInterval lower_wilson() const { return wilson95(lower_certified, trials); }
    WilsonInterval upper_wilson() const { return wilson95(upper_certified, trials); }
};

struct TailEstimate {
    ExperimentSpec spec;
    std::vector<TailCell> cells;        // n-major, t-minor
    std::vector<long long> uniq_failures;  // per n, unconditioned
    std::vector<std::vector<double>> nub_samples;  // per n, certified interval tops

    const TailCell& cell(int n, double t) const {
        for (const TailCell& c : cells)
            if (c.n == n && c.t == t) return c;
        throw std::out_of_range("TailEstimate::cell");
    }
};

namespace lab_detail {

struct SampleOutcome {
    bool uniq = false;
    double lb = 0.0, ub = 0.0;  // on the Phi scale
};

// The harness-wide floor assertion: no witness may beat the deterministic
// certificate.
inline void assert_certificate_floor(const PhiResult& r, int n) {
    if (r.event_failed || r.empty_feasible || !r.witness) return;
    const double witness_vol_ratio = static_cast<double>(n) *
                                     static_cast<double>(r.witness->length()) /
                                     static_cast<double>(r.witness->vol());
    const double floor_value = certificate_lower_bound(n, r.cap);
    if (witness_vol_ratio < floor_value - 1e-9)
        throw std::logic_error("certificate floor violated by a witness");
}

}  // namespace lab_detail

using PhiSolver = std::function<PhiResult(const Configuration&, const SolverConfig&)>;

inline TailEstimate tail_experiment(const ExperimentSpec& spec,
                                    const SolverConfig* solver_template = nullptr,
                                    const PhiSolver& solve = {}) {
    spec.validate();
    TailEstimate est;
    est.spec = spec;
    const double kap = spec.resolved_kappa();

    for (std::size_t ni = 0; ni < spec.n_values.size(); ++ni) {
        const int n = spec.n_values[ni];
        GridSpec gs{n, spec.p, spec.master_seed + 1000003ULL * ni};
        std::vector<lab_detail::SampleOutcome> out(static_cast<std::size_t>(spec.samples));
        parallel_for(spec.samples, [&](long long s) {
            SolverConfig cfg = solver_template ? *solver_template : SolverConfig{};
            cfg.kappa = kap;
            const Configuration config = sample_configuration(gs, static_cast<std::uint64_t>(s));
            const PhiResult r = solve ? solve(config, cfg) : phi(config, cfg);
            if (r.event_failed) return;
            lab_detail::assert_certificate_floor(r, n);
            out[static_cast<std::size_t>(s)] = {true, r.lower_bound, r.upper_bound};
        });

        long long fails = 0;
        std::vector<double> nubs;
        std::vector<TailCell> cells(spec.thresholds.size());
        for (std::size_t ti = 0; ti < spec.thresholds.size(); ++ti) {
            cells[ti].n = n;
            cells[ti].t = spec.thresholds[ti];
        }
        for (const auto& o : out) {
            if (!o.uniq) {
                ++fails;
                continue;
            }
            nubs.push_back(n * o.ub);
            for (std::size_t ti = 0; ti < spec.thresholds.size(); ++ti) {
                TailCell& c = cells[ti];
                ++c.trials;
                const double t = c.t;
                if (n * o.ub <= t)
                    ++c.lower_certified;
                else if (n * o.lb <= t)
                    ++c.lower_ambiguous;
                if (n * o.lb >= t)
                    ++c.upper_certified;
                else if (n * o.ub >= t)
                    ++c.upper_ambiguous;
            }
        }
        if (!cells.empty() && cells[0].trials == 0)
            throw std::runtime_error("tail_experiment: zero conditioned trials at n=" +
                                     std::to_string(n));
        est.uniq_failures.push_back(fails);
        est.nub_samples.push_back(std::move(nubs));
        for (TailCell& c : cells) est.cells.push_back(c);
    }
    return est;
}

// ---- Planted barrier ---------------------------------------------------------------

struct BarrierRecipe {
    int k = 0;
    double tau = 0.0;
    double zeta = 0.0;
    long long barrier_size = 0;  // |E-bar|
};

// k is the least integer with 2 c0 sqrt(k) > t; tau sits just under
// c0 zeta / (16 sqrt(k)).
inline BarrierRecipe barrier_recipe(double t_target, int n, double c0 = kIsoC0) {
    if (!(t_target > 0.0)) throw std::invalid_argument("barrier_recipe: t must be positive");
    BarrierRecipe r;
    r.zeta = c0 * c0 / (t_target * t_target);
    r.k = static_cast<int>(std::floor(t_target * t_target / (4.0 * c0 * c0))) + 1;
    while (!(2.0 * c0 * std::sqrt(static_cast<double>(r.k)) > t_target)) ++r.k;
    r.tau = 0.995 * c0 * r.zeta / (16.0 * std::sqrt(static_cast<double>(r.k)));
    if (static_cast<int>(r.tau * n) < 1)
        throw std::runtime_error("barrier_recipe: tau*n < 1, barrier infeasible at n=" +
                                 std::to_string(n));
    const int gap = static_cast<int>(r.tau * n);
    r.barrier_size = static_cast<long long>(2 * r.k - 1) * (2 * n - gap + 1);
    return r;
}

inline std::vector<std::pair<Vec2i, Vec2i>> barrier_edges(const BarrierRecipe& r, int n) {
    std::vector<std::pair<Vec2i, Vec2i>> edges;
    const int gap = static_cast<int>(r.tau * n);
    const int row_step = n / r.k;
    for (int i = -r.k + 1; i <= r.k - 1; ++i) {
        const int y0 = i * row_step;
        for (int x = -n; x <= n - gap; ++x) edges.push_back({{x, y0}, {x, y0 + 1}});
    }
    return edges;
}

struct BarrierReport {
    BarrierRecipe recipe;
    double t_target = 0.0;
    double log_prob_plant = 0.0;  // |E-bar| * log(1-p), exact
    long long planted_samples = 0;
    long long planted_giant_ok = 0;
    std::vector<double> planted_nub;    // conditioned on the giant check
    std::vector<double> unplanted_nub;  // conditioned on the uniqueness event
    double fraction_witness_above_t = 0.0;
    double fraction_lb_above_t = 0.0;

    double planted_median() const { return median(planted_nub); }
    double unplanted_median() const { return median(unplanted_nub); }
};

// Giant existence in the relaxed, crossing-cluster sense: a unique cluster
// above the size threshold (no polylog bound on the rest, which the barrier
// construction cannot guarantee at desk scale).
inline std::optional<GiantContext> relaxed_giant(const ClusterLabeling& lab, double kappa) {
    const int n = lab.box.n();
    const double threshold = kappa * 4.0 * n * n;
    std::int32_t best = -1;
    long long second = 0;
    for (std::int32_t l = 0; l < lab.label_count; ++l) {
        if (best < 0 || lab.size[l] > lab.size[best]) {
            if (best >= 0) second = std::max(second, lab.size[best]);
            best = l;
        } else {
            second = std::max(second, lab.size[l]);
        }
    }
    if (best < 0 || static_cast<double>(lab.size[best]) < threshold) return std::nullopt;
    if (static_cast<double>(second) >= threshold) return std::nullopt;
    return GiantContext::from_labeling(lab, best);
}

inline BarrierReport plant_barrier_experiment(const ExperimentSpec& spec, double t_target) {
    spec.validate();
    const int n = spec.n_values.front();
    BarrierReport rep;
    rep.recipe = barrier_recipe(t_target, n);
    rep.t_target = t_target;
    rep.log_prob_plant = static_cast<double>(rep.recipe.barrier_size) * std::log1p(-spec.p);
    const auto ebar = barrier_edges(rep.recipe, n);
    if (static_cast<long long>(ebar.size()) != rep.recipe.barrier_size)
        throw std::logic_error("plant_barrier_experiment: barrier size mismatch");

    const double kap = spec.resolved_kappa();
    GridSpec gs{n, spec.p, spec.master_seed};

    struct Row {
        bool planted_ok = false;
        double planted_nub = 0.0;
        bool witness_above = false;
        bool lb_above = false;
        bool unplanted_ok = false;
        double unplanted_nub = 0.0;
    };
    std::vector<Row> rows(static_cast<std::size_t>(spec.samples));

    parallel_for(spec.samples, [&](long long s) {
        Row& row = rows[static_cast<std::size_t>(s)];
        SolverConfig cfg;
        cfg.kappa = kap;
        const Configuration base = sample_configuration(gs, static_cast<std::uint64_t>(s));

        const Configuration planted = force_edges(base, ebar, false);
        for (const auto& [a, b] : ebar)
            if (planted.is_open(a, b)) throw std::logic_error("barrier edge left open");
        const ClusterLabeling lab = label_clusters(planted);
        const auto ctx = relaxed_giant(lab, kap);
        if (ctx) {
            const PhiResult r = phi_with_context(planted, *ctx, cfg);
            if (!r.empty_feasible && r.witness) {
                row.planted_ok = true;
                row.planted_nub = n * r.upper_bound;
                row.witness_above = row.planted_nub >= t_target;
                row.lb_above = n * r.lower_bound >= t_target;
            }
        }

        const PhiResult u = phi(base, cfg);
        if (!u.event_failed && !u.empty_feasible) {
            row.unplanted_ok = true;
            row.unplanted_nub = n * u.upper_bound;
        }
    });

    long long witness_above = 0, lb_above = 0;
    for (const Row& row : rows) {
        ++rep.planted_samples;
        if (row.planted_ok) {
            ++rep.planted_giant_ok;
            rep.planted_nub.push_back(row.planted_nub);
            if (row.witness_above) ++witness_above;
            if (row.lb_above) ++lb_above;
        }
        if (row.unplanted_ok) rep.unplanted_nub.push_back(row.unplanted_nub);
    }
    if (rep.planted_giant_ok > 0) {
        rep.fraction_witness_above_t =
            static_cast<double>(witness_above) / static_cast<double>(rep.planted_giant_ok);
        rep.fraction_lb_above_t =
            static_cast<double>(lb_above) / static_cast<double>(rep.planted_giant_ok);
    }
    return rep;
}

// ---- Planted annulus ----------------------------------------------------------------

struct AnnulusReport {
    int m = 0;
    long long plant_size = 0;  // |F|
    double log_prob_plant = 0.0;  // |F| * log p, exact
    double theta_hat = 0.0;
    std::vector<double> n_ratio;  // n * ratio of the ring circuit, per usable sample
    long long uniq_failures = 0;
    long long ring_failures = 0;

    double mean_n_ratio() const { return mean(n_ratio); }
};

inline std::vector<std::pair<Vec2i, Vec2i>> annulus_edges(int n, int m) {
    std::vector<std::pair<Vec2i, Vec2i>> edges;
    const Box box(n);
    for (long long e = 0; e < box.edge_count(); ++e) {
        const auto [a, b] = box.edge_at(e);
        if (linf_norm(a) == m || linf_norm(b) == m) edges.push_back({a, b});
    }
    return edges;
}

inline AnnulusReport plant_annulus_experiment(const ExperimentSpec& spec) {
    spec.validate();
    const int n = spec.n_values.front();
    if (n < 8) throw std::invalid_argument("plant_annulus_experiment: n must be >= 8");
    AnnulusReport rep;
    rep.m = static_cast<int>(std::floor(n / std::sqrt(2.0)));
    const auto fedges = annulus_edges(n, rep.m);
    rep.plant_size = static_cast<long long>(fedges.size());
    rep.log_prob_plant = static_cast<double>(rep.plant_size) * std::log(spec.p);
    rep.theta_hat = theta_hat_for(spec.p);
    const double kap = spec.resolved_kappa();
    GridSpec gs{n, spec.p, spec.master_seed};

    struct Row {
        int status = 0;  // 0 usable, 1 uniq fail, 2 ring fail
        double n_ratio = 0.0;
    };
    std::vector<Row> rows(static_cast<std::size_t>(spec.samples));

    parallel_for(spec.samples, [&](long long s) {
        Row& row = rows[static_cast<std::size_t>(s)];
        const Configuration base = sample_configuration(gs, static_cast<std::uint64_t>(s));
        const Configuration planted = force_edges(base, fedges, true);
        for (const auto& [a, b] : fedges)
            if (!planted.is_open(a, b)) throw std::logic_error("annulus edge left closed");
        const ClusterLabeling lab = label_clusters(planted);
        const GiantReport g = check_uniq_event(lab, kap);
        if (!g.uniq_event_holds) {
            row.status = 1;
            return;
        }
        const auto ctx = GiantContext::from_labeling(lab, *g.giant_label);
        const Circuit ring = Circuit::from_vertices(
            solver_detail::rect_circuit_vertices({-rep.m, -rep.m, rep.m, rep.m}));
        // ring vertices must sit in the giant (they do: F joins them to it)
        for (const Vec2i& v : ring.vertices())
            if (!ctx->contains(v)) {
                row.status = 2;
                return;
            }
        const long long w = weighted_interior_count(ring, [&](Vec2i v) { return ctx->contains(v); });
        row.n_ratio = static_cast<double>(n) * static_cast<double>(ring.length()) /
                      static_cast<double>(w);
    });

    for (const Row& row : rows) {
        if (row.status == 1)
            ++rep.uniq_failures;
        else if (row.status == 2)
            ++rep.ring_failures;
        else
            rep.n_ratio.push_back(row.n_ratio);
    }
    if (rep.n_ratio.empty()) throw std::runtime_error("plant_annulus_experiment: no usable samples");
    return rep;
}

// ---- Density statistics ---------------------------------------------------------------

struct DensityRecord {
    Rect rect;
    long long volume = 0;
    double theta_n = 0.0;  // giant density inside the circuit
};

struct DensityStats {
    double delta = 0.1;
    double theta_hat = 0.0;
    std::string family;
    // family maxima, per sample
    std::vector<double> s_plus;
    std::vector<double> s_minus;
    std::vector<DensityRecord> sample0_records;

    double s_plus_max() const { return *std::max_element(s_plus.begin(), s_plus.end()); }
    double s_minus_max() const { return *std::max_element(s_minus.begin(), s_minus.end()); }
};

// Family maxima of theta_n(vol) - theta and theta - theta_n(vol) over
// axis-aligned rectangle circuits on the delta^2 n grid (plus any supplied
// witness circuits), filtered by diam >= delta n and n|gamma|/vol <= 1/delta.
// The s- maximum additionally restricts to circuits inside B((1-delta)n).
inline DensityStats density_stats(const ExperimentSpec& spec,
                                  const std::vector<Circuit>& extra_witnesses = {}) {
    spec.validate();
    const int n = spec.n_values.front();
    const double delta = spec.delta;
    const int grid = std::max(1, static_cast<int>(std::ceil(delta * delta * n)));
    const double kap = spec.resolved_kappa();

    DensityStats out;
    out.delta = delta;
    out.theta_hat = theta_hat_for(spec.p);
    out.family = "rect-grid step " + std::to_string(grid) + " + " +
                 std::to_string(extra_witnesses.size()) + " witnesses";

    std::vector<Rect> rects;
    for (int x0 = -n; x0 < n; x0 += grid)
        for (int y0 = -n; y0 < n; y0 += grid)
            for (int x1 = x0 + grid; x1 <= n; x1 += grid)
                for (int y1 = y0 + grid; y1 <= n; y1 += grid) {
                    const Rect r{x0, y0, x1, y1};
                    const int diam = (r.x1 - r.x0) + (r.y1 - r.y0);  // l1 diameter of the ring
                    if (diam < delta * n) continue;
                    const long long len = 2LL * ((r.x1 - r.x0) + (r.y1 - r.y0));
                    const long long volume = r.vertex_count();
                    if (n * static_cast<double>(len) > static_cast<double>(volume) / delta)
                        continue;
                    rects.push_back(r);
                }
    if (rects.empty() && extra_witnesses.empty())
        throw std::runtime_error("density_stats: empty family after filters");

    GridSpec gs{n, spec.p, spec.master_seed};
    out.s_plus.assign(static_cast<std::size_t>(spec.samples), 0.0);
    out.s_minus.assign(static_cast<std::size_t>(spec.samples), 0.0);
    std::mutex rec_mutex;

    parallel_for(spec.samples, [&](long long s) {
        const Configuration config = sample_configuration(gs, static_cast<std::uint64_t>(s));
        const ClusterLabeling lab = label_clusters(config);
        const GiantReport g = check_uniq_event(lab, kap);
        if (!g.uniq_event_holds) {
            out.s_plus[static_cast<std::size_t>(s)] = -1.0;  // sentinel: dropped
            out.s_minus[static_cast<std::size_t>(s)] = -1.0;
            return;
        }
        const auto ctx = GiantContext::from_labeling(lab, *g.giant_label);
        const solver_detail::GiantPrefix pref(*ctx);

        double splus = -2.0, sminus = -2.0;
        std::vector<DensityRecord> recs;
        const int inner = static_cast<int>((1.0 - delta) * n);
        for (const Rect& r : rects) {
            const long long len = 2LL * ((r.x1 - r.x0) + (r.y1 - r.y0));
            const long long volume = r.vertex_count();
            const long long inside =
                pref.count(r.x0, r.y0, r.x1, r.y1);  // every vol vertex is in the rect
            const double theta_n = static_cast<double>(inside) / static_cast<double>(volume);
            splus = std::max(splus, theta_n - out.theta_hat);
            const bool in_core = r.x0 >= -inner && r.y0 >= -inner && r.x1 <= inner && r.y1 <= inner;
            if (in_core) sminus = std::max(sminus, out.theta_hat - theta_n);
            if (s == 0) recs.push_back({r, volume, theta_n});
            (void)len;
        }
        for (const Circuit& c : extra_witnesses) {
            if (c.l1_diameter() < delta * n) continue;
            if (n * static_cast<double>(c.length()) > static_cast<double>(c.vol()) / delta)
                continue;
            const long long w = weighted_interior_count(c, [&](Vec2i v) { return ctx->contains(v); });
            const double theta_n = static_cast<double>(w) / static_cast<double>(c.vol());
            splus = std::max(splus, theta_n - out.theta_hat);
            const Rect bb = c.bbox();
            if (bb.x0 >= -inner && bb.y0 >= -inner && bb.x1 <= inner && bb.y1 <= inner)
                sminus = std::max(sminus, out.theta_hat - theta_n);
        }
        out.s_plus[static_cast<std::size_t>(s)] = splus;
        out.s_minus[static_cast<std::size_t>(s)] = sminus;
        if (s == 0) {
            std::lock_guard<std::mutex> lock(rec_mutex);
            out.sample0_records = std::move(recs);
        }
    });

    // drop uniq failures
    auto strip = [](std::vector<double>& v) {
        v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return x == -1.0; }), v.end());
    };
    strip(out.s_plus);
    strip(out.s_minus);
    if (out.s_plus.empty()) throw std::runtime_error("density_stats: no conditioned samples");
    return out;
}

// ---- Rate-order fit ---------------------------------------------------------------------

enum class RateClass { Surface, Volume, Degenerate, Inconclusive };

struct RateFit {
    double t = 0.0;
    double slope_n = 0.0, slope_n2 = 0.0;
    double residual_n = 0.0, residual_n2 = 0.0;
    RateClass classification = RateClass::Inconclusive;
};

inline const char* rate_class_name(RateClass c) {
    switch (c) {
        case RateClass::Surface: return "surface";
        case RateClass::Volume: return "volume";
        case RateClass::Degenerate: return "degenerate";
        default: return "inconclusive";
    }
}

// log p-hat fitted against n and n^2; the better normalized residual wins with
// a 2x dominance margin.
inline RateFit rate_fit(const std::vector<std::pair<int, double>>& estimates, double t = 0.0) {
    RateFit out;
    out.t = t;
    std::vector<double> xs, xs2, ys;
    bool any_nondegenerate = false;
    for (const auto& [n, phat] : estimates) {
        if (phat <= 0.0 || phat >= 1.0) continue;
        any_nondegenerate = true;
        xs.push_back(static_cast<double>(n));
        xs2.push_back(static_cast<double>(n) * n);
        ys.push_back(std::log(phat));
    }
    if (!any_nondegenerate) {
        out.classification = RateClass::Degenerate;
        return out;
    }
    if (xs.size() < 3) {
        out.classification = RateClass::Inconclusive;
        return out;
    }
    const LineFit f1 = fit_line(xs, ys);
    const LineFit f2 = fit_line(xs2, ys);
    out.slope_n = f1.slope;
    out.slope_n2 = f2.slope;
    out.residual_n = f1.rms_residual;
    out.residual_n2 = f2.rms_residual;
    const double tiny = 1e-12;
    if (out.residual_n < tiny && out.residual_n2 < tiny)
        out.classification = RateClass::Inconclusive;
    else if (out.residual_n * 2.0 <= out.residual_n2)
        out.classification = RateClass::Surface;
    else if (out.residual_n2 * 2.0 <= out.residual_n)
        out.classification = RateClass::Volume;
    else
        out.classification = RateClass::Inconclusive;
    return out;
}

}  // namespace perciso
