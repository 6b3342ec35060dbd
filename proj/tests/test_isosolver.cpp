#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "perciso/isosolver.hpp"
#include "perciso/lab.hpp"

using namespace perciso;

namespace {

Configuration all_closed(int n) { return sample_configuration(GridSpec{n, 1e-300, 1}, 0); }

GiantContext largest_context(const Configuration& cfg) {
    const ClusterLabeling lab = label_clusters(cfg);
    return *GiantContext::from_labeling(lab, largest_cluster_label(lab));
}

NormModel frozen_mu_model() {
    return NormModel::from_samples({{{1.0, 0.0}, 1.19, 0.006},
                                    {{4.0, 1.0}, 5.35, 0.02},
                                    {{2.0, 1.0}, 3.0, 0.01},
                                    {{1.0, 1.0}, 2.0, 0.01}},
                                   true);
}

}  // namespace

TEST_CASE("brute force on tiny boxes") {
    SECTION("all-open B(2) with cap 12 is the 2x3 rectangle") {
        const Configuration cfg = sample_configuration(GridSpec{2, 1.0, 7}, 0);
        const GiantContext ctx = largest_context(cfg);
        const PhiResult r = brute_force_phi(cfg, ctx, 12);
        REQUIRE(r.upper_bound == Catch::Approx(10.0 / 12.0).margin(1e-12));
        REQUIRE(r.lower_bound == r.upper_bound);
        REQUIRE(r.witness.has_value());
        REQUIRE(r.witness->length() == 10);
        REQUIRE(r.witness->vol() == 12);
        // the independent enumeration oracle sees no smaller ratio
        const auto every = oracles::enumerate_all_circuits(
            cfg, [](Vec2i) { return true; }, 12);
        double best = 1e300;
        for (const auto& c : every)
            best = std::min(best, static_cast<double>(c.verts.size()) /
                                      static_cast<double>(c.weighted));
        REQUIRE(best == Catch::Approx(r.upper_bound).margin(1e-12));
    }
    SECTION("all-open B(1) with cap 4 is a unit square") {
        const Configuration cfg = sample_configuration(GridSpec{1, 1.0, 7}, 0);
        const GiantContext ctx = largest_context(cfg);
        const PhiResult r = brute_force_phi(cfg, ctx, 4);
        REQUIRE(r.upper_bound == Catch::Approx(1.0).margin(1e-12));
        REQUIRE(r.witness->vol() == 4);
    }
    SECTION("a tree-like configuration has an empty feasible set") {
        Configuration cfg = all_closed(2);
        cfg = force_edges(cfg,
                          {{{0, 0}, {1, 0}}, {{1, 0}, {2, 0}}, {{1, 0}, {1, 1}}}, true);
        const GiantContext ctx = largest_context(cfg);
        const PhiResult r = brute_force_phi(cfg, ctx, 12);
        REQUIRE(r.empty_feasible);
        REQUIRE(std::isinf(r.upper_bound));
    }
}

TEST_CASE("certificate lower bound") {
    SECTION("approaches the half-volume constant for large n") {
        const int n = 4096;
        const long long cap = (2LL * n + 1) * (2LL * n + 1) / 2;
        const double v = certificate_lower_bound(n, cap);
        REQUIRE(v >= 2.0 * std::sqrt(2.0) - 0.35);
        REQUIRE(v <= 2.0 * std::sqrt(2.0));
    }
    SECTION("small caps recover the c0/sqrt(zeta) form") {
        const int n = 1000;
        const double zeta = 0.01;
        const long long cap = static_cast<long long>(zeta * n * n);
        REQUIRE(certificate_lower_bound(n, cap) >= kIsoC0 / std::sqrt(zeta) - 1e-9);
    }
    SECTION("never exceeds the brute-force optimum") {
        std::mt19937_64 rng(41);
        int tested = 0;
        for (int s = 0; tested < 100 && s < 400; ++s) {
            const Configuration cfg = sample_configuration(GridSpec{2, 0.7, rng()}, s);
            const GiantContext ctx = largest_context(cfg);
            const PhiResult r = brute_force_phi(cfg, ctx, 12);
            if (r.empty_feasible) continue;
            ++tested;
            REQUIRE(certificate_lower_bound(2, 12) / 2.0 <= r.upper_bound + 1e-12);
        }
        REQUIRE(tested == 100);
    }
}

TEST_CASE("wulff-guided circuits") {
    const NormModel l1 = NormModel::l1();
    const WulffShape square = wulff_shape(l1, 256);

    SECTION("full grid tracks the square at the target scale") {
        const Configuration cfg = sample_configuration(GridSpec{64, 1.0, 3}, 0);
        const GiantContext ctx = largest_context(cfg);
        const auto wg = wulff_guided_circuit(cfg, ctx, square, 0.1, l1);
        REQUIRE(wg.has_value());
        const double n_ratio = 64.0 * wg->ratio;
        REQUIRE(n_ratio >= 2.0 * std::sqrt(2.0) * 0.85);
        REQUIRE(n_ratio <= 2.0 * std::sqrt(2.0) * 1.15);
        REQUIRE(wg->hausdorff_ok);
    }
    SECTION("eps outside (0, 1/4) is rejected") {
        const Configuration cfg = sample_configuration(GridSpec{8, 1.0, 3}, 0);
        const GiantContext ctx = largest_context(cfg);
        REQUIRE_THROWS_AS(wulff_guided_circuit(cfg, ctx, square, 0.25, l1),
                          std::invalid_argument);
        REQUIRE_THROWS_AS(wulff_guided_circuit(cfg, ctx, square, 0.0, l1),
                          std::invalid_argument);
    }
    SECTION("succeeds on at least 90% of supercritical samples") {
        const NormModel mu = frozen_mu_model();
        const WulffShape octo = wulff_shape(mu, 256);
        const GridSpec spec{128, 0.75, 31337};
        long long usable = 0, success = 0;
        for (int s = 0; s < 200; ++s) {
            const Configuration cfg = sample_configuration(spec, static_cast<std::uint64_t>(s));
            const ClusterLabeling lab = label_clusters(cfg);
            const GiantReport rep = check_uniq_event(lab, 0.49);
            if (!rep.uniq_event_holds) continue;
            ++usable;
            const GiantContext ctx = *GiantContext::from_labeling(lab, *rep.giant_label);
            const auto wg = wulff_guided_circuit(cfg, ctx, octo, 0.1, mu);
            if (!wg) continue;
            ++success;
            REQUIRE(wg->circuit.vol() <= cfg.box().vertex_count() / 2);
            // witness lives in the giant
            for (const Vec2i& v : wg->circuit.vertices()) REQUIRE(ctx.contains(v));
        }
        REQUIRE(usable >= 190);
        REQUIRE(static_cast<double>(success) / static_cast<double>(usable) >= 0.9);
    }
}

TEST_CASE("local search improvement") {
    SECTION("zero budget is the identity") {
        const Configuration cfg = sample_configuration(GridSpec{4, 1.0, 3}, 0);
        const GiantContext ctx = largest_context(cfg);
        const Circuit start = Circuit::from_vertices({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
        const Circuit out = local_search_improve(cfg, ctx, start, 0);
        REQUIRE(out.vertices() == start.vertices());
    }
    SECTION("the capped optimum at B(2) is a fixed point") {
        const Configuration cfg = sample_configuration(GridSpec{2, 1.0, 3}, 0);
        const GiantContext ctx = largest_context(cfg);
        const Circuit rect =
            Circuit::from_vertices({{-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {1, 2},
                                    {0, 2},   {-1, 2}, {-1, 1}, {-1, 0}});
        const long long w0 = weighted_interior_count(rect, [](Vec2i) { return true; });
        const Circuit out = local_search_improve(cfg, ctx, rect, 10000, 12);
        const long long w1 = weighted_interior_count(out, [](Vec2i) { return true; });
        REQUIRE(static_cast<double>(out.length()) / w1 <=
                static_cast<double>(rect.length()) / w0 + 1e-12);
        REQUIRE(out.vol() <= 12);
    }
    SECTION("a dented square recovers the exact optimum") {
        const Configuration cfg = sample_configuration(GridSpec{2, 1.0, 3}, 0);
        const GiantContext ctx = largest_context(cfg);
        // 2x3 ring with a one-cell dent on the long side
        const Circuit dented = Circuit::from_vertices(
            {{-1, -1}, {0, -1}, {0, 0}, {1, 0}, {1, -1}, {2, -1}, {2, 0}, {2, 1},
             {1, 1},   {0, 1},  {-1, 1}, {-1, 0}});
        const Circuit out = local_search_improve(cfg, ctx, dented, 10000, 12);
        const long long w = weighted_interior_count(out, [](Vec2i) { return true; });
        const double ratio = static_cast<double>(out.length()) / static_cast<double>(w);
        const GiantContext ctx2 = largest_context(cfg);
        const PhiResult exact = brute_force_phi(cfg, ctx2, 12);
        REQUIRE(ratio == Catch::Approx(exact.upper_bound).margin(1e-12));
    }
    SECTION("ratio never increases on random supercritical instances") {
        std::mt19937_64 rng(43);
        const GridSpec spec{24, 0.8, 5};
        for (int s = 0; s < 20; ++s) {
            const Configuration cfg = sample_configuration(spec, static_cast<std::uint64_t>(s));
            const GiantContext ctx = largest_context(cfg);
            const ClosestVertexIndex idx = ctx.closest_index(5);
            BfsWorkspace ws(cfg.box());
            const auto ring = traced_ring(cfg, ctx, idx, rect_waypoints({-12, -12, 12, 12}, 2), ws);
            if (!ring) continue;
            const long long cap = cfg.box().vertex_count() / 2;
            if (ring->vol() > cap) continue;
            const auto weight = [&](const Circuit& c) {
                return weighted_interior_count(c, [&](Vec2i v) { return ctx.contains(v); });
            };
            const Circuit out = local_search_improve(cfg, ctx, *ring, 20000, cap);
            REQUIRE(static_cast<double>(out.length()) / weight(out) <=
                    static_cast<double>(ring->length()) / weight(*ring) + 1e-12);
            REQUIRE(out.vol() <= cap);
            // witness validity: open edges and giant membership
            const auto& vs = out.vertices();
            for (std::size_t i = 0; i < vs.size(); ++i) {
                REQUIRE(ctx.contains(vs[i]));
                REQUIRE(cfg.is_open(vs[i], vs[(i + 1) % vs.size()]));
            }
        }
    }
}

TEST_CASE("parametric ratio test") {
    SECTION("huge t accepts any configuration with a circuit") {
        const Configuration cfg = sample_configuration(GridSpec{2, 1.0, 3}, 0);
        const GiantContext ctx = largest_context(cfg);
        REQUIRE(parametric_ratio_test(cfg, ctx, 1000.0));
    }
    SECTION("t below the flat floor is rejected") {
        const Configuration cfg = sample_configuration(GridSpec{2, 1.0, 3}, 0);
        const GiantContext ctx = largest_context(cfg);
        // every circuit has |gamma| >= 4 and encloses at most vol-ish marks
        REQUIRE_FALSE(parametric_ratio_test(cfg, ctx, 4.0 / 25.0));
    }
    SECTION("binary search matches brute force on random tiny instances") {
        std::mt19937_64 rng(44);
        int nontrivial = 0;
        for (int s = 0; s < 60; ++s) {
            const double p = s % 2 ? 0.6 : 0.7;
            const Configuration cfg = sample_configuration(GridSpec{3, p, 90 + s}, s);
            const GiantContext ctx = largest_context(cfg);
            const double exact = brute_force_uncapped_ratio(cfg, ctx);
            const ParametricThreshold thr = parametric_threshold(cfg, ctx);
            if (!thr.feasible) {
                REQUIRE(std::isinf(exact));
                continue;
            }
            ++nontrivial;
            REQUIRE(thr.threshold ==
                    Catch::Approx(exact).margin(1e-5 * std::max(1.0, exact)));
        }
        REQUIRE(nontrivial >= 20);
    }
}

TEST_CASE("the combined solver") {
    SECTION("tiny boxes dispatch to the exact answer") {
        SolverConfig cfg;
        cfg.strategy = SolverStrategy::BruteForce;
        cfg.kappa = 0.3;
        const Configuration sample = sample_configuration(GridSpec{2, 1.0, 7}, 0);
        const PhiResult r = phi(sample, cfg);
        REQUIRE(r.lower_bound == r.upper_bound);
        REQUIRE(r.upper_bound == Catch::Approx(10.0 / 12.0).margin(1e-12));

        const Configuration big = sample_configuration(GridSpec{5, 1.0, 7}, 0);
        REQUIRE_THROWS_AS(phi(big, cfg), std::invalid_argument);
    }
    SECTION("full grid at n=64 sits near the analytic optimum") {
        SolverConfig cfg;
        cfg.kappa = 0.3;
        const Configuration sample = sample_configuration(GridSpec{64, 1.0, 7}, 0);
        const PhiResult r = phi(sample, cfg);
        REQUIRE_FALSE(r.event_failed);
        const double n_ub = 64.0 * r.upper_bound;
        REQUIRE(n_ub >= 2.0 * std::sqrt(2.0) * 0.95);
        REQUIRE(n_ub <= 2.0 * std::sqrt(2.0) * 1.05);
        REQUIRE(r.lower_bound <= r.upper_bound);
    }
    SECTION("upper bounds certify, witnesses recompute exactly") {
        SolverConfig cfg;
        cfg.kappa = 0.49;
        const GridSpec spec{48, 0.75, 11};
        double sum = 0.0;
        int used = 0;
        for (int s = 0; s < 30; ++s) {
            const Configuration sample = sample_configuration(spec, static_cast<std::uint64_t>(s));
            const PhiResult r = phi(sample, cfg);
            if (r.event_failed) continue;
            REQUIRE_FALSE(r.empty_feasible);
            REQUIRE(r.lower_bound <= r.upper_bound + 1e-12);
            const ClusterLabeling lab = label_clusters(sample);
            const GiantReport rep = check_uniq_event(lab, cfg.kappa);
            const GiantContext ctx = *GiantContext::from_labeling(lab, *rep.giant_label);
            const long long w =
                weighted_interior_count(*r.witness, [&](Vec2i v) { return ctx.contains(v); });
            REQUIRE(w == r.witness_interior_count);
            REQUIRE(static_cast<double>(r.witness->length()) / static_cast<double>(w) ==
                    r.upper_bound);
            REQUIRE(r.witness->vol() <= r.cap);
            // solver interval floors the deterministic certificate
            const double floor_value = certificate_lower_bound(48, r.cap);
            REQUIRE(48.0 * static_cast<double>(r.witness->length()) /
                        static_cast<double>(r.witness->vol()) >=
                    floor_value - 1e-9);
            sum += 48.0 * r.upper_bound;
            ++used;
        }
        REQUIRE(used >= 25);
        // median-ish location: above the annulus floor, below the crude ring cost
        REQUIRE(sum / used >= 2.0 * std::sqrt(2.0) / 0.995);
        REQUIRE(sum / used <= 5.0);
    }
    SECTION("parametric strategy tightens the lower bound on tiny boxes") {
        SolverConfig cfg;
        cfg.strategy = SolverStrategy::Parametric;
        cfg.kappa = 0.05;
        int used = 0;
        for (int s = 0; s < 40 && used < 10; ++s) {
            const Configuration sample = sample_configuration(GridSpec{3, 0.8, 17}, s);
            const PhiResult r = phi(sample, cfg);
            if (r.event_failed || r.empty_feasible) continue;
            ++used;
            REQUIRE(r.lower_bound <= r.upper_bound + 1e-12);
            const GiantContext ctx = largest_context(sample);
            const ParametricThreshold thr = parametric_threshold(sample, ctx);
            if (thr.feasible)
                REQUIRE(r.lower_bound >= thr.threshold / (1.0 + thr.threshold) - 1e-9);
        }
        REQUIRE(used >= 5);
    }
}
