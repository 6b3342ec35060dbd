#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "perciso/io.hpp"
#include "perciso/lab.hpp"

using namespace perciso;

TEST_CASE("tail harness tallies are exactly the stub frequencies") {
    // a stub solver returning a fixed certified interval per sample index
    ExperimentSpec spec;
    spec.n_values = {10};
    spec.p = 0.75;
    spec.thresholds = {2.0, 30.0};
    spec.samples = 40;
    spec.kappa = 0.4;
    spec.kind = "tail";
    const PhiSolver stub = [](const Configuration& cfg, const SolverConfig&) {
        PhiResult r;
        r.cap = cfg.box().vertex_count() / 2;
        const bool low = cfg.sample_index() % 4 == 0;  // every 4th sample in the lower tail
        r.lower_bound = low ? 0.05 : 0.5;
        r.upper_bound = low ? 0.1 : 0.6;  // n*UB: 1.0 or 6.0 at n=10
        return r;
    };
    const TailEstimate est = tail_experiment(spec, nullptr, stub);
    const TailCell& c2 = est.cell(10, 2.0);
    REQUIRE(c2.trials == 40);
    REQUIRE(c2.lower_certified == 10);  // exactly the stubbed quarter
    REQUIRE(c2.lower_ambiguous == 0);
    REQUIRE(c2.upper_certified == 30);  // n*LB = 5 >= 2 for the others
    const TailCell& c30 = est.cell(10, 30.0);
    REQUIRE(c30.lower_certified == 40);
    REQUIRE(c30.upper_certified == 0);
    REQUIRE(c30.lower_rate() == 1.0);
}

TEST_CASE("near-deterministic p pins both tails") {
    ExperimentSpec spec;
    spec.n_values = {32};
    spec.p = 0.999;
    spec.thresholds = {2.0, 4.0};
    spec.samples = 30;
    spec.kappa = 0.45;
    spec.master_seed = 77;
    const TailEstimate est = tail_experiment(spec);
    // n*Phi concentrates near 2*sqrt(2): nothing below 2, everything below 4
    REQUIRE(est.cell(32, 2.0).lower_certified == 0);
    REQUIRE(est.cell(32, 4.0).lower_certified == est.cell(32, 4.0).trials);
    REQUIRE(est.cell(32, 4.0).upper_certified == 0);
    REQUIRE(est.cell(32, 2.0).trials > 0);
}

TEST_CASE("barrier recipe and plant bookkeeping") {
    SECTION("recipe constants satisfy their defining inequalities") {
        const BarrierRecipe r = barrier_recipe(6.0, 128);
        REQUIRE(2.0 * kIsoC0 * std::sqrt(static_cast<double>(r.k)) > 6.0);
        REQUIRE(16.0 * std::sqrt(static_cast<double>(r.k)) * r.tau < kIsoC0 * r.zeta);
        REQUIRE(r.zeta == Catch::Approx(kIsoC0 * kIsoC0 / 36.0));
        REQUIRE(static_cast<int>(r.tau * 128) >= 1);
        // |E-bar| = (2k-1) * (2n - floor(tau n) + 1)
        const int gap = static_cast<int>(r.tau * 128);
        REQUIRE(r.barrier_size == (2LL * r.k - 1) * (256 - gap + 1));
        REQUIRE(barrier_edges(r, 128).size() == static_cast<std::size_t>(r.barrier_size));
    }
    SECTION("an infeasible scale is refused with the reason") {
        REQUIRE_THROWS_WITH(barrier_recipe(6.0, 32),
                            Catch::Matchers::ContainsSubstring("tau*n < 1"));
    }
    SECTION("the planted experiment closes every barrier edge") {
        ExperimentSpec spec;
        spec.n_values = {128};
        spec.p = 0.75;
        spec.thresholds = {6.0};
        spec.samples = 4;
        spec.kappa = 0.49;
        spec.master_seed = 5150;
        const BarrierReport rep = plant_barrier_experiment(spec, 6.0);
        REQUIRE(rep.log_prob_plant ==
                Catch::Approx(rep.recipe.barrier_size * std::log(0.25)).epsilon(1e-12));
        REQUIRE(rep.planted_samples == 4);
        // every witness on a planted sample clears the target
        if (rep.planted_giant_ok > 0) REQUIRE(rep.fraction_witness_above_t == 1.0);
    }
}

TEST_CASE("annulus plant") {
    SECTION("p=1 reproduces the explicit ring arithmetic") {
        ExperimentSpec spec;
        spec.n_values = {24};
        spec.p = 1.0;
        spec.samples = 2;
        spec.kappa = 0.45;
        const AnnulusReport rep = plant_annulus_experiment(spec);
        const int m = rep.m;
        REQUIRE(m == static_cast<int>(std::floor(24.0 / std::sqrt(2.0))));
        const double expect =
            24.0 * 8.0 * m / static_cast<double>((2 * m + 1) * (2 * m + 1));
        REQUIRE(rep.mean_n_ratio() == Catch::Approx(expect).margin(1e-12));
        REQUIRE(rep.plant_size == 24LL * m);  // 24m edges touch the ring
        REQUIRE(rep.log_prob_plant == 0.0);   // log 1
    }
    SECTION("n below 8 is rejected") {
        ExperimentSpec spec;
        spec.n_values = {4};
        spec.samples = 1;
        spec.kappa = 0.4;
        REQUIRE_THROWS_AS(plant_annulus_experiment(spec), std::invalid_argument);
    }
}

TEST_CASE("density statistics") {
    SECTION("full grid has zero excess everywhere") {
        ExperimentSpec spec;
        spec.n_values = {24};
        spec.p = 1.0;
        spec.samples = 2;
        spec.delta = 0.2;
        spec.kappa = 0.45;
        const DensityStats st = density_stats(spec);
        REQUIRE(st.theta_hat == 1.0);
        REQUIRE(st.s_plus_max() == Catch::Approx(0.0).margin(1e-12));
        REQUIRE(st.s_minus_max() == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("filters drop small-diameter witnesses") {
        ExperimentSpec spec;
        spec.n_values = {24};
        spec.p = 1.0;
        spec.samples = 1;
        spec.delta = 0.2;
        spec.kappa = 0.45;
        // a tiny square (diam 4 < delta*n) must be excluded: its density is
        // also 1 so inclusion would be invisible; instead check by making the
        // family empty through an impossible filter
        ExperimentSpec narrow = spec;
        narrow.delta = 0.9;  // diam >= 21.6 and n|gamma|/vol <= 1.11 at once
        REQUIRE_THROWS_AS(density_stats(narrow), std::runtime_error);
    }
    SECTION("supercritical excesses are small and one-sided") {
        ExperimentSpec spec;
        spec.n_values = {32};
        spec.p = 0.75;
        spec.samples = 6;
        spec.delta = 0.15;
        spec.kappa = 0.49;
        spec.master_seed = 99;
        const DensityStats st = density_stats(spec);
        REQUIRE(st.s_plus_max() < 0.15);
        REQUIRE(st.s_minus_max() < 0.15);
    }
}

TEST_CASE("rate-order classification") {
    SECTION("pure surface decay") {
        std::vector<std::pair<int, double>> pts;
        for (int n : {8, 16, 24, 32}) pts.push_back({n, std::exp(-0.3 * n)});
        REQUIRE(rate_fit(pts).classification == RateClass::Surface);
    }
    SECTION("pure volume decay") {
        std::vector<std::pair<int, double>> pts;
        for (int n : {8, 16, 24, 32}) pts.push_back({n, std::exp(-0.01 * n * n)});
        REQUIRE(rate_fit(pts).classification == RateClass::Volume);
    }
    SECTION("degenerate inputs") {
        REQUIRE(rate_fit({{8, 0.0}, {16, 1.0}, {24, 0.0}}).classification ==
                RateClass::Degenerate);
    }
    SECTION("ambiguous residuals are inconclusive") {
        // log p linear in sqrt(n): neither model dominates by 2x
        std::vector<std::pair<int, double>> pts;
        for (int n : {4, 9, 16, 25, 36, 49}) pts.push_back({n, std::exp(-std::sqrt(n))});
        REQUIRE(rate_fit(pts).classification == RateClass::Inconclusive);
    }
}

TEST_CASE("reports are deterministic and complete") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "perciso_report_test";
    fs::remove_all(dir);

    json tail_rec{{"kind", "tail"},
                  {"cells", json::array({json{{"n", 8}, {"lower_rate", 0.25}},
                                         json{{"n", 16}, {"lower_rate", 0.05}}})}};
    json lln_rec{{"kind", "lln"},
                 {"medians", json::array({json{{"n", 32}, {"median_nub", 3.5}, {"n_lb", 2.2}},
                                          json{{"n", 64}, {"median_nub", 3.4}, {"n_lb", 2.3}}})}};
    write_report(dir.string(), {tail_rec, lln_rec});
    REQUIRE(fs::exists(dir / "summary.json"));
    REQUIRE(fs::exists(dir / "logp_vs_n.svg"));
    REQUIRE(fs::exists(dir / "logp_vs_n2.svg"));
    REQUIRE(fs::exists(dir / "nphi_vs_n.svg"));

    auto slurp = [](const fs::path& p) {
        std::ifstream f(p);
        return std::string(std::istreambuf_iterator<char>(f), {});
    };
    const std::string first = slurp(dir / "summary.json");
    write_report(dir.string(), {tail_rec, lln_rec});
    REQUIRE(slurp(dir / "summary.json") == first);  // byte-for-byte rerun

    json summary = json::parse(first);
    REQUIRE(summary.contains("spec_hash"));
    fs::remove_all(dir);
}

TEST_CASE("experiment spec validation") {
    ExperimentSpec spec;
    spec.n_values = {};
    REQUIRE_THROWS_AS(spec.validate(), std::invalid_argument);
    spec.n_values = {8};
    spec.samples = 0;
    REQUIRE_THROWS_AS(spec.validate(), std::invalid_argument);
    spec.samples = 1;
    spec.thresholds = {-1.0};
    REQUIRE_THROWS_AS(spec.validate(), std::invalid_argument);
}
