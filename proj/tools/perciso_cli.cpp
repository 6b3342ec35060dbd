// perciso: simulation and optimization lab for the isoperimetric constant of
// the giant cluster in 2D supercritical bond percolation.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "perciso/perciso.hpp"

namespace fs = std::filesystem;
using namespace perciso;

namespace {

struct CommonOpts {
    int n = 64;
    double p = 0.75;
    std::uint64_t seed = 1;
    long long samples = 100;
    double delta = 0.1;
    double eps = 0.1;
    std::string out_dir = "out";
    std::string format = "csv";
    std::string config_file;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--n", o.n, "half side length of B(n)");
    cmd->add_option("--p", o.p, "edge-open probability");
    cmd->add_option("--seed", o.seed, "master seed");
    cmd->add_option("--samples", o.samples, "sample count");
    cmd->add_option("--delta", o.delta, "density resolution delta");
    cmd->add_option("--eps", o.eps, "construction epsilon");
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--format", o.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--config", o.config_file, "JSON file with {n, p, seed}");
}

// --config file first, flags override it, PERCISO_SEED overrides everything.
GridSpec resolve_spec(const CommonOpts& o, const CLI::App* cmd) {
    GridSpec spec{o.n, o.p, o.seed};
    if (!o.config_file.empty()) {
        std::ifstream f(o.config_file);
        if (!f) throw std::runtime_error("cannot open config " + o.config_file);
        json j;
        f >> j;
        GridSpec from_file = grid_spec_from_json(j);
        if (cmd->count("--n") == 0) spec.n = from_file.n;
        if (cmd->count("--p") == 0) spec.p = from_file.p;
        if (cmd->count("--seed") == 0) spec.master_seed = from_file.master_seed;
    }
    if (const char* env = std::getenv("PERCISO_SEED")) spec.master_seed = std::stoull(env);
    spec.validate();
    return spec;
}

void emit(const CommonOpts& o, const std::string& stem, const json& record,
          const std::string& csv = "") {
    fs::create_directories(o.out_dir);
    if (o.format == "json" || csv.empty()) {
        write_text(o.out_dir + "/" + stem + ".json", record.dump(2) + "\n");
        std::cout << "wrote " << o.out_dir << "/" << stem << ".json\n";
    }
    if (o.format == "csv" && !csv.empty()) {
        write_text(o.out_dir + "/" + stem + ".csv", csv);
        write_text(o.out_dir + "/" + stem + ".json", record.dump(2) + "\n");
        std::cout << "wrote " << o.out_dir << "/" << stem << ".{csv,json}\n";
    }
}

json stamped(json j) {
    j["spec_hash"] = spec_hash(j);
    return j;
}

int cmd_sample(const CommonOpts& o, const CLI::App* cmd, std::uint64_t index,
               const std::string& file) {
    const GridSpec spec = resolve_spec(o, cmd);
    const Configuration cfg = sample_configuration(spec, index);
    const ClusterLabeling lab = label_clusters(cfg);
    const GiantReport rep = check_uniq_event(lab, kappa_for(spec.p));
    if (!file.empty()) {
        cfg.save(file);
        std::cout << "wrote " << file << "\n";
    }
    std::cout << "n=" << spec.n << " p=" << spec.p << " seed=" << spec.master_seed
              << " index=" << index << "\n"
              << "clusters=" << lab.label_count << " giant=" << rep.giant_size
              << " second=" << rep.second_largest << " uniq=" << (rep.uniq_event_holds ? "yes" : "no")
              << " theta_n=" << rep.theta_n_global << "\n";
    return 0;
}

int cmd_theta(const CommonOpts& o, const CLI::App* cmd) {
    const GridSpec spec = resolve_spec(o, cmd);
    const ThetaEstimate est = estimate_theta(spec.p, spec.n, o.samples, spec.master_seed);
    json rec = stamped(json{{"kind", "theta"},
                            {"p", spec.p},
                            {"n", spec.n},
                            {"samples", est.samples},
                            {"theta_hat", est.theta_hat},
                            {"stderr", est.stderr_}});
    std::cout << "theta_hat=" << est.theta_hat << " stderr=" << est.stderr_ << "\n";
    emit(o, "theta", rec);
    return 0;
}

int cmd_mu(const CommonOpts& o, const CLI::App* cmd, std::vector<int> dir,
           std::vector<int> lengths) {
    const GridSpec spec = resolve_spec(o, cmd);
    if (dir.size() != 2) throw CLI::ValidationError("--dir needs two integers");
    if (lengths.empty()) lengths = {32, 64, 128};
    TimeConstantOptions opts;
    opts.master_seed = spec.master_seed;
    opts.kappa = kappa_for(spec.p);
    const TimeConstantEstimate est =
        estimate_time_constant(spec.p, {dir[0], dir[1]}, lengths, o.samples, opts);
    json per = json::array();
    for (const LengthStat& st : est.per_length)
        per.push_back(json{{"L", st.length},
                           {"samples", st.used},
                           {"mean_D", st.mean_distance},
                           {"stderr", st.stderr_},
                           {"dropped", st.dropped}});
    json rec = stamped(json{{"kind", "mu"},
                            {"p", spec.p},
                            {"dir", {dir[0], dir[1]}},
                            {"mu_hat", est.mu_hat},
                            {"raw_slope", est.raw_slope},
                            {"stderr", est.stderr_},
                            {"per_length", per}});
    std::cout << "mu_hat=" << est.mu_hat << " stderr=" << est.stderr_ << "\n";
    emit(o, "mu", rec, time_constant_csv(spec.p, est));
    return 0;
}

// Fan of directions for a full norm model.
NormModel estimate_norm(const GridSpec& spec, long long samples, std::vector<int> lengths) {
    TimeConstantOptions opts;
    opts.master_seed = spec.master_seed;
    opts.kappa = kappa_for(spec.p);
    std::vector<TimeConstantEstimate> fan;
    for (Vec2i dir : {Vec2i{1, 0}, Vec2i{4, 1}, Vec2i{2, 1}, Vec2i{3, 2}, Vec2i{1, 1}})
        fan.push_back(estimate_time_constant(spec.p, dir, lengths, samples, opts));
    return norm_from_time_constants(fan);
}

int cmd_wulff(const CommonOpts& o, const CLI::App* cmd, const std::string& norm_file, int K) {
    const GridSpec spec = resolve_spec(o, cmd);
    NormModel model = NormModel::l1();
    std::string provenance = "l1";
    if (!norm_file.empty()) {
        std::ifstream f(norm_file);
        if (!f) throw std::runtime_error("cannot open norm file " + norm_file);
        json j;
        f >> j;
        model = norm_model_from_json(j);
        provenance = "file:" + norm_file;
    } else if (cmd->count("--p") > 0 || cmd->count("--config") > 0) {
        model = estimate_norm(spec, o.samples, {16, 32, 64});
        provenance = "estimated";
    }
    const WulffShape w = wulff_shape(model, K);
    const IsoConstant iso = iso_constant(model, K);
    json poly = json::array();
    for (const Vec2d& v : w.normalized) poly.push_back(json::array({v.x, v.y}));
    json rec = stamped(json{{"kind", "wulff"},
                            {"provenance", provenance},
                            {"K", K},
                            {"area", w.area},
                            {"normalized_polygon", poly},
                            {"xi_hat", iso.value},
                            {"resolution_bound", iso.resolution_bound},
                            {"propagated_stderr", iso.propagated_stderr}});
    fs::create_directories(o.out_dir);
    write_text(o.out_dir + "/wulff.svg", wulff_svg(w));
    write_text(o.out_dir + "/norm_model.json",
               norm_model_to_json(model, spec.p, provenance).dump(2) + "\n");
    emit(o, "wulff", rec);
    std::cout << "xi_hat=" << iso.value << " (resolution " << iso.resolution_bound << ", stderr "
              << iso.propagated_stderr << ")\n";
    return 0;
}

int cmd_phi(const CommonOpts& o, const CLI::App* cmd, std::uint64_t index,
            const std::string& strategy, const std::string& norm_file) {
    const GridSpec spec = resolve_spec(o, cmd);
    SolverConfig solver;
    solver.kappa = kappa_for(spec.p);
    solver.eps = o.eps;
    if (strategy == "bruteforce") solver.strategy = SolverStrategy::BruteForce;
    if (strategy == "parametric") solver.strategy = SolverStrategy::Parametric;

    std::optional<NormModel> model;
    std::optional<WulffShape> shape;
    if (!norm_file.empty()) {
        std::ifstream f(norm_file);
        if (!f) throw std::runtime_error("cannot open norm file " + norm_file);
        json j;
        f >> j;
        model = norm_model_from_json(j);
        shape = wulff_shape(*model, 256);
        solver.norm = &*model;
        solver.wulff = &*shape;
    }

    const Configuration cfg = sample_configuration(spec, index);
    const PhiResult r = phi(cfg, solver);
    json rec = stamped(phi_result_to_json(r, spec));
    rec["kind"] = "phi";
    emit(o, "phi", rec);
    if (r.event_failed)
        std::cout << "uniqueness event failed\n";
    else if (r.empty_feasible)
        std::cout << "no open circuit (infimum +inf)\n";
    else
        std::cout << "lb=" << r.lower_bound << " ub=" << r.upper_bound
                  << " n*ub=" << spec.n * r.upper_bound << "\n";
    return 0;
}

int cmd_tail(const CommonOpts& o, const CLI::App* cmd, std::vector<int> ns,
             std::vector<double> ts) {
    const GridSpec spec = resolve_spec(o, cmd);
    ExperimentSpec es;
    es.n_values = ns.empty() ? std::vector<int>{spec.n} : ns;
    es.p = spec.p;
    es.thresholds = ts.empty() ? std::vector<double>{2.0, 3.0, 4.0} : ts;
    es.samples = o.samples;
    es.master_seed = spec.master_seed;
    es.kind = "tail";
    const TailEstimate est = tail_experiment(es);
    json cells = json::array();
    for (const TailCell& c : est.cells)
        cells.push_back(json{{"n", c.n},
                             {"t", c.t},
                             {"trials", c.trials},
                             {"lower_certified", c.lower_certified},
                             {"lower_ambiguous", c.lower_ambiguous},
                             {"lower_rate", c.lower_rate()},
                             {"upper_certified", c.upper_certified},
                             {"upper_ambiguous", c.upper_ambiguous},
                             {"upper_rate", c.upper_rate()}});
    json rec = stamped(json{{"kind", "tail"},
                            {"p", es.p},
                            {"samples", es.samples},
                            {"cells", cells},
                            {"uniq_failures", est.uniq_failures}});
    emit(o, "tail", rec, tail_csv(est));
    return 0;
}

int cmd_plant_barrier(const CommonOpts& o, const CLI::App* cmd, double t_target) {
    const GridSpec spec = resolve_spec(o, cmd);
    ExperimentSpec es;
    es.n_values = {spec.n};
    es.p = spec.p;
    es.thresholds = {t_target};
    es.samples = o.samples;
    es.master_seed = spec.master_seed;
    es.kind = "barrier";
    const BarrierReport rep = plant_barrier_experiment(es, t_target);
    json rec = stamped(json{{"kind", "barrier"},
                            {"n", spec.n},
                            {"p", spec.p},
                            {"t_target", t_target},
                            {"k", rep.recipe.k},
                            {"tau", rep.recipe.tau},
                            {"barrier_size", rep.recipe.barrier_size},
                            {"log_prob_plant", rep.log_prob_plant},
                            {"planted_samples", rep.planted_samples},
                            {"planted_giant_ok", rep.planted_giant_ok},
                            {"planted_median_nub",
                             rep.planted_nub.empty() ? 0.0 : rep.planted_median()},
                            {"unplanted_median_nub",
                             rep.unplanted_nub.empty() ? 0.0 : rep.unplanted_median()},
                            {"fraction_witness_above_t", rep.fraction_witness_above_t}});
    emit(o, "plant_barrier", rec);
    std::cout << "planted median n*UB="
              << (rep.planted_nub.empty() ? 0.0 : rep.planted_median())
              << " unplanted=" << (rep.unplanted_nub.empty() ? 0.0 : rep.unplanted_median())
              << " |Ebar|=" << rep.recipe.barrier_size << "\n";
    return 0;
}

int cmd_plant_annulus(const CommonOpts& o, const CLI::App* cmd) {
    const GridSpec spec = resolve_spec(o, cmd);
    ExperimentSpec es;
    es.n_values = {spec.n};
    es.p = spec.p;
    es.samples = o.samples;
    es.master_seed = spec.master_seed;
    es.kind = "annulus";
    const AnnulusReport rep = plant_annulus_experiment(es);
    json rec = stamped(json{{"kind", "annulus"},
                            {"n", spec.n},
                            {"p", spec.p},
                            {"m", rep.m},
                            {"plant_size", rep.plant_size},
                            {"log_prob_plant", rep.log_prob_plant},
                            {"theta_hat", rep.theta_hat},
                            {"mean_n_ratio", rep.mean_n_ratio()},
                            {"uniq_failures", rep.uniq_failures}});
    emit(o, "plant_annulus", rec);
    std::cout << "mean n*ratio=" << rep.mean_n_ratio()
              << " target=" << kTwoSqrtTwo / rep.theta_hat << "+eps |F|=" << rep.plant_size
              << "\n";
    return 0;
}

int cmd_density(const CommonOpts& o, const CLI::App* cmd) {
    const GridSpec spec = resolve_spec(o, cmd);
    ExperimentSpec es;
    es.n_values = {spec.n};
    es.p = spec.p;
    es.samples = o.samples;
    es.delta = o.delta;
    es.master_seed = spec.master_seed;
    es.kind = "density";
    const DensityStats st = density_stats(es);
    json rec = stamped(json{{"kind", "density"},
                            {"n", spec.n},
                            {"p", spec.p},
                            {"delta", st.delta},
                            {"theta_hat", st.theta_hat},
                            {"family", st.family},
                            {"s_plus_max", st.s_plus_max()},
                            {"s_minus_max", st.s_minus_max()}});
    emit(o, "density", rec, density_csv(st));
    std::cout << "s+max=" << st.s_plus_max() << " s-max=" << st.s_minus_max() << "\n";
    return 0;
}

int cmd_report(const std::string& in_dir, const std::string& out_dir) {
    std::vector<json> records;
    for (const auto& entry : fs::directory_iterator(in_dir)) {
        if (entry.path().extension() != ".json") continue;
        std::ifstream f(entry.path());
        json j;
        f >> j;
        records.push_back(std::move(j));
    }
    if (records.empty()) throw std::runtime_error("no .json records in " + in_dir);
    write_report(out_dir, records);
    std::cout << "wrote report to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"isoperimetry lab for 2D supercritical bond percolation"};
    app.require_subcommand(1);

    CommonOpts o;
    std::uint64_t index = 0;
    std::string file, strategy = "candidates", norm_file, in_dir = "out";
    std::vector<int> dir = {1, 0}, lengths, ns;
    std::vector<double> ts;
    double t_target = 6.0;
    int K = 256;

    auto* sample = app.add_subcommand("sample", "draw one configuration, report its clusters");
    add_common(sample, o);
    sample->add_option("--index", index, "sample index");
    sample->add_option("--file", file, "persist the edge bitset here");

    auto* theta = app.add_subcommand("theta", "estimate the percolation probability");
    add_common(theta, o);

    auto* mu = app.add_subcommand("mu", "estimate the chemical-distance time constant");
    add_common(mu, o);
    mu->add_option("--dir", dir, "direction vector (two ints)")->expected(2);
    mu->add_option("--lengths", lengths, "scales L");

    auto* wulff = app.add_subcommand("wulff", "Wulff shape and isoperimetric constant");
    add_common(wulff, o);
    wulff->add_option("--norm", norm_file, "norm model JSON (default: estimate or l1)");
    wulff->add_option("--K", K, "support direction count");

    auto* phi_cmd = app.add_subcommand("phi", "bound the isoperimetric constant of one sample");
    add_common(phi_cmd, o);
    phi_cmd->add_option("--index", index, "sample index");
    phi_cmd->add_option("--strategy", strategy, "candidates | bruteforce | parametric")
        ->check(CLI::IsMember({"candidates", "bruteforce", "parametric"}));
    phi_cmd->add_option("--norm", norm_file, "norm model JSON for the Wulff-guided candidate");

    auto* tail = app.add_subcommand("tail", "tail probability estimates over n and t");
    add_common(tail, o);
    tail->add_option("--n-list", ns, "box sizes");
    tail->add_option("--t", ts, "thresholds on the n*Phi scale");

    auto* barrier = app.add_subcommand("plant-barrier", "closed-edge barrier plant");
    add_common(barrier, o);
    barrier->add_option("--t", t_target, "target n*Phi floor");

    auto* annulus = app.add_subcommand("plant-annulus", "open-edge annulus plant");
    add_common(annulus, o);

    auto* density = app.add_subcommand("density", "uniform cluster-density statistics");
    add_common(density, o);

    auto* report = app.add_subcommand("report", "aggregate run records into tables and plots");
    report->add_option("--in", in_dir, "directory of JSON records");
    report->add_option("--out", o.out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sample->parsed()) return cmd_sample(o, sample, index, file);
        if (theta->parsed()) return cmd_theta(o, theta);
        if (mu->parsed()) return cmd_mu(o, mu, dir, lengths);
        if (wulff->parsed()) return cmd_wulff(o, wulff, norm_file, K);
        if (phi_cmd->parsed()) return cmd_phi(o, phi_cmd, index, strategy, norm_file);
        if (tail->parsed()) return cmd_tail(o, tail, ns, ts);
        if (barrier->parsed()) return cmd_plant_barrier(o, barrier, t_target);
        if (annulus->parsed()) return cmd_plant_annulus(o, annulus);
        if (density->parsed()) return cmd_density(o, density);
        if (report->parsed()) return cmd_report(in_dir, o.out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
