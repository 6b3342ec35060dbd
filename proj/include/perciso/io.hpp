#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "perciso/isosolver.hpp"
#include "perciso/lab.hpp"
#include "perciso/metric.hpp"
#include "perciso/wulff.hpp"

namespace perciso {

using json = nlohmann::json;

// FNV-1a over the canonical parameter string; stamped into JSON summaries so
// runs can be traced back to their exact inputs.
inline std::string spec_hash(const json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write failed: " + path);
    f << text;
    if (!f) throw std::runtime_error("write failed: " + path);
}

// ---- GridSpec / experiment configs ------------------------------------------------

inline GridSpec grid_spec_from_json(const json& j) {
    GridSpec spec;
    spec.n = j.at("n").get<int>();
    spec.p = j.at("p").get<double>();
    spec.master_seed = j.value("seed", 0ULL);
    spec.validate();
    return spec;
}

inline json grid_spec_to_json(const GridSpec& spec) {
    return json{{"n", spec.n}, {"p", spec.p}, {"seed", spec.master_seed}};
}

// ---- Circuits ----------------------------------------------------------------------

inline json circuit_to_json(const Circuit& c) {
    json arr = json::array();
    for (const Vec2i& v : c.vertices()) arr.push_back(json::array({v.x, v.y}));
    return arr;
}

inline Circuit circuit_from_json(const json& arr) {
    std::vector<Vec2i> verts;
    for (const auto& p : arr) verts.push_back({p.at(0).get<int>(), p.at(1).get<int>()});
    return Circuit::from_vertices(std::move(verts));
}

// ---- Norm models ---------------------------------------------------------------------

inline json norm_model_to_json(const NormModel& m, double p, const std::string& provenance) {
    json dirs = json::array(), vals = json::array(), errs = json::array();
    for (const DirectionalSample& s : m.folded_samples()) {
        dirs.push_back(json::array({s.direction.x, s.direction.y}));
        vals.push_back(s.value);
        errs.push_back(s.stderr_);
    }
    return json{{"directions", dirs}, {"values", vals},       {"stderrs", errs},
                {"p", p},             {"provenance", provenance}, {"l1_floor", m.l1_floor()}};
}

inline NormModel norm_model_from_json(const json& j) {
    std::vector<DirectionalSample> samples;
    const auto& dirs = j.at("directions");
    const auto& vals = j.at("values");
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        DirectionalSample s;
        s.direction = {dirs[i].at(0).get<double>(), dirs[i].at(1).get<double>()};
        s.value = vals[i].get<double>();
        if (j.contains("stderrs")) s.stderr_ = j["stderrs"][i].get<double>();
        samples.push_back(s);
    }
    return NormModel::from_samples(std::move(samples), j.value("l1_floor", true));
}

// ---- PhiResult -------------------------------------------------------------------------

inline json phi_result_to_json(const PhiResult& r, const GridSpec& spec) {
    json j{{"n", spec.n},
           {"p", spec.p},
           {"seed", spec.master_seed},
           {"lb", r.lower_bound},
           {"ub", r.upper_bound},
           {"cap", r.cap},
           {"event_failed", r.event_failed},
           {"empty_feasible", r.empty_feasible},
           {"method", r.methods},
           {"vol", r.witness_vol},
           {"interior_count", r.witness_interior_count}};
    if (r.witness) j["witness"] = circuit_to_json(*r.witness);
    return j;
}

// ---- CSV tables ---------------------------------------------------------------------------

inline std::string time_constant_csv(double p, const TimeConstantEstimate& est) {
    std::ostringstream os;
    os << "p,dir_x,dir_y,L,samples,mean_D,stderr,dropped\n";
    for (const LengthStat& st : est.per_length) {
        os << fmt_double(p) << ',' << est.direction.x << ',' << est.direction.y << ','
           << st.length << ',' << st.used << ',' << fmt_double(st.mean_distance) << ','
           << fmt_double(st.stderr_) << ',' << st.dropped << '\n';
    }
    return os.str();
}

inline std::string tail_csv(const TailEstimate& est) {
    std::ostringstream os;
    os << "n,t,trials,uniq_failures,lower_certified,lower_ambiguous,lower_rate,lower_wilson_lo,"
          "lower_wilson_hi,upper_certified,upper_ambiguous,upper_rate,upper_wilson_lo,upper_wilson_"
          "hi\n";
    for (const TailCell& c : est.cells) {
        long long fails = 0;
        for (std::size_t i = 0; i < est.spec.n_values.size(); ++i)
            if (est.spec.n_values[i] == c.n) fails = est.uniq_failures[i];
        const WilsonInterval lw = c.trials ? c.lower_wilson() : WilsonInterval{0, 1};
        const WilsonInterval uw = c.trials ? c.upper_wilson() : WilsonInterval{0, 1};
        os << c.n << ',' << fmt_double(c.t) << ',' << c.trials << ',' << fails << ','
           << c.lower_certified << ',' << c.lower_ambiguous << ',' << fmt_double(c.lower_rate())
           << ',' << fmt_double(lw.lo) << ',' << fmt_double(lw.hi) << ',' << c.upper_certified
           << ',' << c.upper_ambiguous << ',' << fmt_double(c.upper_rate()) << ','
           << fmt_double(uw.lo) << ',' << fmt_double(uw.hi) << '\n';
    }
    return os.str();
}

inline std::string density_csv(const DensityStats& st) {
    std::ostringstream os;
    os << "sample,s_plus,s_minus\n";
    for (std::size_t i = 0; i < st.s_plus.size(); ++i)
        os << i << ',' << fmt_double(st.s_plus[i]) << ','
           << (i < st.s_minus.size() ? fmt_double(st.s_minus[i]) : "") << '\n';
    return os.str();
}

// ---- SVG plots -----------------------------------------------------------------------------

struct SvgSeries {
    std::string label;
    std::string color = "#1f77b4";
    std::vector<Vec2d> points;
    bool line = true;
};

// Minimal line/scatter plot; linear axes with autoscale and tick labels.
inline std::string svg_plot(const std::string& title, const std::string& xlabel,
                            const std::string& ylabel, const std::vector<SvgSeries>& series) {
    const int W = 640, H = 440, ml = 70, mr = 20, mt = 40, mb = 50;
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& s : series)
        for (const auto& p : s.points) {
            x0 = std::min(x0, p.x);
            x1 = std::max(x1, p.x);
            y0 = std::min(y0, p.y);
            y1 = std::max(y1, p.y);
        }
    if (x0 > x1) {
        x0 = 0;
        x1 = 1;
    }
    if (y0 > y1) {
        y0 = 0;
        y1 = 1;
    }
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    auto sx = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
    auto sy = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };

    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<text x='" << W / 2 << "' y='20' text-anchor='middle' font-size='15'>" << title
       << "</text>\n";
    os << "<text x='" << W / 2 << "' y='" << H - 10 << "' text-anchor='middle' font-size='12'>"
       << xlabel << "</text>\n";
    os << "<text x='15' y='" << H / 2 << "' text-anchor='middle' font-size='12' transform='rotate(-90 15 "
       << H / 2 << ")'>" << ylabel << "</text>\n";
    os << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr << "' y2='" << H - mb
       << "' stroke='black'/>\n";
    os << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << H - mb
       << "' stroke='black'/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + (x1 - x0) * k / 4, yv = y0 + (y1 - y0) * k / 4;
        os << "<text x='" << sx(xv) << "' y='" << H - mb + 18
           << "' text-anchor='middle' font-size='10'>" << fmt_double(std::round(xv * 1000) / 1000)
           << "</text>\n";
        os << "<text x='" << ml - 8 << "' y='" << sy(yv) + 4
           << "' text-anchor='end' font-size='10'>" << fmt_double(std::round(yv * 1000) / 1000)
           << "</text>\n";
    }
    int li = 0;
    for (const auto& s : series) {
        if (s.line && s.points.size() > 1) {
            os << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.5' points='";
            for (const auto& p : s.points) os << sx(p.x) << ',' << sy(p.y) << ' ';
            os << "'/>\n";
        }
        for (const auto& p : s.points)
            os << "<circle cx='" << sx(p.x) << "' cy='" << sy(p.y) << "' r='3' fill='" << s.color
               << "'/>\n";
        os << "<text x='" << W - mr - 5 << "' y='" << mt + 15 * (li + 1)
           << "' text-anchor='end' font-size='11' fill='" << s.color << "'>" << s.label
           << "</text>\n";
        ++li;
    }
    os << "</svg>\n";
    return os.str();
}

inline std::string wulff_svg(const WulffShape& w) {
    double extent = 0.1;
    for (const Vec2d& p : w.normalized) extent = std::max({extent, std::abs(p.x), std::abs(p.y)});
    extent *= 1.2;
    const int W = 440;
    auto sx = [&](double x) { return (x / extent + 1.0) * W / 2; };
    auto sy = [&](double y) { return (1.0 - y / extent) * W / 2; };
    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << W << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<line x1='0' y1='" << W / 2 << "' x2='" << W << "' y2='" << W / 2
       << "' stroke='#cccccc'/>\n";
    os << "<line x1='" << W / 2 << "' y1='0' x2='" << W / 2 << "' y2='" << W
       << "' stroke='#cccccc'/>\n";
    os << "<polygon fill='#9ecae1' fill-opacity='0.5' stroke='#1f77b4' stroke-width='1.5' points='";
    for (const Vec2d& p : w.normalized) os << sx(p.x) << ',' << sy(p.y) << ' ';
    os << "'/>\n</svg>\n";
    return os.str();
}

// ---- Report bundles ---------------------------------------------------------------------------

// CSV + JSON + SVG emission for a directory of run records. Each experiment
// subcommand writes a JSON record; `report` turns a directory of them into
// tables and plots.
inline void write_report(const std::string& out_dir, const std::vector<json>& records) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    json summary = json::array();
    std::vector<SvgSeries> log_vs_n, log_vs_n2, lln_band;
    SvgSeries lower{"log lower-tail rate", "#d62728", {}, true};
    SvgSeries lower2{"log lower-tail rate", "#d62728", {}, true};
    SvgSeries med{"median n*UB", "#1f77b4", {}, true};
    SvgSeries lbs{"certificate n*LB", "#2ca02c", {}, true};

    for (const json& rec : records) {
        summary.push_back(rec);
        const std::string kind = rec.value("kind", "");
        if (kind == "tail" && rec.contains("cells")) {
            for (const auto& c : rec["cells"]) {
                const double rate = c.value("lower_rate", 0.0);
                if (rate > 0.0 && rate < 1.0) {
                    const double n = c.value("n", 0);
                    lower.points.push_back({n, std::log(rate)});
                    lower2.points.push_back({n * n, std::log(rate)});
                }
            }
        }
        if (kind == "lln" && rec.contains("medians")) {
            for (const auto& m : rec["medians"]) {
                med.points.push_back({m.at("n").get<double>(), m.at("median_nub").get<double>()});
                lbs.points.push_back({m.at("n").get<double>(), m.at("n_lb").get<double>()});
            }
        }
    }
    if (!lower.points.empty()) {
        write_text(out_dir + "/logp_vs_n.svg",
                   svg_plot("log rate vs n", "n", "log p", {lower}));
        write_text(out_dir + "/logp_vs_n2.svg",
                   svg_plot("log rate vs n^2", "n^2", "log p", {lower2}));
    }
    if (!med.points.empty())
        write_text(out_dir + "/nphi_vs_n.svg",
                   svg_plot("n*Phi vs n", "n", "n*Phi", {med, lbs}));

    json bundle{{"records", summary}};
    bundle["spec_hash"] = spec_hash(summary);
    write_text(out_dir + "/summary.json", bundle.dump(2) + "\n");
}

}  // namespace perciso
