#include "lab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "lab/geometry_ops.hpp"
#include "lab/parallel.hpp"
#include "lab/pointset_ops.hpp"
#include "lab/shape.hpp"

namespace lab {

namespace {

namespace fs = std::filesystem;

// default symmetric-difference exponent of a window shape
double derived_beta(const Shape& s, std::string& source) {
    return std::visit(
        [&](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Ball> || std::is_same_v<T, ConvexPolygon>) {
                source = "convex window";
                return 1.0;
            } else if constexpr (std::is_same_v<T, KochRegion>) {
                source = "snowflake window";
                return 2.0 - std::log(4.0) / std::log(3.0);
            } else if constexpr (std::is_same_v<T, RectangleUnionGamma>) {
                source = "rectangle-union target";
                return v.beta;
            } else {
                throw std::invalid_argument(
                    "experiment: no default symmetric-difference exponent for this "
                    "window; set beta in the config");
            }
        },
        s);
}

std::string family_label(const FamilySpec& family) {
    if (const auto* aff = std::get_if<AffineFamily>(&family))
        return "affine-" + shape_to_json(aff->shape).at("variant").get<std::string>();
    return "halfspace";
}

PointSet points_for(const ExperimentConfig& config, long long n,
                    const PointSet* csv_set) {
    const std::string& id = config.generator.id;
    if (id == "iid")
        return iid_points(config.measure, n, config.seed + static_cast<std::uint64_t>(n));
    if (id == "partition") return partition_points(config.measure, n, config.seed);
    if (id == "equispaced-circle") return equispaced_circle(n);
    // csv: the first n rows of the fixed file
    PointSet ps;
    ps.dim = csv_set->dim;
    if (ps.dim == 3)
        ps.pts3.assign(csv_set->pts3.begin(), csv_set->pts3.begin() + n);
    else
        ps.pts2.assign(csv_set->pts2.begin(), csv_set->pts2.begin() + n);
    return ps;
}

void write_plot_svg(const std::string& path, const ExperimentReport& r) {
    // assemble log2-log2 data with delta-method error bars
    const std::size_t m = r.n.size();
    std::vector<double> x(m), y(m), bar(m);
    for (std::size_t i = 0; i < m; ++i) {
        x[i] = std::log2(static_cast<double>(r.n[i]));
        y[i] = std::log2(r.rows[i].value);
        bar[i] = r.rows[i].std_error / (r.rows[i].value * std::log(2.0));
    }
    // fit and guide lines anchored at the data centroid
    double cx = 0, cy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        cx += x[i];
        cy += y[i];
    }
    cx /= m;
    cy /= m;

    double x0 = x.front() - 0.5, x1 = x.back() + 0.5;
    double y0 = y[0], y1 = y[0];
    for (std::size_t i = 0; i < m; ++i) {
        y0 = std::min(y0, y[i] - bar[i]);
        y1 = std::max(y1, y[i] + bar[i]);
    }
    for (double xe : {x0, x1}) {
        y0 = std::min({y0, cy + r.fit.slope * (xe - cx), cy + r.predicted_slope * (xe - cx)});
        y1 = std::max({y1, cy + r.fit.slope * (xe - cx), cy + r.predicted_slope * (xe - cx)});
    }
    const double ypad = 0.08 * (y1 - y0) + 0.05;
    y0 -= ypad;
    y1 += ypad;

    const double W = 640, H = 480, ml = 70, mr = 20, mt = 48, mb = 58;
    auto px = [&](double v) { return ml + (v - x0) / (x1 - x0) * (W - ml - mr); };
    auto py = [&](double v) { return H - mb - (v - y0) / (y1 - y0) * (H - mt - mb); };

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("write_plot_svg: cannot open " + path);
    char b[512];
    auto put = [&](const char* fmt, auto... args) {
        std::snprintf(b, sizeof b, fmt, args...);
        out << b;
    };

    put("<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 %.0f %.0f\" "
        "font-family=\"monospace\" font-size=\"13\">\n", W, H);
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // grid and tick labels at integer log2 positions
    for (int k = static_cast<int>(std::ceil(x0)); k <= static_cast<int>(std::floor(x1)); ++k) {
        put("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>\n",
            px(k), py(y0), px(k), py(y1));
        put("<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">2^%d</text>\n", px(k),
            H - mb + 18.0, k);
    }
    const int ystep = std::max(1, static_cast<int>((y1 - y0) / 6.0));
    for (int k = static_cast<int>(std::ceil(y0)); k <= static_cast<int>(std::floor(y1));
         k += ystep) {
        put("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>\n",
            px(x0), py(k), px(x1), py(k));
        put("<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">2^%d</text>\n", ml - 8.0,
            py(k) + 4.0, k);
    }
    put("<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" "
        "stroke=\"black\"/>\n", ml, mt, W - ml - mr, H - mt - mb);

    // predicted-slope guide (dashed) and fitted line
    put("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#2ca02c\" "
        "stroke-dasharray=\"6,4\" stroke-width=\"1.5\"/>\n",
        px(x0), py(cy + r.predicted_slope * (x0 - cx)), px(x1),
        py(cy + r.predicted_slope * (x1 - cx)));
    put("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#d62728\" "
        "stroke-width=\"1.5\"/>\n",
        px(x0), py(cy + r.fit.slope * (x0 - cx)), px(x1),
        py(cy + r.fit.slope * (x1 - cx)));

    // error bars and points
    for (std::size_t i = 0; i < m; ++i) {
        put("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#1f77b4\"/>\n",
            px(x[i]), py(y[i] - bar[i]), px(x[i]), py(y[i] + bar[i]));
        put("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#1f77b4\"/>\n",
            px(x[i]) - 4.0, py(y[i] - bar[i]), px(x[i]) + 4.0, py(y[i] - bar[i]));
        put("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#1f77b4\"/>\n",
            px(x[i]) - 4.0, py(y[i] + bar[i]), px(x[i]) + 4.0, py(y[i] + bar[i]));
        put("<circle cx=\"%.1f\" cy=\"%.1f\" r=\"3.5\" fill=\"#1f77b4\"/>\n", px(x[i]),
            py(y[i]));
    }

    put("<text x=\"%.1f\" y=\"24\" font-size=\"15\">%s [%s]</text>\n", ml,
        r.name.c_str(), r.pass ? "PASS" : "FAIL");
    put("<text x=\"%.1f\" y=\"40\" fill=\"#d62728\">fit slope %.4f +/- %.4f%s</text>\n",
        ml, r.fit.slope, r.fit.std_error,
        r.fit.dropped_smallest ? " (smallest N dropped)" : "");
    put("<text x=\"%.1f\" y=\"%.1f\" fill=\"#2ca02c\">predicted %.4f -- %s</text>\n",
        ml, H - mb + 36.0, r.predicted_slope, r.provenance.c_str());
    put("<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">N</text>\n",
        ml + (W - ml - mr) / 2.0, H - 8.0);
    out << "</svg>\n";
}

} // namespace

void validate(const ExperimentConfig& config) {
    validate(config.measure);
    std::visit([&](const auto& fam) { validate_family(fam, config.measure); },
               config.family);
    if (config.n_list.size() < 4)
        throw std::invalid_argument("experiment: n_list needs at least 4 entries");
    for (std::size_t i = 0; i < config.n_list.size(); ++i) {
        if (config.n_list[i] < 1)
            throw std::invalid_argument("experiment: n_list entries must be >= 1");
        if (i > 0 && config.n_list[i] <= config.n_list[i - 1])
            throw std::invalid_argument("experiment: n_list must be strictly increasing");
    }
    if (config.n_poses < 1000)
        throw std::invalid_argument("experiment: n_poses must be >= 1000");
    const std::string& g = config.generator.id;
    if (g != "iid" && g != "partition" && g != "equispaced-circle" && g != "csv")
        throw std::invalid_argument("experiment: unknown generator id: " + g);
    if (g == "csv" && config.generator.csv_path.empty())
        throw std::invalid_argument("experiment: csv generator needs a path");
    if (config.beta < 0.0 || config.beta > 2.0)
        throw std::invalid_argument("experiment: beta must lie in [0, 2]");
    if (!(config.pass_band > 0.0))
        throw std::invalid_argument("experiment: pass_band must be positive");
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    c.name = j.value("name", std::string("experiment"));
    c.measure = measure_from_json(j.at("measure"));

    const nlohmann::json& f = j.at("family");
    const std::string fid = f.at("id").get<std::string>();
    if (fid == "affine") {
        AffineFamily fam;
        fam.shape = shape_from_json(f.at("shape"));
        fam.a = f.value("a", 0.25);
        fam.b = f.value("b", 1.0);
        // translation box: every pose overlapping the support, plus margin
        const double reach =
            c.measure.support_radius + fam.b * bounding_radius(fam.shape);
        const double half = reach * 1.05;
        fam.box_lo = {-half, -half};
        fam.box_hi = {half, half};
        c.family = fam;
    } else if (fid == "halfspace") {
        HalfSpaceFamily fam;
        fam.rho_max = f.value("rho_max", c.measure.support_radius);
        c.family = fam;
    } else {
        throw std::invalid_argument("config_from_json: unknown family id: " + fid);
    }

    const nlohmann::json& g = j.at("generator");
    c.generator.id = g.at("id").get<std::string>();
    c.generator.csv_path = g.value("path", std::string());
    c.n_list = j.at("n_list").get<std::vector<long long>>();
    c.n_poses = j.value("n_poses", 2048LL);
    c.seed = j.value("seed", std::uint64_t{1});
    c.out_dir = j.value("out", std::string("."));
    c.beta = j.value("beta", 0.0);
    c.pass_band = j.value("pass_band", 0.05);
    return c;
}

nlohmann::json config_to_json(const ExperimentConfig& config) {
    nlohmann::json j;
    j["name"] = config.name;
    j["measure"] = measure_to_json(config.measure);
    if (const auto* aff = std::get_if<AffineFamily>(&config.family)) {
        j["family"] = {{"id", "affine"},
                       {"a", aff->a},
                       {"b", aff->b},
                       {"shape", shape_to_json(aff->shape)}};
    } else {
        j["family"] = {{"id", "halfspace"},
                       {"rho_max", std::get<HalfSpaceFamily>(config.family).rho_max}};
    }
    j["generator"] = {{"id", config.generator.id}};
    if (!config.generator.csv_path.empty())
        j["generator"]["path"] = config.generator.csv_path;
    j["n_list"] = config.n_list;
    j["n_poses"] = config.n_poses;
    j["seed"] = config.seed;
    j["out"] = config.out_dir;
    if (config.beta > 0.0) j["beta"] = config.beta;
    j["pass_band"] = config.pass_band;
    return j;
}

SlopeFit fit_l2_slope(const std::vector<long long>& n,
                      const std::vector<L2Estimate>& rows) {
    if (n.size() != rows.size() || n.size() < 3)
        throw std::invalid_argument("fit_l2_slope: need >= 3 matching rows");
    for (const L2Estimate& r : rows)
        if (!(r.value > 0.0))
            throw std::invalid_argument("fit_l2_slope: nonpositive L2 value");

    SlopeFit fit;
    std::size_t first = 0;
    if (n.size() >= 4 && rows[0].std_error > 0.25 * rows[0].value) {
        fit.dropped_smallest = true;
        first = 1;
    }
    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    for (std::size_t i = first; i < n.size(); ++i) {
        const double x = std::log2(static_cast<double>(n[i]));
        const double y = std::log2(rows[i].value);
        const double se = std::max(rows[i].std_error / (rows[i].value * std::log(2.0)),
                                   1e-9);
        const double w = 1.0 / (se * se);
        sw += w;
        swx += w * x;
        swy += w * y;
        swxx += w * x * x;
        swxy += w * x * y;
    }
    const double sxx = swxx - swx * swx / sw;
    fit.slope = (swxy - swx * swy / sw) / sxx;
    fit.std_error = std::sqrt(1.0 / sxx);
    return fit;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
    validate(config);

    PointSet csv_set;
    if (config.generator.id == "csv") {
        csv_set = read_pointset_csv(config.generator.csv_path);
        if (csv_set.size() < config.n_list.back())
            throw std::invalid_argument("experiment: point file " +
                                        config.generator.csv_path + " holds only " +
                                        std::to_string(csv_set.size()) + " points");
    }

    std::vector<PointSet> sets;
    sets.reserve(config.n_list.size());
    for (long long n : config.n_list) {
        try {
            sets.push_back(points_for(config, n, &csv_set));
        } catch (const std::exception& e) {
            throw std::runtime_error(config.name + ": generator stage at N=" +
                                     std::to_string(n) + ": " + e.what());
        }
    }

    ExperimentReport report;
    report.name = config.name;
    report.n = config.n_list;
    const L2Options mc{config.n_poses, config.seed};
    if (const auto* aff = std::get_if<AffineFamily>(&config.family)) {
        try {
            report.rows = l2_affine_sweep(sets, config.measure, *aff, mc);
        } catch (const std::exception& e) {
            throw std::runtime_error(config.name + ": l2 sweep stage: " + e.what());
        }
    } else {
        const auto& fam = std::get<HalfSpaceFamily>(config.family);
        for (std::size_t i = 0; i < sets.size(); ++i) {
            try {
                report.rows.push_back(l2_halfspace(sets[i], config.measure, fam, mc));
            } catch (const std::exception& e) {
                throw std::runtime_error(config.name + ": l2 stage at N=" +
                                         std::to_string(config.n_list[i]) + ": " +
                                         e.what());
            }
        }
    }

    report.fit = fit_l2_slope(report.n, report.rows);
    char buf[160];
    if (config.generator.id == "iid") {
        report.predicted_slope = 0.5;
        report.provenance = "iid draws: binomial variance grows like N";
    } else {
        std::string source = "config";
        double beta = config.beta;
        if (beta == 0.0) {
            if (const auto* aff = std::get_if<AffineFamily>(&config.family))
                beta = derived_beta(aff->shape, source);
            else {
                beta = 1.0;
                source = "half-space sections";
            }
        }
        report.predicted_slope = 0.5 - beta / (2.0 * config.measure.alpha);
        std::snprintf(buf, sizeof buf, "alpha=%.6g (measure growth), beta=%.6g (%s)",
                      config.measure.alpha, beta, source.c_str());
        report.provenance = buf;
    }
    report.pass_band = config.pass_band;
    report.pass =
        std::fabs(report.fit.slope - report.predicted_slope) <= config.pass_band;

    // artifacts: rows.csv, report.json, plot.svg (byte-stable across reruns)
    fs::create_directories(config.out_dir);
    const std::string rows_path = config.out_dir + "/rows.csv";
    std::remove(rows_path.c_str());
    const std::string label = family_label(config.family);
    for (std::size_t i = 0; i < report.rows.size(); ++i)
        append_run_log(rows_path, l2_record(label, report.n[i], report.rows[i]));
    std::ofstream rep(config.out_dir + "/report.json", std::ios::trunc);
    rep << report_to_json(report, config).dump(2) << "\n";
    write_plot_svg(config.out_dir + "/plot.svg", report);
    return report;
}

nlohmann::json report_to_json(const ExperimentReport& report,
                              const ExperimentConfig& config) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        rows.push_back({{"N", report.n[i]},
                        {"value", report.rows[i].value},
                        {"stderr", report.rows[i].std_error},
                        {"n_poses", report.rows[i].n_poses},
                        {"seed", report.rows[i].seed}});
    }
    return nlohmann::json{
        {"name", report.name},
        {"config", config_to_json(config)},
        {"rows", rows},
        {"fit",
         {{"slope", report.fit.slope},
          {"stderr", report.fit.std_error},
          {"dropped_smallest", report.fit.dropped_smallest},
          {"rule", "smallest N excluded when its stderr exceeds 25% of its value"}}},
        {"predicted_slope", report.predicted_slope},
        {"provenance", report.provenance},
        {"pass_band", report.pass_band},
        {"verdict", report.pass ? "PASS" : "FAIL"}};
}

SuiteSummary run_suite(const std::string& manifest_path, const std::string& out_dir) {
    std::ifstream in(manifest_path);
    if (!in)
        throw std::runtime_error("run_suite: cannot open manifest " + manifest_path);
    nlohmann::json manifest;
    in >> manifest;
    const nlohmann::json& list =
        manifest.is_array() ? manifest : manifest.at("configs");

    const fs::path base = fs::path(manifest_path).parent_path();
    std::vector<ExperimentConfig> configs;
    for (const nlohmann::json& entry : list) {
        const std::string rel = entry.get<std::string>();
        const fs::path p = fs::path(rel).is_absolute() ? fs::path(rel) : base / rel;
        std::ifstream cfg(p);
        if (!cfg)
            throw std::runtime_error("run_suite: missing config file " + p.string());
        nlohmann::json cj;
        cfg >> cj;
        ExperimentConfig c = config_from_json(cj);
        c.out_dir = out_dir + "/" + c.name;
        configs.push_back(std::move(c));
    }

    SuiteSummary summary;
    summary.rows.resize(configs.size());
    std::vector<std::string> errors(configs.size());
    parallel_for(configs.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            try {
                const ExperimentReport r = run_experiment(configs[i]);
                summary.rows[i] = {r.name, r.fit.slope, r.fit.std_error,
                                   r.predicted_slope, r.pass};
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    });
    for (const std::string& e : errors)
        if (!e.empty()) throw std::runtime_error("run_suite: " + e);
    for (const SuiteRow& r : summary.rows) summary.all_pass = summary.all_pass && r.pass;

    fs::create_directories(out_dir);
    std::ofstream out(out_dir + "/summary.csv", std::ios::trunc);
    out << "name,slope,stderr,predicted,verdict\n";
    char line[256];
    for (const SuiteRow& r : summary.rows) {
        std::snprintf(line, sizeof line, "%s,%.17g,%.17g,%.17g,%s\n", r.name.c_str(),
                      r.slope, r.std_error, r.predicted, r.pass ? "PASS" : "FAIL");
        out << line;
    }
    return summary;
}

} // namespace lab
