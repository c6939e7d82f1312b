// Command-line front end: generate tessellations, run verification batteries, cut sections.
//
// Exit codes: 0 success (also when a diagnostic reports a model failure), 1 usage or
// configuration error, 2 numerical failure.

#include "plt/cells.hpp"
#include "plt/density.hpp"
#include "plt/experiments.hpp"
#include "plt/io.hpp"
#include "plt/tessellation.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace plt;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Params {
    std::string model_file;
    std::optional<json> model_json;
    int d = 2;
    double gamma = 1.0;
    double nu = 0.0;
    std::uint64_t seed = 1;
    std::vector<double> window{0, 0, 8, 8};
    double margin = inf;
    int replicates = -1; // -1: the command's default
    int jobs = 1;
    std::string out = "out";
    std::string battery;
    std::string config;
};

json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

// Overrides flag values by the fields of the config file; unknown fields are rejected.
void apply_config(Params& p)
{
    if (p.config.empty()) return;
    json c = read_json_file(p.config);
    if (!c.is_object()) throw ConfigError("config must be a JSON object");
    try {
        for (auto& [k, v] : c.items()) {
            if (k == "model") {
                if (v.is_string()) p.model_file = v.get<std::string>();
                else p.model_json = v;
            } else if (k == "family" || k == "params") {
                // handled below
            } else if (k == "d") p.d = v.get<int>();
            else if (k == "gamma") p.gamma = v.get<double>();
            else if (k == "nu") p.nu = v.get<double>();
            else if (k == "seed") p.seed = v.get<std::uint64_t>();
            else if (k == "window") p.window = v.get<std::vector<double>>();
            else if (k == "margin") p.margin = v.get<double>();
            else if (k == "replicates" || k == "n_replicates") p.replicates = v.get<int>();
            else if (k == "jobs") p.jobs = v.get<int>();
            else if (k == "out") p.out = v.get<std::string>();
            else if (k == "battery") p.battery = v.get<std::string>();
            else throw ConfigError("unknown config field: " + k);
        }
        if (c.contains("family")) {
            // Shorthand for the three normalized families: {"family": "beta", "params": {"beta": 1}}.
            const std::string fam = c.at("family").get<std::string>();
            json prm = c.value("params", json::object());
            if (fam == "beta") p.model_json = to_json(beta_model(p.d, prm.at("beta").get<double>()));
            else if (fam == "beta_prime") p.model_json = to_json(beta_prime_model(p.d, prm.at("beta").get<double>()));
            else if (fam == "gaussian") p.model_json = to_json(gaussian_model(prm.at("lambda").get<double>()));
            else throw ConfigError("unknown family: " + fam);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

DensityModel load(const Params& p)
{
    try {
        if (p.model_json) return load_model(*p.model_json);
        if (!p.model_file.empty()) return load_model(read_json_file(p.model_file));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    return beta_model(p.d, 1.0);
}

void validate(const Params& p)
{
    if (p.window.size() != 4) throw ConfigError("window needs four numbers x0,y0,x1,y1");
    if (!(p.window[2] > p.window[0]) || !(p.window[3] > p.window[1])) throw InvalidArgument("empty window");
    if (!(p.gamma > 0)) throw ConfigError("gamma must be positive");
    if (p.replicates < 1) throw ConfigError("replicates must be >= 1");
    if (p.jobs < 1) throw ConfigError("jobs must be >= 1");
    if (!(p.margin >= 0)) throw ConfigError("margin must be non-negative");
}

void require_planar(const Params& p, const char* what)
{
    if (p.d != 2) throw ConfigError(std::string(what) + " is implemented for d = 2 only");
}

void write_file(const fs::path& path, const std::string& content)
{
    fs::create_directories(path.parent_path());
    std::ofstream o(path, std::ios::binary);
    if (!o) throw ConfigError("cannot write " + path.string());
    o << content;
}

std::string replicate_dir(int r)
{
    char b[32];
    std::snprintf(b, sizeof b, "replicate_%03d", r);
    return b;
}

json config_echo(const Params& p, const DensityModel& f)
{
    return {{"model", to_json(f)}, {"d", p.d},       {"gamma", p.gamma}, {"nu", p.nu},
            {"seed", p.seed},      {"window", p.window}, {"margin", std::isfinite(p.margin) ? json(p.margin) : json("inf")},
            {"replicates", p.replicates}};
}

// ---------------------------------------------------------------------------------------------

int cmd_generate(const Params& p)
{
    require_planar(p, "generate");
    const DensityModel f = load(p);
    detail::require_admissible(f, p.d);
    const Vec<2> lo{p.window[0], p.window[1]}, hi{p.window[2], p.window[3]};
    struct Files {
        std::string points, tess, diagram, cells, svg;
    };
    auto files = parallel_map<Files>(static_cast<std::size_t>(p.replicates), p.jobs, [&](std::size_t r) {
        Files out;
        auto s = sample_certified<2>(f, p.gamma, lo, hi, replicate_seed(p.seed, r), exact_coverage<2>(), 1e-6, p.margin);
        auto dual = build_regular_triangulation(s.points);
        auto L = laguerre_diagram_from_dual(dual, Box2{lo, hi});
        std::ostringstream pts, cells, svg;
        write_jsonl(pts, s, f);
        try {
            write_csv(cells, cell_statistics(dual, s.window, p.nu));
        } catch (const InvalidArgument&) {
            cells << "simplex,volume,nvertices,weight0,weight1,weight2,apex_t\n";
        }
        write_svg(svg, L, dual.sites);
        out.points = pts.str();
        out.tess = to_json(dual).dump(1) + "\n";
        out.diagram = to_json(L, dual.sites).dump(1) + "\n";
        out.cells = cells.str();
        out.svg = svg.str();
        return out;
    });
    const fs::path root(p.out);
    for (int r = 0; r < p.replicates; ++r) {
        const fs::path dir = root / replicate_dir(r);
        const auto& F = files[r];
        write_file(dir / "points.jsonl", F.points);
        write_file(dir / "tessellation.json", F.tess);
        write_file(dir / "diagram.json", F.diagram);
        write_file(dir / "cells.csv", F.cells);
        write_file(dir / "diagram.svg", F.svg);
    }
    write_file(root / "config.json", config_echo(p, f).dump(1) + "\n");
    std::cout << "generated " << p.replicates << " replicate(s) in " << root.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------------------------

struct BatteryResult {
    std::vector<MomentReport> reports;
    json summary = json::object();
    bool pass = true;
};

BatteryResult battery_intensity(const Params& p, const DensityModel& f)
{
    require_planar(p, "the intensity battery");
    BatteryResult b;
    for (double c : {0.25, 1.0, 4.0}) {
        const double t = cap_for_count(f, p.gamma, p.d, c);
        const double target = expected_count_below_paraboloid(f, p.gamma, p.d, t);
        auto n = parallel_map<double>(static_cast<std::size_t>(p.replicates), p.jobs, [&](std::size_t r) {
            return static_cast<double>(count_below_paraboloid(f, p.gamma, t, replicate_seed(p.seed, r)));
        });
        char lab[64];
        std::snprintf(lab, sizeof lab, "count_below_t=%.9g", t);
        b.reports.push_back(mean_report(n, target, "sample-mean", lab));
    }
    return b;
}

BatteryResult battery_admissible(const Params& p, const DensityModel& f)
{
    BatteryResult b;
    auto rep = check_admissible(f, p.d);
    json j;
    to_json(j, rep);
    b.summary["admissibility"] = j;
    b.pass = rep.admissible();
    return b;
}

// Each replicate is one KS run over 30 independent section pairs.
BatteryResult battery_sectional(const Params& p, const DensityModel& f)
{
    require_planar(p, "the sectional battery");
    const double side = std::min(p.window[2] - p.window[0], p.window[3] - p.window[1]);
    auto c = compare_sections(f, p.gamma, side, static_cast<std::size_t>(p.replicates), 30, p.seed, p.jobs);
    BatteryResult b;
    b.reports = {c.mean, c.second_moment};
    b.summary["ks_pass_rate"] = c.ks_pass_rate();
    b.summary["ks_runs"] = c.runs;
    b.summary["pairs_per_run"] = 30;
    b.pass = c.ks_pass_rate() >= 0.95;
    return b;
}

BatteryResult battery_moments(const Params& p, const DensityModel& f)
{
    require_planar(p, "the moments battery");
    const double side = std::min(p.window[2] - p.window[0], p.window[3] - p.window[1]);
    auto reps = parallel_map<HarvestedVolumes>(static_cast<std::size_t>(p.replicates), p.jobs,
                                               [&](std::size_t r) { return harvest_replicate(f, p.gamma, side, replicate_seed(p.seed, r)); });
    BatteryResult b;
    const TypicalCellSpec spec{f, p.gamma, p.nu, p.d};
    for (double s : {1.0, 2.0}) {
        char lab[64];
        std::snprintf(lab, sizeof lab, "volume_moment_s=%g", s);
        try {
            b.reports.push_back(empirical_typical_cell_moments(reps, p.nu, s, volume_moment(spec, s), lab));
        } catch (const Divergence& e) {
            b.summary[lab] = std::string("skipped: ") + e.what();
        }
    }
    std::size_t n = 0;
    for (const auto& r : reps) n += r.volumes.size();
    b.summary["simplices"] = n;
    return b;
}

BatteryResult battery_decomposition(const Params& p, const DensityModel& f)
{
    BatteryResult b;
    auto dec = canonical_decomposition(f);
    auto [pg, sg] = decomposition_grid(f);
    const double res = decomposition_check(f, dec.phi, dec.psi, pg, sg);
    b.summary["decomposition_residual"] = res;
    const TypicalCellSpec spec{f, p.gamma, p.nu, p.d};
    DecomposedCellSampler S(spec);
    const std::size_t n = 1000 * static_cast<std::size_t>(p.replicates);
    auto vol = parallel_map<double>(n, p.jobs, [&](std::size_t i) { return S.draw(p.seed, i).volume; });
    for (double s : {1.0, 2.0}) {
        char lab[64];
        std::snprintf(lab, sizeof lab, "sampler_volume_moment_s=%g", s);
        std::vector<double> v(vol.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::pow(vol[i], s);
        try {
            b.reports.push_back(mean_report(v, volume_moment(spec, s), "decomposed-sampler", lab));
        } catch (const Divergence& e) {
            b.summary[lab] = std::string("skipped: ") + e.what();
        }
    }
    b.pass = res <= 1e-12;
    return b;
}

int cmd_verify(const Params& p)
{
    const DensityModel f = load(p);
    BatteryResult b;
    if (p.battery == "intensity") b = battery_intensity(p, f);
    else if (p.battery == "admissible") b = battery_admissible(p, f);
    else if (p.battery == "sectional") b = battery_sectional(p, f);
    else if (p.battery == "moments") b = battery_moments(p, f);
    else if (p.battery == "decomposition") b = battery_decomposition(p, f);
    else throw ConfigError("unknown battery: " + p.battery);
    for (const auto& r : b.reports) b.pass = b.pass && r.pass(3.0);
    std::string csv = moment_csv_header();
    json reps = json::array();
    for (const auto& r : b.reports) {
        csv += to_csv_row(r);
        reps.push_back(to_json(r));
    }
    json summary = {{"battery", p.battery}, {"pass", b.pass}, {"z_threshold", 3.0}, {"reports", reps}, {"details", b.summary},
                    {"config", config_echo(p, f)}};
    const fs::path root(p.out);
    write_file(root / "report.csv", csv);
    write_file(root / "summary.json", summary.dump(1) + "\n");
    std::cout << p.battery << ": " << (b.pass ? "PASS" : "FAIL") << "\n" << csv;
    return 0;
}

// ---------------------------------------------------------------------------------------------

int cmd_section(const Params& p)
{
    require_planar(p, "section");
    const DensityModel f = load(p);
    const double side = std::min(p.window[2] - p.window[0], p.window[3] - p.window[1]);
    auto runs = parallel_map<SectionPair>(static_cast<std::size_t>(p.replicates), p.jobs,
                                          [&](std::size_t r) { return section_pair(f, p.gamma, side, replicate_seed(p.seed, r)); });
    const fs::path root(p.out);
    std::string csv = "run,source,length\n";
    json sections = json::array();
    char buf[96];
    for (std::size_t r = 0; r < runs.size(); ++r) {
        for (double x : runs[r].section_lengths) {
            std::snprintf(buf, sizeof buf, "%zu,section,%.17g\n", r, x);
            csv += buf;
        }
        for (double x : runs[r].direct_lengths) {
            std::snprintf(buf, sizeof buf, "%zu,direct,%.17g\n", r, x);
            csv += buf;
        }
        json s = to_json(runs[r].section);
        s["segment_length"] = runs[r].segment_length;
        sections.push_back(s);
    }
    write_file(root / "lengths.csv", csv);
    write_file(root / "sections.json", json{{"config", config_echo(p, f)}, {"sections", sections}}.dump(1) + "\n");
    std::cout << "wrote " << runs.size() << " section(s) to " << root.string() << "\n";
    return 0;
}

void add_common(CLI::App* c, Params& p)
{
    c->add_option("--model", p.model_file, "density model JSON file (default: beta model, beta = 1)");
    c->add_option("--d", p.d, "dimension");
    c->add_option("--gamma", p.gamma, "intensity");
    c->add_option("--nu", p.nu, "volume weight exponent");
    c->add_option("--seed", p.seed, "global seed");
    c->add_option("--window", p.window, "inner window x0,y0,x1,y1")->delimiter(',')->expected(4);
    c->add_option("--margin", p.margin, "spatial margin (default: unbounded)");
    c->add_option("--replicates", p.replicates, "number of replicates (default: 1; verify: 100)");
    c->add_option("--jobs", p.jobs, "worker threads");
    c->add_option("--out", p.out, "output directory");
    c->add_option("--config", p.config, "JSON config; its fields override flags");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Poisson-Laguerre tessellations: generation and verification"};
    app.require_subcommand(1);
    Params p;
    auto* gen = app.add_subcommand("generate", "sample a tessellation and write JSON, CSV and SVG");
    auto* ver = app.add_subcommand("verify", "run a verification battery");
    auto* sec = app.add_subcommand("section", "cut tessellations with random lines");
    for (auto* c : {gen, ver, sec}) add_common(c, p);
    ver->add_option("--battery", p.battery, "intensity | admissible | sectional | moments | decomposition");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    try {
        apply_config(p);
        if (p.replicates == -1) p.replicates = ver->parsed() ? 100 : 1;
        validate(p);
        if (gen->parsed()) return cmd_generate(p);
        if (ver->parsed()) {
            if (p.battery.empty()) throw ConfigError("verify needs --battery");
            return cmd_verify(p);
        }
        return cmd_section(p);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Unsupported& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    }
}
