#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "grassproj/config.hpp"
#include "grassproj/constructions.hpp"
#include "grassproj/experiments.hpp"
#include "grassproj/highlow.hpp"
#include "grassproj/incidence.hpp"
#include "grassproj/nets.hpp"
#include "grassproj/parallel.hpp"

#ifndef GRASSPROJ_VERSION
#define GRASSPROJ_VERSION "0.0.0"
#endif

namespace grassproj::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

bool g_quiet = false;

__attribute__((format(printf, 1, 2))) void say(const char* f, ...) {
    if (g_quiet) return;
    va_list ap;
    va_start(ap, f);
    std::vprintf(f, ap);
    va_end(ap);
}

const std::vector<std::string> kGenerators{"bush", "product", "bush-family"};

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
    if (!out) throw ConfigError("write failed: " + path.string());
}

struct Manifest {
    std::string command;
    std::string config_path;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string started;
    std::vector<std::string> outputs;
};

void write_manifest(const Manifest& m, const fs::path& path) {
    ordered_json j;
    j["tool"] = "grassproj";
    j["version"] = GRASSPROJ_VERSION;
    j["command"] = m.command;
    j["config"] = m.config_path;
    j["config_hash"] = hex64(m.config_hash);
    j["seed"] = m.seed;
    j["threads"] = default_threads();
    j["started"] = m.started;
    j["finished"] = utc_now();
    j["outputs"] = m.outputs;
    write_file(path, j.dump(2) + "\n");
}

Config load_config(const std::string& path) {
    Config c = Config::load(path);
    if (!c.has("seed")) throw ConfigError(path + ": 'seed' is mandatory");
    if (c.get_int("seed") < 0) throw ConfigError(path + ": 'seed' must be nonnegative");
    return c;
}

std::string stem_of(const Config& c, const std::string& path, const std::string& fallback) {
    std::string name = c.string_or("name", "");
    if (name.empty()) name = fs::path(path).stem().string();
    return name.empty() ? fallback : name;
}

// ------------------------------------------------------------------ dim

struct DimArgs {
    std::string input;
    std::string metric;
    std::vector<double> scales;
    std::string csv;
};

std::vector<double> default_scales(double delta) {
    std::vector<double> s;
    for (double r = 4.0 * delta; r <= 0.25 + 1e-12; r *= 2.0) s.push_back(r);
    std::reverse(s.begin(), s.end());
    return s;
}

int cmd_dim(const DimArgs& a, const fs::path& out_dir) {
    NetCloud cloud;
    try {
        cloud = net_from_json(read_file(a.input));
    } catch (const ContractViolation& e) {
        throw ConfigError(a.input + ": " + e.what());
    }
    if (!a.metric.empty()) {
        const Space sp = Space::parse(a.metric);
        if (sp.point_dim() != cloud.space().point_dim())
            throw ConfigError("--metric " + a.metric + " does not match the encoding " + cloud.space().tag());
        cloud.points.space = sp;
    }
    std::vector<double> scales = a.scales;
    if (scales.empty()) {
        if (cloud.delta <= 0.0) throw ConfigError(a.input + ": delta is zero, pass --scales");
        scales = default_scales(cloud.delta);
    }
    if (scales.size() < 3) throw ConfigError("need at least three scales");
    const DimEstimate e = box_dimension(cloud.points, scales);
    const fs::path csv = a.csv.empty() ? out_dir / (fs::path(a.input).stem().string() + "_ladder.csv") : fs::path(a.csv);
    write_file(csv, ladder_csv(e));
    say("dim %.4f +- %.4f (%zu points, %zu scales)\nladder %s\n", e.slope, e.std_error, cloud.size(),
                scales.size(), csv.string().c_str());
    return kPass;
}

// ------------------------------------------------------------------ construct

struct ConstructArgs {
    std::string name;
    int n = 3;
    double a = 2.0;
    double beta = std::log(2.0) / std::log(3.0);
    int k = 2, l = 1, j = 0;
    double b = 1.0;
    bool full_B = false;
    double delta = 1.0 / 32;
    std::uint64_t seed = 0;
    std::string output;
};

int cmd_construct(const ConstructArgs& a, const fs::path& out_dir) {
    NetCloud cloud;
    if (a.name == "bush") {
        cloud = gen_direction_bush(a.n, a.delta, a.a);
    } else if (a.name == "product") {
        cloud = gen_product_example(a.n, a.beta, a.delta);
    } else {
        cloud = gen_bush_family(a.n, a.k, a.l, a.j, a.b, a.delta, a.full_B).leaves;
    }
    std::size_t invalid = 0;
    if (cloud.space().kind == SpaceKind::AffineLines) {
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const Vec c = cloud.points.vec(i);
            const int m = a.n - 1;
            if (!LocalLine(c.head(m), c.tail(m)).chart_valid()) ++invalid;
        }
    }
    const fs::path out = a.output.empty() ? out_dir / (a.name + ".json") : fs::path(a.output);
    write_file(out, net_to_json(cloud) + "\n");
    say("%s: %zu elements of %s, delta %.6g, %zu outside the chart\nwrote %s\n", a.name.c_str(),
                cloud.size(), cloud.space().tag().c_str(), cloud.delta, invalid, out.string().c_str());
    return invalid == 0 ? kPass : kFail;
}

// ------------------------------------------------------------------ scan

int cmd_scan(const std::string& path, const fs::path& out_dir) {
    Manifest man{"scan", path, 0, 0, utc_now(), {}};
    const Config c = load_config(path);
    const ExperimentConfig cfg = ExperimentConfig::from_config(c);
    cfg.validate();
    man.config_hash = c.hash();
    man.seed = cfg.seed;

    ResultRecord r = run_scan(cfg);
    r.config_hash = man.config_hash;

    const std::string stem = stem_of(c, path, "scan");
    const fs::path json = cfg.output_path.empty() ? out_dir / (stem + ".json") : fs::path(cfg.output_path);
    const fs::path csv = fs::path(json).replace_extension(".csv");
    write_file(json, result_to_json(r));
    write_file(csv, result_to_csv(r));
    man.outputs = {json.string(), csv.string()};
    write_manifest(man, fs::path(json).replace_extension(".manifest.json"));

    say("%s: %s scan, %zu V, median %.4f, p95 %.4f, target %.4f\n", r.name.c_str(), r.kind.c_str(),
                r.per_V.size(), r.quantiles.median, r.quantiles.p95, r.target_S);
    if (r.exceptional_count)
        say("exceptional %zu, dimension %.4f\n", *r.exceptional_count, r.exceptional_dim.value_or(0.0));
    for (const auto& f : r.flags)
        say("  %-24s %-5s value %.4f in [%.4f, %.4f] (%s)\n", f.name.c_str(), f.pass ? "pass" : "FAIL",
                    f.value, f.limit_low, f.limit_high, f.tolerance.c_str());
    if (!r.diagnostic.empty()) say("diagnostic: %s\n", r.diagnostic.c_str());
    say("runtime %.2f s\nwrote %s\n", r.runtime, json.string().c_str());
    return r.pass ? kPass : kFail;
}

// ------------------------------------------------------------------ highlow

std::vector<double> scales_or(const Config& c, std::vector<double> fallback) {
    return c.has("scales") ? c.get_list("scales") : std::move(fallback);
}

ordered_json lowpart_json(const LowPartReport& r) {
    ordered_json j;
    j["num_lines"] = r.num_lines;
    j["num_V"] = r.num_V;
    j["num_slabs"] = r.num_slabs;
    j["samples"] = r.samples;
    j["K"] = r.K;
    j["max_low"] = r.max_low;
    j["bound_unit"] = r.bound_unit;
    j["ratio"] = r.ratio;
    j["dominance"] = r.dominance;
    j["mean_multiplicity"] = r.mean_multiplicity;
    j["ratio_pass"] = r.ratio_pass;
    j["dominance_pass"] = r.dominance_pass;
    return j;
}

int run_lowpart(const Config& c, const std::string& path, std::optional<std::size_t> budget_flag,
                bool raw, Manifest& man, const fs::path& out_dir) {
    HighLowParams p;
    p.n = static_cast<int>(c.int_or("n", p.n));
    p.k = static_cast<int>(c.int_or("k", p.k));
    p.s = c.double_or("s", p.s);
    p.delta = c.double_or("delta", p.delta);
    p.M = static_cast<int>(c.int_or("M", p.M));
    p.K = c.double_or("K", p.K);
    p.cap = c.double_or("cap", p.cap);
    p.mu = c.double_or("mu", p.mu);
    p.g_radius = c.double_or("g_radius", p.g_radius);
    p.v_delta = c.double_or("v_delta", p.v_delta);
    p.kappa = c.double_or("kappa", p.kappa);
    p.window = c.double_or("window", p.window);
    p.samples_per_line = static_cast<int>(c.int_or("samples_per_line", p.samples_per_line));
    p.c_report = c.double_or("c_report", p.c_report);
    if (c.has("max_grid_bytes")) p.max_grid_bytes = static_cast<std::size_t>(c.get_int("max_grid_bytes"));
    if (budget_flag) p.max_grid_bytes = *budget_flag;
    p.seed = static_cast<std::uint64_t>(c.get_int("seed"));
    require(p.n >= 2 && p.M >= 2, "highlow: need n >= 2 and M >= 2");
    check_grid_budget(2 * (p.n - 1), p.M, 3, p.max_grid_bytes);

    const HighLowSetup setup = highlow_setup(p);
    const LowPartReport r = low_part_bound_check(setup.lines.points, setup.TV, p);
    ordered_json j;
    j["name"] = stem_of(c, path, "highlow");
    j["mode"] = "lowpart";
    j["seed"] = p.seed;
    j["config_hash"] = hex64(c.hash());
    j["n"] = p.n;
    j["k"] = p.k;
    j["s"] = p.s;
    j["delta"] = p.delta;
    j["M"] = p.M;
    j["report"] = lowpart_json(r);
    bool pass = r.ratio_pass && r.dominance_pass;
    std::optional<double> scaling;
    if (c.has("check_scaling") && c.get_bool("check_scaling")) {
        scaling = k_scaling_ratio(setup.lines.points, setup.TV, p);
        const double expected = std::pow(2.0, p.s - 2.0 * (p.k - 1));
        const bool ok = *scaling >= expected / 2.0 && *scaling <= expected * 2.0;
        j["k_scaling"] = {{"ratio", *scaling}, {"expected", expected}, {"pass", ok}};
        pass = pass && ok;
    }
    j["pass"] = pass;

    const std::string stem = j["name"].get<std::string>();
    const fs::path json = out_dir / (stem + ".json");
    const fs::path csv = out_dir / (stem + ".csv");
    std::ostringstream os;
    os.precision(10);
    os << "K,max_low,bound_unit,ratio,dominance,samples\n"
       << r.K << ',' << r.max_low << ',' << r.bound_unit << ',' << r.ratio << ',' << r.dominance << ','
       << r.samples << '\n';
    write_file(json, j.dump(2) + "\n");
    write_file(csv, os.str());
    man.outputs = {json.string(), csv.string()};
    if (raw) {
        const fs::path rawp = out_dir / (stem + "_f.raw");
        const GridField f = assemble_field(setup.TV, p);
        std::ostringstream rs;
        write_raw(f, p.n, rs);
        write_file(rawp, rs.str());
        man.outputs.push_back(rawp.string());
    }
    say("low part: %zu slabs over %zu V, K %.3g, max|f_low| %.4g, ratio %.4g (limit %.3g), dominance %.1f%%\n",
                r.num_slabs, r.num_V, r.K, r.max_low, r.ratio, p.c_report, 100.0 * r.dominance);
    if (scaling) say("K-doubling ratio %.4f\n", *scaling);
    say("wrote %s\n", json.string().c_str());
    return pass ? kPass : kFail;
}

int run_falconer(const Config& c, const std::string& path, Manifest& man, const fs::path& out_dir) {
    FalconerParams p;
    p.n = static_cast<int>(c.int_or("n", p.n));
    p.k = static_cast<int>(c.int_or("k", p.k));
    p.s = c.double_or("s", p.s);
    p.construction = c.string_or("construction", p.construction);
    p.a = c.double_or("a", p.a);
    p.mu = c.double_or("mu", p.mu);
    p.g_radius = c.double_or("g_radius", p.g_radius);
    p.kappa = c.double_or("kappa", p.kappa);
    p.samples_per_line = static_cast<int>(c.int_or("samples_per_line", p.samples_per_line));
    if (c.has("matching_slabs")) p.matching_slabs = c.get_bool("matching_slabs");
    if (c.has("verify_brute")) p.verify_brute = c.get_bool("verify_brute");
    p.seed = static_cast<std::uint64_t>(c.get_int("seed"));
    const auto deltas = scales_or(c, {0.125, 0.0625, 0.03125});
    const FalconerReport r = falconer_slope_experiment(p, deltas);

    ordered_json j;
    j["name"] = stem_of(c, path, "falconer");
    j["mode"] = "falconer";
    j["seed"] = p.seed;
    j["config_hash"] = hex64(c.hash());
    auto rows = ordered_json::array();
    std::ostringstream os;
    os.precision(10);
    os << "delta,num_H,num_V,integral,lower_bound,min_center_multiplicity\n";
    bool brute_ok = true;
    for (const auto& row : r.rows) {
        ordered_json jr;
        jr["delta"] = row.delta;
        jr["num_H"] = row.num_H;
        jr["num_V"] = row.num_V;
        jr["integral"] = row.integral;
        jr["lower_bound"] = row.lower_bound;
        jr["min_center_multiplicity"] = row.min_center_multiplicity;
        jr["frostman_audit"] = row.frostman_audit;
        if (row.brute_match) {
            jr["brute_match"] = *row.brute_match;
            brute_ok = brute_ok && *row.brute_match;
        }
        rows.push_back(jr);
        os << row.delta << ',' << row.num_H << ',' << row.num_V << ',' << row.integral << ',' << row.lower_bound
           << ',' << row.min_center_multiplicity << '\n';
    }
    j["rows"] = rows;
    j["slope"] = r.fit.slope;
    j["stderr"] = r.fit.std_error;
    j["slope_floor"] = r.slope_floor;
    j["t"] = r.t;
    j["t_ceiling"] = r.t_ceiling;
    j["slope_pass"] = r.slope_pass;
    j["lower_pass"] = r.lower_pass;
    j["t_consistent"] = r.t_consistent;
    const bool pass = r.slope_pass && r.lower_pass && brute_ok;
    j["pass"] = pass;

    const std::string stem = j["name"].get<std::string>();
    const fs::path json = out_dir / (stem + ".json");
    const fs::path csv = out_dir / (stem + ".csv");
    write_file(json, j.dump(2) + "\n");
    write_file(csv, os.str());
    man.outputs = {json.string(), csv.string()};
    say("energy slope %.4f +- %.4f (floor %.4f), lower bound %s\nwrote %s\n", r.fit.slope, r.fit.std_error,
                r.slope_floor, r.lower_pass ? "holds" : "FAILS", json.string().c_str());
    return pass ? kPass : kFail;
}

int cmd_highlow(const std::string& path, std::optional<std::size_t> budget, bool raw, const fs::path& out_dir) {
    Manifest man{"highlow", path, 0, 0, utc_now(), {}};
    const Config c = load_config(path);
    const std::string mode = c.string_or("mode", "lowpart");
    if (mode == "lowpart") {
        c.require_known({"name", "mode", "seed", "n", "k", "s", "delta", "M", "K", "cap", "mu", "g_radius",
                         "v_delta", "kappa", "window", "samples_per_line", "c_report", "max_grid_bytes",
                         "check_scaling"});
    } else if (mode == "falconer") {
        c.require_known({"name", "mode", "seed", "n", "k", "s", "construction", "a", "mu", "g_radius", "kappa",
                         "samples_per_line", "matching_slabs", "verify_brute", "scales"});
    } else {
        throw ConfigError("mode must be lowpart or falconer");
    }
    man.config_hash = c.hash();
    man.seed = static_cast<std::uint64_t>(c.get_int("seed"));
    const int code =
        mode == "lowpart" ? run_lowpart(c, path, budget, raw, man, out_dir) : run_falconer(c, path, man, out_dir);
    write_manifest(man, out_dir / (stem_of(c, path, mode) + ".manifest.json"));
    return code;
}

// ------------------------------------------------------------------ incidence

int cmd_incidence(const std::string& path, const fs::path& out_dir) {
    Manifest man{"incidence", path, 0, 0, utc_now(), {}};
    const Config c = load_config(path);
    c.require_known({"name", "seed", "n", "k", "s", "construction", "a", "mu", "g_radius", "kappa", "log_power",
                     "matching_slabs", "verify_brute", "scales"});
    KaufmanParams p;
    p.n = static_cast<int>(c.int_or("n", p.n));
    p.k = static_cast<int>(c.int_or("k", p.k));
    p.s = c.double_or("s", p.s);
    p.construction = c.string_or("construction", p.construction);
    p.a = c.double_or("a", p.a);
    p.mu = c.double_or("mu", p.mu);
    p.g_radius = c.double_or("g_radius", p.g_radius);
    p.kappa = c.double_or("kappa", p.kappa);
    p.log_power = static_cast<int>(c.int_or("log_power", p.log_power));
    if (c.has("matching_slabs")) p.matching_slabs = c.get_bool("matching_slabs");
    if (c.has("verify_brute")) p.verify_brute = c.get_bool("verify_brute");
    p.seed = static_cast<std::uint64_t>(c.get_int("seed"));
    man.config_hash = c.hash();
    man.seed = p.seed;
    const auto deltas = scales_or(c, {0.125, 0.0625, 0.03125});
    const KaufmanReport r = kaufman_slope_experiment(p, deltas);

    ordered_json j;
    j["name"] = stem_of(c, path, "incidence");
    j["seed"] = p.seed;
    j["config_hash"] = hex64(man.config_hash);
    auto rows = ordered_json::array();
    bool brute_ok = true;
    for (const auto& row : r.rows) {
        ordered_json jr;
        jr["delta"] = row.delta;
        jr["num_lines"] = row.num_lines;
        jr["num_V"] = row.num_V;
        jr["num_H"] = row.num_H;
        jr["total_pairs"] = row.total_pairs;
        jr["sum_per_line"] = row.sum_per_line;
        jr["per_line_mean"] = row.per_line_mean;
        jr["half_dominance"] = row.half_dominance;
        jr["frostman_audit"] = row.frostman_audit;
        jr["max_per_V_line"] = row.max_per_V_line;
        if (row.brute_match) {
            jr["brute_match"] = *row.brute_match;
            brute_ok = brute_ok && *row.brute_match;
        }
        rows.push_back(jr);
    }
    j["rows"] = rows;
    j["t"] = r.t;
    j["slope"] = r.fit.slope;
    j["stderr"] = r.fit.std_error;
    j["slope_per_line"] = r.fit_per_line.slope;
    j["bound"] = r.bound;
    const bool pass = r.pass && brute_ok;
    j["pass"] = pass;

    const std::string stem = j["name"].get<std::string>();
    const fs::path json = out_dir / (stem + ".json");
    const fs::path csv = out_dir / (stem + ".csv");
    write_file(json, j.dump(2) + "\n");
    write_file(csv, incidence_csv(r));
    man.outputs = {json.string(), csv.string()};
    write_manifest(man, out_dir / (stem + ".manifest.json"));
    say("incidence slope %.4f +- %.4f (bound %.4f) over %zu scales%s\nwrote %s\n", r.fit.slope,
                r.fit.std_error, r.bound, r.rows.size(), brute_ok ? "" : ", brute-force recount DIFFERS",
                csv.string().c_str());
    return pass ? kPass : kFail;
}

void apply_threads(unsigned flag) {
    unsigned threads = flag;
    if (const char* env = std::getenv("GRASSPROJ_THREADS"); env && *env) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (*end != '\0' || v == 0 || v > 1024) throw ConfigError("GRASSPROJ_THREADS must be a positive integer");
        threads = static_cast<unsigned>(v);
    }
    set_default_threads(threads);
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Discretized line projections: dimension estimates, constructions and experiments", "grassproj"};
    app.set_version_flag("--version", GRASSPROJ_VERSION);
    app.require_subcommand(1);
    unsigned threads = 0;
    std::string out_dir = ".";
    app.add_option("--threads", threads, "Worker threads (0: machine parallelism; GRASSPROJ_THREADS overrides)");
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "Print nothing on success");
    app.add_option("--out-dir", out_dir, "Directory for output files")->capture_default_str();

    DimArgs dim;
    auto* sdim = app.add_subcommand("dim", "Box dimension of a NetCloud JSON file");
    sdim->add_option("input", dim.input, "NetCloud JSON")->required();
    sdim->add_option("--metric", dim.metric, "Space tag overriding the file's metric, e.g. euclidean(2)");
    sdim->add_option("--scales", dim.scales, "Comma-separated radii (default 4 delta .. 1/4, dyadic)")
        ->delimiter(',');
    sdim->add_option("--csv", dim.csv, "Ladder CSV path");

    ConstructArgs con;
    auto* scon = app.add_subcommand("construct", "Generate a line or plane family as NetCloud JSON");
    scon->add_option("name", con.name, "Generator")->required()->check(CLI::IsMember(kGenerators));
    scon->add_option("--n", con.n, "Ambient dimension")->capture_default_str();
    scon->add_option("--a", con.a, "Direction dimension of the bush")->capture_default_str();
    scon->add_option("--beta", con.beta, "Base dimension of the product example")->capture_default_str();
    scon->add_option("--k", con.k, "bush-family: k")->capture_default_str();
    scon->add_option("--l", con.l, "bush-family: leaf dimension l")->capture_default_str();
    scon->add_option("--j", con.j, "bush-family: stem dimension j")->capture_default_str();
    scon->add_option("--b", con.b, "bush-family: dimension of the stem offsets")->capture_default_str();
    scon->add_flag("--full-B", con.full_B, "bush-family: offsets fill a box");
    scon->add_option("--delta", con.delta, "Relative separation")->capture_default_str();
    scon->add_option("--seed", con.seed, "Seed (the generators are deterministic)");
    scon->add_option("-o,--output", con.output, "Output path");

    std::string scan_cfg;
    auto* sscan = app.add_subcommand("scan", "Marstrand or exceptional-set scan from a config file");
    sscan->add_option("config", scan_cfg, "Config file")->required();

    std::string hl_cfg;
    std::optional<std::size_t> budget;
    bool raw = false;
    auto* shl = app.add_subcommand("highlow", "High-low experiment (low-part bound or Falconer energy)");
    shl->add_option("config", hl_cfg, "Config file")->required();
    shl->add_option("--max-grid-bytes", budget, "Refuse grids larger than this");
    shl->add_flag("--raw", raw, "Also dump the assembled field f");

    std::string inc_cfg;
    auto* sinc = app.add_subcommand("incidence", "Incidence slope experiment from a config file");
    sinc->add_option("config", inc_cfg, "Config file")->required();

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kPass : kUsage;
    }

    try {
        g_quiet = quiet;
        apply_threads(threads);
        const fs::path out(out_dir);
        if (sdim->parsed()) return cmd_dim(dim, out);
        if (scon->parsed()) return cmd_construct(con, out);
        if (sscan->parsed()) return cmd_scan(scan_cfg, out);
        if (shl->parsed()) return cmd_highlow(hl_cfg, budget, raw, out);
        return cmd_incidence(inc_cfg, out);
    } catch (const ResourceRefusal& e) {
        std::cerr << "refused: " << e.what() << '\n';
        return kRefused;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kUsage;
    } catch (const ContractViolation& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
}

}  // namespace grassproj::cli
