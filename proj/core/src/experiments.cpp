#include "grassproj/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "grassproj/constructions.hpp"
#include "grassproj/incidence.hpp"
#include "grassproj/parallel.hpp"

namespace grassproj {

namespace {

// Ladder for box counting inside G(k, n), where distances are at most 1.
const std::vector<double> kGrassLadder{0.5, 0.35355339059327373, 0.25, 0.17677669529663687};

constexpr std::size_t kMaxDraws = 100000;

std::vector<double> absolute(const std::vector<double>& rel) {
    std::vector<double> out(rel.size());
    for (std::size_t i = 0; i < rel.size(); ++i) out[i] = construction::kUnit * rel[i];
    return out;
}

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double dimension_of(const PointSet& ps, const std::vector<double>& scales) {
    if (ps.size() <= 1) return 0.0;
    return box_dimension(ps, scales).slope;
}

Flag band_flag(const std::string& name, const std::string& tol, double value, double lo, double hi) {
    Flag f;
    f.name = name;
    f.tolerance = tol;
    f.value = value;
    f.limit_low = lo;
    f.limit_high = hi;
    f.pass = value >= lo && value <= hi;
    return f;
}

struct Scan {
    NetCloud lines;
    std::vector<VEstimate> per_V;
};

Scan scan_V(const ExperimentConfig& cfg) {
    const int n = cfg.params.n, k = cfg.params.k;
    Scan sc;
    sc.lines = cfg.construction.generate(n, cfg.delta_rel);
    const auto scales = absolute(cfg.scales);
    sc.per_V.resize(static_cast<std::size_t>(cfg.num_V));
    parallel_for(sc.per_V.size(), [&](std::size_t v) {
        Rng rng = task_rng(cfg.seed, v);
        VEstimate e;
        e.index = v;
        Subspace V;
        for (;;) {
            V = sample_grassmannian(n, k, rng);
            if (chart_compatible(V)) break;
            require(++e.rejections < kMaxDraws, "marstrand_scan: no chart-compatible V drawn");
        }
        const Mat& F = V.frame();
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < n; ++j) e.frame.push_back(F(i, j));
        const ProjectedCloud pc = project_cloud(sc.lines.points, PlaneChart(V), cfg.params.mu);
        e.lines = pc.lines.size();
        e.points = pc.points.size();
        e.degenerate = pc.degenerate;
        e.line_dim = dimension_of(pc.lines, scales);
        e.point_dim = dimension_of(pc.points, scales);
        e.dim = std::max(e.line_dim, e.point_dim);
        sc.per_V[v] = std::move(e);
    });
    return sc;
}

ResultRecord base_record(const ExperimentConfig& cfg, const Scan& sc) {
    ResultRecord r;
    r.name = cfg.name;
    r.kind = cfg.kind;
    r.seed = cfg.seed;
    r.n = cfg.params.n;
    r.k = cfg.params.k;
    r.construction = cfg.construction.id;
    r.a = cfg.construction.a;
    r.line_dimension = cfg.construction.line_dimension(cfg.params.n);
    r.delta_rel = cfg.delta_rel;
    r.scales = cfg.scales;
    r.num_lines = sc.lines.size();
    r.per_V = sc.per_V;
    r.target_S = eval_S(r.line_dimension, r.k, r.n);

    std::vector<double> dims;
    for (const auto& e : sc.per_V)
        if (e.lines + e.points > 0) dims.push_back(e.dim);
    if (dims.empty()) {
        r.diagnostic = "every sampled V is degenerate for this construction";
        r.flags.push_back(band_flag("nondegenerate_V", "num_V", 0.0, 1.0, static_cast<double>(cfg.num_V)));
        return r;
    }
    r.quantiles.p05 = quantile(dims, 0.05);
    r.quantiles.p25 = quantile(dims, 0.25);
    r.quantiles.median = quantile(dims, 0.5);
    r.quantiles.p75 = quantile(dims, 0.75);
    r.quantiles.p95 = quantile(dims, 0.95);
    double s = 0.0;
    for (double d : dims) s += d;
    r.mean = s / static_cast<double>(dims.size());
    r.flags.push_back(band_flag("nondegenerate_V", "num_V", static_cast<double>(dims.size()), 1.0,
                                static_cast<double>(cfg.num_V)));
    return r;
}

void finish(ResultRecord& r) {
    r.pass = !r.flags.empty() && std::all_of(r.flags.begin(), r.flags.end(), [](const Flag& f) { return f.pass; });
}

}  // namespace

// ------------------------------------------------------------ config

double ConstructionSpec::line_dimension(int n) const { return id == "product" ? a + (n - 1) : a; }

NetCloud ConstructionSpec::generate(int n, double delta) const {
    if (id == "bush") return gen_direction_bush(n, delta, a);
    if (id == "product") return gen_product_example(n, a, delta);
    throw ContractViolation("unknown construction '" + id + "' (valid: bush, product)");
}

void ExperimentConfig::validate() const {
    params.validate();
    require(kind == "marstrand" || kind == "exceptional", "config: kind must be marstrand or exceptional");
    require(construction.id == "bush" || construction.id == "product",
            "config: construction must be bush or product");
    require(construction.a >= 0.0, "config: construction parameter a must be nonnegative");
    require(num_V >= 1, "config: num_V must be at least 1");
    require(delta_rel > 0.0 && delta_rel <= 0.125, "config: delta must lie in (0, 1/8]");
    require(scales.size() >= 3, "config: need at least three scales");
    for (std::size_t i = 0; i < scales.size(); ++i) {
        require(scales[i] > 0.0 && scales[i] < 1.0, "config: scales must lie in (0, 1)");
        require(i == 0 || scales[i] < scales[i - 1], "config: scales must be strictly decreasing");
    }
    require(median_below >= 0.0 && median_above >= 0.0 && guard_band >= 0.0 && bound_slack >= 0.0,
            "config: tolerances must be nonnegative");
    require(params.s <= 2.0 * (params.k - 1), "config: s must not exceed 2(k-1)");
    if (kind == "exceptional") {
        const double a = construction.line_dimension(params.n);
        require(params.s > 0.0 && params.s < std::min(a, 2.0 * (params.k - 1)),
                "config: exceptional scan needs 0 < s < min(a, 2(k-1))");
    }
}

ExperimentConfig ExperimentConfig::from_config(const Config& c) {
    c.require_known({"name", "kind", "n", "k", "mu", "construction", "a", "s", "delta", "num_V", "scales", "seed",
                     "output", "median_below", "median_above", "p95_limit", "source_low", "source_high",
                     "guard_band", "bound_slack"});
    if (!c.has("seed")) throw ConfigError("config: seed is mandatory");
    const std::int64_t seed = c.get_int("seed");
    if (seed < 0) throw ConfigError("config: seed must be nonnegative");
    ExperimentConfig e;
    e.seed = static_cast<std::uint64_t>(seed);
    e.name = c.string_or("name", e.name);
    e.kind = c.string_or("kind", e.kind);
    e.params.n = static_cast<int>(c.int_or("n", 3));
    e.params.k = static_cast<int>(c.int_or("k", 2));
    e.params.l = 1;
    e.params.mu = c.double_or("mu", 0.005);
    e.construction.id = c.string_or("construction", e.construction.id);
    e.construction.a = c.double_or("a", e.construction.a);
    e.params.s = c.double_or("s", 0.0);
    e.delta_rel = c.double_or("delta", e.delta_rel);
    e.params.delta = construction::kUnit * e.delta_rel;
    e.params.a = e.construction.line_dimension(e.params.n);
    e.num_V = static_cast<int>(c.int_or("num_V", e.num_V));
    if (c.has("scales")) e.scales = c.get_list("scales");
    e.output_path = c.string_or("output", "");
    e.median_below = c.double_or("median_below", e.median_below);
    e.median_above = c.double_or("median_above", e.median_above);
    if (c.has("p95_limit")) e.p95_limit = c.get_double("p95_limit");
    if (c.has("source_low")) e.source_low = c.get_double("source_low");
    if (c.has("source_high")) e.source_high = c.get_double("source_high");
    e.guard_band = c.double_or("guard_band", e.guard_band);
    e.bound_slack = c.double_or("bound_slack", e.bound_slack);
    return e;
}

// ------------------------------------------------------------ scans

bool chart_compatible(const Subspace& V) {
    const int n = V.ambient();
    return V.frame().col(n - 1).norm() >= kVerticalReach;
}

ResultRecord marstrand_scan(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const Scan sc = scan_V(cfg);
    ResultRecord r = base_record(cfg, sc);
    if (r.diagnostic.empty()) {
        r.flags.push_back(band_flag("median_band", "median_below/median_above", r.quantiles.median,
                                    r.target_S - cfg.median_below, r.target_S + cfg.median_above));
        if (cfg.p95_limit) {
            Flag f = band_flag("p95_limit", "p95_limit", r.quantiles.p95, -std::numeric_limits<double>::infinity(),
                               *cfg.p95_limit);
            f.pass = r.quantiles.p95 < *cfg.p95_limit;
            r.flags.push_back(f);
        }
    }
    if (cfg.source_low || cfg.source_high) {
        r.source_dim = box_dimension(sc.lines.points, absolute(cfg.scales)).slope;
        r.flags.push_back(band_flag("source_band", "source_low/source_high", r.source_dim,
                                    cfg.source_low.value_or(-std::numeric_limits<double>::infinity()),
                                    cfg.source_high.value_or(std::numeric_limits<double>::infinity())));
    }
    finish(r);
    r.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

ResultRecord exceptional_scan(const ExperimentConfig& cfg, double s) {
    ExperimentConfig c = cfg;
    c.kind = "exceptional";
    c.params.s = s;
    c.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const Scan sc = scan_V(c);
    ResultRecord r = base_record(c, sc);
    r.s = s;
    Params p = c.params;
    p.a = c.construction.line_dimension(p.n);
    r.kaufman_bound = bound_formula(BoundKind::Kaufman, p);
    r.falconer_bound = bound_formula(BoundKind::Falconer, p);

    PointSet E(Space::grassmannian(p.k, p.n));
    for (const auto& e : sc.per_V)
        if (e.lines + e.points > 0 && e.dim < s - c.guard_band) E.coords.insert(E.coords.end(), e.frame.begin(), e.frame.end());
    r.exceptional_count = E.size();
    r.exceptional_dim = dimension_of(E, kGrassLadder);
    const double bound = std::min(r.kaufman_bound, r.falconer_bound);
    r.flags.push_back(band_flag("exceptional_bound", "bound_slack", *r.exceptional_dim,
                                -std::numeric_limits<double>::infinity(), bound + c.bound_slack));
    r.flags.push_back(band_flag("grassmannian_dimension", "bound_slack", *r.exceptional_dim,
                                -std::numeric_limits<double>::infinity(), p.k * (p.n - p.k) + c.bound_slack));
    finish(r);
    r.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

ResultRecord run_scan(const ExperimentConfig& cfg) {
    return cfg.kind == "exceptional" ? exceptional_scan(cfg, cfg.params.s) : marstrand_scan(cfg);
}

double bound_formula(BoundKind kind, const Params& p) {
    require(p.n >= 3 && p.k >= 2 && p.k < p.n, "bound_formula: need 2 <= k < n");
    require(p.s > 0.0 && p.s < 2.0 * (p.k - 1), "bound_formula: need 0 < s < 2(k-1)");
    const double base = p.k * (p.n - p.k) + p.s;
    if (kind == BoundKind::Kaufman) return base - (p.k - 1);
    require(std::isfinite(p.a) && p.a > p.s, "bound_formula: Falconer bound needs s < a");
    return std::max(0.0, base - p.a + (p.n - p.k));
}

// ------------------------------------------------------------ serialization

std::string result_to_json(const ResultRecord& r) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["name"] = r.name;
    j["kind"] = r.kind;
    j["seed"] = r.seed;
    j["config_hash"] = r.config_hash;
    j["n"] = r.n;
    j["k"] = r.k;
    j["construction"] = {{"id", r.construction}, {"a", r.a}, {"line_dimension", r.line_dimension}};
    j["delta"] = r.delta_rel;
    j["scales"] = r.scales;
    j["num_lines"] = r.num_lines;
    if (r.source_dim != 0.0) j["source_dim"] = r.source_dim;
    ordered_json pv = ordered_json::array();
    for (const auto& e : r.per_V)
        pv.push_back({{"index", e.index},
                      {"dim", e.dim},
                      {"line_dim", e.line_dim},
                      {"point_dim", e.point_dim},
                      {"lines", e.lines},
                      {"points", e.points},
                      {"degenerate", e.degenerate},
                      {"rejections", e.rejections},
                      {"frame", e.frame}});
    j["per_V"] = pv;
    j["quantiles"] = {{"p05", r.quantiles.p05},
                      {"p25", r.quantiles.p25},
                      {"median", r.quantiles.median},
                      {"p75", r.quantiles.p75},
                      {"p95", r.quantiles.p95}};
    j["mean"] = r.mean;
    j["targets"] = {{"eval_S", r.target_S}, {"kaufman", r.kaufman_bound}, {"falconer", r.falconer_bound}};
    if (r.s) {
        j["s"] = *r.s;
        j["exceptional_count"] = *r.exceptional_count;
        j["exceptional_dim"] = *r.exceptional_dim;
    }
    ordered_json fl = ordered_json::array();
    for (const auto& f : r.flags) {
        ordered_json x;
        x["name"] = f.name;
        x["tolerance"] = f.tolerance;
        x["value"] = f.value;
        if (std::isfinite(f.limit_low)) x["low"] = f.limit_low;
        if (std::isfinite(f.limit_high)) x["high"] = f.limit_high;
        x["pass"] = f.pass;
        fl.push_back(x);
    }
    j["flags"] = fl;
    j["pass"] = r.pass;
    if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
    return j.dump(2) + "\n";
}

std::string result_to_csv(const ResultRecord& r) {
    std::ostringstream os;
    os.precision(10);
    os << "index,dim,line_dim,point_dim,lines,points,degenerate\n";
    for (const auto& e : r.per_V)
        os << e.index << ',' << e.dim << ',' << e.line_dim << ',' << e.point_dim << ',' << e.lines << ',' << e.points
           << ',' << e.degenerate << '\n';
    return os.str();
}

std::string ladder_csv(const DimEstimate& e) {
    std::ostringstream os;
    os.precision(12);
    os << "scale,count\n";
    for (std::size_t i = 0; i < e.scales.size(); ++i) os << e.scales[i] << ',' << e.counts[i] << '\n';
    return os.str();
}

}  // namespace grassproj
