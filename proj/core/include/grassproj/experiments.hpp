#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "grassproj/config.hpp"
#include "grassproj/grasscore.hpp"
#include "grassproj/nets.hpp"

namespace grassproj {

/// Line family generator: "bush" (direction set of dimension `a`) or
/// "product" (base of dimension `a` carrying full bushes).
struct ConstructionSpec {
    std::string id = "bush";
    double a = 2.0;

    /// Dimension of the line family: a for the bush, a + (n - 1) for the product.
    double line_dimension(int n) const;
    NetCloud generate(int n, double delta) const;
};

struct ExperimentConfig {
    std::string name = "scan";
    /// "marstrand" or "exceptional".
    std::string kind = "marstrand";
    /// n, k, mu, a (line-family dimension) and s; delta holds the absolute
    /// separation unit * delta_rel.
    Params params;
    double delta_rel = 1.0 / 64;
    ConstructionSpec construction;
    int num_V = 50;
    /// Relative ladder, strictly decreasing; absolute radii are unit * scale.
    std::vector<double> scales{0.25, 0.125, 0.0625, 0.03125};
    std::uint64_t seed = 0;
    std::string output_path;

    // Named tolerances.
    /// median within [target - median_below, target + median_above].
    double median_below = 0.25;
    double median_above = 0.25;
    /// 95th percentile strictly below this (unset: not checked).
    std::optional<double> p95_limit;
    /// Source-cloud dimension band (unset: not checked).
    std::optional<double> source_low;
    std::optional<double> source_high;
    /// Exceptional classification: dim < s - guard_band.
    double guard_band = 0.15;
    /// Exceptional-set dimension may exceed the bound by this much.
    double bound_slack = 0.4;

    void validate() const;
    static ExperimentConfig from_config(const Config& c);
};

/// Estimate for one sampled V.
struct VEstimate {
    std::size_t index = 0;
    /// max of line_dim and point_dim.
    double dim = 0.0;
    double line_dim = 0.0;
    double point_dim = 0.0;
    std::size_t lines = 0;
    std::size_t points = 0;
    std::size_t degenerate = 0;
    /// Rejected draws before this V was accepted.
    std::size_t rejections = 0;
    /// Row-major k x n frame.
    std::vector<double> frame;
};

struct Flag {
    std::string name;
    /// Name of the tolerance the flag is measured against.
    std::string tolerance;
    double value = 0.0;
    double limit_low = 0.0;
    double limit_high = 0.0;
    bool pass = false;
};

struct Quantiles {
    double p05 = 0.0, p25 = 0.0, median = 0.0, p75 = 0.0, p95 = 0.0;
};

struct ResultRecord {
    std::string name;
    std::string kind;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    int n = 0, k = 0;
    std::string construction;
    double a = 0.0;
    double line_dimension = 0.0;
    double delta_rel = 0.0;
    std::vector<double> scales;
    std::size_t num_lines = 0;
    double source_dim = 0.0;
    std::vector<VEstimate> per_V;
    Quantiles quantiles;
    double mean = 0.0;
    double target_S = 0.0;
    // Exceptional scan.
    std::optional<double> s;
    std::optional<std::size_t> exceptional_count;
    std::optional<double> exceptional_dim;
    double kaufman_bound = 0.0;
    double falconer_bound = 0.0;
    std::vector<Flag> flags;
    bool pass = false;
    std::string diagnostic;
    /// Wall-clock seconds; not part of the JSON record.
    double runtime = 0.0;
};

/// Projected-dimension scan over sampled V (Haar draws rejected unless
/// |P_V e_n| >= 1/2, so every chart line projects transversally).
ResultRecord marstrand_scan(const ExperimentConfig& cfg);

/// Classifies each V with dim < s - guard_band as exceptional and estimates
/// the box dimension of that set in G(k, n).
ResultRecord exceptional_scan(const ExperimentConfig& cfg, double s);

/// Runs the scan named by cfg.kind (the exceptional scan uses params.s).
ResultRecord run_scan(const ExperimentConfig& cfg);

enum class BoundKind { Kaufman, Falconer };
/// Kaufman: k(n-k) + s - (k-1). Falconer: max{0, k(n-k) + s - a + (n-k)}.
double bound_formula(BoundKind kind, const Params& p);

/// Acceptance threshold for drawn V: |P_V e_n| at least this.
inline constexpr double kVerticalReach = 0.5;
bool chart_compatible(const Subspace& V);

/// Deterministic JSON (fixed key order, runtime omitted).
std::string result_to_json(const ResultRecord& r);
/// index,dim,line_dim,point_dim,lines,points,degenerate
std::string result_to_csv(const ResultRecord& r);
/// scale,count ladder of a dimension estimate.
std::string ladder_csv(const DimEstimate& e);

}  // namespace grassproj
