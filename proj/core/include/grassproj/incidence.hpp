#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "grassproj/grasscore.hpp"
#include "grassproj/nets.hpp"
#include "grassproj/rng.hpp"

namespace grassproj {

/// Lines of an affine-lines(n) cloud projected into V, as lines-in-V(k) charts.
struct ProjectedCloud {
    PointSet lines;
    /// Source index of every projected line.
    std::vector<std::size_t> source;
    /// Lines whose direction lies in V-perp; their images are points of V.
    PointSet points;
    /// Lines within angle mu of V-perp that are not exactly point images.
    std::size_t degenerate = 0;
    /// Largest |Y' - X'| over the projected lines.
    double max_slope = 0.0;
};

ProjectedCloud project_cloud(const PointSet& lines, const PlaneChart& chart, double mu);

/// N_r(core) ∩ B(0,1) for an affine plane core.
struct Slab {
    AffinePlane core;
    double thickness = 0.0;
    /// The k-plane the slab is orthogonal to, and the chart of its tube axis there.
    std::optional<Subspace> anchor_V;
    std::optional<Vec> anchor_tube;

    bool contains(const Vec& x) const;
    /// Whether the unit chord of L stays within thickness - margin of the core,
    /// i.e. the margin-neighbourhood of the chord lies in the slab.
    bool contains_chord(const LocalLine& L, double margin = 0.0) const;
};

/// The slab of thickness r with core P_V(L) ⊕ V-perp.
Slab make_orthogonal_slab(const Subspace& V, const LocalLine& L, double r, double mu);
/// The slab orthogonal to V at the tube whose axis has the given chart.
Slab slab_at_tube(const PlaneChart& chart, const Vec& tube, double r);

/// Each core, sampled inside B(0,1), lies in the C-dilation of the other slab.
bool slabs_comparable(const Slab& a, const Slab& b, double C = 4.0);

/// One slab family per V; all slabs of a family are anchored at the same V.
using SlabFamilies = std::vector<std::vector<Slab>>;

struct IncidencePairs {
    /// The pairs (slab index, V index) of the incidence set, ordered by V then slab.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    std::vector<std::size_t> per_V_counts;
    /// #I_l: pairs whose slab contains the delta-neighbourhood of line l.
    std::vector<std::size_t> per_line_counts;
    /// For every pair, the number of lines incident to it.
    std::vector<std::uint32_t> multiplicity;
    /// Largest number of slabs of one family containing one line.
    std::size_t max_per_V_line = 0;

    std::size_t total() const { return pairs.size(); }
    std::size_t sum_per_line() const;
    /// Pairs incident to at least one line, #(union of the I_l).
    std::size_t covered() const;
    /// Sum over l != l1 of #(I_l ∩ I_l1).
    std::size_t overlap() const;
};

/// Grid-accelerated count; slabs need anchors (families without one are
/// scanned exhaustively).
IncidencePairs count_incidences(const SlabFamilies& TV, const PointSet& lines, double delta);
/// Double loop over (line, slab); the reference for count_incidences.
IncidencePairs count_incidences_brute(const SlabFamilies& TV, const PointSet& lines, double delta);

/// Largest count/(r/delta)^s over `trials` random r-slabs W_r orthogonal to V
/// at r-tubes around members of the family, counting T whose axis chord lies
/// within r of the core of W_r.
double frostman_audit(const std::vector<Slab>& family, double delta, double s, Rng& rng, int trials = 200);

/// delta-net of the ball of radius `radius` around the plane spanned by the
/// last k axes, in G(k,n). Lines near the x_n axis are transversal to all of it.
PointSet subspace_ball_net(int n, int k, double radius, double delta, Rng& rng);
Subspace subspace_at(const PointSet& grassmannian_points, std::size_t i);

/// A two-dimensional plank: the unit chord of a line and the segment from
/// its level-0 point to that of a second line.
struct Plank2D {
    LocalLine base_line;
    Vec width_vector;
    double d = 0.0;

    static Plank2D from_lines(const LocalLine& l, const LocalLine& l1);
    /// Orthonormal basis (2 x n) of the plane the plank spans.
    Mat plane() const;
    /// Corners: chord endpoints and their translates by the width vector.
    std::vector<Vec> corners() const;
};

/// Second singular value of P_V restricted to the plane (rows orthonormal).
double pencil_sigma2(const Mat& plane, const Subspace& V);
/// V ∈ M(plane) up to eps: dim P_V(plane) <= 1.
bool pencil_membership(const Mat& plane, const Subspace& V, double eps = 0.0);

struct MDistance {
    double distance = 0.0;
    /// A nearest point of M.
    Subspace witness;
};
/// Exact distance from V to M(plane) with a nearest witness. The distance
/// equals sigma_2 of P_V on the plane; the witness rotates V by that angle.
MDistance distance_to_M(const Mat& plane, const Subspace& V);

/// Random element of M(plane).
Subspace sample_M(const Mat& plane, int k, Rng& rng);

/// Covering-count slope of {V : sigma_2 <= eps(delta)} with eps(delta) = delta,
/// or the fixed eps when given. Samples near M (or Haar samples when eps >= 1).
DimEstimate estimate_dim_M(int n, int k, const Mat& plane, const std::vector<double>& scales, Rng& rng,
                           std::optional<double> eps = std::nullopt, std::size_t samples_per_scale = 0);

struct TubeCheck {
    /// P_V(plank) fits in a delta-tube.
    bool in_tube = false;
    double distance = 0.0;
    /// distance * d / delta, the constant achieved.
    double constant = 0.0;
};
/// When P_V(plank) fits in a delta-tube, measures dist(V, M) against delta/d.
TubeCheck tube_projection_neighborhood_check(const Plank2D& plank, const Subspace& V, double delta);

struct KaufmanParams {
    int n = 3;
    int k = 2;
    /// Frostman exponent of every T_V.
    double s = 1.0;
    /// "bush" or "product".
    std::string construction = "bush";
    /// Dimension parameter of the construction (dim_a for bush, beta for product).
    double a = 2.0;
    double mu = 0.005;
    /// Radius of the G(k,n) ball the V-net covers.
    double g_radius = 0.5;
    double kappa = 1.0;
    /// H' separation is delta * log2(1/delta)^log_power.
    int log_power = 2;
    /// Keep every tube (no Frostman thinning) and count over all lines instead of H'.
    bool matching_slabs = false;
    /// Also recount with count_incidences_brute and record whether the counts agree.
    bool verify_brute = false;
    std::uint64_t seed = 1;
};

struct KaufmanRow {
    double delta = 0.0;
    std::size_t num_lines = 0;
    std::size_t num_V = 0;
    std::size_t num_H = 0;
    std::size_t total_pairs = 0;
    std::size_t covered_pairs = 0;
    std::size_t sum_per_line = 0;
    std::size_t overlap = 0;
    double per_line_mean = 0.0;
    /// Sum over l of #I_l - sum of pairwise overlaps >= half of sum #I_l.
    bool half_dominance = false;
    double frostman_audit = 0.0;
    std::size_t max_per_V_line = 0;
    std::optional<bool> brute_match;
};

struct KaufmanReport {
    std::vector<KaufmanRow> rows;
    /// Dimension exponent of the V-net, k(n-k).
    double t = 0.0;
    DimEstimate fit;
    /// Slope of sum over l of #I_l.
    DimEstimate fit_per_line;
    double bound = 0.0;
    bool pass = false;
};

/// Per-V slab families for a line cloud: tubes are a delta-cover of the
/// projected lines, thinned to an s-Frostman family (kept whole for infinite
/// kappa); slab thickness 3 delta.
std::vector<Slab> build_slab_family(const PointSet& lines, const Subspace& V, double delta_abs, double s,
                                    double kappa, double mu);

/// #I at each relative scale, slope regression and the t + s + 0.3 check.
KaufmanReport kaufman_slope_experiment(const KaufmanParams& p, const std::vector<double>& deltas);

/// Incidence report rows as CSV with header delta,total_pairs,per_line_mean,slope,stderr.
std::string incidence_csv(const KaufmanReport& r);

}  // namespace grassproj
