#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "grassproj/grasscore.hpp"
#include "grassproj/incidence.hpp"
#include "grassproj/nets.hpp"
#include "grassproj/rng.hpp"

namespace grassproj {

/// Thrown when a grid would exceed the configured memory budget.
class ResourceRefusal : public std::runtime_error {
public:
    explicit ResourceRefusal(const std::string& what) : std::runtime_error(what) {}
};

/// (X, Y) chart of a line as a point of R^{2(n-1)}, and back.
Vec line_chart(const LocalLine& L);
LocalLine chart_line(const Vec& p);
/// Chart of the line through `point` with direction `dir` (ambient R^n).
/// Lines parallel to R^{n-1} have no chart.
Vec line_chart(const Vec& point, const Vec& dir);

/// Rectangle in R^d: center, orthonormal axes (rows) and half-lengths.
struct Rectangle {
    Vec center;
    Mat axes;
    Vec half;

    int dim() const { return static_cast<int>(center.size()); }
    bool contains(const Vec& x) const;
    double volume() const;
    /// Centered at the origin, same axes, half-lengths inverted.
    Rectangle dual() const;
};

/// R0 x R1 in R^{n-1} x R^{n-1}, R1 a translate of R0.
struct GrassRectangle {
    Rectangle R0;
    Vec center1;

    int base_dim() const { return R0.dim(); }
    Rectangle R1() const;
    bool contains(const Vec& XY) const;
    double volume() const;
    /// R0* x R0*, centered at the origin.
    GrassRectangle dual() const;

    /// R0 and R1 are the traces on x_n = 0 and x_n = 1 of the set of points
    /// within `width` of the slab core. Long edges are cut to half-length
    /// `window` around the trace points nearest the origin.
    static GrassRectangle of_slab(const Slab& T, double window, double width);
};

/// Flat-top window on [-h, h]: c * (Phi((t+a)/sigma) - Phi((t-a)/sigma)) with
/// a = 1.2h, sigma = 0.15h and c chosen so the value at +-h is exactly 1.
double flat_top(double t, double h);
/// Its Fourier transform, int flat_top(t) e^{-2 pi i xi t} dt (real, even).
double flat_top_hat(double xi, double h);
/// The window vanishes to double precision beyond this many half-lengths.
inline constexpr double kBumpSupport = 2.4;

/// Product of flat_top along the rectangle axes.
double bump_value(const Rectangle& R, const Vec& x);
/// psi_R0(X) psi_R1(Y).
double bump_value(const GrassRectangle& R, const Vec& XY);
/// Analytic transform of the rectangle bump at frequency xi.
std::complex<double> bump_hat(const Rectangle& R, const Vec& xi);

enum class Domain { Physical, Frequency };

/// Complex field on the periodic M^dim grid over [0,1)^dim. Grid index j on
/// an axis sits at chart coordinate j/M - 1/2 (physical) or at integer
/// frequency j (j < M/2) and j - M otherwise.
struct GridField {
    int dim = 0;
    int M = 0;
    Domain domain = Domain::Physical;
    std::vector<std::complex<double>> values;

    static GridField zeros(int dim, int M, Domain d = Domain::Physical);
    std::size_t size() const { return values.size(); }
    double coordinate(int j) const { return static_cast<double>(j) / M - 0.5; }
    int frequency(int j) const { return j < M / 2 ? j : j - M; }
    /// Sqrt of the sum of |value|^2.
    double l2() const;
};

/// Bytes held by `fields` complex grids.
std::size_t grid_bytes(int dim, int M, int fields = 1);
/// Throws ResourceRefusal when the grids exceed `budget` bytes.
void check_grid_budget(int dim, int M, int fields, std::size_t budget);

/// Continuous-transform approximation: hat f(xi) = M^-dim sum f(x) e^{-2 pi i xi.x}.
GridField forward_transform(const GridField& f);
/// Exact inverse of forward_transform.
GridField inverse_transform(const GridField& F);

/// Samples a bump on the grid. Throws when its support reaches the torus wrap.
GridField sample_bump(const Rectangle& R, int M);
GridField sample_bump(const GrassRectangle& R, int M);
/// f += weight * psi_R on the grid (separable accumulation over the supports).
void add_bump(GridField& f, const GrassRectangle& R, double weight = 1.0);

/// Share of sum |F|^2 at frequencies inside factor * box, box a rectangle
/// centered at the origin.
double mass_fraction_inside(const GridField& F, const Rectangle& box, double factor);
double mass_fraction_inside(const GridField& F, const GrassRectangle& box, double factor);

/// Raised cosine: 1 for |xi| <= rho/2, 0 for |xi| >= rho, rho = 1/(K delta).
double eta(double radius, double K, double delta);

/// Sum of |k| for the grid kernel k of the low-pass filter, so that
/// max|low| <= kernel_l1 * max|F| (Young).
double eta_kernel_l1(int dim, int M, double K, double delta);

struct HighLow {
    GridField low;
    GridField high;
};
/// low = inverse(eta * hat F), high = F - low.
HighLow high_low_split(const GridField& F, double K, double delta);

/// Multilinear interpolation (real part) at a chart point, periodic.
double interpolate(const GridField& f, const Vec& chart_point);

/// One JSON header line {"n", "M", "dim", "domain_tag", "count", "layout"},
/// then little-endian float64 (re, im) pairs.
void write_raw(const GridField& f, int n_ambient, std::ostream& out);
GridField read_raw(std::istream& in, int* n_ambient = nullptr);

// ---------------------------------------------------------------- experiments

struct HighLowParams {
    int n = 3;
    int k = 2;
    double s = 1.0;
    /// Absolute chart scale of the tubes.
    double delta = 1.0 / 16;
    int M = 32;
    /// 0 selects (log2 1/delta)^2.
    double K = 0.0;
    /// Lines: a bush through the origin with slopes |S| <= cap.
    double cap = 0.1;
    double mu = 0.005;
    double g_radius = 0.5;
    /// Separation of the V-net (0 selects 2 delta).
    double v_delta = 0.0;
    double kappa = 1.0;
    /// Half-length of the long rectangle edges.
    double window = 0.15;
    int samples_per_line = 4;
    /// Reported ratio max|f_low| / (K^{s-2(k-1)} #V) must not exceed this.
    double c_report = 8.0;
    std::size_t max_grid_bytes = std::size_t{1} << 30;
    std::uint64_t seed = 1;
};

double default_K(double delta);

struct HighLowSetup {
    NetCloud lines;
    PointSet Vs;
    SlabFamilies TV;
};
/// Bush lines, a V-net around the span of the last k axes and per-V
/// s-Frostman slab families (thickness 3 delta).
HighLowSetup highlow_setup(const HighLowParams& p);

/// f = sum over slabs of psi on the M-grid (budget checked before allocation).
GridField assemble_field(const SlabFamilies& TV, const HighLowParams& p);

struct LowPartReport {
    std::size_t num_lines = 0;
    std::size_t num_V = 0;
    std::size_t num_slabs = 0;
    std::size_t samples = 0;
    double K = 0.0;
    double max_low = 0.0;
    /// K^{s-2(k-1)} #V.
    double bound_unit = 0.0;
    double ratio = 0.0;
    /// Share of samples with f - |f_low| >= multiplicity / 2.
    double dominance = 0.0;
    double mean_multiplicity = 0.0;
    bool ratio_pass = false;
    bool dominance_pass = false;
};

/// Assembles f = sum psi_T on the grid, splits it and evaluates at the chart
/// points of the lines plus random points of their delta-balls.
LowPartReport low_part_bound_check(const PointSet& lines, const SlabFamilies& TV, const HighLowParams& p);

/// max|f_low| at 2K over max|f_low| at K, same configuration.
double k_scaling_ratio(const PointSet& lines, const SlabFamilies& TV, const HighLowParams& p);

/// Direction in R^{n-1} of the trace of a slab on x_n = 0.
Subspace slab_trace_direction(const Slab& T);
/// delta-net of G(n-k, n-1).
PointSet direction_net(int n, int k, double delta, Rng& rng);
/// Index into the net of the nearest direction, per slab.
std::vector<std::size_t> direction_group(const std::vector<Slab>& family, const PointSet& G_net);

/// Max over sample points xi in R^{n-1}, 1/(2K) <= |xi| <= 1, of the number of
/// W in the net with dist(xi, W-perp) <= delta.
std::size_t dual_overlap_estimate(const PointSet& G_net, double K, double delta);

struct FalconerParams {
    int n = 3;
    int k = 2;
    double s = 1.0;
    std::string construction = "bush";
    double a = 2.0;
    double mu = 0.005;
    double g_radius = 0.5;
    /// Keep every tube of the delta-cover (the bush pencil is 1-dimensional).
    bool matching_slabs = true;
    double kappa = 1.0;
    int samples_per_line = 8;
    bool verify_brute = false;
    std::uint64_t seed = 1;
};

struct FalconerRow {
    double delta = 0.0;
    std::size_t num_H = 0;
    std::size_t num_V = 0;
    /// Quadrature of the squared multiplicity over the delta-balls of H.
    double integral = 0.0;
    /// vol(ball) #H ((log2 1/delta)^-2 #V)^2.
    double lower_bound = 0.0;
    std::size_t min_center_multiplicity = 0;
    double frostman_audit = 0.0;
    std::optional<bool> brute_match;
};

struct FalconerReport {
    std::vector<FalconerRow> rows;
    double t = 0.0;
    DimEstimate fit;
    /// a + 2t - 2(n-1) - 0.4.
    double slope_floor = 0.0;
    /// k(n-k) + s - a + (n-k) + 0.4.
    double t_ceiling = 0.0;
    bool slope_pass = false;
    bool lower_pass = false;
    bool t_consistent = false;
};

/// Volume of the chart ball {|dX| + |dY| <= r} in R^{2(n-1)}.
double chart_ball_volume(int n, double r);

struct FalconerEnergy {
    double integral = 0.0;
    /// Multiplicity at each line of H.
    std::vector<std::size_t> center_counts;
    /// Multiplicity at every sample, line-major.
    std::vector<std::size_t> sample_counts;
};
/// Monte Carlo quadrature of sum_l int_{B(l, delta)} (sum_V sum_T 1_T)^2 with
/// `samples_per_line` uniform points per chart ball.
FalconerEnergy falconer_energy(const SlabFamilies& TV, const PointSet& H, double delta_abs, int samples_per_line,
                               Rng& rng, bool brute = false);

FalconerReport falconer_slope_experiment(const FalconerParams& p, const std::vector<double>& deltas);

}  // namespace grassproj
