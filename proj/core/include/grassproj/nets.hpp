#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "grassproj/common.hpp"

namespace grassproj {

enum class SpaceKind { Euclidean, Grassmannian, AffineLines, LinesInV, AffinePlanes };

/// A metric space together with the flat encoding of its points.
///   Euclidean(d):        d coordinates, euclidean metric
///   Grassmannian(k,n):   k x n orthonormal frame, row-major; operator-norm metric
///   AffineLines(n):      chart (X,Y) in R^{2(n-1)}; metric |dX| + |dY|
///   LinesInV(k):         chart (X',Y') in R^{2(k-1)} of a line inside a k-plane
///   AffinePlanes(k,n):   frame (k*n) followed by the offset (n); metric d(dir) + |d offset|
struct Space {
    SpaceKind kind = SpaceKind::Euclidean;
    int k = 0;
    int n = 0;

    static Space euclidean(int d) { return {SpaceKind::Euclidean, 0, d}; }
    static Space grassmannian(int k, int n) { return {SpaceKind::Grassmannian, k, n}; }
    static Space affine_lines(int n) { return {SpaceKind::AffineLines, 1, n}; }
    static Space lines_in_v(int k) { return {SpaceKind::LinesInV, 1, k}; }
    static Space affine_planes(int k, int n) { return {SpaceKind::AffinePlanes, k, n}; }

    /// "euclidean(2)", "grassmannian(2,3)", "affine-lines(3)", ...
    std::string tag() const;
    static Space parse(const std::string& tag);

    int point_dim() const;
    /// Whether ball queries can use a grid hash on sketch coordinates.
    bool gridable() const;
    /// Sketch coordinates with |sketch(a)_i - sketch(b)_i| <= distance(a, b):
    /// the raw coordinates for euclidean and chart spaces, entries of the
    /// projection matrix (and offset) for Grassmannians and affine planes.
    int sketch_dim() const;
    void sketch(const double* p, double* out) const;
    double distance(const double* a, const double* b) const;

    bool operator==(const Space&) const = default;
};

/// Finite point list in a Space, stored flat.
struct PointSet {
    Space space;
    std::vector<double> coords;

    PointSet() = default;
    explicit PointSet(Space sp) : space(sp) {}

    std::size_t size() const {
        const int d = space.point_dim();
        return d == 0 ? 0 : coords.size() / static_cast<std::size_t>(d);
    }
    bool empty() const { return coords.empty(); }
    const double* point(std::size_t i) const { return coords.data() + i * space.point_dim(); }
    Vec vec(std::size_t i) const;
    void push(const double* p);
    void push(const Vec& p);
    void append(const PointSet& other);
    double distance(std::size_t i, std::size_t j) const { return space.distance(point(i), point(j)); }
};

/// A delta-separated PointSet with optional Frostman data.
struct NetCloud {
    PointSet points;
    double delta = 0.0;
    std::optional<double> claimed_s;
    std::optional<double> frostman_C;

    std::size_t size() const { return points.size(); }
    const Space& space() const { return points.space; }
};

struct DimEstimate {
    std::vector<double> scales;
    std::vector<double> counts;
    double slope = 0.0;
    double intercept = 0.0;
    double std_error = 0.0;
};

/// Greedy packing in input order: keeps a point when it is at distance >= delta
/// from everything kept so far.
NetCloud greedy_net(const PointSet& points, double delta);

/// Size of the greedy delta-cover: centers chosen in input order, each point
/// joins the first center within distance delta.
std::size_t covering_count(const PointSet& points, double delta);

/// Indices of the greedy delta-cover centers.
std::vector<std::size_t> covering_centers(const PointSet& points, double delta);

/// Exact pairwise check that all distances are >= delta (up to 1e-12 relative).
bool is_separated(const PointSet& points, double delta);

/// Radii delta * 2^j for j >= 0 up to and including radius 1.
std::vector<double> dyadic_radii(double delta);

/// Max over the given centers and dyadic r in [delta, 1] of
/// #{y : d(x,y) < r} / (r/delta)^s. Centers default to every point.
double frostman_constant(const NetCloud& cloud, double s,
                         const std::vector<std::size_t>& centers = {});

/// Multi-scale greedy thinning. A point is accepted only if, at every dyadic
/// r in [delta, 1], no accepted ball of radius r (its own included) would hold
/// more than ceil(kappa * (r/delta)^a) points. The result satisfies
/// frostman_constant(out, a) <= kappa + 1 over its own points.
NetCloud extract_frostman_subset(const NetCloud& cloud, double a, double kappa = 1.0);

/// base^{-i} for i = i_min..i_max.
std::vector<double> geometric_scales(int i_min, int i_max, double base = 2.0);

/// Least-squares slope of log N(delta) against log(1/delta) for greedy covers
/// at the given scales (at least three).
DimEstimate box_dimension(const PointSet& points, const std::vector<double>& scales);

/// Slope and standard error of a least-squares line fit y = c + slope x.
DimEstimate fit_loglog(const std::vector<double>& scales, const std::vector<double>& counts);

/// JSON {space, delta, points: [[...], ...]} plus optional claimed_s / frostman_C.
std::string net_to_json(const NetCloud& cloud);
/// Parses and validates (encoding, frame orthonormality, separation).
NetCloud net_from_json(const std::string& text);

}  // namespace grassproj
