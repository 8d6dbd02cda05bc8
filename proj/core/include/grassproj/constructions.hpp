#pragma once

#include <vector>

#include "grassproj/grasscore.hpp"
#include "grassproj/nets.hpp"
#include "grassproj/rng.hpp"

namespace grassproj {

namespace construction {
/// Generated line families live at this size: base points in [-unit, unit]^{n-1}
/// and slopes |Y - X| <= kCapSlope, so every line makes an angle below 0.1 with
/// the x_n axis. Generator scales are relative: a requested delta means an
/// absolute separation of unit * delta.
inline constexpr double kUnit = 1.0 / 16;
inline constexpr double kCapSlope = 0.1;
}  // namespace construction

/// Points of a set of dimension beta in [-half_width, half_width]^dim spaced
/// about `spacing`: floor(beta) full lattice axes, then one Cantor axis with
/// two pieces per level at ratio 2^{-1/frac(beta)}, remaining axes zero.
/// Not yet separated; pass through greedy_net for a net.
std::vector<Vec> fractional_set(int dim, double beta, double half_width, double spacing);

/// Sphere-cap slopes S = u'/u_n with |S| <= radius for unit directions u,
/// spaced about `spacing`. Fibonacci lattice on S^2 for slopes in R^2, a cubic
/// lattice otherwise.
std::vector<Vec> cap_slopes(int slope_dim, double radius, double spacing);

/// Lines through the origin whose directions form a net of an
/// dim_a-dimensional subset of the near-vertical cap.
NetCloud gen_direction_bush(int n, double delta, double dim_a);

/// Product family: a beta-dimensional base A in R^{n-1} x {0}, each base point
/// carrying the full bush of cap directions.
NetCloud gen_product_example(int n, double beta, double delta);

struct Bush {
    AffinePlane stem;
    int leaf_dim = 0;
    bool transversality_filter = true;
};

struct BushFamily {
    int n = 0, k = 0, l = 0, j = 0;
    std::vector<Bush> bushes;
    /// Leaves as points of affine-planes(l, n).
    NetCloud leaves;
    /// Index into `bushes` of each leaf.
    std::vector<int> leaf_bush;
};

/// Stems V_j + v for v in a b-dimensional net B of V_l-perp (all of a box in
/// V_l-perp when full_B), each enriched to the bush of l-planes containing it.
/// Coordinates are ordered so that V_i is spanned by the last i axes; for
/// l = 1 the leaves are near-vertical lines as in gen_direction_bush.
/// Leaves are sampled on the graph chart dir(W) = V_j + graph(A),
/// A : V_l - V_j -> V_l-perp with entries on a delta grid in [-spread, spread].
BushFamily gen_bush_family(int n, int k, int l, int j, double b, double delta, bool full_B,
                           double spread = 1.0);

/// True when W meets V_l-perp only at 0 (Bush' membership).
bool transverse_to_complement(const AffinePlane& W, int n, int l);

/// Leaf i of a family as an AffinePlane.
AffinePlane leaf_plane(const BushFamily& fam, std::size_t i);

/// The four-piece formula for the exact value of S(a).
double eval_S(double a, int k, int n);

struct GeneralS {
    double value = 0.0;
    /// The j attaining the minimum.
    int j = 0;
    /// a lies in a regime (j = 0 or j = l) where matching lower bounds are stated.
    bool lower_bound_known = false;
};

/// Upper-bound envelope for l-planes: min over j of the piecewise bounds
/// a - (l-j)(n-k) and (l-j+1)(k-l) on their ranges.
GeneralS eval_S_general(double a, int k, int n, int l);

/// Calibration sets for the dimension estimator.
PointSet calibration_segment(int count, Rng& rng);
PointSet calibration_square(int count, Rng& rng);
/// Centers of the 2^level intervals of the middle-thirds construction.
PointSet calibration_cantor(int level);

/// Sorts points lexicographically by coordinates (canonical output order).
void canonical_sort(PointSet& ps);

}  // namespace grassproj
