#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "grassproj/common.hpp"
#include "grassproj/rng.hpp"

namespace grassproj {

/// Run parameters shared across modules. Not every field is meaningful for
/// every experiment; validate() checks the ones that always are.
struct Params {
    int n = 3;
    int k = 2;
    int l = 1;
    double mu = 0.005;
    double delta = 1.0 / 64;
    double a = 0.0;
    double s = 0.0;
    double t = 0.0;
    double u = 0.0;
    double K = 4.0;

    void validate() const;
};

/// A linear subspace of R^n. The projection matrix is the canonical
/// representative; the frame is one orthonormal basis of it (rows).
class Subspace {
public:
    Subspace() = default;

    /// Span of the rows of `rows`. Throws if the rows are linearly dependent.
    static Subspace span(const Mat& rows);
    /// Span of the listed coordinate axes of R^n.
    static Subspace coordinate(int n, const std::vector<int>& axes);
    static Subspace zero(int n);

    int dim() const { return static_cast<int>(frame_.rows()); }
    int ambient() const { return static_cast<int>(proj_.rows()); }
    const Mat& frame() const { return frame_; }
    const Mat& proj() const { return proj_; }

    Subspace complement() const;
    Vec project(const Vec& x) const { return proj_ * x; }
    /// Coordinates of P_V x in the frame.
    Vec coords(const Vec& x) const { return frame_ * x; }
    bool contains(const Vec& x, double tol = tol::kProjector) const;

private:
    Mat frame_;
    Mat proj_;
};

/// An affine plane dir + offset with offset orthogonal to dir and |offset| < 1/2.
class AffinePlane {
public:
    AffinePlane() = default;
    AffinePlane(Subspace dir, const Vec& point);

    const Subspace& dir() const { return dir_; }
    const Vec& offset() const { return offset_; }
    int dim() const { return dir_.dim(); }
    int ambient() const { return dir_.ambient(); }
    double distance_to(const Vec& x) const;

private:
    Subspace dir_;
    Vec offset_;
};

/// A line transverse to R^{n-1} x {0}, stored by its crossings of the
/// hyperplanes x_n = 0 (X) and x_n = 1 (Y).
class LocalLine {
public:
    LocalLine() = default;
    LocalLine(Vec X, Vec Y);

    static LocalLine from_affine(const AffinePlane& plane);
    static LocalLine through(const Vec& point, const Vec& direction);

    int ambient() const { return static_cast<int>(X_.size()) + 1; }
    const Vec& X() const { return X_; }
    const Vec& Y() const { return Y_; }

    /// Unit direction with positive last coordinate.
    Vec direction() const;
    Vec point_at_height(double h) const;
    AffinePlane to_affine() const;
    double angle_to_axis() const;
    /// Distance from the origin to the line.
    double offset_norm() const;
    /// Angle to the x_n axis at most 0.1 and offset inside B(0,1/2).
    bool chart_valid() const;
    /// The chord l ∩ B(0,1) as two endpoints (empty if the line misses the ball).
    std::optional<std::pair<Vec, Vec>> unit_chord() const;

private:
    Vec X_;
    Vec Y_;
};

double grassmann_distance(const Subspace& a, const Subspace& b);
/// Same metric computed from orthonormal frames as sqrt(1 - sigma_min(F_a F_b^T)^2).
double grassmann_distance_frames(const Mat& frame_a, const Mat& frame_b);
double affine_distance(const AffinePlane& a, const AffinePlane& b);
double line_distance_chart(const LocalLine& a, const LocalLine& b);

/// Smallest rho with B(0,1) ∩ a inside N_rho(b), symmetrized; evaluated on
/// 1000*dim quasi-uniform points of the boundary sphere of B(0,1) ∩ a.
double hausdorff_rho(const Subspace& a, const Subspace& b);
double hausdorff_rho(const AffinePlane& a, const AffinePlane& b);

/// Quasi-uniform deterministic points on the unit sphere S^{dim-1}, one per row.
Mat sphere_points(int dim, int count);

Vec project_point(const Subspace& V, const Vec& x);

/// Angle between direction u and the complement of V, arcsin(|P_V u|).
double angle_to_complement(const Subspace& V, const Vec& u);

struct ProjectedLine {
    Vec p0;  // frame coordinates in V
    Vec p1;
};
struct ProjectedPoint {
    Vec p;
};
struct Degenerate {
    double angle;
};
using LineImage = std::variant<ProjectedLine, ProjectedPoint, Degenerate>;

/// P_V(L): a line when the angle to V-perp exceeds mu, a point when the
/// direction lies in V-perp, Degenerate in between.
LineImage project_line(const Subspace& V, const LocalLine& L, double mu);

/// Uniform sample from the rotation-invariant probability measure on G(k,n).
Subspace sample_grassmannian(int n, int k, Rng& rng);
/// Haar-random rotation of R^n.
Mat random_rotation(int n, Rng& rng);

/// Coordinates on V whose last axis is P_V e_n; lines in V are charted by
/// their crossings of the levels 0 and 1 of that axis, like LocalLine.
class PlaneChart {
public:
    PlaneChart() = default;
    explicit PlaneChart(const Subspace& V);

    const Subspace& plane() const { return plane_; }
    /// k x n, rows f_1..f_{k-1}, e; orthonormal.
    const Mat& basis() const { return basis_; }
    int chart_dim() const { return 2 * (plane_.dim() - 1); }

    /// Chart (X', Y') of the projected line, or nullopt when P_V L is a point
    /// or runs parallel to the level sets.
    std::optional<Vec> chart_of(const LocalLine& L) const;
    /// Chart of the line in V through two ambient points.
    std::optional<Vec> chart_of_points(const Vec& a, const Vec& b) const;
    /// The chart point back as two ambient points on the line (levels 0 and 1).
    std::pair<Vec, Vec> points_of(const Vec& chart) const;
    /// Direction in ambient coordinates of the line with the given chart.
    Vec direction_of(const Vec& chart) const;

private:
    Subspace plane_;
    Mat basis_;
};

}  // namespace grassproj
