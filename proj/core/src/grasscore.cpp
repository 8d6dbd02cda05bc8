#include "grassproj/grasscore.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace grassproj {

void Params::validate() const {
    require(n >= 3, "Params: n must be at least 3");
    require(1 <= l && l < k && k < n, "Params: need 1 <= l < k < n");
    require(mu > 0.0 && mu < 0.01, "Params: mu must lie in (0, 1/100)");
    require(delta > 0.0 && delta < 0.01, "Params: delta must lie in (0, 1/100)");
    require(a >= 0.0 && s >= 0.0 && t >= 0.0 && u >= 0.0, "Params: exponents must be nonnegative");
    require(K > 1.0, "Params: K must exceed 1");
}

// ---------------------------------------------------------------- Subspace

Subspace Subspace::span(const Mat& rows) {
    const auto m = rows.rows();
    const auto n = rows.cols();
    require(n >= 1, "Subspace::span: ambient dimension must be positive");
    require(m <= n, "Subspace::span: more rows than ambient dimension");
    Subspace out;
    if (m == 0) {
        out.frame_ = Mat(0, n);
        out.proj_ = Mat::Zero(n, n);
        return out;
    }
    Eigen::ColPivHouseholderQR<Mat> qr(rows.transpose());
    qr.setThreshold(tol::kRank);
    require(qr.rank() == m, "Subspace::span: rows are linearly dependent");
    Mat q = qr.householderQ() * Mat::Identity(n, m);
    out.frame_ = q.transpose();
    Mat p = q * q.transpose();
    out.proj_ = 0.5 * (p + p.transpose());
    return out;
}

Subspace Subspace::coordinate(int n, const std::vector<int>& axes) {
    Mat rows = Mat::Zero(static_cast<Eigen::Index>(axes.size()), n);
    for (std::size_t i = 0; i < axes.size(); ++i) {
        require(axes[i] >= 0 && axes[i] < n, "Subspace::coordinate: axis out of range");
        rows(static_cast<Eigen::Index>(i), axes[i]) = 1.0;
    }
    return span(rows);
}

Subspace Subspace::zero(int n) { return span(Mat(0, n)); }

Subspace Subspace::complement() const {
    const int n = ambient();
    const int k = dim();
    Subspace out;
    if (k == 0) {
        out.frame_ = Mat::Identity(n, n);
        out.proj_ = Mat::Identity(n, n);
        return out;
    }
    Eigen::HouseholderQR<Mat> qr(frame_.transpose());
    Mat q = qr.householderQ() * Mat::Identity(n, n);
    out.frame_ = q.rightCols(n - k).transpose();
    Mat p = Mat::Identity(n, n) - proj_;
    out.proj_ = 0.5 * (p + p.transpose());
    return out;
}

bool Subspace::contains(const Vec& x, double tolerance) const {
    return (x - proj_ * x).norm() <= tolerance * std::max(1.0, x.norm());
}

// ------------------------------------------------------------- AffinePlane

AffinePlane::AffinePlane(Subspace dir, const Vec& point) : dir_(std::move(dir)) {
    require(point.size() == dir_.ambient(), "AffinePlane: point has wrong dimension");
    offset_ = point - dir_.project(point);
    require(offset_.norm() < chart::kMaxOffset, "AffinePlane: offset outside B(0,1/2)");
}

double AffinePlane::distance_to(const Vec& x) const {
    Vec y = x - offset_;
    return (y - dir_.project(y)).norm();
}

// --------------------------------------------------------------- LocalLine

LocalLine::LocalLine(Vec X, Vec Y) : X_(std::move(X)), Y_(std::move(Y)) {
    require(X_.size() == Y_.size() && X_.size() >= 1, "LocalLine: X and Y must share a positive dimension");
}

LocalLine LocalLine::through(const Vec& point, const Vec& direction) {
    const auto n = point.size();
    require(direction.size() == n && n >= 2, "LocalLine::through: dimension mismatch");
    const double dn = direction(n - 1);
    require(std::abs(dn) > tol::kPointImage * direction.norm(),
            "LocalLine::through: line is parallel to {x_n = 0}");
    Vec slope = direction.head(n - 1) / dn;
    Vec X = point.head(n - 1) - point(n - 1) * slope;
    Vec Y = X + slope;
    return {X, Y};
}

LocalLine LocalLine::from_affine(const AffinePlane& plane) {
    require(plane.dim() == 1, "LocalLine::from_affine: plane is not a line");
    return through(plane.offset(), plane.dir().frame().row(0).transpose());
}

Vec LocalLine::direction() const {
    const auto m = X_.size();
    Vec d(m + 1);
    d.head(m) = Y_ - X_;
    d(m) = 1.0;
    return d / d.norm();
}

Vec LocalLine::point_at_height(double h) const {
    const auto m = X_.size();
    Vec p(m + 1);
    p.head(m) = X_ + h * (Y_ - X_);
    p(m) = h;
    return p;
}

AffinePlane LocalLine::to_affine() const {
    return AffinePlane(Subspace::span(direction().transpose()), point_at_height(0.0));
}

double LocalLine::angle_to_axis() const {
    return std::acos(std::clamp(direction()(X_.size()), -1.0, 1.0));
}

double LocalLine::offset_norm() const {
    Vec p = point_at_height(0.0);
    Vec d = direction();
    return (p - p.dot(d) * d).norm();
}

bool LocalLine::chart_valid() const {
    return angle_to_axis() <= chart::kMaxAngle && offset_norm() < chart::kMaxOffset;
}

std::optional<std::pair<Vec, Vec>> LocalLine::unit_chord() const {
    Vec p = point_at_height(0.0);
    Vec d = direction();
    const double b = p.dot(d);
    const double disc = b * b - p.squaredNorm() + 1.0;
    if (disc < 0.0) return std::nullopt;
    const double r = std::sqrt(disc);
    return std::make_pair(Vec(p + (-b - r) * d), Vec(p + (-b + r) * d));
}

// ----------------------------------------------------------------- metrics

double grassmann_distance(const Subspace& a, const Subspace& b) {
    require(a.ambient() == b.ambient(), "grassmann_distance: ambient dimensions differ");
    require(a.dim() == b.dim(), "grassmann_distance: subspace dimensions differ");
    Eigen::SelfAdjointEigenSolver<Mat> es(a.proj() - b.proj(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

double grassmann_distance_frames(const Mat& frame_a, const Mat& frame_b) {
    require(frame_a.rows() == frame_b.rows() && frame_a.cols() == frame_b.cols(),
            "grassmann_distance_frames: frame shapes differ");
    if (frame_a.rows() == 0) return 0.0;
    Mat m = frame_a * frame_b.transpose();
    Eigen::JacobiSVD<Mat> svd(m);
    const double smin = std::min(1.0, svd.singularValues().minCoeff());
    return std::sqrt(std::max(0.0, 1.0 - smin * smin));
}

double affine_distance(const AffinePlane& a, const AffinePlane& b) {
    require(a.dim() == b.dim(), "affine_distance: plane dimensions differ");
    return grassmann_distance(a.dir(), b.dir()) + (a.offset() - b.offset()).norm();
}

double line_distance_chart(const LocalLine& a, const LocalLine& b) {
    require(a.ambient() == b.ambient(), "line_distance_chart: ambient dimensions differ");
    return (a.X() - b.X()).norm() + (a.Y() - b.Y()).norm();
}

// ------------------------------------------------------------ sphere sample

namespace {

double radical_inverse(std::uint64_t i, std::uint64_t base) {
    double inv = 1.0 / static_cast<double>(base);
    double f = inv;
    double r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

constexpr std::uint64_t kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

}  // namespace

Mat sphere_points(int dim, int count) {
    require(dim >= 1, "sphere_points: dimension must be positive");
    require(count >= 2, "sphere_points: need at least two points");
    constexpr double two_pi = 2.0 * std::numbers::pi;
    if (dim == 1) {
        Mat out(2, 1);
        out << 1.0, -1.0;
        return out;
    }
    Mat out(count, dim);
    if (dim == 2) {
        for (int i = 0; i < count; ++i) {
            const double th = two_pi * i / count;
            out(i, 0) = std::cos(th);
            out(i, 1) = std::sin(th);
        }
        return out;
    }
    if (dim == 3) {
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < count; ++i) {
            const double z = 1.0 - 2.0 * (i + 0.5) / count;
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            out(i, 0) = r * std::cos(golden * i);
            out(i, 1) = r * std::sin(golden * i);
            out(i, 2) = z;
        }
        return out;
    }
    require(dim <= 32, "sphere_points: dimension too large");
    // Halton points pushed through Box-Muller, then normalized.
    for (int i = 0; i < count; ++i) {
        const auto idx = static_cast<std::uint64_t>(i + 1);
        for (int c = 0; c < dim; c += 2) {
            const double u1 = std::max(radical_inverse(idx, kPrimes[c / 2 * 2 % 16]), 1e-300);
            const double u2 = radical_inverse(idx, kPrimes[(c / 2 * 2 + 1) % 16]);
            const double r = std::sqrt(-2.0 * std::log(u1));
            out(i, c) = r * std::cos(two_pi * u2);
            if (c + 1 < dim) out(i, c + 1) = r * std::sin(two_pi * u2);
        }
        out.row(i).normalize();
    }
    return out;
}

// ------------------------------------------------------------ hausdorff rho

namespace {

double one_sided_rho(const Subspace& a, const Subspace& b) {
    if (a.dim() == 0) return 0.0;
    Mat pts = sphere_points(a.dim(), 1000 * a.dim()) * a.frame();
    Mat resid = pts - pts * b.proj();
    return resid.rowwise().norm().maxCoeff();
}

double one_sided_rho(const AffinePlane& a, const AffinePlane& b) {
    const double c2 = a.offset().squaredNorm();
    const double radius = std::sqrt(std::max(0.0, 1.0 - c2));
    if (a.dim() == 0) return b.distance_to(a.offset());
    Mat pts = radius * (sphere_points(a.dim(), 1000 * a.dim()) * a.dir().frame());
    pts.rowwise() += (a.offset() - b.offset()).transpose();
    Mat resid = pts - pts * b.dir().proj();
    return resid.rowwise().norm().maxCoeff();
}

}  // namespace

double hausdorff_rho(const Subspace& a, const Subspace& b) {
    require(a.ambient() == b.ambient() && a.dim() == b.dim(), "hausdorff_rho: dimensions differ");
    return std::max(one_sided_rho(a, b), one_sided_rho(b, a));
}

double hausdorff_rho(const AffinePlane& a, const AffinePlane& b) {
    require(a.ambient() == b.ambient() && a.dim() == b.dim(), "hausdorff_rho: dimensions differ");
    return std::max(one_sided_rho(a, b), one_sided_rho(b, a));
}

// ------------------------------------------------------------- projections

Vec project_point(const Subspace& V, const Vec& x) {
    require(x.size() == V.ambient(), "project_point: dimension mismatch");
    return V.project(x);
}

double angle_to_complement(const Subspace& V, const Vec& u) {
    return std::asin(std::min(1.0, V.coords(u).norm() / u.norm()));
}

LineImage project_line(const Subspace& V, const LocalLine& L, double mu) {
    require(L.ambient() == V.ambient(), "project_line: dimension mismatch");
    Vec u = L.direction();
    const double pu = V.coords(u).norm();
    Vec p0 = V.coords(L.point_at_height(0.0));
    if (pu <= tol::kPointImage) return ProjectedPoint{p0};
    const double angle = std::asin(std::min(1.0, pu));
    if (angle <= mu) return Degenerate{angle};
    return ProjectedLine{p0, V.coords(L.point_at_height(1.0))};
}

// ---------------------------------------------------------------- sampling

Subspace sample_grassmannian(int n, int k, Rng& rng) {
    require(1 <= k && k < n, "sample_grassmannian: need 1 <= k < n");
    std::normal_distribution<double> g;
    for (;;) {
        Mat m(k, n);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = g(rng);
        try {
            return Subspace::span(m);
        } catch (const ContractViolation&) {
        }
    }
}

Mat random_rotation(int n, Rng& rng) {
    std::normal_distribution<double> g;
    Mat m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = g(rng);
    Eigen::HouseholderQR<Mat> qr(m);
    Mat q = qr.householderQ() * Mat::Identity(n, n);
    Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j)
        if (r(j, j) < 0) q.col(j) *= -1.0;
    return q;
}

// -------------------------------------------------------------- PlaneChart

PlaneChart::PlaneChart(const Subspace& V) : plane_(V) {
    const int n = V.ambient();
    const int k = V.dim();
    require(k >= 1, "PlaneChart: plane must be nonzero");
    Vec c = V.frame().col(n - 1);
    require(c.norm() > 1e-6, "PlaneChart: plane is orthogonal to the x_n axis");
    c.normalize();
    basis_.resize(k, n);
    if (k > 1) {
        Eigen::HouseholderQR<Mat> qr{Mat(c)};
        Mat q = qr.householderQ() * Mat::Identity(k, k);
        basis_.topRows(k - 1) = q.rightCols(k - 1).transpose() * V.frame();
    }
    basis_.row(k - 1) = c.transpose() * V.frame();
}

std::optional<Vec> PlaneChart::chart_of_points(const Vec& a, const Vec& b) const {
    const int k = plane_.dim();
    Vec ca = basis_ * a;
    Vec cb = basis_ * b;
    const double de = cb(k - 1) - ca(k - 1);
    if (std::abs(de) <= 1e-12 * std::max(1.0, (cb - ca).norm())) return std::nullopt;
    Vec slope = (cb.head(k - 1) - ca.head(k - 1)) / de;
    Vec out(2 * (k - 1));
    out.head(k - 1) = ca.head(k - 1) - ca(k - 1) * slope;
    out.tail(k - 1) = out.head(k - 1) + slope;
    return out;
}

std::optional<Vec> PlaneChart::chart_of(const LocalLine& L) const {
    if (plane_.coords(L.direction()).norm() <= tol::kPointImage) return std::nullopt;
    return chart_of_points(L.point_at_height(0.0), L.point_at_height(1.0));
}

std::pair<Vec, Vec> PlaneChart::points_of(const Vec& chart) const {
    const int k = plane_.dim();
    require(chart.size() == 2 * (k - 1), "PlaneChart::points_of: chart has wrong size");
    Mat f = basis_.topRows(k - 1);
    Vec a = f.transpose() * chart.head(k - 1);
    Vec b = f.transpose() * chart.tail(k - 1) + basis_.row(k - 1).transpose();
    return {a, b};
}

Vec PlaneChart::direction_of(const Vec& chart) const {
    auto [a, b] = points_of(chart);
    return (b - a).normalized();
}

}  // namespace grassproj
