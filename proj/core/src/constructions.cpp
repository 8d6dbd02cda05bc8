#include "grassproj/constructions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <numbers>

namespace grassproj {

using construction::kCapSlope;
using construction::kUnit;

namespace {

std::vector<double> lattice_axis(double half_width, double spacing) {
    if (half_width <= 0.0) return {0.0};
    const int m = static_cast<int>(std::ceil(2.0 * half_width / spacing));
    std::vector<double> xs(m + 1);
    for (int i = 0; i <= m; ++i) xs[i] = -half_width + 2.0 * half_width * i / m;
    return xs;
}

std::vector<double> cantor_axis(double frac, double half_width, double spacing) {
    const double r = std::pow(2.0, -1.0 / frac);
    std::vector<double> centers{0.0};
    double len = 2.0 * half_width;
    while (len > spacing) {
        std::vector<double> next;
        next.reserve(centers.size() * 2);
        const double shift = 0.5 * len * (1.0 - r);
        for (double c : centers) {
            next.push_back(c - shift);
            next.push_back(c + shift);
        }
        centers.swap(next);
        len *= r;
    }
    return centers;
}

std::vector<Vec> cartesian(const std::vector<std::vector<double>>& axes) {
    std::vector<Vec> out;
    const int d = static_cast<int>(axes.size());
    std::vector<std::size_t> idx(d, 0);
    for (;;) {
        Vec p(d);
        for (int i = 0; i < d; ++i) p(i) = axes[i][idx[i]];
        out.push_back(p);
        int i = d - 1;
        while (i >= 0 && ++idx[i] == axes[i].size()) idx[i--] = 0;
        if (i < 0) break;
    }
    return out;
}

PointSet lines_from(int n, const std::vector<Vec>& bases, const std::vector<Vec>& slopes) {
    PointSet ps(Space::affine_lines(n));
    ps.coords.reserve(bases.size() * slopes.size() * 2 * (n - 1));
    Vec chart(2 * (n - 1));
    for (const Vec& x : bases)
        for (const Vec& s : slopes) {
            chart.head(n - 1) = x;
            chart.tail(n - 1) = x + s;
            ps.push(chart);
        }
    return ps;
}

std::vector<Vec> net_points(const std::vector<Vec>& pts, double delta) {
    if (pts.empty()) return {};
    PointSet ps(Space::euclidean(static_cast<int>(pts.front().size())));
    for (const Vec& p : pts) ps.push(p);
    NetCloud net = greedy_net(ps, delta);
    std::vector<Vec> out;
    out.reserve(net.size());
    for (std::size_t i = 0; i < net.size(); ++i) out.push_back(net.points.vec(i));
    return out;
}

}  // namespace

std::vector<Vec> fractional_set(int dim, double beta, double half_width, double spacing) {
    require(dim >= 1, "fractional_set: dimension must be positive");
    require(beta >= 0.0 && beta <= dim + 1e-12, "fractional_set: beta outside [0, dim]");
    require(spacing > 0.0 && half_width > 0.0, "fractional_set: sizes must be positive");
    const int full = static_cast<int>(std::floor(beta + 1e-12));
    const double frac = beta - full;
    std::vector<std::vector<double>> axes;
    for (int i = 0; i < dim; ++i) {
        if (i < full) axes.push_back(lattice_axis(half_width, spacing));
        else if (i == full && frac > 1e-9) axes.push_back(cantor_axis(frac, half_width, spacing));
        else axes.push_back({0.0});
    }
    return cartesian(axes);
}

std::vector<Vec> cap_slopes(int slope_dim, double radius, double spacing) {
    require(slope_dim >= 1 && radius > 0.0 && spacing > 0.0, "cap_slopes: bad arguments");
    std::vector<Vec> out;
    if (slope_dim == 2) {
        const double total = std::ceil(4.0 * std::numbers::pi / (spacing * spacing));
        const double zmin = 1.0 / std::sqrt(1.0 + radius * radius);
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (double i = 0;; i += 1.0) {
            const double z = 1.0 - (2.0 * i + 1.0) / total;
            if (z < zmin) break;
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            Vec s(2);
            s << r * std::cos(golden * i) / z, r * std::sin(golden * i) / z;
            if (s.norm() <= radius) out.push_back(s);
        }
        return out;
    }
    std::vector<std::vector<double>> axes(slope_dim, lattice_axis(radius, spacing));
    for (Vec& s : cartesian(axes))
        if (s.norm() <= radius) out.push_back(std::move(s));
    return out;
}

void canonical_sort(PointSet& ps) {
    const int d = ps.space.point_dim();
    std::vector<std::size_t> order(ps.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::lexicographical_compare(ps.point(a), ps.point(a) + d, ps.point(b), ps.point(b) + d);
    });
    std::vector<double> sorted;
    sorted.reserve(ps.coords.size());
    for (std::size_t i : order) sorted.insert(sorted.end(), ps.point(i), ps.point(i) + d);
    ps.coords.swap(sorted);
}

NetCloud gen_direction_bush(int n, double delta, double dim_a) {
    require(n >= 2, "gen_direction_bush: n must be at least 2");
    require(dim_a >= 0.0 && dim_a <= n - 1 + 1e-12, "gen_direction_bush: dim_a outside [0, n-1]");
    require(delta > 0.0 && delta < 1.0, "gen_direction_bush: delta outside (0, 1)");
    const double sep = kUnit * delta;
    std::vector<Vec> slopes;
    if (dim_a >= n - 1 - 1e-12)
        slopes = cap_slopes(n - 1, kCapSlope, 0.5 * sep);
    else
        slopes = fractional_set(n - 1, dim_a, kCapSlope / std::sqrt(n - 1.0), 0.5 * sep);
    NetCloud net = greedy_net(lines_from(n, {Vec::Zero(n - 1)}, slopes), sep);
    canonical_sort(net.points);
    net.claimed_s = dim_a;
    return net;
}

NetCloud gen_product_example(int n, double beta, double delta) {
    require(n >= 2, "gen_product_example: n must be at least 2");
    require(beta >= 0.0 && beta <= n - 1 + 1e-12, "gen_product_example: beta outside [0, n-1]");
    require(delta > 0.0 && delta < 1.0, "gen_product_example: delta outside (0, 1)");
    const double sep = kUnit * delta;
    const double hw = kUnit;
    std::vector<Vec> base = net_points(fractional_set(n - 1, beta, hw, 0.5 * sep), sep);
    std::vector<Vec> slopes = net_points(cap_slopes(n - 1, kCapSlope, 0.5 * sep), sep);
    NetCloud out;
    out.points = lines_from(n, base, slopes);
    out.delta = sep;
    canonical_sort(out.points);
    out.claimed_s = beta + (n - 1);
    return out;
}

// ----------------------------------------------------------------- bushes

bool transverse_to_complement(const AffinePlane& W, int n, int l) {
    require(W.ambient() == n && W.dim() == l, "transverse_to_complement: plane has wrong shape");
    Mat last = W.dir().frame().rightCols(l);
    Eigen::JacobiSVD<Mat> svd(last);
    return svd.singularValues().minCoeff() > 1e-9;
}

AffinePlane leaf_plane(const BushFamily& fam, std::size_t i) {
    const int l = fam.l, n = fam.n;
    const double* p = fam.leaves.points.point(i);
    Mat f(l, n);
    for (int r = 0; r < l; ++r)
        for (int c = 0; c < n; ++c) f(r, c) = p[r * n + c];
    Vec off = Eigen::Map<const Vec>(p + l * n, n);
    return AffinePlane(Subspace::span(f), off);
}

BushFamily gen_bush_family(int n, int k, int l, int j, double b, double delta, bool full_B, double spread) {
    require(1 <= l && l < k && k < n, "gen_bush_family: need 1 <= l < k < n");
    require(0 <= j && j <= l, "gen_bush_family: need 0 <= j <= l");
    require(full_B || (b >= 0.0 && b <= n - l + 1e-12), "gen_bush_family: b outside [0, n-l]");
    require(delta > 0.0 && delta < 1.0 && spread > 0.0, "gen_bush_family: bad scale");

    BushFamily fam;
    fam.n = n;
    fam.k = k;
    fam.l = l;
    fam.j = j;
    const int m = n - l;        // dim V_l-perp, its axes are 0..m-1
    const int free = l - j;     // axes of V_l - V_j are m..m+free-1
    const double hw = 0.2;
    std::vector<Vec> B = full_B ? fractional_set(m, m, hw, delta) : net_points(fractional_set(m, b, hw, 0.5 * delta), delta);

    const std::size_t per_bush =
        static_cast<std::size_t>(std::pow(2.0 * spread / delta + 1.0, static_cast<double>(free * m)));
    require(per_bush * B.size() <= 4000000, "gen_bush_family: too many leaves at this delta");
    std::vector<std::vector<double>> axes(free * m, lattice_axis(spread, delta));
    std::vector<Vec> graphs = free * m > 0 ? cartesian(axes) : std::vector<Vec>{Vec()};

    // Directions are shared by all bushes; only offsets change.
    std::vector<Subspace> dirs;
    dirs.reserve(graphs.size());
    for (const Vec& A : graphs) {
        Mat rows = Mat::Zero(l, n);
        for (int c = 0; c < free; ++c) {
            rows(c, m + c) = 1.0;
            for (int r = 0; r < m; ++r) rows(c, r) = A(c * m + r);
        }
        for (int c = 0; c < j; ++c) rows(free + c, m + free + c) = 1.0;
        dirs.push_back(Subspace::span(rows));
    }

    Mat stem_rows = Mat::Zero(j, n);
    for (int c = 0; c < j; ++c) stem_rows(c, n - j + c) = 1.0;
    const Subspace stem_dir = Subspace::span(stem_rows);

    fam.leaves.points = PointSet(Space::affine_planes(l, n));
    fam.leaves.delta = 0.0;
    for (std::size_t bi = 0; bi < B.size(); ++bi) {
        Vec v = Vec::Zero(n);
        v.head(m) = B[bi];
        fam.bushes.push_back({AffinePlane(stem_dir, v), l, true});
        for (const Subspace& D : dirs) {
            AffinePlane W(D, v);
            if (!transverse_to_complement(W, n, l)) continue;
            Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> f = D.frame();
            fam.leaves.points.coords.insert(fam.leaves.points.coords.end(), f.data(), f.data() + f.size());
            fam.leaves.points.coords.insert(fam.leaves.points.coords.end(), W.offset().data(),
                                            W.offset().data() + n);
            fam.leaf_bush.push_back(static_cast<int>(bi));
        }
    }
    fam.leaves.claimed_s = full_B ? double((free + 1) * m) : free * m + b;
    return fam;
}

// ---------------------------------------------------------------- formulas

double eval_S(double a, int k, int n) {
    require(1 < k && k < n, "eval_S: need 1 < k < n");
    require(a >= 0.0 && a <= 2.0 * (n - 1), "eval_S: a outside [0, 2(n-1)]");
    if (a <= k - 1) return a;
    if (a <= n - 1) return k - 1;
    if (a <= n + k - 2) return a - (n - k);
    return 2.0 * (k - 1);
}

GeneralS eval_S_general(double a, int k, int n, int l) {
    require(1 <= l && l < k && k < n, "eval_S_general: need 1 <= l < k < n");
    require(a >= 0.0 && a <= double((l + 1) * (n - l)), "eval_S_general: a outside [0, (l+1)(n-l)]");
    constexpr double eps = 1e-12;
    GeneralS best;
    best.value = std::numeric_limits<double>::infinity();
    for (int j = l; j >= 0; --j) {
        const double lo = (l - j) * (n - l);
        const double mid = lo + (k - l);
        const double hi = (l - j + 1) * (n - l);
        double cand = std::numeric_limits<double>::infinity();
        if (a >= lo - eps && a <= mid + eps) cand = std::min(cand, a - (l - j) * (n - k));
        if (a >= mid - eps && a <= hi + eps) cand = std::min(cand, double((l - j + 1) * (k - l)));
        if (cand < best.value - eps) {
            best.value = cand;
            best.j = j;
            best.lower_bound_known = (j == 0 || j == l);
        } else if (std::abs(cand - best.value) <= eps && (j == 0 || j == l)) {
            best.lower_bound_known = true;
        }
    }
    return best;
}

// ------------------------------------------------------------ calibration

PointSet calibration_segment(int count, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PointSet ps(Space::euclidean(1));
    for (int i = 0; i < count; ++i) ps.coords.push_back(u(rng));
    return ps;
}

PointSet calibration_square(int count, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PointSet ps(Space::euclidean(2));
    for (int i = 0; i < 2 * count; ++i) ps.coords.push_back(u(rng));
    return ps;
}

PointSet calibration_cantor(int level) {
    PointSet ps(Space::euclidean(1));
    for (double c : cantor_axis(std::log(2.0) / std::log(3.0), 0.5, std::pow(3.0, -level) * 1.5))
        ps.coords.push_back(c + 0.5);
    std::sort(ps.coords.begin(), ps.coords.end());
    return ps;
}

}  // namespace grassproj
