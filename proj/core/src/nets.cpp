#include "grassproj/nets.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include <json.hpp>

#include "grassproj/grasscore.hpp"
#include "grassproj/parallel.hpp"
#include "grid_index.hpp"

namespace grassproj {

using detail::GridIndex;

// ------------------------------------------------------------------- Space

std::string Space::tag() const {
    switch (kind) {
        case SpaceKind::Euclidean: return "euclidean(" + std::to_string(n) + ")";
        case SpaceKind::Grassmannian:
            return "grassmannian(" + std::to_string(k) + "," + std::to_string(n) + ")";
        case SpaceKind::AffineLines: return "affine-lines(" + std::to_string(n) + ")";
        case SpaceKind::LinesInV: return "lines-in-V(" + std::to_string(n) + ")";
        case SpaceKind::AffinePlanes:
            return "affine-planes(" + std::to_string(k) + "," + std::to_string(n) + ")";
    }
    return {};
}

Space Space::parse(const std::string& tag) {
    static const std::regex re(R"(^\s*([a-zA-Z-]+)\s*\(\s*(\d+)\s*(?:,\s*(\d+)\s*)?\)\s*$)");
    std::smatch m;
    require(std::regex_match(tag, m, re), "Space::parse: malformed space tag '" + tag + "'");
    const std::string name = m[1];
    const int p = std::stoi(m[2]);
    const bool two = m[3].matched;
    const int q = two ? std::stoi(m[3]) : 0;
    Space sp;
    if (name == "euclidean" && !two) sp = euclidean(p);
    else if (name == "grassmannian" && two) sp = grassmannian(p, q);
    else if (name == "affine-lines" && !two) sp = affine_lines(p);
    else if (name == "lines-in-V" && !two) sp = lines_in_v(p);
    else if (name == "affine-planes" && two) sp = affine_planes(p, q);
    else throw ContractViolation("Space::parse: unknown space tag '" + tag + "'");
    require(sp.point_dim() >= 1, "Space::parse: space has no coordinates");
    if (two) require(p >= 1 && p < q, "Space::parse: need 1 <= k < n");
    return sp;
}

int Space::point_dim() const {
    switch (kind) {
        case SpaceKind::Euclidean: return n;
        case SpaceKind::Grassmannian: return k * n;
        case SpaceKind::AffineLines: return 2 * (n - 1);
        case SpaceKind::LinesInV: return 2 * (n - 1);
        case SpaceKind::AffinePlanes: return k * n + n;
    }
    return 0;
}

namespace {

// Projection-matrix entries used as Grassmannian sketch: off-diagonal first.
std::vector<std::pair<int, int>> sketch_entries(int n) {
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
    for (int i = 0; i < n; ++i) e.emplace_back(i, i);
    if (e.size() > 4) e.resize(4);
    return e;
}

}  // namespace

int Space::sketch_dim() const {
    switch (kind) {
        case SpaceKind::Euclidean:
        case SpaceKind::AffineLines:
        case SpaceKind::LinesInV: return point_dim();
        case SpaceKind::Grassmannian: return static_cast<int>(sketch_entries(n).size());
        case SpaceKind::AffinePlanes: return static_cast<int>(sketch_entries(n).size()) + std::min(n, 2);
    }
    return 0;
}

void Space::sketch(const double* p, double* out) const {
    if (kind != SpaceKind::Grassmannian && kind != SpaceKind::AffinePlanes) {
        std::copy(p, p + point_dim(), out);
        return;
    }
    int m = 0;
    for (auto [i, j] : sketch_entries(n)) {
        double v = 0.0;
        for (int r = 0; r < k; ++r) v += p[r * n + i] * p[r * n + j];
        out[m++] = v;
    }
    if (kind == SpaceKind::AffinePlanes)
        for (int i = 0; i < std::min(n, 2); ++i) out[m++] = p[k * n + i];
}

bool Space::gridable() const { return sketch_dim() >= 1 && sketch_dim() <= GridIndex::kMaxDim; }

namespace {

std::vector<double> sketches(const PointSet& pts) {
    const int sd = pts.space.sketch_dim();
    std::vector<double> out(pts.size() * sd);
    for (std::size_t i = 0; i < pts.size(); ++i) pts.space.sketch(pts.point(i), out.data() + i * sd);
    return out;
}

}  // namespace

namespace {

double frame_distance(const double* a, const double* b, int k, int n) {
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> fa(a, k, n);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> fb(b, k, n);
    if (k == 1) {
        const double c = std::min(1.0, std::abs(fa.row(0).dot(fb.row(0))));
        return std::sqrt(std::max(0.0, 1.0 - c * c));
    }
    Mat m = fa * fb.transpose();
    Mat g = m.transpose() * m;
    double lmin;
    if (k == 2) {
        const double tr = g(0, 0) + g(1, 1);
        const double det = g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0);
        lmin = 0.5 * (tr - std::sqrt(std::max(0.0, tr * tr - 4.0 * det)));
    } else {
        Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
        lmin = es.eigenvalues()(0);
    }
    return std::sqrt(std::clamp(1.0 - lmin, 0.0, 1.0));
}

double euclid(const double* a, const double* b, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace

double Space::distance(const double* a, const double* b) const {
    switch (kind) {
        case SpaceKind::Euclidean: return euclid(a, b, n);
        case SpaceKind::Grassmannian: return frame_distance(a, b, k, n);
        case SpaceKind::AffineLines:
        case SpaceKind::LinesInV: {
            const int h = n - 1;
            return euclid(a, b, h) + euclid(a + h, b + h, h);
        }
        case SpaceKind::AffinePlanes:
            return frame_distance(a, b, k, n) + euclid(a + k * n, b + k * n, n);
    }
    return 0.0;
}

// ---------------------------------------------------------------- PointSet

Vec PointSet::vec(std::size_t i) const {
    return Eigen::Map<const Vec>(point(i), space.point_dim());
}

void PointSet::push(const double* p) { coords.insert(coords.end(), p, p + space.point_dim()); }

void PointSet::push(const Vec& p) {
    require(p.size() == space.point_dim(), "PointSet::push: point has wrong size");
    push(p.data());
}

void PointSet::append(const PointSet& other) {
    require(other.space == space, "PointSet::append: spaces differ");
    coords.insert(coords.end(), other.coords.begin(), other.coords.end());
}

// ------------------------------------------------------------ nets, covers

namespace {

/// Greedy selection: point i becomes a new center unless some existing center
/// c satisfies blocks(d(i, c)).
template <class Blocks>
std::vector<std::size_t> greedy_select(const PointSet& pts, double radius, Blocks blocks) {
    std::vector<std::size_t> chosen;
    const std::size_t N = pts.size();
    if (N == 0) return chosen;
    if (pts.space.gridable()) {
        const int sd = pts.space.sketch_dim();
        const std::vector<double> sk = sketches(pts);
        GridIndex grid(sd, radius);
        for (std::size_t i = 0; i < N; ++i) {
            bool hit = false;
            const double* p = pts.point(i);
            grid.for_each_near(sk.data() + i * sd, [&](std::uint32_t c) {
                if (!hit && blocks(pts.space.distance(p, pts.point(c)))) hit = true;
            });
            if (!hit) {
                chosen.push_back(i);
                grid.insert(static_cast<std::uint32_t>(i), sk.data() + i * sd);
            }
        }
        return chosen;
    }
    for (std::size_t i = 0; i < N; ++i) {
        const double* p = pts.point(i);
        bool hit = false;
        for (std::size_t c : chosen)
            if (blocks(pts.space.distance(p, pts.point(c)))) {
                hit = true;
                break;
            }
        if (!hit) chosen.push_back(i);
    }
    return chosen;
}

}  // namespace

NetCloud greedy_net(const PointSet& points, double delta) {
    require(delta > 0.0, "greedy_net: delta must be positive");
    auto keep = greedy_select(points, delta, [delta](double d) { return d < delta; });
    NetCloud out;
    out.points = PointSet(points.space);
    out.points.coords.reserve(keep.size() * points.space.point_dim());
    for (std::size_t i : keep) out.points.push(points.point(i));
    out.delta = delta;
    return out;
}

std::vector<std::size_t> covering_centers(const PointSet& points, double delta) {
    require(delta > 0.0, "covering_count: delta must be positive");
    return greedy_select(points, delta, [delta](double d) { return d <= delta; });
}

std::size_t covering_count(const PointSet& points, double delta) {
    return covering_centers(points, delta).size();
}

bool is_separated(const PointSet& points, double delta) {
    const std::size_t N = points.size();
    const double lim = delta * (1.0 - 1e-12);
    if (N < 2 || delta <= 0.0) return true;
    if (points.space.gridable()) {
        const int sd = points.space.sketch_dim();
        const std::vector<double> sk = sketches(points);
        GridIndex grid(sd, delta);
        for (std::size_t i = 0; i < N; ++i) {
            bool bad = false;
            grid.for_each_near(sk.data() + i * sd, [&](std::uint32_t j) {
                if (points.distance(i, j) < lim) bad = true;
            });
            if (bad) return false;
            grid.insert(static_cast<std::uint32_t>(i), sk.data() + i * sd);
        }
        return true;
    }
    for (std::size_t i = 1; i < N; ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (points.distance(i, j) < lim) return false;
    return true;
}

// ---------------------------------------------------------------- Frostman

std::vector<double> dyadic_radii(double delta) {
    require(delta > 0.0, "dyadic_radii: delta must be positive");
    std::vector<double> r;
    for (double x = delta; x <= 1.0 * (1.0 + 1e-12); x *= 2.0) r.push_back(x);
    return r;
}

double frostman_constant(const NetCloud& cloud, double s, const std::vector<std::size_t>& centers) {
    const std::size_t N = cloud.size();
    if (N == 0) return 0.0;
    std::vector<std::size_t> cs = centers;
    if (cs.empty()) {
        cs.resize(N);
        for (std::size_t i = 0; i < N; ++i) cs[i] = i;
    }
    const auto radii = dyadic_radii(cloud.delta);
    std::vector<double> best(cs.size(), 0.0);
    parallel_for(cs.size(), [&](std::size_t c) {
        std::vector<double> d(N);
        for (std::size_t j = 0; j < N; ++j) d[j] = cloud.points.distance(cs[c], j);
        std::sort(d.begin(), d.end());
        double m = 0.0;
        for (double r : radii) {
            const auto cnt = std::lower_bound(d.begin(), d.end(), r) - d.begin();
            m = std::max(m, static_cast<double>(cnt) / std::pow(r / cloud.delta, s));
        }
        best[c] = m;
    });
    return *std::max_element(best.begin(), best.end());
}

NetCloud extract_frostman_subset(const NetCloud& cloud, double a, double kappa) {
    require(a >= 0.0 && kappa > 0.0, "extract_frostman_subset: need a >= 0, kappa > 0");
    const std::size_t N = cloud.size();
    NetCloud out;
    out.points = PointSet(cloud.space());
    out.delta = cloud.delta;
    out.claimed_s = a;
    if (N == 0) return out;

    const auto radii = dyadic_radii(cloud.delta);
    std::vector<double> r;
    std::vector<long> cap;
    for (double x : radii) {
        const long c = static_cast<long>(std::ceil(kappa * std::pow(x / cloud.delta, a) - 1e-9));
        if (c < static_cast<long>(N)) {
            r.push_back(x);
            cap.push_back(std::max(1L, c));
        }
    }
    const std::size_t J = r.size();
    const Space& sp = cloud.space();
    std::vector<GridIndex> grids;
    const int sd = sp.sketch_dim();
    std::vector<double> sk;
    if (sp.gridable()) {
        sk = sketches(cloud.points);
        for (double x : r) grids.emplace_back(sd, x);
    }

    std::vector<std::size_t> acc;
    std::vector<long> cnt;  // acc.size() x J
    std::vector<std::vector<std::uint32_t>> nb(J);
    for (std::size_t i = 0; i < N; ++i) {
        const double* p = cloud.points.point(i);
        bool ok = true;
        for (auto& v : nb) v.clear();
        if (sp.gridable()) {
            for (std::size_t j = 0; j < J && ok; ++j) {
                grids[j].for_each_near(sk.data() + i * sd, [&](std::uint32_t q) {
                    if (sp.distance(p, cloud.points.point(acc[q])) < r[j]) nb[j].push_back(q);
                });
                ok = static_cast<long>(nb[j].size()) + 1 <= cap[j];
            }
        } else {
            for (std::uint32_t q = 0; q < acc.size(); ++q) {
                const double d = sp.distance(p, cloud.points.point(acc[q]));
                for (std::size_t j = 0; j < J; ++j)
                    if (d < r[j]) nb[j].push_back(q);
            }
            for (std::size_t j = 0; j < J && ok; ++j) ok = static_cast<long>(nb[j].size()) + 1 <= cap[j];
        }
        for (std::size_t j = 0; j < J && ok; ++j)
            for (std::uint32_t q : nb[j])
                if (cnt[q * J + j] + 1 > cap[j]) {
                    ok = false;
                    break;
                }
        if (!ok) continue;
        const auto id = static_cast<std::uint32_t>(acc.size());
        acc.push_back(i);
        cnt.resize(acc.size() * J);
        for (std::size_t j = 0; j < J; ++j) {
            for (std::uint32_t q : nb[j]) ++cnt[q * J + j];
            cnt[id * J + j] = static_cast<long>(nb[j].size()) + 1;
            if (sp.gridable()) grids[j].insert(id, sk.data() + i * sd);
        }
    }
    for (std::size_t i : acc) out.points.push(cloud.points.point(i));
    return out;
}

// ------------------------------------------------------------ box dimension

std::vector<double> geometric_scales(int i_min, int i_max, double base) {
    require(i_max >= i_min, "geometric_scales: empty range");
    require(base > 1.0, "geometric_scales: base must exceed 1");
    std::vector<double> s;
    for (int i = i_min; i <= i_max; ++i) s.push_back(std::pow(base, -i));
    return s;
}

DimEstimate fit_loglog(const std::vector<double>& scales, const std::vector<double>& counts) {
    require(scales.size() == counts.size() && scales.size() >= 2, "fit_loglog: need two matched points");
    const std::size_t m = scales.size();
    std::vector<double> x(m), y(m);
    for (std::size_t i = 0; i < m; ++i) {
        require(scales[i] > 0.0 && counts[i] > 0.0, "fit_loglog: scales and counts must be positive");
        x[i] = std::log(1.0 / scales[i]);
        y[i] = std::log(counts[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    require(sxx > 0.0, "fit_loglog: scales must be distinct");
    DimEstimate e;
    e.scales = scales;
    e.counts = counts;
    e.slope = sxy / sxx;
    e.intercept = my - e.slope * mx;
    if (m > 2) {
        double ssr = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double res = y[i] - e.intercept - e.slope * x[i];
            ssr += res * res;
        }
        e.std_error = std::sqrt(ssr / static_cast<double>(m - 2) / sxx);
    }
    return e;
}

DimEstimate box_dimension(const PointSet& points, const std::vector<double>& scales) {
    require(scales.size() >= 3, "box_dimension: need at least three scales");
    require(!points.empty(), "box_dimension: empty point set");
    std::vector<double> counts(scales.size());
    parallel_for(scales.size(), [&](std::size_t i) {
        counts[i] = static_cast<double>(covering_count(points, scales[i]));
    });
    return fit_loglog(scales, counts);
}

// -------------------------------------------------------------------- JSON

std::string net_to_json(const NetCloud& cloud) {
    nlohmann::json j;
    j["space"] = cloud.space().tag();
    j["delta"] = cloud.delta;
    if (cloud.claimed_s) j["claimed_s"] = *cloud.claimed_s;
    if (cloud.frostman_C) j["frostman_C"] = *cloud.frostman_C;
    auto pts = nlohmann::json::array();
    const int d = cloud.space().point_dim();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const double* p = cloud.points.point(i);
        pts.push_back(std::vector<double>(p, p + d));
    }
    j["points"] = std::move(pts);
    return j.dump();
}

namespace {

void validate_frames(const PointSet& ps) {
    const Space& sp = ps.space;
    if (sp.kind != SpaceKind::Grassmannian && sp.kind != SpaceKind::AffinePlanes) return;
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        Eigen::Map<const RowMat> f(ps.point(i), sp.k, sp.n);
        Mat g = f * f.transpose();
        require((g - Mat::Identity(sp.k, sp.k)).cwiseAbs().maxCoeff() <= 1e-9,
                "net_from_json: frame rows are not orthonormal");
        if (sp.kind == SpaceKind::AffinePlanes) {
            Eigen::Map<const Vec> off(ps.point(i) + sp.k * sp.n, sp.n);
            require((f * off).cwiseAbs().maxCoeff() <= 1e-9, "net_from_json: offset not orthogonal to frame");
        }
    }
}

}  // namespace

NetCloud net_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ContractViolation(std::string("net_from_json: ") + e.what());
    }
    require(j.is_object(), "net_from_json: top level must be an object");
    require(j.contains("space") && j["space"].is_string(), "net_from_json: missing 'space'");
    require(j.contains("points") && j["points"].is_array(), "net_from_json: missing 'points'");
    NetCloud c;
    c.points = PointSet(Space::parse(j["space"].get<std::string>()));
    c.delta = j.value("delta", 0.0);
    require(c.delta >= 0.0, "net_from_json: negative delta");
    if (j.contains("claimed_s")) c.claimed_s = j["claimed_s"].get<double>();
    if (j.contains("frostman_C")) c.frostman_C = j["frostman_C"].get<double>();
    const int d = c.space().point_dim();
    try {
        for (const auto& p : j["points"]) {
            require(p.is_array() && static_cast<int>(p.size()) == d, "net_from_json: point has wrong length");
            for (const auto& x : p) c.points.coords.push_back(x.get<double>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ContractViolation(std::string("net_from_json: ") + e.what());
    }
    validate_frames(c.points);
    require(is_separated(c.points, c.delta), "net_from_json: points are not delta-separated");
    return c;
}

}  // namespace grassproj
