#include "grassproj/incidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "grassproj/constructions.hpp"
#include "grassproj/parallel.hpp"
#include "grid_index.hpp"

namespace grassproj {

using detail::GridIndex;

namespace {

LocalLine line_of(const PointSet& lines, std::size_t i) {
    const int h = lines.space.n - 1;
    const double* p = lines.point(i);
    return LocalLine(Eigen::Map<const Vec>(p, h), Eigen::Map<const Vec>(p + h, h));
}

Mat orthonormal_rows(const Mat& rows) { return Subspace::span(rows).frame(); }

}  // namespace

// ------------------------------------------------------------- projection

ProjectedCloud project_cloud(const PointSet& lines, const PlaneChart& chart, double mu) {
    require(lines.space.kind == SpaceKind::AffineLines, "project_cloud: expected an affine-lines cloud");
    const Subspace& V = chart.plane();
    const int n = lines.space.n;
    const int k = V.dim();
    require(V.ambient() == n, "project_cloud: dimension mismatch");
    const Mat& B = chart.basis();
    const std::size_t N = lines.size();
    const int cd = 2 * (k - 1);

    // 0 line, 1 point image, 2 degenerate
    std::vector<unsigned char> kind(N);
    std::vector<double> out(N * std::max(cd, k));
    constexpr std::size_t kChunk = 4096;
    const std::size_t chunks = (N + kChunk - 1) / kChunk;
    parallel_for(chunks, [&](std::size_t c) {
        Vec a = Vec::Zero(n), b = Vec::Zero(n), ca(k), cb(k);
        for (std::size_t i = c * kChunk; i < std::min(N, (c + 1) * kChunk); ++i) {
            const double* p = lines.point(i);
            for (int j = 0; j < n - 1; ++j) {
                a(j) = p[j];
                b(j) = p[n - 1 + j];
            }
            a(n - 1) = 0.0;
            b(n - 1) = 1.0;
            ca.noalias() = B * a;
            cb.noalias() = B * b;
            const Vec u = b - a;
            const double pu = (cb - ca).norm() / u.norm();
            double* o = out.data() + i * std::max(cd, k);
            if (pu <= tol::kPointImage) {
                kind[i] = 1;
                for (int j = 0; j < k; ++j) o[j] = ca(j);
                continue;
            }
            const double de = cb(k - 1) - ca(k - 1);
            if (std::asin(std::min(1.0, pu)) <= mu || std::abs(de) <= 1e-12 * std::max(1.0, (cb - ca).norm())) {
                kind[i] = 2;
                continue;
            }
            kind[i] = 0;
            for (int j = 0; j < k - 1; ++j) {
                const double slope = (cb(j) - ca(j)) / de;
                o[j] = ca(j) - ca(k - 1) * slope;
                o[k - 1 + j] = o[j] + slope;
            }
        }
    });

    ProjectedCloud pc;
    pc.lines = PointSet(Space::lines_in_v(k));
    pc.points = PointSet(Space::euclidean(k));
    for (std::size_t i = 0; i < N; ++i) {
        const double* o = out.data() + i * std::max(cd, k);
        if (kind[i] == 0) {
            pc.lines.coords.insert(pc.lines.coords.end(), o, o + cd);
            pc.source.push_back(i);
            double s2 = 0.0;
            for (int j = 0; j < k - 1; ++j) s2 += (o[k - 1 + j] - o[j]) * (o[k - 1 + j] - o[j]);
            pc.max_slope = std::max(pc.max_slope, std::sqrt(s2));
        } else if (kind[i] == 1) {
            pc.points.coords.insert(pc.points.coords.end(), o, o + k);
        } else {
            ++pc.degenerate;
        }
    }
    return pc;
}

// ------------------------------------------------------------------ slabs

bool Slab::contains(const Vec& x) const { return x.norm() <= 1.0 && core.distance_to(x) <= thickness; }

bool Slab::contains_chord(const LocalLine& L, double margin) const {
    auto chord = L.unit_chord();
    if (!chord) return false;
    const double lim = thickness - margin;
    return core.distance_to(chord->first) <= lim && core.distance_to(chord->second) <= lim;
}

namespace {

Slab slab_from_direction(const Subspace& V, const Vec& dir_in_V, const Vec& point, double r) {
    const int n = V.ambient();
    const Mat comp = V.complement().frame();
    Mat rows(comp.rows() + 1, n);
    rows.row(0) = dir_in_V.normalized().transpose();
    rows.bottomRows(comp.rows()) = comp;
    Slab s;
    s.core = AffinePlane(Subspace::span(rows), point);
    s.thickness = r;
    s.anchor_V = V;
    return s;
}

}  // namespace

Slab make_orthogonal_slab(const Subspace& V, const LocalLine& L, double r, double mu) {
    require(r > 0.0, "make_orthogonal_slab: thickness must be positive");
    const Vec u = L.direction();
    require(angle_to_complement(V, u) > mu, "make_orthogonal_slab: line is not transversal to V-perp");
    Slab s = slab_from_direction(V, V.project(u), L.point_at_height(0.0), r);
    try {
        s.anchor_tube = PlaneChart(V).chart_of(L);
    } catch (const ContractViolation&) {
        // V has no chart (orthogonal to x_n); the slab stays without a tube anchor.
    }
    return s;
}

Slab slab_at_tube(const PlaneChart& chart, const Vec& tube, double r) {
    require(r > 0.0, "slab_at_tube: thickness must be positive");
    auto [a, b] = chart.points_of(tube);
    Slab s = slab_from_direction(chart.plane(), b - a, a, r);
    s.anchor_tube = tube;
    return s;
}

namespace {

std::vector<Vec> core_samples(const AffinePlane& P) {
    const int m = P.dim();
    const double rho = std::sqrt(std::max(0.0, 1.0 - P.offset().squaredNorm()));
    const Mat& F = P.dir().frame();
    std::vector<Vec> pts{P.offset()};
    const Mat sph = sphere_points(m, 16 * m);
    for (double f : {0.5, 0.95})
        for (Eigen::Index i = 0; i < sph.rows(); ++i)
            pts.push_back(P.offset() + f * rho * (F.transpose() * sph.row(i).transpose()));
    return pts;
}

}  // namespace

bool slabs_comparable(const Slab& a, const Slab& b, double C) {
    require(C >= 1.0, "slabs_comparable: C must be at least 1");
    for (const Vec& x : core_samples(a.core))
        if (b.core.distance_to(x) > C * b.thickness) return false;
    for (const Vec& x : core_samples(b.core))
        if (a.core.distance_to(x) > C * a.thickness) return false;
    return true;
}

// -------------------------------------------------------------- incidence

std::size_t IncidencePairs::sum_per_line() const {
    std::size_t s = 0;
    for (auto c : per_line_counts) s += c;
    return s;
}

std::size_t IncidencePairs::covered() const {
    return static_cast<std::size_t>(std::count_if(multiplicity.begin(), multiplicity.end(), [](auto m) { return m > 0; }));
}

std::size_t IncidencePairs::overlap() const {
    std::size_t s = 0;
    for (auto m : multiplicity) s += static_cast<std::size_t>(m) * (m > 0 ? m - 1 : 0);
    return s;
}

namespace {

struct Chords {
    std::vector<LocalLine> lines;
    std::vector<std::optional<std::pair<Vec, Vec>>> chords;
};

Chords chords_of(const PointSet& lines) {
    Chords c;
    c.lines.resize(lines.size());
    c.chords.resize(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        c.lines[i] = line_of(lines, i);
        c.chords[i] = c.lines[i].unit_chord();
    }
    return c;
}

bool chord_in(const Slab& s, const std::pair<Vec, Vec>& ch, double margin) {
    const double lim = s.thickness - margin;
    return s.core.distance_to(ch.first) <= lim && s.core.distance_to(ch.second) <= lim;
}

struct FamilyCounts {
    std::vector<std::uint32_t> per_line;    // slabs of this family containing each line
    std::vector<std::uint32_t> multiplicity;  // per slab
};

FamilyCounts family_brute(const std::vector<Slab>& fam, const Chords& c, double delta) {
    FamilyCounts fc;
    fc.per_line.assign(c.lines.size(), 0);
    fc.multiplicity.assign(fam.size(), 0);
    for (std::size_t l = 0; l < c.lines.size(); ++l) {
        if (!c.chords[l]) continue;
        for (std::size_t i = 0; i < fam.size(); ++i)
            if (chord_in(fam[i], *c.chords[l], delta)) {
                ++fc.per_line[l];
                ++fc.multiplicity[i];
            }
    }
    return fc;
}

FamilyCounts family_grid(const std::vector<Slab>& fam, const Chords& c, double delta) {
    if (fam.empty()) return family_brute(fam, c, delta);
    for (const Slab& s : fam)
        if (!s.anchor_V || !s.anchor_tube) return family_brute(fam, c, delta);
    const Subspace& V = *fam.front().anchor_V;
    for (const Slab& s : fam)
        if (grassmann_distance(*s.anchor_V, V) > 1e-12) return family_brute(fam, c, delta);

    const PlaneChart chart(V);
    const Mat& B = chart.basis();
    const int k = V.dim();
    const int cd = 2 * (k - 1);
    FamilyCounts fc;
    fc.per_line.assign(c.lines.size(), 0);
    fc.multiplicity.assign(fam.size(), 0);

    // Slab cores in chart-basis coordinates of V: an origin and a unit axis.
    // dist(x, core)^2 = |Bx - o|^2 - ((Bx - o).d)^2.
    const std::size_t S = fam.size();
    std::vector<double> org(S * k), axis(S * k);
    double rmax = -1.0, cos_min = 1.0;
    for (std::size_t i = 0; i < S; ++i) {
        const Vec& t = *fam[i].anchor_tube;
        auto [a, b] = chart.points_of(t);
        const Vec o = B * a;
        const Vec d = (B * (b - a)).normalized();
        for (int j = 0; j < k; ++j) {
            org[i * k + j] = o(j);
            axis[i * k + j] = d(j);
        }
        rmax = std::max(rmax, fam[i].thickness - delta);
        cos_min = std::min(cos_min, 1.0 / std::sqrt(1.0 + (t.tail(k - 1) - t.head(k - 1)).squaredNorm()));
    }
    if (rmax < 0.0) return fc;

    const std::size_t N = c.lines.size();
    const int n = V.ambient();
    std::vector<double> Bt(k * n);
    for (int j = 0; j < k; ++j)
        for (int m = 0; m < n; ++m) Bt[j * n + m] = B(j, m);
    std::vector<double> ends(N * 2 * k), charts(N * cd), radius(N, -1.0);
    std::vector<char> exhaustive(N, 0);
    double cell = 0.0;
    for (std::size_t l = 0; l < N; ++l) {
        if (!c.chords[l]) continue;
        double* c1 = ends.data() + l * 2 * k;
        double* c2 = c1 + k;
        const double* p1 = c.chords[l]->first.data();
        const double* p2 = c.chords[l]->second.data();
        for (int j = 0; j < k; ++j) {
            double s1 = 0.0, s2 = 0.0;
            for (int m = 0; m < n; ++m) {
                s1 += Bt[j * n + m] * p1[m];
                s2 += Bt[j * n + m] * p2[m];
            }
            c1[j] = s1;
            c2[j] = s2;
        }
        const double h1 = c1[k - 1], h2 = c2[k - 1];
        if (std::abs(h2 - h1) < 1e-6) {
            exhaustive[l] = 1;
            continue;
        }
        for (int j = 0; j < k - 1; ++j) {
            const double slope = (c2[j] - c1[j]) / (h2 - h1);
            charts[l * cd + j] = c1[j] - h1 * slope;
            charts[l * cd + k - 1 + j] = charts[l * cd + j] + slope;
        }
        // Horizontal gaps at the chord heights are at most rmax / cos_min and
        // the gap is affine in the height.
        const double l0 = -h1 / (h2 - h1), l1 = (1.0 - h1) / (h2 - h1);
        const double f = std::abs(1.0 - l0) + std::abs(l0) + std::abs(1.0 - l1) + std::abs(l1);
        radius[l] = (rmax / cos_min) * f * (1.0 + 1e-9) + 1e-12;
        cell = std::max(cell, radius[l]);
    }
    if (cell <= 0.0) cell = 1.0;
    GridIndex grid(cd, cell);
    for (std::size_t i = 0; i < S; ++i) grid.insert(static_cast<std::uint32_t>(i), fam[i].anchor_tube->data());

    auto dist2 = [&](const double* y, std::size_t i) {
        double n2 = 0.0, dot = 0.0;
        for (int j = 0; j < k; ++j) {
            const double z = y[j] - org[i * k + j];
            n2 += z * z;
            dot += z * axis[i * k + j];
        }
        return std::max(0.0, n2 - dot * dot);
    };
    const Space sp = Space::lines_in_v(k);
    for (std::size_t l = 0; l < N; ++l) {
        if (!c.chords[l]) continue;
        const double* y = ends.data() + l * 2 * k;
        auto test = [&](std::size_t i) {
            // Decide by the fast form away from the boundary, exactly near it.
            const double lim = fam[i].thickness - delta;
            const double d = std::sqrt(std::max(dist2(y, i), dist2(y + k, i)));
            bool in;
            if (d < lim - 1e-9)
                in = true;
            else if (d > lim + 1e-9)
                in = false;
            else
                in = chord_in(fam[i], *c.chords[l], delta);
            if (in) {
                ++fc.per_line[l];
                ++fc.multiplicity[i];
            }
        };
        if (exhaustive[l]) {
            for (std::size_t i = 0; i < S; ++i) test(i);
            continue;
        }
        const double* q = charts.data() + l * cd;
        grid.for_each_near(q, [&](std::uint32_t i) {
            if (sp.distance(q, fam[i].anchor_tube->data()) <= radius[l]) test(i);
        });
    }
    return fc;
}

template <class PerFamily>
IncidencePairs assemble(const SlabFamilies& TV, const PointSet& lines, double delta, PerFamily per_family) {
    require(lines.space.kind == SpaceKind::AffineLines, "count_incidences: expected an affine-lines cloud");
    require(delta >= 0.0, "count_incidences: delta must be nonnegative");
    const Chords c = chords_of(lines);
    std::vector<FamilyCounts> fams(TV.size());
    parallel_for(TV.size(), [&](std::size_t v) { fams[v] = per_family(TV[v], c, delta); });
    IncidencePairs out;
    out.per_line_counts.assign(lines.size(), 0);
    for (std::size_t v = 0; v < TV.size(); ++v) {
        out.per_V_counts.push_back(TV[v].size());
        for (std::size_t i = 0; i < TV[v].size(); ++i) {
            out.pairs.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(v));
            out.multiplicity.push_back(fams[v].multiplicity[i]);
        }
        for (std::size_t l = 0; l < lines.size(); ++l) {
            out.per_line_counts[l] += fams[v].per_line[l];
            out.max_per_V_line = std::max<std::size_t>(out.max_per_V_line, fams[v].per_line[l]);
        }
    }
    return out;
}

}  // namespace

IncidencePairs count_incidences(const SlabFamilies& TV, const PointSet& lines, double delta) {
    return assemble(TV, lines, delta, family_grid);
}

IncidencePairs count_incidences_brute(const SlabFamilies& TV, const PointSet& lines, double delta) {
    return assemble(TV, lines, delta, family_brute);
}

double frostman_audit(const std::vector<Slab>& family, double delta, double s, Rng& rng, int trials) {
    if (family.empty()) return 0.0;
    require(family.front().anchor_V && family.front().anchor_tube, "frostman_audit: slabs need anchors");
    const PlaneChart chart(*family.front().anchor_V);
    const auto radii = dyadic_radii(delta);
    std::vector<std::optional<std::pair<Vec, Vec>>> axes;
    for (const Slab& T : family) {
        auto [a, b] = chart.points_of(*T.anchor_tube);
        axes.push_back(LocalLine::through(a, b - a).unit_chord());
    }
    std::uniform_int_distribution<std::size_t> pick(0, family.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_r(0, radii.size() - 1);
    std::uniform_real_distribution<double> jitter(-0.5, 0.5);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const double r = radii[pick_r(rng)];
        Vec tube = *family[pick(rng)].anchor_tube;
        for (Eigen::Index i = 0; i < tube.size(); ++i) tube(i) += r * jitter(rng);
        Slab W;
        try {
            W = slab_at_tube(chart, tube, r);
        } catch (const ContractViolation&) {
            continue;
        }
        std::size_t count = 0;
        for (const auto& ax : axes)
            if (ax && chord_in(W, *ax, 0.0)) ++count;
        worst = std::max(worst, static_cast<double>(count) / std::pow(r / delta, s));
    }
    return worst;
}

// ---------------------------------------------------------------- V-nets

PointSet subspace_ball_net(int n, int k, double radius, double delta, Rng& rng) {
    require(1 <= k && k < n, "subspace_ball_net: need 1 <= k < n");
    require(radius > 0.0 && radius < 1.0 && delta > 0.0, "subspace_ball_net: bad radius or delta");
    const int m = n - k;
    const double tmax = radius / std::sqrt(1.0 - radius * radius);
    const double dim = static_cast<double>(k * m);
    const auto samples = static_cast<std::size_t>(
        std::clamp(8.0 * std::pow(2.0 * tmax / delta, dim), 1000.0, 400000.0));
    std::uniform_real_distribution<double> u(-tmax, tmax);
    PointSet cand(Space::grassmannian(k, n));
    auto push = [&](const Mat& A) {
        Mat rows = Mat::Zero(k, n);
        for (int i = 0; i < k; ++i) {
            rows(i, m + i) = 1.0;
            for (int j = 0; j < m; ++j) rows(i, j) = A(j, i);
        }
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> f = Subspace::span(rows).frame();
        cand.coords.insert(cand.coords.end(), f.data(), f.data() + f.size());
    };
    push(Mat::Zero(m, k));
    Mat A(m, k);
    for (std::size_t i = 0; i < samples; ++i) {
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < k; ++c) A(r, c) = u(rng);
        Eigen::JacobiSVD<Mat> svd(A);
        if (svd.singularValues()(0) <= tmax) push(A);
    }
    return greedy_net(cand, delta).points;
}

Subspace subspace_at(const PointSet& g, std::size_t i) {
    require(g.space.kind == SpaceKind::Grassmannian, "subspace_at: expected a Grassmannian point set");
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> f(g.point(i), g.space.k,
                                                                                              g.space.n);
    return Subspace::span(Mat(f));
}

// ------------------------------------------------------------ planks and M

Plank2D Plank2D::from_lines(const LocalLine& l, const LocalLine& l1) {
    require(l.ambient() == l1.ambient(), "Plank2D: dimension mismatch");
    Plank2D p;
    p.base_line = l;
    p.width_vector = l1.point_at_height(0.0) - l.point_at_height(0.0);
    p.d = p.width_vector.norm();
    require(p.d > 0.0, "Plank2D: lines share their level-0 point");
    return p;
}

Mat Plank2D::plane() const {
    Mat rows(2, width_vector.size());
    rows.row(0) = base_line.direction().transpose();
    rows.row(1) = width_vector.transpose();
    return orthonormal_rows(rows);
}

std::vector<Vec> Plank2D::corners() const {
    auto chord = base_line.unit_chord();
    require(chord.has_value(), "Plank2D: base line misses the unit ball");
    return {chord->first, chord->second, chord->first + width_vector, chord->second + width_vector};
}

double pencil_sigma2(const Mat& plane, const Subspace& V) {
    require(plane.rows() == 2 && plane.cols() == V.ambient(), "pencil_sigma2: plane must be 2 x n");
    if (V.dim() < 2) return 0.0;
    Eigen::JacobiSVD<Mat> svd(V.frame() * plane.transpose());
    return svd.singularValues()(1);
}

bool pencil_membership(const Mat& plane, const Subspace& V, double eps) { return pencil_sigma2(plane, V) <= eps; }

MDistance distance_to_M(const Mat& plane, const Subspace& V) {
    const int n = V.ambient();
    const int k = V.dim();
    require(plane.rows() == 2 && plane.cols() == n, "distance_to_M: plane must be 2 x n");
    require(1 <= k && k < n, "distance_to_M: need 1 <= k < n");
    MDistance out;
    if (k == 1) {
        out.witness = V;
        return out;
    }
    const Mat& F = V.frame();
    Eigen::JacobiSVD<Mat> svd(F * plane.transpose(), Eigen::ComputeFullV);
    const double sigma = svd.singularValues()(1);
    out.distance = sigma;
    if (sigma <= 1e-15) {
        out.witness = V;
        return out;
    }
    const Vec ustar = plane.transpose() * svd.matrixV().col(1);
    const Vec v = V.project(ustar);
    const Vec vhat = v.normalized();
    Vec w = ustar - v;
    const Vec what = w.norm() > 1e-12 ? Vec(w.normalized()) : Vec(V.complement().frame().row(0).transpose());
    const double c = std::sqrt(std::max(0.0, 1.0 - sigma * sigma));
    const Vec vprime = c * vhat - sigma * what;

    // Orthonormal basis of V ∩ vhat-perp in V-coordinates.
    const Vec alpha = F * vhat;
    Eigen::HouseholderQR<Mat> qr{Mat(alpha)};
    const Mat Q = qr.householderQ() * Mat::Identity(k, k);
    Mat rows(k, n);
    for (int j = 1; j < k; ++j) rows.row(j - 1) = (F.transpose() * Q.col(j)).transpose();
    rows.row(k - 1) = vprime.transpose();
    out.witness = Subspace::span(rows);
    return out;
}

Subspace sample_M(const Mat& plane, int k, Rng& rng) {
    const int n = static_cast<int>(plane.cols());
    require(1 <= k && k < n, "sample_M: need 1 <= k < n");
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> g;
    const double th = angle(rng);
    const Vec u = std::cos(th) * plane.row(0).transpose() + std::sin(th) * plane.row(1).transpose();
    const int extra = n - k - 1;
    for (;;) {
        Mat rows(extra + 1, n);
        rows.row(0) = u.transpose();
        for (int i = 1; i <= extra; ++i) {
            Vec x(n);
            for (int j = 0; j < n; ++j) x(j) = g(rng);
            rows.row(i) = (x - x.dot(u) * u).transpose();
        }
        try {
            return Subspace::span(rows).complement();
        } catch (const ContractViolation&) {
        }
    }
}

namespace {

/// Rotation close to the identity: Cayley transform of a random skew matrix of norm ~ size.
Mat small_rotation(int n, double size, Rng& rng) {
    std::normal_distribution<double> g;
    Mat A = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            A(i, j) = g(rng);
            A(j, i) = -A(i, j);
        }
    const double nrm = A.norm();
    if (nrm > 0.0) A *= size / nrm;
    const Mat I = Mat::Identity(n, n);
    return (I - 0.5 * A).inverse() * (I + 0.5 * A);
}

/// Incremental greedy delta-cover of G(k,n) points.
class GrassCover {
public:
    GrassCover(int n, int k, double delta)
        : sp_(Space::grassmannian(k, n)), delta_(delta), grid_(sp_.sketch_dim(), delta), sk_(sp_.sketch_dim()) {}

    /// Returns true when V opened a new center.
    bool add(const Subspace& V) {
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> f = V.frame();
        sp_.sketch(f.data(), sk_.data());
        const std::size_t d = sp_.point_dim();
        bool hit = false;
        grid_.for_each_near(sk_.data(), [&](std::uint32_t c) {
            if (!hit && sp_.distance(f.data(), centers_.data() + c * d) <= delta_) hit = true;
        });
        if (hit) return false;
        grid_.insert(static_cast<std::uint32_t>(size()), sk_.data());
        centers_.insert(centers_.end(), f.data(), f.data() + f.size());
        return true;
    }
    std::size_t size() const { return centers_.size() / sp_.point_dim(); }

private:
    Space sp_;
    double delta_;
    GridIndex grid_;
    std::vector<double> sk_, centers_;
};

/// Orthonormal rows spanning the complement of u.
Mat perp_basis(const Vec& u) { return Subspace::span(Mat(u.transpose())).complement().frame(); }

/// Element of M(plane) with V-perp = span(u, w), w a unit vector orthogonal to u.
Subspace M_point(const Vec& u, const Vec& w) {
    Mat rows(2, u.size());
    rows.row(0) = u.transpose();
    rows.row(1) = w.transpose();
    return Subspace::span(rows).complement();
}

}  // namespace

DimEstimate estimate_dim_M(int n, int k, const Mat& plane, const std::vector<double>& scales, Rng& rng,
                           std::optional<double> eps, std::size_t samples_per_scale) {
    require(1 <= k && k < n, "estimate_dim_M: need 1 <= k < n");
    require(plane.rows() == 2 && plane.cols() == n, "estimate_dim_M: plane must be 2 x n");
    require(scales.size() >= 3, "estimate_dim_M: need at least three scales");
    std::vector<double> counts;
    for (double delta : scales) {
        require(delta > 0.0 && delta < 1.0, "estimate_dim_M: scales must lie in (0, 1)");
        const double e = eps ? *eps : delta;
        GrassCover cover(n, k, delta);
        // Optional random thickening of an element of M into {sigma_2 <= e}.
        auto thicken = [&](const Subspace& W) {
            if (e <= 0.0) return W;
            std::uniform_real_distribution<double> sz(0.0, e);
            Subspace V = Subspace::span(W.frame() * small_rotation(n, sz(rng), rng).transpose());
            return pencil_sigma2(plane, V) <= e ? V : W;
        };
        const double h = delta;
        if (e < 1.0 && n - k <= 2) {
            // Deterministic delta-mesh of M: u on the half circle of the plane, w on
            // the unit sphere of u-perp.
            const int nu = static_cast<int>(std::ceil(std::numbers::pi / h));
            const int nw = n - k == 2 ? static_cast<int>(std::ceil(4.0 * std::numbers::pi / (h * h))) : 0;
            const Mat sph = nw ? sphere_points(n - 1, std::max(2, nw)) : Mat();
            for (int i = 0; i < nu; ++i) {
                const double th = std::numbers::pi * i / nu;
                const Vec u = std::cos(th) * plane.row(0).transpose() + std::sin(th) * plane.row(1).transpose();
                if (n - k == 1) {
                    cover.add(thicken(Subspace::span(Mat(u.transpose())).complement()));
                    continue;
                }
                const Mat P = perp_basis(u);
                for (Eigen::Index j = 0; j < sph.rows(); ++j) cover.add(thicken(M_point(u, P.transpose() * sph.row(j).transpose())));
            }
        } else {
            // Random samples until a batch of 4096 opens almost no new centers.
            const std::size_t batch = 4096;
            std::size_t drawn = 0;
            for (;;) {
                std::size_t added = 0;
                for (std::size_t b = 0; b < batch; ++b)
                    added += cover.add(e >= 1.0 ? sample_grassmannian(n, k, rng) : thicken(sample_M(plane, k, rng)));
                drawn += batch;
                if (samples_per_scale ? drawn >= samples_per_scale : added <= cover.size() / 500 || drawn >= 4000000)
                    break;
            }
        }
        counts.push_back(static_cast<double>(cover.size()));
    }
    return fit_loglog(scales, counts);
}

TubeCheck tube_projection_neighborhood_check(const Plank2D& plank, const Subspace& V, double delta) {
    require(plank.d >= delta / 2, "tube_projection_neighborhood_check: plank width below delta/2");
    const auto c = plank.corners();
    const Vec A = V.coords(c[1] - c[0]);
    const Vec B = V.coords(plank.width_vector);
    const double area = std::sqrt(std::max(0.0, A.squaredNorm() * B.squaredNorm() - std::pow(A.dot(B), 2)));
    double width = 0.0;
    if (A.norm() > 0.0 && B.norm() > 0.0) width = std::min(area / A.norm(), area / B.norm());
    TubeCheck out;
    out.in_tube = width <= 2.0 * delta;
    if (!out.in_tube) return out;
    out.distance = distance_to_M(plank.plane(), V).distance;
    out.constant = out.distance * plank.d / delta;
    return out;
}

// ------------------------------------------------------------- experiment

std::vector<Slab> build_slab_family(const PointSet& lines, const Subspace& V, double delta_abs, double s,
                                    double kappa, double mu) {
    const PlaneChart chart(V);
    ProjectedCloud pc = project_cloud(lines, chart, mu);
    std::vector<Slab> out;
    if (pc.lines.size() == 0) return out;
    NetCloud tubes;
    tubes.points = PointSet(pc.lines.space);
    for (std::size_t i : covering_centers(pc.lines, delta_abs)) tubes.points.push(pc.lines.point(i));
    tubes.delta = delta_abs;
    NetCloud thin = std::isinf(kappa) ? tubes : extract_frostman_subset(tubes, s, kappa);
    out.reserve(thin.size());
    for (std::size_t i = 0; i < thin.size(); ++i) out.push_back(slab_at_tube(chart, thin.points.vec(i), 3.0 * delta_abs));
    return out;
}

KaufmanReport kaufman_slope_experiment(const KaufmanParams& p, const std::vector<double>& deltas) {
    require(p.n >= 3 && p.n <= 4 && p.k >= 2 && p.k < p.n, "kaufman_slope_experiment: need n in {3,4}, 2 <= k < n");
    require(deltas.size() >= 2, "kaufman_slope_experiment: need at least two scales");
    require(p.s > 0.0, "kaufman_slope_experiment: s must be positive");
    require(p.construction == "bush" || p.construction == "product",
            "kaufman_slope_experiment: construction must be bush or product");
    KaufmanReport rep;
    rep.t = p.k * (p.n - p.k);
    std::vector<double> totals, sums;
    for (std::size_t si = 0; si < deltas.size(); ++si) {
        const double delta = deltas[si];
        require(delta > 0.0 && delta < 1.0, "kaufman_slope_experiment: scales must lie in (0, 1)");
        const double dabs = construction::kUnit * delta;
        NetCloud lines = p.construction == "bush" ? gen_direction_bush(p.n, delta, p.a)
                                                  : gen_product_example(p.n, p.a, delta);
        Rng rng = task_rng(p.seed, si);
        const PointSet Vs = subspace_ball_net(p.n, p.k, p.g_radius, delta, rng);
        SlabFamilies TV(Vs.size());
        std::vector<double> audit(Vs.size(), 0.0);
        parallel_for(Vs.size(), [&](std::size_t v) {
            TV[v] = build_slab_family(lines.points, subspace_at(Vs, v), dabs, p.s,
                                      p.matching_slabs ? std::numeric_limits<double>::infinity() : p.kappa, p.mu);
            Rng r = task_rng(p.seed ^ 0xa5a5a5a5ULL, si * 1000003ULL + v);
            audit[v] = frostman_audit(TV[v], dabs, p.s, r);
        });
        const double sep = dabs * std::pow(std::log2(1.0 / delta), p.log_power);
        const NetCloud H = p.matching_slabs ? lines : greedy_net(lines.points, sep);
        const IncidencePairs I = count_incidences(TV, H.points, dabs);

        KaufmanRow row;
        row.delta = delta;
        row.num_lines = lines.size();
        row.num_V = Vs.size();
        row.num_H = H.size();
        row.total_pairs = I.total();
        row.covered_pairs = I.covered();
        row.sum_per_line = I.sum_per_line();
        row.overlap = I.overlap();
        row.per_line_mean = H.size() ? static_cast<double>(row.sum_per_line) / H.size() : 0.0;
        row.half_dominance = 2.0 * (static_cast<double>(row.sum_per_line) - static_cast<double>(row.overlap)) >=
                             static_cast<double>(row.sum_per_line);
        row.frostman_audit = *std::max_element(audit.begin(), audit.end());
        row.max_per_V_line = I.max_per_V_line;
        if (p.verify_brute) {
            const IncidencePairs B = count_incidences_brute(TV, H.points, dabs);
            row.brute_match = B.pairs == I.pairs && B.per_line_counts == I.per_line_counts &&
                              B.multiplicity == I.multiplicity;
        }
        rep.rows.push_back(row);
        totals.push_back(std::max<double>(1.0, static_cast<double>(row.total_pairs)));
        sums.push_back(std::max<double>(1.0, static_cast<double>(row.sum_per_line)));
    }
    rep.fit = fit_loglog(deltas, totals);
    rep.fit_per_line = fit_loglog(deltas, sums);
    rep.bound = rep.t + p.s + 0.3;
    rep.pass = rep.fit.slope <= rep.bound;
    return rep;
}

std::string incidence_csv(const KaufmanReport& r) {
    std::ostringstream os;
    os.precision(10);
    os << "delta,total_pairs,per_line_mean,slope,stderr\n";
    for (const auto& row : r.rows)
        os << row.delta << ',' << row.total_pairs << ',' << row.per_line_mean << ',' << r.fit.slope << ','
           << r.fit.std_error << '\n';
    return os.str();
}

}  // namespace grassproj
