#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "grassproj/constructions.hpp"
#include "grassproj/highlow.hpp"

using namespace grassproj;

namespace {

GridField random_field(int dim, int M, Rng& rng) {
    std::normal_distribution<double> g;
    GridField f = GridField::zeros(dim, M);
    for (auto& v : f.values) v = {g(rng), g(rng)};
    return f;
}

double max_diff(const GridField& a, const GridField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

Rectangle rect2(double cx, double cy, double angle, double h0, double h1) {
    Rectangle R;
    R.center = (Vec(2) << cx, cy).finished();
    R.axes.resize(2, 2);
    R.axes << std::cos(angle), std::sin(angle), -std::sin(angle), std::cos(angle);
    R.half = (Vec(2) << h0, h1).finished();
    return R;
}

GrassRectangle grass_rect(double angle, double h_short, double h_long, const Vec& c0, const Vec& c1) {
    GrassRectangle g;
    g.R0 = rect2(c0(0), c0(1), angle, h_short, h_long);
    g.center1 = c1;
    return g;
}

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

// Slab through the origin orthogonal to the xz-plane, core spanned by e2 and a
// near-vertical direction in the xz-plane, shifted along e1 by `offset`.
Slab xz_slab(double slope, double offset, double r) {
    const Subspace V = Subspace::coordinate(3, {0, 2});
    Vec p(3), d(3);
    p << offset, 0.0, 0.0;
    d << slope, 0.0, 1.0;
    return make_orthogonal_slab(V, LocalLine::through(p, d), r, 0.005);
}

}  // namespace

TEST_CASE("line chart round trip and distances") {
    const Vec z = line_chart(Vec::Zero(3), (Vec(3) << 0, 0, 1).finished());
    CHECK(z.norm() == 0.0);

    Rng rng(3);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        Vec p(3), d(3);
        p << u(rng), u(rng), u(rng);
        d << u(rng), u(rng), 1.0;
        const LocalLine L = LocalLine::through(p, d);
        const Vec c = line_chart(L);
        const LocalLine back = chart_line(c);
        worst = std::max(worst, (back.X() - L.X()).norm() + (back.Y() - L.Y()).norm());
        // The line through the chart's two points has the same direction.
        const Vec c2 = line_chart(back.point_at_height(0.37), back.direction());
        worst = std::max(worst, (c2 - c).norm());
    }
    CHECK(worst <= 1e-12);

    for (int i = 0; i < 100; ++i) {
        Vec a(4), b(4);
        for (int j = 0; j < 4; ++j) {
            a(j) = u(rng);
            b(j) = u(rng);
        }
        const double l1 = (a.head(2) - b.head(2)).norm() + (a.tail(2) - b.tail(2)).norm();
        CHECK(std::abs(line_distance_chart(chart_line(a), chart_line(b)) - l1) <= 1e-14);
    }
    CHECK_THROWS_AS(line_chart(Vec::Zero(3), (Vec(3) << 1, 0, 0).finished()), ContractViolation);
}

TEST_CASE("transform round trip, Plancherel and plane waves") {
    Rng rng(7);
    const GridField f = random_field(4, 32, rng);
    const GridField F = forward_transform(f);
    CHECK(F.domain == Domain::Frequency);
    const GridField back = inverse_transform(F);
    CHECK(max_diff(back, f) / f.l2() <= 1e-10);
    // Normalized transform: sum |F|^2 = M^-D sum |f|^2.
    const double scale = std::pow(32.0, 4);
    CHECK(std::abs(F.l2() * F.l2() * scale - f.l2() * f.l2()) <= 1e-10 * f.l2() * f.l2());
    CHECK_THROWS_AS(forward_transform(F), ContractViolation);
    CHECK_THROWS_AS(inverse_transform(f), ContractViolation);

    // exp(2 pi i xi0 . x) at chart coordinates transforms to the unit mass at xi0.
    const int M = 16;
    GridField w = GridField::zeros(2, M);
    const int k0 = 3, k1 = -5;
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) {
            const double x = w.coordinate(i), y = w.coordinate(j);
            w.values[i * M + j] = std::polar(1.0, 2.0 * std::numbers::pi * (k0 * x + k1 * y));
        }
    const GridField W = forward_transform(w);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) {
            const bool at = W.frequency(i) == k0 && W.frequency(j) == k1;
            CHECK(std::abs(W.values[i * M + j] - std::complex<double>(at ? 1.0 : 0.0)) <= 1e-12);
        }
}

TEST_CASE("flat-top window") {
    const double h = 0.05;
    CHECK(flat_top(h, h) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(flat_top(0.0, h) >= 1.0);
    CHECK(flat_top(kBumpSupport * h, h) <= 1e-15);
    // Transform of the window by quadrature.
    for (double xi : {0.0, 3.0, 11.0, 27.5}) {
        const int N = 20000;
        const double L = kBumpSupport * h, dt = 2 * L / N;
        double acc = 0.0;
        for (int i = 0; i < N; ++i) {
            const double t = -L + (i + 0.5) * dt;
            acc += flat_top(t, h) * std::cos(2 * std::numbers::pi * xi * t) * dt;
        }
        CHECK(std::abs(acc - flat_top_hat(xi, h)) <= 1e-9);
    }
}

TEST_CASE("bump on a rectangle") {
    const GrassRectangle R = grass_rect(0.4, 1.0 / 16, 0.12, v2(0.02, -0.01), v2(0.05, 0.03));
    Vec c(4);
    c << R.R0.center, R.center1;
    CHECK(bump_value(R, c) >= 1.0);
    // >= 1 on the whole rectangle, corners included.
    for (int s = 0; s < 16; ++s) {
        Vec x(2), y(2);
        x = R.R0.center + R.R0.axes.transpose() * v2((s & 1 ? 1 : -1) * R.R0.half(0), (s & 2 ? 1 : -1) * R.R0.half(1));
        y = R.center1 + R.R0.axes.transpose() * v2((s & 4 ? 1 : -1) * R.R0.half(0), (s & 8 ? 1 : -1) * R.R0.half(1));
        Vec xy(4);
        xy << x, y;
        CHECK(bump_value(R, xy) >= 1.0 - 1e-12);
    }
    const GridField f = sample_bump(R, 32);
    Vec p(4);
    p << -0.5 + 17.0 / 32, -0.5 + 15.0 / 32, -0.5 + 18.0 / 32, -0.5 + 16.0 / 32;
    CHECK(f.values[((17 * 32 + 15) * 32 + 18) * 32 + 16].real() == doctest::Approx(bump_value(R, p)).epsilon(1e-14));

    const GrassRectangle wide = grass_rect(0.0, 0.05, 0.25, v2(0.1, 0.0), v2(0.0, 0.0));  // reach 2.4 * 0.25 > 1/2
    CHECK_THROWS_AS(sample_bump(wide, 32), ContractViolation);
}

TEST_CASE("bump transform is separable") {
    const GrassRectangle R = grass_rect(0.7, 1.0 / 16, 0.1, v2(0.03, 0.0), v2(-0.04, 0.06));
    const int M = 32;
    const GridField F = forward_transform(sample_bump(R, M));
    const GridField A = forward_transform(sample_bump(R.R0, M));
    const GridField B = forward_transform(sample_bump(R.R1(), M));
    double worst = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i)
        for (std::size_t j = 0; j < B.size(); ++j)
            worst = std::max(worst, std::abs(F.values[i * B.size() + j] - A.values[i] * B.values[j]));
    CHECK(worst <= 1e-10 * R.volume());
}

TEST_CASE("calibration: dual rectangle holds the transform mass") {
    const int M = 1024;
    for (double angle : {0.0, 0.3}) {
        const Rectangle R = rect2(0.02, -0.03, angle, 1.0 / 32, 0.15);
        const GridField F = forward_transform(sample_bump(R, M));
        CHECK(mass_fraction_inside(F, R.dual(), 8.0) >= 0.99);
        // The grid transform matches the continuous one at low frequencies.
        for (auto [a, b] : {std::pair{0, 0}, {3, -2}, {-11, 5}, {20, 1}}) {
            const std::size_t i = static_cast<std::size_t>((a + M) % M), j = static_cast<std::size_t>((b + M) % M);
            const auto exact = bump_hat(R, v2(a, b));
            CHECK(std::abs(F.values[i * M + j] - exact) <= 1e-9 * R.volume());
        }
    }
}

TEST_CASE("bump transform bounded by the rectangle volume") {
    const int M = 32;
    const GrassRectangle R = grass_rect(0.25, 1.0 / 16, 0.12, v2(0.0, 0.01), v2(0.04, 0.05));
    const GridField F = forward_transform(sample_bump(R, M));
    const GrassRectangle D = R.dual();
    Rectangle big = D.R0;
    big.half *= 8.0;
    double peak = 0.0, tail = 0.0;
    std::size_t idx = 0;
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < M; ++b)
            for (int c = 0; c < M; ++c)
                for (int d = 0; d < M; ++d, ++idx) {
                    const double v = std::abs(F.values[idx]);
                    peak = std::max(peak, v);
                    const bool inside = big.contains(v2(F.frequency(a), F.frequency(b))) &&
                                        big.contains(v2(F.frequency(c), F.frequency(d)));
                    if (!inside) tail = std::max(tail, v);
                }
    CHECK(peak <= 4.0 * R.volume());
    CHECK(tail <= 1e-3 * R.volume());
    CHECK(mass_fraction_inside(F, D, 8.0) >= 0.99);
}

TEST_CASE("high-low split") {
    const int M = 16;
    const double K = 2.0, delta = 1.0 / 16;  // cutoff radius 8 = M/2
    GridField c = GridField::zeros(4, M);
    for (auto& v : c.values) v = 2.5;
    const HighLow s0 = high_low_split(c, K, delta);
    CHECK(max_diff(s0.low, c) <= 1e-12);
    double hi = 0.0;
    for (auto& v : s0.high.values) hi = std::max(hi, std::abs(v));
    CHECK(hi <= 1e-12);

    // A mode at radius 2 (K delta)^-1 with a coarser cutoff.
    GridField w = GridField::zeros(4, M);
    std::size_t idx = 0;
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < M; ++b)
            for (int cc = 0; cc < M; ++cc)
                for (int d = 0; d < M; ++d, ++idx)
                    w.values[idx] = std::polar(1.0, 2 * std::numbers::pi * (6 * w.coordinate(a) + 0 * w.coordinate(b) +
                                                                            0 * w.coordinate(cc) + 0 * w.coordinate(d)));
    const HighLow s1 = high_low_split(w, 16.0 / 3.0, delta);  // cutoff 3, mode at 6
    double lo = 0.0;
    for (auto& v : s1.low.values) lo = std::max(lo, std::abs(v));
    CHECK(lo <= 1e-8);

    Rng rng(11);
    const GridField f = random_field(4, M, rng);
    const HighLow s = high_low_split(f, K, delta);
    GridField sum = s.low;
    for (std::size_t i = 0; i < sum.size(); ++i) sum.values[i] += s.high.values[i];
    CHECK(max_diff(sum, f) <= 1e-12);
    std::complex<double> inner = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) inner += s.low.values[i] * std::conj(s.high.values[i]);
    const double lhs = f.l2() * f.l2();
    const double rhs = s.low.l2() * s.low.l2() + s.high.l2() * s.high.l2() + 2.0 * inner.real();
    CHECK(std::abs(lhs - rhs) <= 1e-9 * lhs);

    CHECK_THROWS_AS(high_low_split(f, 1.0, delta), ContractViolation);  // radius 16 > 8
    CHECK(eta(0.0, K, delta) == 1.0);
    CHECK(eta(4.0, K, delta) == 1.0);
    CHECK(eta(6.0, K, delta) == doctest::Approx(0.5));
    CHECK(eta(8.0, K, delta) == 0.0);
}

TEST_CASE("interpolation and raw dumps") {
    Rng rng(2);
    GridField f = random_field(2, 8, rng);
    CHECK(interpolate(f, v2(f.coordinate(3), f.coordinate(5))) == doctest::Approx(f.values[3 * 8 + 5].real()));
    const double mid = interpolate(f, v2(f.coordinate(3) + 0.5 / 8, f.coordinate(5)));
    CHECK(mid == doctest::Approx(0.5 * (f.values[3 * 8 + 5].real() + f.values[4 * 8 + 5].real())));
    // Periodic across the seam.
    const double seam = interpolate(f, v2(f.coordinate(7) + 0.5 / 8, f.coordinate(0)));
    CHECK(seam == doctest::Approx(0.5 * (f.values[7 * 8].real() + f.values[0].real())));

    std::stringstream ss;
    write_raw(f, 2, ss);
    const std::string text = ss.str();
    const auto header = nlohmann::json::parse(text.substr(0, text.find('\n')));
    CHECK(header["M"] == 8);
    CHECK(header["count"] == 64);
    CHECK(header["domain_tag"] == "physical");
    CHECK(text.size() == text.find('\n') + 1 + 64 * 16);
    int n = 0;
    const GridField g = read_raw(ss, &n);
    CHECK(n == 2);
    CHECK(max_diff(g, f) == 0.0);
}

TEST_CASE("slab rectangles") {
    const Slab T = xz_slab(0.05, 0.01, 0.03);
    const double width = 1.0 / 16;
    const GrassRectangle R = GrassRectangle::of_slab(T, 0.12, width);
    // Lines with both chart points in R lie within `width` of the core at heights 0 and 1.
    Rng rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        Vec x = R.R0.center + R.R0.axes.transpose() * v2(u(rng) * R.R0.half(0), u(rng) * R.R0.half(1));
        Vec y = R.center1 + R.R0.axes.transpose() * v2(u(rng) * R.R0.half(0), u(rng) * R.R0.half(1));
        const LocalLine L(x, y);
        CHECK(T.core.distance_to(L.point_at_height(0.0)) <= width + 1e-12);
        CHECK(T.core.distance_to(L.point_at_height(1.0)) <= width + 1e-12);
    }
    CHECK(T.core.distance_to(LocalLine(R.R0.center, R.center1).point_at_height(0.5)) <= 1e-12);
}

TEST_CASE("direction classes") {
    Rng rng(1);
    const double delta = 1.0 / 16;
    const PointSet G = direction_net(3, 2, delta, rng);
    CHECK(G.size() >= 20);
    CHECK(is_separated(G, delta));

    std::vector<Slab> parallel;
    for (int i = 0; i < 5; ++i) parallel.push_back(xz_slab(0.04, 0.02 * i, 0.01));
    const auto c1 = direction_group(parallel, G);
    CHECK(std::all_of(c1.begin(), c1.end(), [&](std::size_t c) { return c == c1[0]; }));

    // Orthogonal traces: V = xz-plane and V = yz-plane.
    std::vector<Slab> two = parallel;
    const Subspace Vy = Subspace::coordinate(3, {1, 2});
    two.push_back(make_orthogonal_slab(Vy, LocalLine::through(Vec::Zero(3), (Vec(3) << 0, 0.04, 1).finished()), 0.01,
                                       0.005));
    const auto c2 = direction_group(two, G);
    CHECK(c2.size() == two.size());
    CHECK(c2.back() != c2[0]);
    for (std::size_t c : c2) CHECK(c < G.size());

    // Non-comparable slabs in one class have disjoint rectangles.
    const Slab A = xz_slab(0.03, 0.0, delta), B = xz_slab(0.03, 0.4, delta);
    CHECK_FALSE(slabs_comparable(A, B));
    CHECK(direction_group({A, B}, G)[0] == direction_group({A, B}, G)[1]);
    const GrassRectangle RA = GrassRectangle::of_slab(A, 0.12, delta), RB = GrassRectangle::of_slab(B, 0.12, delta);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int shared = 0;
    for (int i = 0; i < 2000; ++i) {
        Vec xy(4);
        xy << RA.R0.center + RA.R0.axes.transpose() * v2(u(rng) * RA.R0.half(0), u(rng) * RA.R0.half(1)),
            RA.center1 + RA.R0.axes.transpose() * v2(u(rng) * RA.R0.half(0), u(rng) * RA.R0.half(1));
        if (RB.contains(xy)) ++shared;
    }
    CHECK(shared == 0);
}

TEST_CASE("dual slab overlap") {
    std::vector<std::size_t> at4;
    for (double delta : {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64}) {
        Rng rng(1);
        const PointSet G = direction_net(3, 2, delta, rng);
        std::size_t prev = 0;
        for (double K : {2.0, 4.0, 8.0}) {
            const std::size_t o = dual_overlap_estimate(G, K, delta);
            CHECK(o >= prev);
            prev = o;
            if (K == 4.0) at4.push_back(o);
        }
        PointSet one(G.space);
        one.push(G.vec(0));
        CHECK(dual_overlap_estimate(one, 4.0, delta) == 1);
    }
    const auto [lo, hi] = std::minmax_element(at4.begin(), at4.end());
    CHECK(*hi <= 2 * *lo);
}

TEST_CASE("low part of the slab field") {
    HighLowParams p;
    const HighLowSetup st = highlow_setup(p);
    CHECK(st.lines.size() >= 5);
    CHECK(st.Vs.size() >= 20);

    // Default K: the high part dominates.
    const LowPartReport r = low_part_bound_check(st.lines.points, st.TV, p);
    CHECK(r.K == doctest::Approx(16.0));
    CHECK(r.dominance >= 0.9);
    CHECK(r.dominance_pass);
    CHECK(r.ratio_pass);
    CHECK(r.mean_multiplicity >= static_cast<double>(r.num_V));

    // Doubling K scales the low part by about 2^{s - 2(k-1)} = 1/2.
    HighLowParams q = p;
    q.K = 2.0;
    const double ratio = k_scaling_ratio(st.lines.points, st.TV, q);
    MESSAGE("K-scaling ratio " << ratio);
    CHECK(ratio >= 0.25);
    CHECK(ratio <= 1.0);
    const LowPartReport r2 = low_part_bound_check(st.lines.points, st.TV, q);
    CHECK(r2.ratio <= p.c_report);

    HighLowParams big = p;
    big.M = 64;
    big.max_grid_bytes = std::size_t{1} << 20;
    CHECK_THROWS_AS(low_part_bound_check(st.lines.points, st.TV, big), ResourceRefusal);
}

TEST_CASE("single slab low part is bounded by the bump maximum") {
    HighLowParams p;
    p.K = 2.0;
    const Slab T = xz_slab(0.03, 0.0, 3 * p.delta);
    const SlabFamilies TV{{T}};
    PointSet lines(Space::affine_lines(3));
    lines.push(line_chart(LocalLine::through(Vec::Zero(3), (Vec(3) << 0.03, 0, 1).finished())));
    const LowPartReport r = low_part_bound_check(lines, TV, p);
    const double sup = std::pow(flat_top(0.0, 1.0), 4);
    // The raised-cosine kernel has negative lobes; Young's inequality is the sharp bound.
    const double l1 = eta_kernel_l1(4, p.M, p.K, p.delta);
    MESSAGE("kernel l1 " << l1 << " low " << r.max_low << " sup " << sup);
    CHECK(l1 >= 1.0);
    CHECK(r.max_low <= l1 * sup);
    CHECK(r.num_slabs == 1);

    // Over the whole grid.
    GridField f = GridField::zeros(4, p.M);
    add_bump(f, GrassRectangle::of_slab(T, p.window, p.delta));
    const HighLow s = high_low_split(f, 2.0, p.delta);
    double mx = 0.0;
    for (const auto& v : s.low.values) mx = std::max(mx, v.real());
    CHECK(mx <= l1 * sup);
}

TEST_CASE("chart ball volume") {
    CHECK(chart_ball_volume(3, 1.0) == doctest::Approx(std::numbers::pi * std::numbers::pi / 6));
    // Monte Carlo in R^6 for n = 4.
    Rng rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int hit = 0;
    const int N = 400000;
    for (int i = 0; i < N; ++i) {
        Vec a(3), b(3);
        for (int j = 0; j < 3; ++j) {
            a(j) = u(rng);
            b(j) = u(rng);
        }
        if (a.norm() + b.norm() <= 1.0) ++hit;
    }
    CHECK(chart_ball_volume(4, 1.0) == doctest::Approx(64.0 * hit / N).epsilon(0.03));
}

TEST_CASE("Falconer energy") {
    // One line inside one slab: the integral is the volume of one chart ball.
    const double r = 0.01;
    const Slab T = xz_slab(0.02, 0.0, 10 * r);
    PointSet H(Space::affine_lines(3));
    H.push(line_chart(LocalLine::through(Vec::Zero(3), (Vec(3) << 0.02, 0, 1).finished())));
    Rng rng(1);
    const FalconerEnergy E = falconer_energy({{T}}, H, r, 64, rng);
    CHECK(E.center_counts == std::vector<std::size_t>{1});
    CHECK(E.integral == doctest::Approx(chart_ball_volume(3, r)));

    FalconerParams p;
    p.verify_brute = true;
    const FalconerReport rep = falconer_slope_experiment(p, {1.0 / 8, 1.0 / 16, 1.0 / 32});
    MESSAGE("Falconer slope " << rep.fit.slope << " floor " << rep.slope_floor);
    CHECK(rep.slope_pass);
    CHECK(rep.lower_pass);
    CHECK(rep.t_consistent);
    REQUIRE(rep.rows.front().brute_match.has_value());
    CHECK(*rep.rows.front().brute_match);
    for (const auto& row : rep.rows) {
        CHECK(row.min_center_multiplicity >= row.num_V);
        CHECK(row.frostman_audit <= 16.0);
    }
}
