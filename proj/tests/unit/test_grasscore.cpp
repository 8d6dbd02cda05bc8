#include <doctest.h>

#include <cmath>
#include <numbers>

#include "grassproj/grasscore.hpp"

using namespace grassproj;

namespace {

Vec vec(std::initializer_list<double> xs) {
    Vec v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

Vec random_in_ball(int n, double radius, Rng& rng) {
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vec x(n);
    for (int i = 0; i < n; ++i) x(i) = g(rng);
    return x.normalized() * radius * std::pow(u(rng), 1.0 / n);
}

AffinePlane random_affine(int n, int k, Rng& rng) {
    return AffinePlane(sample_grassmannian(n, k, rng), random_in_ball(n, 0.45, rng));
}

LocalLine random_local_line(int n, Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vec X(n - 1), S(n - 1);
    for (int i = 0; i < n - 1; ++i) X(i) = 0.2 * u(rng);
    for (int i = 0; i < n - 1; ++i) S(i) = u(rng);
    S *= std::tan(0.1) / std::sqrt(n - 1.0);
    return {X, Vec(X + S)};
}

}  // namespace

TEST_CASE("subspace invariants") {
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 3 + trial % 3;
        const int k = 1 + trial % (n - 1);
        Subspace V = sample_grassmannian(n, k, rng);
        Mat g = V.frame() * V.frame().transpose();
        CHECK((g - Mat::Identity(k, k)).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((V.proj() * V.proj() - V.proj()).norm() <= 1e-10);
        CHECK((V.proj() - V.proj().transpose()).norm() <= 1e-14);
        CHECK(V.proj().trace() == doctest::Approx(k).epsilon(1e-12));
        Subspace C = V.complement();
        CHECK(C.dim() == n - k);
        CHECK((V.frame() * C.frame().transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("projection matrix does not depend on the spanning rows") {
    Mat a(2, 3);
    a << 1, 2, 0, 0, 1, 1;
    Mat b(2, 3);
    b << 1, 3, 1, 2, 5, 1;  // row1 + row2, 2 row1 + row2
    CHECK((Subspace::span(a).proj() - Subspace::span(b).proj()).norm() <= 1e-12);
    Mat bad(2, 3);
    bad << 1, 2, 3, 2, 4, 6;
    CHECK_THROWS_AS(Subspace::span(bad), ContractViolation);
}

TEST_CASE("grassmann_distance examples") {
    Rng rng(2);
    Subspace V = sample_grassmannian(4, 2, rng);
    CHECK(grassmann_distance(V, V) <= 1e-12);
    CHECK(grassmann_distance(Subspace::coordinate(2, {0}), Subspace::coordinate(2, {1})) ==
          doctest::Approx(1.0).epsilon(1e-12));

    const double th = std::numbers::pi / 6;
    Subspace L = Subspace::span(vec({std::cos(th), std::sin(th)}).transpose());
    // P1 - P2 = [[sin^2, -cs], [-cs, -sin^2]] has eigenvalues +-sin(th).
    const double s = std::sin(th), c = std::cos(th);
    Mat diff(2, 2);
    diff << s * s, -c * s, -c * s, -s * s;
    const double oracle = std::sqrt(std::abs(diff.determinant()));
    CHECK(oracle == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(grassmann_distance(Subspace::coordinate(2, {0}), L) == doctest::Approx(oracle).epsilon(1e-12));

    CHECK_THROWS_AS(grassmann_distance(Subspace::coordinate(3, {0}), Subspace::coordinate(3, {0, 1})),
                    ContractViolation);
}

TEST_CASE("frame route agrees with projection route") {
    Rng rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 3 + trial % 3;
        const int k = 1 + trial % (n - 1);
        Subspace a = sample_grassmannian(n, k, rng);
        Subspace b = sample_grassmannian(n, k, rng);
        CHECK(grassmann_distance_frames(a.frame(), b.frame()) ==
              doctest::Approx(grassmann_distance(a, b)).epsilon(1e-8));
    }
}

TEST_CASE("affine_distance examples") {
    Subspace d = Subspace::coordinate(3, {2});
    AffinePlane p(d, vec({0.1, 0.0, 0.0}));
    CHECK(affine_distance(p, p) == 0.0);
    AffinePlane q(d, vec({0.1, 0.1, 0.3}));
    CHECK(affine_distance(p, q) == doctest::Approx(0.1).epsilon(1e-12));

    AffinePlane l1(Subspace::span(vec({0, 0, 1}).transpose()), Vec::Zero(3));
    AffinePlane l2(Subspace::span(vec({std::sin(0.2), 0, std::cos(0.2)}).transpose()), Vec::Zero(3));
    CHECK(affine_distance(l1, l2) == doctest::Approx(grassmann_distance(l1.dir(), l2.dir())).epsilon(1e-12));
    CHECK(affine_distance(l1, l2) == doctest::Approx(0.19866933).epsilon(1e-7));

    CHECK_THROWS_AS(AffinePlane(d, vec({0.6, 0.0, 0.0})), ContractViolation);
    CHECK_THROWS_AS(affine_distance(l1, p.dim() == 1 ? AffinePlane(Subspace::coordinate(3, {0, 1}), Vec::Zero(3)) : p),
                    ContractViolation);
}

TEST_CASE("metric axioms on random triples") {
    Rng rng(4);
    int violations = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const int n = 3 + trial % 2;
        const int k = 1 + trial % (n - 1);
        Subspace a = sample_grassmannian(n, k, rng), b = sample_grassmannian(n, k, rng),
                 c = sample_grassmannian(n, k, rng);
        const double ab = grassmann_distance(a, b), bc = grassmann_distance(b, c), ac = grassmann_distance(a, c);
        if (std::abs(ab - grassmann_distance(b, a)) > 1e-12) ++violations;
        if (ac > ab + bc + 1e-9) ++violations;
        AffinePlane p = random_affine(n, k, rng), q = random_affine(n, k, rng), r = random_affine(n, k, rng);
        if (affine_distance(p, r) > affine_distance(p, q) + affine_distance(q, r) + 1e-9) ++violations;
        if (std::abs(affine_distance(p, q) - affine_distance(q, p)) > 1e-12) ++violations;
    }
    CHECK(violations == 0);
}

TEST_CASE("line_distance_chart") {
    LocalLine L(vec({0.1, 0.2}), vec({0.15, 0.2}));
    CHECK(line_distance_chart(L, L) == 0.0);
    LocalLine M(vec({0.4, 0.2}), vec({0.15, 0.2}));
    CHECK(line_distance_chart(L, M) == doctest::Approx(0.3).epsilon(1e-12));

    Rng rng(5);
    double lo = 1e300, hi = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
        const int n = 3 + trial % 2;
        LocalLine a = random_local_line(n, rng), b = random_local_line(n, rng);
        REQUIRE(a.chart_valid());
        const double r = line_distance_chart(a, b) / affine_distance(a.to_affine(), b.to_affine());
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    MESSAGE("chart/affine ratio in [" << lo << ", " << hi << "]");
    CHECK(lo > 0.1);
    CHECK(hi < 10.0);
}

TEST_CASE("chart round trip") {
    Rng rng(6);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        LocalLine L = random_local_line(3 + trial % 3, rng);
        LocalLine back = LocalLine::from_affine(L.to_affine());
        worst = std::max(worst, line_distance_chart(L, back));
        Vec d = L.direction();
        CHECK(d.norm() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(d(d.size() - 1) > 0.0);
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("hausdorff_rho") {
    Rng rng(7);
    Subspace V = sample_grassmannian(3, 2, rng);
    CHECK(hausdorff_rho(V, V) <= 1e-12);
    Subspace a = Subspace::coordinate(2, {0});
    Subspace b = Subspace::span(vec({std::cos(0.3), std::sin(0.3)}).transpose());
    CHECK(hausdorff_rho(a, b) == doctest::Approx(std::sin(0.3)).epsilon(0.02));
}

TEST_CASE("rho and d are comparable") {
    Rng rng(8);
    int violations = 0;
    double worst_lin = 0.0, worst_aff = 0.0;
    for (int trial = 0; trial < 2000; ++trial) {
        const int n = 3 + trial % 2;
        const int k = 1 + trial % (n - 1);
        Subspace a = sample_grassmannian(n, k, rng), b = sample_grassmannian(n, k, rng);
        const double rho = hausdorff_rho(a, b), d = grassmann_distance(a, b);
        if (rho > d + 1e-9) ++violations;
        worst_lin = std::max(worst_lin, d / rho);
        AffinePlane p = random_affine(n, k, rng), q = random_affine(n, k, rng);
        const double rho2 = hausdorff_rho(p, q), d2 = affine_distance(p, q);
        if (rho2 > d2 + 1e-9) ++violations;
        worst_aff = std::max(worst_aff, d2 / rho2);
    }
    MESSAGE("d/rho max: linear " << worst_lin << ", affine " << worst_aff);
    CHECK(violations == 0);
    CHECK(worst_lin <= 10.0);
    CHECK(worst_aff <= 10.0);
}

TEST_CASE("project_point") {
    Subspace xy = Subspace::coordinate(3, {0, 1});
    Vec p = project_point(xy, vec({1, 2, 3}));
    CHECK((p - vec({1, 2, 0})).norm() <= 1e-15);
    CHECK((project_point(xy, p) - p).norm() <= 1e-15);
    Rng rng(9);
    std::normal_distribution<double> g;
    for (int i = 0; i < 1000; ++i) {
        Subspace V = sample_grassmannian(4, 2, rng);
        Vec x(4);
        for (int j = 0; j < 4; ++j) x(j) = g(rng);
        CHECK(project_point(V, x).norm() <= x.norm() + 1e-12);
    }
}

TEST_CASE("project_line branches") {
    Subspace xy = Subspace::coordinate(3, {0, 1});
    LocalLine diag = LocalLine::through(Vec::Zero(3), vec({1, 0, 1}));
    auto img = project_line(xy, diag, 0.005);
    REQUIRE(std::holds_alternative<ProjectedLine>(img));
    auto pl = std::get<ProjectedLine>(img);
    Vec dir = (pl.p1 - pl.p0).normalized();
    CHECK(std::abs(dir(0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pl.p0.norm() <= 1e-15);

    LocalLine z(vec({0, 0}), vec({0, 0}));
    auto pt = project_line(xy, z, 0.005);
    REQUIRE(std::holds_alternative<ProjectedPoint>(pt));
    CHECK(std::get<ProjectedPoint>(pt).p.norm() == 0.0);

    LocalLine tilt(vec({0, 0}), vec({0.002, 0}));
    auto dg = project_line(xy, tilt, 0.005);
    REQUIRE(std::holds_alternative<Degenerate>(dg));
    CHECK(std::get<Degenerate>(dg).angle > 0.0);
    CHECK(std::get<Degenerate>(dg).angle <= 0.005);

    Rng rng(10);
    for (int trial = 0; trial < 1000; ++trial) {
        Subspace V = sample_grassmannian(4, 2, rng);
        LocalLine L = random_local_line(4, rng);
        auto im = project_line(V, L, 0.005);
        if (!std::holds_alternative<ProjectedLine>(im)) continue;
        auto& q = std::get<ProjectedLine>(im);
        CHECK(V.contains(V.frame().transpose() * q.p0));
        CHECK((q.p0 - q.p1).norm() > 0.0);
    }
}

TEST_CASE("sample_grassmannian is rotation invariant in mean") {
    Rng rng(11);
    const int n = 3, k = 2, N = 100000;
    Mat sum = Mat::Zero(n, n), sq = Mat::Zero(n, n);
    for (int i = 0; i < N; ++i) {
        Mat p = sample_grassmannian(n, k, rng).proj();
        sum += p;
        sq += p.cwiseProduct(p);
    }
    Mat mean = sum / N;
    Mat var = sq / N - mean.cwiseProduct(mean);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double target = i == j ? double(k) / n : 0.0;
            CHECK(std::abs(mean(i, j) - target) <= 3.0 * std::sqrt(var(i, j) / N));
        }
}

TEST_CASE("sample_grassmannian distances approach 1 and are seeded") {
    Rng rng(12);
    double best = 0.0;
    for (int i = 0; i < 2000; ++i)
        best = std::max(best, grassmann_distance(sample_grassmannian(3, 1, rng), sample_grassmannian(3, 1, rng)));
    CHECK(best > 0.99);
    Rng r1(99), r2(99);
    CHECK((sample_grassmannian(5, 2, r1).proj() - sample_grassmannian(5, 2, r2).proj()).norm() == 0.0);
}

TEST_CASE("plane chart") {
    Rng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 3 + trial % 2;
        Subspace V = sample_grassmannian(n, 2, rng);
        PlaneChart pc(V);
        CHECK((pc.basis() * pc.basis().transpose() - Mat::Identity(2, 2)).norm() <= 1e-12);
        LocalLine L = random_local_line(n, rng);
        auto c = pc.chart_of(L);
        if (!c) continue;
        auto [a, b] = pc.points_of(*c);
        CHECK(V.contains(a));
        CHECK(V.contains(b));
        // both ends lie on P_V(L)
        Vec pa = V.project(L.point_at_height(0.0));
        Vec u = V.project(L.direction()).normalized();
        Vec ra = (a - pa) - (a - pa).dot(u) * u;
        CHECK(ra.norm() <= 1e-9);
        auto again = pc.chart_of_points(a, b);
        REQUIRE(again);
        CHECK((*again - *c).norm() <= 1e-10);
    }
}

TEST_CASE("unit chord") {
    LocalLine z(vec({0.0, 0.0}), vec({0.0, 0.0}));
    auto ch = z.unit_chord();
    REQUIRE(ch);
    CHECK(ch->first(2) == doctest::Approx(-1.0));
    CHECK(ch->second(2) == doctest::Approx(1.0));
    LocalLine far(vec({2.0, 0.0}), vec({2.0, 0.0}));
    CHECK_FALSE(far.unit_chord());
}
