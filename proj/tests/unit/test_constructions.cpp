#include <doctest.h>

#include <cmath>

#include "grassproj/constructions.hpp"

using namespace grassproj;

namespace {

const double kU = construction::kUnit;

std::vector<double> ladder(int lo, int hi) {
    std::vector<double> s;
    for (int i = lo; i <= hi; ++i) s.push_back(kU * std::pow(2.0, -i));
    return s;
}

LocalLine line_at(const NetCloud& c, std::size_t i, int n) {
    const double* p = c.points.point(i);
    return LocalLine(Eigen::Map<const Vec>(p, n - 1), Eigen::Map<const Vec>(p + n - 1, n - 1));
}

// Piece formulas of S(a) written out independently of eval_S.
double piece(int which, double a, int k, int n) {
    switch (which) {
        case 0: return a;
        case 1: return k - 1;
        case 2: return a - (n - k);
        default: return 2.0 * (k - 1);
    }
}

}  // namespace

TEST_CASE("eval_S on hand-checked triples") {
    struct Row { double a; int k, n; double s; };
    const Row rows[] = {
        {0.0, 2, 3, 0.0}, {0.5, 2, 3, 0.5}, {1.5, 2, 3, 1.0}, {2.0, 2, 3, 1.0},
        {2.5, 2, 3, 1.5}, {4.0, 2, 3, 2.0}, {3.5, 2, 4, 1.5}, {5.0, 2, 4, 2.0},
        {1.0, 3, 5, 1.0}, {3.0, 3, 5, 2.0}, {5.0, 3, 5, 3.0}, {7.0, 3, 5, 4.0},
    };
    for (const Row& r : rows) {
        CAPTURE(r.a);
        CAPTURE(r.k);
        CAPTURE(r.n);
        CHECK(eval_S(r.a, r.k, r.n) == r.s);
    }
}

TEST_CASE("eval_S breakpoints are continuous") {
    for (auto [k, n] : {std::pair{2, 3}, {2, 4}, {3, 5}, {4, 7}}) {
        const double bp[] = {k - 1.0, n - 1.0, n + k - 2.0};
        for (int i = 0; i < 3; ++i) {
            CHECK(piece(i, bp[i], k, n) == piece(i + 1, bp[i], k, n));
            CHECK(eval_S(bp[i], k, n) == piece(i, bp[i], k, n));
        }
        CHECK(eval_S(2.0 * (n - 1), k, n) == 2.0 * (k - 1));
        double prev = 0.0;
        for (int t = 0; t <= 400; ++t) {
            const double a = 2.0 * (n - 1) * t / 400.0;
            const double s = eval_S(a, k, n);
            CHECK(s >= prev);
            CHECK(s <= std::min(a, 2.0 * (k - 1)) + 1e-12);
            prev = s;
        }
    }
    CHECK_THROWS_AS(eval_S(-0.1, 2, 3), ContractViolation);
    CHECK_THROWS_AS(eval_S(4.1, 2, 3), ContractViolation);
    CHECK_THROWS_AS(eval_S(1.0, 1, 3), ContractViolation);
}

TEST_CASE("eval_S_general reduces to eval_S for lines") {
    for (auto [k, n] : {std::pair{2, 3}, {2, 4}, {3, 5}}) {
        for (int t = 0; t < 100; ++t) {
            const double a = 2.0 * (n - 1) * t / 99.0;
            GeneralS g = eval_S_general(a, k, n, 1);
            CHECK(g.value == doctest::Approx(eval_S(a, k, n)).epsilon(1e-12));
            CHECK(g.lower_bound_known);
        }
    }
}

TEST_CASE("eval_S_general envelope") {
    CHECK(eval_S_general(0.0, 3, 5, 2).value == 0.0);
    for (auto [k, n, l] : {std::tuple{3, 5, 2}, {4, 6, 2}, {4, 7, 3}}) {
        // Adjacent j pieces agree at a = (l-j)(n-l).
        for (int j = 0; j < l; ++j) {
            const double a = double((l - j) * (n - l));
            const double left = double((l - j) * (k - l));
            const double right = a - (l - j) * (n - k);
            CHECK(left == right);
            CHECK(eval_S_general(a, k, n, l).value == doctest::Approx(right).epsilon(1e-12));
        }
        const double top = double((l + 1) * (n - l));
        CHECK(eval_S_general(top, k, n, l).value == doctest::Approx((l + 1) * (k - l)));
        double prev = 0.0;
        for (int t = 1; t <= 500; ++t) {
            const double a = top * t / 500.0;
            const double v = eval_S_general(a, k, n, l).value;
            CHECK(v >= prev - 1e-12);
            CHECK(v - prev <= top / 500.0 + 1e-12);
            prev = v;
        }
        GeneralS mid = eval_S_general((l - 1) * (n - l) + 0.5 * (k - l), k, n, l);
        CHECK(mid.j == 1);
        CHECK(mid.lower_bound_known == (l == 1));
        CHECK(eval_S_general(top, k, n, l).j == 0);
        CHECK(eval_S_general(top, k, n, l).lower_bound_known);
    }
    CHECK_THROWS_AS(eval_S_general(9.5, 3, 5, 2), ContractViolation);
}

TEST_CASE("fractional sets") {
    auto sq = fractional_set(2, 2.0, 1.0, 0.5);
    CHECK(sq.size() == 25);
    auto c = fractional_set(1, std::log(2.0) / std::log(3.0), 0.5, 1e-3);
    CHECK(c.size() == 128);
    auto mixed = fractional_set(3, 1.5, 1.0, 0.1);
    for (const Vec& p : mixed) CHECK(p(2) == 0.0);
    for (const Vec& s : cap_slopes(2, 0.1, 0.01)) CHECK(s.norm() <= 0.1);
    CHECK_FALSE(cap_slopes(1, 0.1, 0.01).empty());
}

TEST_CASE("direction bush") {
    NetCloud bush = gen_direction_bush(3, 1.0 / 32, 2.0);
    CHECK(bush.delta == doctest::Approx(kU / 32));
    CHECK(is_separated(bush.points, bush.delta));
    for (std::size_t i = 0; i < bush.size(); ++i) {
        LocalLine L = line_at(bush, i, 3);
        CHECK(L.X().norm() == 0.0);
        CHECK(L.chart_valid());
    }
    DimEstimate e = box_dimension(bush.points, ladder(1, 5));
    MESSAGE("direction bush dimension " << e.slope);
    CHECK(e.slope == doctest::Approx(2.0).epsilon(0.1));

    NetCloud single = gen_direction_bush(3, 1.0 / 32, 0.0);
    CHECK(single.size() == 1);
    NetCloud curve = gen_direction_bush(4, 1.0 / 16, 1.0);
    for (std::size_t i = 0; i < curve.size(); ++i) CHECK(line_at(curve, i, 4).chart_valid());
    CHECK_THROWS_AS(gen_direction_bush(3, 1.0 / 32, 2.5), ContractViolation);
}

TEST_CASE("product example bushes are disjoint") {
    const double beta = std::log(2.0) / std::log(3.0);
    NetCloud prod = gen_product_example(3, beta, 1.0 / 8);
    REQUIRE(prod.size() > 0);
    int cross = 0;
    for (std::size_t i = 0; i < prod.size(); ++i) {
        LocalLine a = line_at(prod, i, 3);
        CHECK(a.chart_valid());
        for (std::size_t j = i + 1; j < prod.size(); ++j) {
            LocalLine b = line_at(prod, j, 3);
            if ((a.X() - b.X()).norm() < 1e-12) continue;
            ++cross;
            CHECK(line_distance_chart(a, b) >= prod.delta / 4);
        }
    }
    CHECK(cross > 0);

    NetCloud one = gen_product_example(3, 0.0, 1.0 / 16);
    for (std::size_t i = 0; i < one.size(); ++i) CHECK(line_at(one, i, 3).X().norm() == 0.0);
}

TEST_CASE("product example dimension is additive") {
    const double beta = std::log(2.0) / std::log(3.0);
    NetCloud prod = gen_product_example(3, beta, 1.0 / 64);
    DimEstimate e = box_dimension(prod.points, ladder(2, 5));
    MESSAGE("product dimension " << e.slope << " for beta + 2 = " << beta + 2);
    CHECK(std::abs(e.slope - (beta + 2.0)) <= 0.3);
}

TEST_CASE("bush family leaves contain their stems") {
    BushFamily fam = gen_bush_family(4, 3, 2, 1, 1.0, 0.25, false);
    REQUIRE(fam.leaves.size() > 0);
    CHECK(fam.leaves.size() == fam.leaf_bush.size());
    for (std::size_t i = 0; i < fam.leaves.size(); ++i) {
        AffinePlane W = leaf_plane(fam, i);
        const AffinePlane& stem = fam.bushes[fam.leaf_bush[i]].stem;
        const Mat& sf = stem.dir().frame();
        for (int r = 0; r < sf.rows(); ++r)
            CHECK((W.dir().proj() * sf.row(r).transpose() - sf.row(r).transpose()).norm() <= 1e-10);
        CHECK(W.distance_to(stem.offset()) <= 1e-10);
        CHECK(transverse_to_complement(W, 4, 2));
    }
}

TEST_CASE("bush family with distinct stems share no leaves") {
    BushFamily fam = gen_bush_family(3, 2, 1, 0, 1.0, 0.125, false);
    REQUIRE(fam.bushes.size() > 1);
    Rng rng(11);
    std::uniform_int_distribution<std::size_t> pick(0, fam.leaves.size() - 1);
    int pairs = 0;
    while (pairs < 1000) {
        std::size_t a = pick(rng), b = pick(rng);
        if (fam.leaf_bush[a] == fam.leaf_bush[b]) continue;
        ++pairs;
        CHECK(affine_distance(leaf_plane(fam, a), leaf_plane(fam, b)) > 1e-9);
    }
}

TEST_CASE("bush family degenerate cases") {
    BushFamily lines = gen_bush_family(3, 2, 1, 0, 0.0, 0.125, false);
    CHECK(lines.bushes.size() == 1);
    for (std::size_t i = 0; i < lines.leaves.size(); ++i)
        CHECK(leaf_plane(lines, i).offset().norm() <= 1e-12);
    BushFamily stems = gen_bush_family(4, 3, 2, 2, 0.0, 0.125, false);
    CHECK(stems.leaves.size() == 1);
    CHECK_THROWS_AS(gen_bush_family(3, 2, 2, 0, 0.0, 0.1, false), ContractViolation);
    CHECK_THROWS_AS(gen_bush_family(3, 2, 1, 2, 0.0, 0.1, false), ContractViolation);
}

TEST_CASE("one bush has dimension (l-j)(n-l)") {
    BushFamily fam = gen_bush_family(4, 3, 2, 1, 0.0, 1.0 / 32, false, 1.0);
    REQUIRE(fam.bushes.size() == 1);
    std::vector<double> scales;
    for (int i = 2; i <= 4; ++i) scales.push_back(std::pow(2.0, -i));
    DimEstimate e = box_dimension(fam.leaves.points, scales);
    MESSAGE("bush leaves " << fam.leaves.size() << ", dimension " << e.slope);
    CHECK(std::abs(e.slope - 2.0) <= 0.3);
}
