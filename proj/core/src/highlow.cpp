#include "grassproj/highlow.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>

#include <fftw3.h>
#include <json.hpp>

#include "grassproj/constructions.hpp"
#include "grassproj/parallel.hpp"

namespace grassproj {

namespace {

constexpr double kEdge = 1.2;
constexpr double kSigma = 0.15;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double flat_top_scale() {
    static const double c = 1.0 / (normal_cdf((1.0 + kEdge) / kSigma) - normal_cdf((1.0 - kEdge) / kSigma));
    return c;
}

std::size_t ipow(int base, int e) {
    std::size_t r = 1;
    for (int i = 0; i < e; ++i) r *= static_cast<std::size_t>(base);
    return r;
}

// Chart coordinate extent of the bump support must stay off the torus seam.
void check_wrap(const Rectangle& R) {
    for (int j = 0; j < R.dim(); ++j) {
        double reach = 0.0;
        for (int i = 0; i < R.dim(); ++i) reach += kBumpSupport * R.half(i) * std::abs(R.axes(i, j));
        require(R.center(j) - reach > -0.5 && R.center(j) + reach < 0.5,
                "bump: rectangle support reaches the torus wrap");
    }
}

// Odometer over an M^dim grid, last coordinate fastest.
struct GridWalk {
    int dim, M;
    std::vector<int> idx;
    GridWalk(int d, int m) : dim(d), M(m), idx(d, 0) {}
    void next() {
        for (int d = dim - 1; d >= 0; --d) {
            if (++idx[d] < M) return;
            idx[d] = 0;
        }
    }
};

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

void run_fft(std::vector<std::complex<double>>& data, int dim, int M, int sign) {
    std::vector<int> dims(dim, M);
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft(dim, dims.data(), p, p, sign, FFTW_ESTIMATE);
    }
    require(plan != nullptr, "fft: planner failed");
    fftw_execute(plan);
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
}

// (-1)^{sum of frequencies}: the shift of the grid origin to the chart point -1/2.
void apply_parity(GridField& f) {
    GridWalk w(f.dim, f.M);
    for (std::size_t i = 0; i < f.size(); ++i, w.next()) {
        int s = 0;
        for (int d = 0; d < f.dim; ++d) s += f.frequency(w.idx[d]);
        if (s & 1) f.values[i] = -f.values[i];
    }
}

// Evaluates a rectangle bump on the M^{dim} grid, returning only the support.
std::vector<std::pair<std::size_t, double>> bump_support(const Rectangle& R, int M) {
    const int D = R.dim();
    const std::size_t N = ipow(M, D);
    const double cut = 1e-16 * std::pow(flat_top_scale(), D);
    std::vector<std::pair<std::size_t, double>> out;
    GridWalk w(D, M);
    Vec x(D);
    for (std::size_t i = 0; i < N; ++i, w.next()) {
        for (int d = 0; d < D; ++d) x(d) = static_cast<double>(w.idx[d]) / M - 0.5;
        const double v = bump_value(R, x);
        if (v > cut) out.emplace_back(i, v);
    }
    return out;
}

GridField low_part(const GridField& F, double K, double delta) {
    GridField spec = forward_transform(F);
    GridWalk w(spec.dim, spec.M);
    for (std::size_t i = 0; i < spec.size(); ++i, w.next()) {
        double r2 = 0.0;
        for (int d = 0; d < spec.dim; ++d) {
            const double q = spec.frequency(w.idx[d]);
            r2 += q * q;
        }
        spec.values[i] *= eta(std::sqrt(r2), K, delta);
    }
    return inverse_transform(spec);
}

void check_cutoff(int M, double K, double delta) {
    require(K > 0.0 && delta > 0.0, "high_low_split: K and delta must be positive");
    require(1.0 / (K * delta) <= M / 2.0 + 1e-12, "high_low_split: cutoff radius (K delta)^-1 exceeds Nyquist M/2");
}

}  // namespace

// ------------------------------------------------------------ charts

Vec line_chart(const LocalLine& L) {
    const auto m = L.X().size();
    Vec p(2 * m);
    p << L.X(), L.Y();
    return p;
}

LocalLine chart_line(const Vec& p) {
    require(p.size() >= 2 && p.size() % 2 == 0, "chart_line: chart points have even dimension");
    const auto m = p.size() / 2;
    return {p.head(m), p.tail(m)};
}

Vec line_chart(const Vec& point, const Vec& dir) { return line_chart(LocalLine::through(point, dir)); }

// ------------------------------------------------------------ rectangles

bool Rectangle::contains(const Vec& x) const {
    const Vec c = axes * (x - center);
    for (int i = 0; i < dim(); ++i)
        if (std::abs(c(i)) > half(i)) return false;
    return true;
}

double Rectangle::volume() const {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i) v *= 2.0 * half(i);
    return v;
}

Rectangle Rectangle::dual() const {
    Rectangle r;
    r.center = Vec::Zero(dim());
    r.axes = axes;
    r.half = half.cwiseInverse();
    return r;
}

Rectangle GrassRectangle::R1() const {
    Rectangle r = R0;
    r.center = center1;
    return r;
}

bool GrassRectangle::contains(const Vec& XY) const {
    const int m = base_dim();
    require(XY.size() == 2 * m, "GrassRectangle::contains: dimension mismatch");
    return R0.contains(XY.head(m)) && R1().contains(XY.tail(m));
}

double GrassRectangle::volume() const { return R0.volume() * R0.volume(); }

GrassRectangle GrassRectangle::dual() const {
    GrassRectangle d;
    d.R0 = R0.dual();
    d.center1 = Vec::Zero(base_dim());
    return d;
}

GrassRectangle GrassRectangle::of_slab(const Slab& T, double window, double width) {
    require(window > 0.0 && width > 0.0, "GrassRectangle::of_slab: window and width must be positive");
    const int n = T.core.ambient();
    const int m = n - 1;
    const Mat N = T.core.dir().complement().frame();
    const int c = static_cast<int>(N.rows());
    require(c >= 1 && c <= m, "GrassRectangle::of_slab: slab core must have codimension in [1, n-1]");
    const Mat Np = N.leftCols(m);
    Eigen::JacobiSVD<Mat> svd(Np, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec sv = svd.singularValues();
    require(sv(c - 1) > 1e-6, "GrassRectangle::of_slab: slab is parallel to {x_n = 0}");
    const Mat& U = svd.matrixU();
    const Mat& W = svd.matrixV();
    auto min_norm = [&](const Vec& b) {
        Vec y = U.transpose() * b;
        for (int i = 0; i < c; ++i) y(i) /= sv(i);
        return Vec(W.leftCols(c) * y.head(c));
    };
    const Vec b0 = N * T.core.offset();
    const Vec b1 = b0 - N.col(m);

    GrassRectangle g;
    g.R0.axes = W.transpose();
    g.R0.half.resize(m);
    const double shrink = std::sqrt(static_cast<double>(c));
    for (int i = 0; i < m; ++i) g.R0.half(i) = i < c ? width / (sv(i) * shrink) : window;
    g.R0.center = min_norm(b0);
    g.center1 = min_norm(b1);
    return g;
}

// ------------------------------------------------------------ bumps

double flat_top(double t, double h) {
    const double sigma = kSigma * h, a = kEdge * h;
    return flat_top_scale() * (normal_cdf((t + a) / sigma) - normal_cdf((t - a) / sigma));
}

double flat_top_hat(double xi, double h) {
    const double sigma = kSigma * h, a = kEdge * h;
    const double x = 2.0 * a * xi;
    const double sinc = std::abs(x) < 1e-12 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    return flat_top_scale() * 2.0 * a * sinc * std::exp(-2.0 * pi2 * sigma * sigma * xi * xi);
}

double bump_value(const Rectangle& R, const Vec& x) {
    const Vec c = R.axes * (x - R.center);
    double v = 1.0;
    for (int i = 0; i < R.dim(); ++i) {
        if (std::abs(c(i)) > kBumpSupport * R.half(i)) return 0.0;
        v *= flat_top(c(i), R.half(i));
    }
    return v;
}

double bump_value(const GrassRectangle& R, const Vec& XY) {
    const int m = R.base_dim();
    require(XY.size() == 2 * m, "bump_value: dimension mismatch");
    const double a = bump_value(R.R0, XY.head(m));
    return a == 0.0 ? 0.0 : a * bump_value(R.R1(), XY.tail(m));
}

std::complex<double> bump_hat(const Rectangle& R, const Vec& xi) {
    const Vec c = R.axes * xi;
    double v = 1.0;
    for (int i = 0; i < R.dim(); ++i) v *= flat_top_hat(c(i), R.half(i));
    return std::polar(v, -2.0 * std::numbers::pi * xi.dot(R.center));
}

// ------------------------------------------------------------ grid fields

GridField GridField::zeros(int dim, int M, Domain d) {
    require(dim >= 1 && M >= 2 && std::has_single_bit(static_cast<unsigned>(M)),
            "GridField: need dim >= 1 and M a power of two");
    GridField f;
    f.dim = dim;
    f.M = M;
    f.domain = d;
    f.values.assign(ipow(M, dim), {0.0, 0.0});
    return f;
}

double GridField::l2() const {
    double s = 0.0;
    for (const auto& v : values) s += std::norm(v);
    return std::sqrt(s);
}

std::size_t grid_bytes(int dim, int M, int fields) {
    const double b = std::pow(static_cast<double>(M), dim) * sizeof(std::complex<double>) * fields;
    return b >= static_cast<double>(std::numeric_limits<std::size_t>::max())
               ? std::numeric_limits<std::size_t>::max()
               : static_cast<std::size_t>(b);
}

void check_grid_budget(int dim, int M, int fields, std::size_t budget) {
    const std::size_t need = grid_bytes(dim, M, fields);
    if (need > budget) {
        std::ostringstream os;
        os << "grid of " << fields << " x " << M << "^" << dim << " complex values needs " << need
           << " bytes, budget is " << budget << " bytes";
        throw ResourceRefusal(os.str());
    }
}

GridField forward_transform(const GridField& f) {
    require(f.domain == Domain::Physical, "forward_transform: field is not in the physical domain");
    GridField F = f;
    F.domain = Domain::Frequency;
    run_fft(F.values, F.dim, F.M, FFTW_FORWARD);
    const double scale = 1.0 / static_cast<double>(F.size());
    for (auto& v : F.values) v *= scale;
    apply_parity(F);
    return F;
}

GridField inverse_transform(const GridField& F) {
    require(F.domain == Domain::Frequency, "inverse_transform: field is not in the frequency domain");
    GridField f = F;
    f.domain = Domain::Physical;
    apply_parity(f);
    run_fft(f.values, f.dim, f.M, FFTW_BACKWARD);
    return f;
}

GridField sample_bump(const Rectangle& R, int M) {
    check_wrap(R);
    GridField f = GridField::zeros(R.dim(), M);
    for (const auto& [i, v] : bump_support(R, M)) f.values[i] = v;
    return f;
}

GridField sample_bump(const GrassRectangle& R, int M) {
    GridField f = GridField::zeros(2 * R.base_dim(), M);
    add_bump(f, R);
    return f;
}

void add_bump(GridField& f, const GrassRectangle& R, double weight) {
    const int m = R.base_dim();
    require(f.dim == 2 * m && f.domain == Domain::Physical, "add_bump: field does not match the rectangle");
    const Rectangle R1 = R.R1();
    check_wrap(R.R0);
    check_wrap(R1);
    const auto a = bump_support(R.R0, f.M);
    const auto b = bump_support(R1, f.M);
    const std::size_t stride = ipow(f.M, m);
    for (const auto& [i, u] : a) {
        auto* row = f.values.data() + i * stride;
        const double wu = weight * u;
        for (const auto& [j, v] : b) row[j] += wu * v;
    }
}

double mass_fraction_inside(const GridField& F, const Rectangle& box, double factor) {
    require(F.domain == Domain::Frequency && box.dim() == F.dim, "mass_fraction_inside: dimension mismatch");
    double in = 0.0, total = 0.0;
    GridWalk w(F.dim, F.M);
    Vec xi(F.dim);
    for (std::size_t i = 0; i < F.size(); ++i, w.next()) {
        const double e = std::norm(F.values[i]);
        total += e;
        for (int d = 0; d < F.dim; ++d) xi(d) = F.frequency(w.idx[d]);
        Rectangle big = box;
        big.half *= factor;
        if (big.contains(xi)) in += e;
    }
    return total > 0.0 ? in / total : 1.0;
}

double mass_fraction_inside(const GridField& F, const GrassRectangle& box, double factor) {
    const int m = box.base_dim();
    require(F.domain == Domain::Frequency && F.dim == 2 * m, "mass_fraction_inside: dimension mismatch");
    Rectangle a = box.R0, b = box.R1();
    a.half *= factor;
    b.half *= factor;
    double in = 0.0, total = 0.0;
    GridWalk w(F.dim, F.M);
    Vec x(m), y(m);
    for (std::size_t i = 0; i < F.size(); ++i, w.next()) {
        const double e = std::norm(F.values[i]);
        total += e;
        for (int d = 0; d < m; ++d) {
            x(d) = F.frequency(w.idx[d]);
            y(d) = F.frequency(w.idx[m + d]);
        }
        if (a.contains(x) && b.contains(y)) in += e;
    }
    return total > 0.0 ? in / total : 1.0;
}

// ------------------------------------------------------------ split

double eta(double radius, double K, double delta) {
    const double rho = 1.0 / (K * delta);
    if (radius <= 0.5 * rho) return 1.0;
    if (radius >= rho) return 0.0;
    const double t = (radius - 0.5 * rho) / (0.5 * rho);
    return 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

double eta_kernel_l1(int dim, int M, double K, double delta) {
    check_cutoff(M, K, delta);
    GridField e = GridField::zeros(dim, M, Domain::Frequency);
    GridWalk w(dim, M);
    for (std::size_t i = 0; i < e.size(); ++i, w.next()) {
        double r2 = 0.0;
        for (int d = 0; d < dim; ++d) {
            const double q = e.frequency(w.idx[d]);
            r2 += q * q;
        }
        e.values[i] = eta(std::sqrt(r2), K, delta);
    }
    const GridField k = inverse_transform(e);
    double s = 0.0;
    for (const auto& v : k.values) s += std::abs(v);
    return s / static_cast<double>(k.size());
}

HighLow high_low_split(const GridField& F, double K, double delta) {
    require(F.domain == Domain::Physical, "high_low_split: field is not in the physical domain");
    check_cutoff(F.M, K, delta);
    HighLow out;
    out.low = low_part(F, K, delta);
    out.high = F;
    for (std::size_t i = 0; i < F.size(); ++i) out.high.values[i] -= out.low.values[i];
    return out;
}

double interpolate(const GridField& f, const Vec& p) {
    require(f.domain == Domain::Physical && p.size() == f.dim, "interpolate: dimension mismatch");
    std::vector<int> base(f.dim);
    std::vector<double> frac(f.dim);
    for (int d = 0; d < f.dim; ++d) {
        const double u = (p(d) + 0.5) * f.M;
        const double fl = std::floor(u);
        frac[d] = u - fl;
        base[d] = static_cast<int>(fl);
    }
    double acc = 0.0;
    for (unsigned corner = 0; corner < (1u << f.dim); ++corner) {
        double wgt = 1.0;
        std::size_t idx = 0;
        for (int d = 0; d < f.dim; ++d) {
            const bool up = (corner >> d) & 1u;
            wgt *= up ? frac[d] : 1.0 - frac[d];
            int j = (base[d] + (up ? 1 : 0)) % f.M;
            if (j < 0) j += f.M;
            idx = idx * f.M + static_cast<std::size_t>(j);
        }
        if (wgt != 0.0) acc += wgt * f.values[idx].real();
    }
    return acc;
}

// ------------------------------------------------------------ raw dumps

void write_raw(const GridField& f, int n_ambient, std::ostream& out) {
    static_assert(std::endian::native == std::endian::little, "raw dumps assume a little-endian host");
    nlohmann::json h;
    h["n"] = n_ambient;
    h["M"] = f.M;
    h["dim"] = f.dim;
    h["domain_tag"] = f.domain == Domain::Physical ? "physical" : "frequency";
    h["complex"] = true;
    h["count"] = f.size();
    h["layout"] = "row-major, last axis fastest, (re, im) float64 pairs";
    out << h.dump() << '\n';
    out.write(reinterpret_cast<const char*>(f.values.data()),
              static_cast<std::streamsize>(f.size() * sizeof(std::complex<double>)));
}

GridField read_raw(std::istream& in, int* n_ambient) {
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "read_raw: missing header");
    const auto h = nlohmann::json::parse(line);
    const std::string tag = h.at("domain_tag").get<std::string>();
    require(tag == "physical" || tag == "frequency", "read_raw: unknown domain_tag");
    GridField f = GridField::zeros(h.at("dim").get<int>(), h.at("M").get<int>(),
                                   tag == "physical" ? Domain::Physical : Domain::Frequency);
    require(h.at("count").get<std::size_t>() == f.size(), "read_raw: count does not match the grid");
    in.read(reinterpret_cast<char*>(f.values.data()),
            static_cast<std::streamsize>(f.size() * sizeof(std::complex<double>)));
    require(static_cast<std::size_t>(in.gcount()) == f.size() * sizeof(std::complex<double>),
            "read_raw: truncated payload");
    if (n_ambient) *n_ambient = h.at("n").get<int>();
    return f;
}

// ------------------------------------------------------------ low part

double default_K(double delta) {
    const double l = std::log2(1.0 / delta);
    return l * l;
}

namespace {

// Uniform sample of the chart ball {|dX| + |dY| <= r} by rejection from the cube.
Vec chart_ball_sample(int m, double r, Rng& rng) {
    std::uniform_real_distribution<double> u(-r, r);
    Vec v(2 * m);
    for (;;) {
        for (int i = 0; i < 2 * m; ++i) v(i) = u(rng);
        if (v.head(m).norm() + v.tail(m).norm() <= r) return v;
    }
}

NetCloud highlow_lines(int n, double delta, double cap) {
    PointSet cand(Space::affine_lines(n));
    for (const Vec& s : cap_slopes(n - 1, cap, 0.5 * delta)) {
        Vec p(2 * (n - 1));
        p << Vec::Zero(n - 1), s;
        cand.push(p);
    }
    return greedy_net(cand, delta);
}

}  // namespace

HighLowSetup highlow_setup(const HighLowParams& p) {
    require(p.n == 3 && p.k == 2, "highlow_setup: the grid experiment runs at n = 3, k = 2");
    require(p.delta > 0.0 && p.delta < 0.5, "highlow_setup: delta must lie in (0, 1/2)");
    HighLowSetup st;
    st.lines = highlow_lines(p.n, p.delta, p.cap);
    Rng rng = task_rng(p.seed, 0);
    st.Vs = subspace_ball_net(p.n, p.k, p.g_radius, p.v_delta > 0.0 ? p.v_delta : 2.0 * p.delta, rng);
    st.TV.resize(st.Vs.size());
    parallel_for(st.Vs.size(), [&](std::size_t v) {
        st.TV[v] = build_slab_family(st.lines.points, subspace_at(st.Vs, v), p.delta, p.s, p.kappa, p.mu);
    });
    return st;
}

namespace {

struct LowField {
    std::vector<GrassRectangle> rects;
    std::size_t num_V = 0;
    GridField low;
};

void check_lowpart_params(const HighLowParams& p, double K) {
    require(p.n == 3, "low_part_bound_check: the grid experiment runs at n = 3");
    require(p.delta >= 1.0 / 32 - 1e-15, "low_part_bound_check: delta must be at least 2^-5");
    require(p.M >= 2 && p.M <= 64 && std::has_single_bit(static_cast<unsigned>(p.M)),
            "low_part_bound_check: M must be a power of two <= 64");
    check_cutoff(p.M, K, p.delta);
}

std::vector<GrassRectangle> slab_rectangles(const SlabFamilies& TV, const HighLowParams& p, std::size_t* num_V) {
    std::vector<GrassRectangle> rects;
    *num_V = 0;
    for (const auto& fam : TV) {
        if (!fam.empty()) ++*num_V;
        for (const auto& T : fam) rects.push_back(GrassRectangle::of_slab(T, p.window, p.delta));
    }
    return rects;
}

LowField assemble_low(const SlabFamilies& TV, const HighLowParams& p, double K) {
    check_lowpart_params(p, K);
    const int D = 2 * (p.n - 1);
    check_grid_budget(D, p.M, 3, p.max_grid_bytes);
    LowField out;
    out.rects = slab_rectangles(TV, p, &out.num_V);
    GridField f = GridField::zeros(D, p.M);
    for (const auto& R : out.rects) add_bump(f, R);
    out.low = low_part(f, K, p.delta);
    return out;
}

std::vector<Vec> chart_samples(const PointSet& lines, const HighLowParams& p) {
    const int m = lines.space.n - 1;
    std::vector<Vec> pts;
    Rng rng = task_rng(p.seed, 1);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const Vec c = lines.vec(i);
        pts.push_back(c);
        for (int q = 0; q < p.samples_per_line; ++q) pts.push_back(c + chart_ball_sample(m, p.delta, rng));
    }
    return pts;
}

double max_abs_low(const LowField& lf, const std::vector<Vec>& pts) {
    double mx = 0.0;
    for (const Vec& x : pts) mx = std::max(mx, std::abs(interpolate(lf.low, x)));
    return mx;
}

}  // namespace

GridField assemble_field(const SlabFamilies& TV, const HighLowParams& p) {
    require(p.n >= 2 && p.M >= 2, "assemble_field: need n >= 2 and M >= 2");
    const int D = 2 * (p.n - 1);
    check_grid_budget(D, p.M, 1, p.max_grid_bytes);
    std::size_t num_V = 0;
    GridField f = GridField::zeros(D, p.M);
    for (const auto& R : slab_rectangles(TV, p, &num_V)) add_bump(f, R);
    return f;
}

LowPartReport low_part_bound_check(const PointSet& lines, const SlabFamilies& TV, const HighLowParams& p) {
    require(lines.space.kind == SpaceKind::AffineLines && lines.space.n == p.n,
            "low_part_bound_check: lines must be affine lines in R^n");
    const double K = p.K > 0.0 ? p.K : default_K(p.delta);
    const LowField lf = assemble_low(TV, p, K);
    const auto pts = chart_samples(lines, p);

    LowPartReport r;
    r.num_lines = lines.size();
    r.num_V = lf.num_V;
    r.num_slabs = lf.rects.size();
    r.samples = pts.size();
    r.K = K;
    r.bound_unit = std::pow(K, p.s - 2.0 * (p.k - 1)) * static_cast<double>(lf.num_V);
    std::size_t dominated = 0, counted = 0;
    double msum = 0.0;
    for (const Vec& x : pts) {
        double f = 0.0;
        std::size_t mult = 0;
        for (const auto& R : lf.rects) {
            f += bump_value(R, x);
            if (R.contains(x)) ++mult;
        }
        const double low = std::abs(interpolate(lf.low, x));
        r.max_low = std::max(r.max_low, low);
        msum += static_cast<double>(mult);
        if (mult == 0) continue;
        ++counted;
        if (f - low >= 0.5 * static_cast<double>(mult)) ++dominated;
    }
    r.mean_multiplicity = pts.empty() ? 0.0 : msum / static_cast<double>(pts.size());
    r.ratio = r.bound_unit > 0.0 ? r.max_low / r.bound_unit : 0.0;
    r.dominance = counted ? static_cast<double>(dominated) / static_cast<double>(counted) : 0.0;
    r.ratio_pass = r.ratio <= p.c_report;
    r.dominance_pass = counted > 0 && r.dominance >= 0.9;
    return r;
}

double k_scaling_ratio(const PointSet& lines, const SlabFamilies& TV, const HighLowParams& p) {
    const double K = p.K > 0.0 ? p.K : default_K(p.delta);
    const auto pts = chart_samples(lines, p);
    const double a = max_abs_low(assemble_low(TV, p, K), pts);
    const double b = max_abs_low(assemble_low(TV, p, 2.0 * K), pts);
    require(a > 0.0, "k_scaling_ratio: low part vanishes on the samples");
    return b / a;
}

// ------------------------------------------------------------ direction classes

Subspace slab_trace_direction(const Slab& T) {
    const int n = T.core.ambient();
    const Mat N = T.core.dir().complement().frame();
    const int c = static_cast<int>(N.rows());
    Eigen::JacobiSVD<Mat> svd(N.leftCols(n - 1), Eigen::ComputeFullV);
    require(svd.singularValues()(c - 1) > 1e-6, "slab_trace_direction: slab is parallel to {x_n = 0}");
    return Subspace::span(svd.matrixV().rightCols(n - 1 - c).transpose());
}

PointSet direction_net(int n, int k, double delta, Rng& rng) {
    const int d = n - k, amb = n - 1;
    require(d >= 1 && d < amb, "direction_net: need 1 <= n-k < n-1");
    require(delta > 0.0 && delta < 1.0, "direction_net: delta must lie in (0, 1)");
    PointSet cand(Space::grassmannian(d, amb));
    auto push = [&](const Subspace& W) {
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> f = W.frame();
        cand.coords.insert(cand.coords.end(), f.data(), f.data() + f.size());
    };
    if (d == 1 && amb == 2) {
        const int steps = static_cast<int>(std::ceil(4.0 * std::numbers::pi / delta));
        for (int i = 0; i < steps; ++i) {
            const double th = std::numbers::pi * i / steps;
            Mat r(1, 2);
            r << std::cos(th), std::sin(th);
            push(Subspace::span(r));
        }
    } else {
        const double dim = static_cast<double>(d * (amb - d));
        const auto samples = static_cast<std::size_t>(std::clamp(16.0 * std::pow(2.0 / delta, dim), 1000.0, 400000.0));
        for (std::size_t i = 0; i < samples; ++i) push(sample_grassmannian(amb, d, rng));
    }
    return greedy_net(cand, delta).points;
}

std::vector<std::size_t> direction_group(const std::vector<Slab>& family, const PointSet& G_net) {
    require(G_net.space.kind == SpaceKind::Grassmannian && G_net.size() > 0,
            "direction_group: expected a nonempty Grassmannian net");
    std::vector<Subspace> W(G_net.size());
    for (std::size_t i = 0; i < W.size(); ++i) W[i] = subspace_at(G_net, i);
    std::vector<std::size_t> cls(family.size());
    for (std::size_t t = 0; t < family.size(); ++t) {
        const Subspace D = slab_trace_direction(family[t]);
        require(D.ambient() == G_net.space.n && D.dim() == G_net.space.k,
                "direction_group: slab traces do not match the net");
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < W.size(); ++i) {
            const double dist = grassmann_distance(D, W[i]);
            if (dist < best) {
                best = dist;
                cls[t] = i;
            }
        }
    }
    return cls;
}

std::size_t dual_overlap_estimate(const PointSet& G_net, double K, double delta) {
    require(G_net.space.kind == SpaceKind::Grassmannian && G_net.size() > 0,
            "dual_overlap_estimate: expected a nonempty Grassmannian net");
    require(K >= 1.0 && delta > 0.0, "dual_overlap_estimate: need K >= 1 and delta > 0");
    const int amb = G_net.space.n;
    std::vector<Mat> P(G_net.size());
    for (std::size_t i = 0; i < P.size(); ++i) P[i] = subspace_at(G_net, i).proj();
    const double r0 = 0.5 / K;
    constexpr int kRadii = 32;
    std::vector<Vec> dirs;
    if (amb == 2) {
        const int steps = static_cast<int>(std::ceil(16.0 * std::numbers::pi / delta));
        for (int i = 0; i < steps; ++i) {
            const double th = std::numbers::pi * i / steps;
            dirs.push_back((Vec(2) << std::cos(th), std::sin(th)).finished());
        }
    } else {
        const Mat S = sphere_points(amb, 4000);
        for (int i = 0; i < S.rows(); ++i) dirs.push_back(S.row(i).transpose());
    }
    std::vector<std::size_t> best(dirs.size(), 0);
    parallel_for(dirs.size(), [&](std::size_t di) {
        for (int ri = 0; ri < kRadii; ++ri) {
            const double r = r0 * std::pow(1.0 / r0, static_cast<double>(ri) / (kRadii - 1));
            const Vec xi = r * dirs[di];
            std::size_t c = 0;
            for (const auto& Pw : P)
                if ((Pw * xi).norm() <= delta) ++c;
            best[di] = std::max(best[di], c);
        }
    });
    return *std::max_element(best.begin(), best.end());
}

// ------------------------------------------------------------ Falconer energy

double chart_ball_volume(int n, double r) {
    const double m = n - 1;
    const double omega = std::pow(std::numbers::pi, m / 2.0) / std::tgamma(m / 2.0 + 1.0);
    return m * omega * omega * std::tgamma(m) * std::tgamma(m + 1.0) / std::tgamma(2.0 * m + 1.0) *
           std::pow(r, 2.0 * m);
}

FalconerEnergy falconer_energy(const SlabFamilies& TV, const PointSet& H, double delta_abs, int samples_per_line,
                               Rng& rng, bool brute) {
    require(H.space.kind == SpaceKind::AffineLines, "falconer_energy: H must hold affine lines");
    require(samples_per_line >= 1 && delta_abs > 0.0, "falconer_energy: need samples and a positive delta");
    const int m = H.space.n - 1;
    const std::size_t nH = H.size();
    PointSet pts(H.space);
    pts.append(H);
    for (std::size_t i = 0; i < nH; ++i) {
        const Vec c = H.vec(i);
        for (int q = 0; q < samples_per_line; ++q) pts.push(Vec(c + chart_ball_sample(m, delta_abs, rng)));
    }
    const IncidencePairs I = brute ? count_incidences_brute(TV, pts, 0.0) : count_incidences(TV, pts, 0.0);
    FalconerEnergy E;
    E.center_counts.assign(I.per_line_counts.begin(), I.per_line_counts.begin() + static_cast<std::ptrdiff_t>(nH));
    E.sample_counts.assign(I.per_line_counts.begin() + static_cast<std::ptrdiff_t>(nH), I.per_line_counts.end());
    double sq = 0.0;
    for (const std::size_t c : E.sample_counts) sq += static_cast<double>(c) * static_cast<double>(c);
    E.integral = chart_ball_volume(H.space.n, delta_abs) * sq / samples_per_line;
    return E;
}

FalconerReport falconer_slope_experiment(const FalconerParams& p, const std::vector<double>& deltas) {
    require(p.n == 3 && p.k == 2, "falconer_slope_experiment: runs at n = 3, k = 2");
    require(deltas.size() >= 2, "falconer_slope_experiment: need at least two scales");
    require(p.construction == "bush" || p.construction == "product",
            "falconer_slope_experiment: construction must be bush or product");
    require(p.samples_per_line >= 1, "falconer_slope_experiment: need at least one sample per line");
    FalconerReport rep;
    rep.t = p.k * (p.n - p.k);
    const double coarsest = *std::max_element(deltas.begin(), deltas.end());
    std::vector<double> energies;
    for (std::size_t si = 0; si < deltas.size(); ++si) {
        const double delta = deltas[si];
        require(delta >= 1.0 / 32 - 1e-15 && delta <= 0.125 + 1e-15,
                "falconer_slope_experiment: scales must lie in [2^-5, 2^-3]");
        const double dabs = construction::kUnit * delta;
        const NetCloud lines = p.construction == "bush" ? gen_direction_bush(p.n, delta, p.a)
                                                        : gen_product_example(p.n, p.a, delta);
        Rng rng = task_rng(p.seed, si);
        const PointSet Vs = subspace_ball_net(p.n, p.k, p.g_radius, delta, rng);
        SlabFamilies TV(Vs.size());
        std::vector<double> audit(Vs.size(), 0.0);
        parallel_for(Vs.size(), [&](std::size_t v) {
            TV[v] = build_slab_family(lines.points, subspace_at(Vs, v), dabs, p.s,
                                      p.matching_slabs ? std::numeric_limits<double>::infinity() : p.kappa, p.mu);
            Rng r = task_rng(p.seed ^ 0x5a5a5a5aULL, si * 1000003ULL + v);
            audit[v] = frostman_audit(TV[v], dabs, p.s, r);
        });

        const std::size_t H = lines.size();
        Rng srng = task_rng(p.seed ^ 0x3c3c3c3cULL, si);
        const FalconerEnergy E = falconer_energy(TV, lines.points, dabs, p.samples_per_line, srng);
        FalconerRow row;
        row.delta = delta;
        row.num_H = H;
        row.num_V = Vs.size();
        row.integral = E.integral;
        row.min_center_multiplicity =
            H ? *std::min_element(E.center_counts.begin(), E.center_counts.end()) : std::size_t{0};
        const double l = std::log2(1.0 / delta);
        const double floor_m = static_cast<double>(Vs.size()) / (l * l);
        row.lower_bound = chart_ball_volume(p.n, dabs) * static_cast<double>(H) * floor_m * floor_m;
        row.frostman_audit = audit.empty() ? 0.0 : *std::max_element(audit.begin(), audit.end());
        if (p.verify_brute && delta == coarsest) {
            Rng brng = task_rng(p.seed ^ 0x3c3c3c3cULL, si);
            const FalconerEnergy B = falconer_energy(TV, lines.points, dabs, p.samples_per_line, brng, true);
            row.brute_match = B.center_counts == E.center_counts && B.sample_counts == E.sample_counts;
        }
        rep.rows.push_back(row);
        energies.push_back(std::max(row.integral, std::numeric_limits<double>::min()));
    }
    rep.fit = fit_loglog(deltas, energies);
    rep.slope_floor = p.a + 2.0 * rep.t - 2.0 * (p.n - 1) - 0.4;
    rep.t_ceiling = p.k * (p.n - p.k) + p.s - p.a + (p.n - p.k) + 0.4;
    rep.slope_pass = rep.fit.slope >= rep.slope_floor;
    rep.lower_pass = std::all_of(rep.rows.begin(), rep.rows.end(),
                                 [](const FalconerRow& r) { return r.integral >= r.lower_bound; });
    rep.t_consistent = rep.t <= rep.t_ceiling;
    return rep;
}

}  // namespace grassproj
