#include "rect2/synth.hpp"

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <random>

namespace rect2 {

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// projection onto the row span of an orthonormal or general basis (rows x n)
std::vector<double> span_projection(const std::vector<double>& basis, int rows, int n) {
    Mat B = Eigen::Map<const Mat>(basis.data(), rows, n);
    Mat G = B * B.transpose();
    Mat P = B.transpose() * G.inverse() * B;
    P = 0.5 * (P + P.transpose()).eval();
    return std::vector<double>(P.data(), P.data() + n * n);
}

struct Builder {
    SynthResult out;
    Builder(int n, int m, const std::string& kind, std::uint64_t seed) {
        out.V = DiscreteVarifold(n, m);
        out.truth.n = n;
        out.truth.kind = kind;
        out.truth.seed = seed;
    }
    void add(const double* z, const std::vector<double>& P, double w, const double* h, bool tangent, int piece) {
        const int n = out.truth.n;
        out.V.add(z, P.data(), w);
        out.truth.tangent.insert(out.truth.tangent.end(), P.begin(), P.end());
        out.truth.curvature.insert(out.truth.curvature.end(), h, h + n);
        out.truth.has_tangent.push_back(tangent ? 1 : 0);
        out.truth.piece.push_back(piece);
    }
};

// Rings [a, b) covering [0, tmax] with widths from the grading; emit(a, b).
template <class Emit>
void rings(double tmax, const PolarGrading& g, Emit emit) {
    double a = 0.0;
    while (a < tmax - 1e-12) {
        double b = a + g.spacing(a);
        if (b > tmax || tmax - b < 0.3 * g.spacing(b)) b = tmax;
        emit(a, b);
        a = b;
    }
}

// (x, y, area) of a polar lattice of the given radius around the origin
std::vector<std::array<double, 3>> polar_lattice(double radius, const PolarGrading& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<std::array<double, 3>> pts;
    rings(radius, g, [&](double a, double b) {
        const double mid = 0.5 * (a + b);
        const int N = std::max(6, static_cast<int>(std::lround(2.0 * M_PI * mid / (b - a))));
        const double area = M_PI * (b * b - a * a) / N;
        const double phase = U(rng) * 2.0 * M_PI / N;
        for (int j = 0; j < N; ++j) {
            const double t = phase + 2.0 * M_PI * j / N;
            pts.push_back({mid * std::cos(t), mid * std::sin(t), area});
        }
    });
    return pts;
}

void check_positive(const std::map<std::string, double>& p, std::initializer_list<const char*> names) {
    for (const char* k : names)
        if (!(p.at(k) > 0.0)) throw std::invalid_argument(std::string("gen_special: parameter ") + k + " must be positive");
}

PolarGrading grading_from(const std::map<std::string, double>& p) {
    PolarGrading g;
    g.s0 = p.at("s0");
    g.focus = p.at("focus");
    g.growth = p.at("growth");
    g.cap = p.at("cap");
    if (!(g.s0 > 0.0) || g.focus < 0.0 || g.growth < 0.0) throw std::invalid_argument("gen_special: bad grading parameters");
    return g;
}

// sphere in R^3 (m = 2) of radius rho around c; poles along e_3, graded rings start at the south pole
void add_sphere2(Builder& B, const double* c, double rho, const PolarGrading* grading, std::size_t count,
                 std::mt19937_64& rng, int piece) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto emit = [&](double theta, double phi, double w) {
        const double st = std::sin(theta), ct = std::cos(theta), sp = std::sin(phi), cp = std::cos(phi);
        const double nu[3] = {st * cp, st * sp, -ct};  // outward normal, theta measured from the south pole
        const double z[3] = {c[0] + rho * nu[0], c[1] + rho * nu[1], c[2] + rho * nu[2]};
        std::vector<double> P(9);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) P[i * 3 + j] = (i == j ? 1.0 : 0.0) - nu[i] * nu[j];
        const double h[3] = {-2.0 / rho * nu[0], -2.0 / rho * nu[1], -2.0 / rho * nu[2]};
        B.add(z, P, w, h, true, piece);
    };
    if (grading) {
        rings(M_PI * rho, *grading, [&](double a, double b) {
            const double mid = 0.5 * (a + b);
            const double circ = 2.0 * M_PI * rho * std::sin(mid / rho);
            const int N = std::max(3, static_cast<int>(std::lround(circ / (b - a))));
            const double area = 2.0 * M_PI * rho * rho * (std::cos(a / rho) - std::cos(b / rho)) / N;
            const double phase = U(rng) * 2.0 * M_PI / N;
            for (int j = 0; j < N; ++j) emit(mid / rho, phase + 2.0 * M_PI * j / N, area);
        });
    } else {
        const double golden = M_PI * (3.0 - std::sqrt(5.0));
        const double phase = U(rng) * 2.0 * M_PI;
        const double w = 4.0 * M_PI * rho * rho / count;
        for (std::size_t i = 0; i < count; ++i) {
            const double zc = 1.0 - (2.0 * i + 1.0) / count;
            emit(std::acos(-zc), phase + golden * i, w);
        }
    }
}

SynthResult gen_sphere(const std::map<std::string, double>& p, std::uint64_t seed) {
    check_positive(p, {"rho", "count"});
    const double rho = p.at("rho");
    const int m = static_cast<int>(p.at("m"));
    const double c[3] = {p.at("cx"), p.at("cy"), p.at("cz")};
    std::mt19937_64 rng(seed);
    if (m == 1) {
        Builder B(2, 1, "sphere", seed);
        const std::size_t N = static_cast<std::size_t>(p.at("count"));
        const double phase = std::uniform_real_distribution<double>(0.0, 2.0 * M_PI)(rng);
        for (std::size_t i = 0; i < N; ++i) {
            const double t = phase + 2.0 * M_PI * i / N;
            const double nu[2] = {std::cos(t), std::sin(t)};
            const double z[2] = {c[0] + rho * nu[0], c[1] + rho * nu[1]};
            const double h[2] = {-nu[0] / rho, -nu[1] / rho};
            B.add(z, {nu[1] * nu[1], -nu[0] * nu[1], -nu[0] * nu[1], nu[0] * nu[0]}, 2.0 * M_PI * rho / N, h, true, 0);
        }
        return std::move(B.out);
    }
    if (m != 2) throw std::invalid_argument("gen_special(sphere): m must be 1 or 2");
    Builder B(3, 2, "sphere", seed);
    if (p.at("graded") != 0.0) {
        const PolarGrading g = grading_from(p);
        add_sphere2(B, c, rho, &g, 0, rng, 0);
    } else {
        add_sphere2(B, c, rho, nullptr, static_cast<std::size_t>(p.at("count")), rng, 0);
    }
    return std::move(B.out);
}

SynthResult gen_cylinder(const std::map<std::string, double>& p, std::uint64_t seed) {
    check_positive(p, {"rho", "length", "spacing"});
    const double rho = p.at("rho"), L = p.at("length"), s = p.at("spacing");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const int nt = std::max(8, static_cast<int>(std::lround(2.0 * M_PI * rho / s)));
    const int nz = std::max(1, static_cast<int>(std::floor(L / s)));
    const double dz = L / nz, sh_t = U(rng), sh_z = U(rng);
    const double w = 2.0 * M_PI * rho / nt * dz;
    Builder B(3, 2, "cylinder", seed);
    for (int i = 0; i < nz; ++i)
        for (int j = 0; j < nt; ++j) {
            const double t = (j + sh_t) * 2.0 * M_PI / nt;
            const double zz = -0.5 * L + (i + sh_z) * dz;
            const double ct = std::cos(t), st = std::sin(t);
            const double z[3] = {rho * ct, rho * st, zz};
            const double h[3] = {-ct / rho, -st / rho, 0.0};
            std::vector<double> P = {st * st, -st * ct, 0.0, -st * ct, ct * ct, 0.0, 0.0, 0.0, 1.0};
            B.add(z, P, w, h, true, 0);
        }
    return std::move(B.out);
}

SynthResult gen_crossing(const std::map<std::string, double>& p, std::uint64_t seed) {
    check_positive(p, {"angle", "half", "spacing"});
    const double ang = p.at("angle"), half = p.at("half"), s = p.at("spacing");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const int N = static_cast<int>(std::floor(2.0 * half / s));
    Builder B(3, 2, "crossing_planes", seed);
    const double zero[3] = {0.0, 0.0, 0.0};
    for (int piece = 0; piece < 2; ++piece) {
        const double v2[3] = {0.0, piece ? std::cos(ang) : 1.0, piece ? std::sin(ang) : 0.0};
        const std::vector<double> basis = {1.0, 0.0, 0.0, v2[0], v2[1], v2[2]};
        const std::vector<double> P = span_projection(basis, 2, 3);
        const double sh_u = U(rng), sh_v = U(rng);
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                const double u = -half + (i + sh_u) * s, v = -half + (j + sh_v) * s;
                const double z[3] = {u, v * v2[1], v * v2[2]};
                B.add(z, P, s * s, zero, std::fabs(v) >= 0.5 * s, piece);
            }
    }
    return std::move(B.out);
}

// Plane z = 0 on a disc and the sphere of radius rho resting on it at the origin.
// Both pieces near the touch point are Cartesian lattices in the (x1, x2)
// projection (the sphere cap as a graph), the rest of the sphere uses rings.
SynthResult gen_touch(const std::map<std::string, double>& p, std::uint64_t seed) {
    check_positive(p, {"rho", "disc_radius", "spacing", "cap_radius", "coarse"});
    const double rho = p.at("rho"), R = p.at("disc_radius"), s = p.at("spacing"), c = p.at("cap_radius");
    if (!(c < rho)) throw std::invalid_argument("gen_special(tangent_touch): cap_radius must be below rho");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    Builder B(3, 2, "tangent_touch", seed);
    const double zero[3] = {0.0, 0.0, 0.0};
    const std::vector<double> Pflat = {1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0};
    auto lattice = [&](double radius, const std::function<void(double, double)>& f) {
        const double sx = U(rng), sy = U(rng);
        const int N = static_cast<int>(std::ceil(radius / s)) + 1;
        for (int i = -N; i <= N; ++i)
            for (int j = -N; j <= N; ++j) {
                const double x = (i + sx) * s, y = (j + sy) * s;
                if (x * x + y * y <= radius * radius) f(x, y);
            }
    };
    lattice(R, [&](double x, double y) {
        const double z[3] = {x, y, 0.0};
        B.add(z, Pflat, s * s, zero, true, 0);
    });
    auto sphere_point = [&](const double* nu, double w) {
        const double z[3] = {rho * nu[0], rho * nu[1], rho + rho * nu[2]};
        std::vector<double> P(9);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) P[i * 3 + j] = (i == j ? 1.0 : 0.0) - nu[i] * nu[j];
        const double h[3] = {-2.0 / rho * nu[0], -2.0 / rho * nu[1], -2.0 / rho * nu[2]};
        B.add(z, P, w, h, true, 1);
    };
    lattice(c, [&](double x, double y) {
        const double q = std::sqrt(rho * rho - x * x - y * y);
        const double nu[3] = {x / rho, y / rho, -q / rho};
        sphere_point(nu, s * s * rho / q);
    });
    const double t0 = std::asin(c / rho) * rho;
    PolarGrading g;
    g.s0 = p.at("coarse");
    rings(M_PI * rho - t0, g, [&](double a, double b) {
        a += t0;
        b += t0;
        const double mid = 0.5 * (a + b);
        const int N = std::max(3, static_cast<int>(std::lround(2.0 * M_PI * rho * std::sin(mid / rho) / (b - a))));
        const double area = 2.0 * M_PI * rho * rho * (std::cos(a / rho) - std::cos(b / rho)) / N;
        const double phase = U(rng) * 2.0 * M_PI / N;
        for (int j = 0; j < N; ++j) {
            const double th = mid / rho, ph = phase + 2.0 * M_PI * j / N;
            const double nu[3] = {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), -std::cos(th)};
            sphere_point(nu, area);
        }
    });
    return std::move(B.out);
}

SynthResult gen_c1alpha(const std::map<std::string, double>& p, std::uint64_t seed) {
    check_positive(p, {"alpha", "amplitude", "radius", "s0"});
    GraphSampling s;
    s.polar = true;
    s.center = {0.0, 0.0};
    s.radius = p.at("radius");
    s.grading = grading_from(p);
    s.noise = p.at("noise");
    s.seed = seed;
    SynthResult r = gen_graph_varifold(graph_c1alpha(p.at("amplitude"), p.at("alpha")), s);
    r.truth.kind = "c1alpha_model";
    return r;
}

}  // namespace

double PolarGrading::spacing(double t) const {
    double s = s0 + growth * std::max(0.0, t - focus);
    if (cap > 0.0) s = std::min(s, std::max(cap, s0));
    return s;
}

void GroundTruth::write(std::ostream& os) const {
    nlohmann::json hdr;
    hdr["header"] = {{"kind", kind}, {"seed", seed}, {"n", n}, {"count", size()}, {"params", params}};
    os << hdr.dump() << '\n';
    for (std::size_t i = 0; i < size(); ++i) {
        nlohmann::json j;
        j["T"] = std::vector<double>(T(i), T(i) + n * n);
        j["h"] = std::vector<double>(h(i), h(i) + n);
        j["has_tangent"] = has_tangent[i] != 0;
        j["piece"] = piece[i];
        os << j.dump() << '\n';
    }
}

void GroundTruth::write_file(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    write(os);
}

GroundTruth GroundTruth::read(std::istream& is) {
    GroundTruth g;
    std::string line;
    std::size_t count = 0;
    try {
        if (!std::getline(is, line)) throw std::runtime_error("ground truth: empty input");
        const auto hdr = nlohmann::json::parse(line).at("header");
        g.kind = hdr.at("kind").get<std::string>();
        g.seed = hdr.at("seed").get<std::uint64_t>();
        g.n = hdr.at("n").get<int>();
        count = hdr.at("count").get<std::size_t>();
        g.params = hdr.at("params").get<std::map<std::string, double>>();
        const std::size_t n = static_cast<std::size_t>(g.n);
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            const auto j = nlohmann::json::parse(line);
            const auto T = j.at("T").get<std::vector<double>>();
            const auto h = j.at("h").get<std::vector<double>>();
            if (T.size() != n * n || h.size() != n) throw std::runtime_error("ground truth: record size mismatch");
            g.tangent.insert(g.tangent.end(), T.begin(), T.end());
            g.curvature.insert(g.curvature.end(), h.begin(), h.end());
            g.has_tangent.push_back(j.at("has_tangent").get<bool>() ? 1 : 0);
            g.piece.push_back(j.at("piece").get<int>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("ground truth: malformed input (") + e.what() + ")");
    }
    if (g.size() != count) throw std::runtime_error("ground truth: record count does not match header");
    return g;
}

GroundTruth GroundTruth::read_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read(is);
}

SynthResult gen_graph_varifold(const GraphFunction& u, const GraphSampling& s) {
    const int m = u.m, k = u.k, n = m + k;
    if (m < 1 || k < 1 || !u.eval) throw std::invalid_argument("gen_graph_varifold: bad graph function");
    if (s.Q < 1) throw std::invalid_argument("gen_graph_varifold: Q must be >= 1");
    if (s.noise < 0.0) throw std::invalid_argument("gen_graph_varifold: noise must be >= 0");
    std::mt19937_64 rng(s.seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);

    // base points with their parameter-space cell areas
    std::vector<double> xs, area;
    if (s.polar) {
        if (m != 2) throw std::invalid_argument("gen_graph_varifold: polar sampling needs m = 2");
        if (!(s.radius > 0.0) || s.center.size() != 2) throw std::invalid_argument("gen_graph_varifold: bad polar region");
        for (const auto& q : polar_lattice(s.radius, s.grading, rng)) {
            xs.push_back(s.center[0] + q[0]);
            xs.push_back(s.center[1] + q[1]);
            area.push_back(q[2]);
        }
    } else {
        if (static_cast<int>(s.lo.size()) != m || static_cast<int>(s.hi.size()) != m || !(s.spacing > 0.0))
            throw std::invalid_argument("gen_graph_varifold: bad lattice region");
        std::vector<double> shift(m);
        std::vector<int> cnt(m);
        std::size_t total = 1;
        for (int a = 0; a < m; ++a) {
            shift[a] = U(rng);
            const double ext = s.hi[a] - s.lo[a];
            if (!(ext > 0.0)) throw std::invalid_argument("gen_graph_varifold: empty region");
            cnt[a] = std::max(0, static_cast<int>(std::floor(ext / s.spacing - shift[a])) + 1);
            total *= cnt[a];
        }
        const double cell = std::pow(s.spacing, m);
        std::vector<int> mi(m, 0);
        for (std::size_t t = 0; t < total; ++t) {
            std::size_t r = t;
            for (int a = m - 1; a >= 0; --a) {
                mi[a] = static_cast<int>(r % cnt[a]);
                r /= cnt[a];
            }
            for (int a = 0; a < m; ++a) xs.push_back(s.lo[a] + (mi[a] + shift[a]) * s.spacing);
            area.push_back(cell);
        }
    }

    Builder B(n, m, "graph", s.seed);
    B.out.truth.params = {{"Q", s.Q}, {"offset", s.offset}, {"noise", s.noise}};
    const std::size_t N = area.size();
    std::vector<double> uv(k), Du(k * m), D2u(k * m * m), z(n), basis(m * n), h(n), v(n);
    for (int j = 0; j < s.Q; ++j)
        for (std::size_t t = 0; t < N; ++t) {
            const double* x = &xs[t * m];
            u.eval(x, uv.data(), Du.data(), D2u.data());
            for (int a = 0; a < m; ++a) z[a] = x[a];
            for (int c = 0; c < k; ++c) z[m + c] = uv[c] + (c == 0 ? j * s.offset : 0.0);
            if (s.noise > 0.0)
                for (int c = 0; c < k; ++c) z[m + c] += s.noise * (2.0 * U(rng) - 1.0);
            std::fill(basis.begin(), basis.end(), 0.0);
            for (int i = 0; i < m; ++i) {
                basis[i * n + i] = 1.0;
                for (int c = 0; c < k; ++c) basis[i * n + m + c] = Du[c * m + i];
            }
            const std::vector<double> P = span_projection(basis, m, n);
            // metric g_ij = delta_ij + Du_i . Du_j, area element sqrt(det g)
            Mat G = Mat::Identity(m, m);
            for (int a = 0; a < m; ++a)
                for (int b = 0; b < m; ++b)
                    for (int c = 0; c < k; ++c) G(a, b) += Du[c * m + a] * Du[c * m + b];
            const Mat Gi = G.inverse();
            // h = (I - P)(0, g^{ij} d_ij u)
            std::fill(v.begin(), v.end(), 0.0);
            for (int c = 0; c < k; ++c)
                for (int a = 0; a < m; ++a)
                    for (int b = 0; b < m; ++b) v[m + c] += Gi(a, b) * D2u[c * m * m + a * m + b];
            for (int a = 0; a < n; ++a) {
                double pv = 0.0;
                for (int b = 0; b < n; ++b) pv += P[a * n + b] * v[b];
                h[a] = v[a] - pv;
            }
            B.add(z.data(), P, std::sqrt(G.determinant()) * area[t], h.data(), true, j);
        }
    return std::move(B.out);
}

std::map<std::string, double> special_defaults(const std::string& kind) {
    if (kind == "sphere")
        return {{"rho", 1.0},  {"m", 2.0},      {"count", 20000.0}, {"graded", 0.0}, {"s0", 0.01}, {"focus", 0.1},
                {"growth", 0.1}, {"cap", 0.05}, {"cx", 0.0},        {"cy", 0.0},     {"cz", 0.0}};
    if (kind == "cylinder") return {{"rho", 1.0}, {"length", 2.0}, {"spacing", 0.02}};
    if (kind == "crossing_planes") return {{"angle", M_PI / 2.0}, {"half", 1.0}, {"spacing", 0.02}};
    if (kind == "tangent_touch")
        return {{"rho", 1.0}, {"disc_radius", 0.8}, {"spacing", 0.006}, {"cap_radius", 0.8}, {"coarse", 0.05}};
    if (kind == "c1alpha_model")
        return {{"alpha", 0.5}, {"amplitude", 0.2}, {"radius", 1.0}, {"s0", 0.001},
                {"focus", 0.03}, {"growth", 0.1},    {"cap", 0.03},   {"noise", 0.0}};
    throw std::invalid_argument("gen_special: unknown kind '" + kind + "'");
}

SynthResult gen_special(const std::string& kind, const std::map<std::string, double>& params, std::uint64_t seed) {
    std::map<std::string, double> p = special_defaults(kind);
    for (const auto& [key, val] : params) {
        if (!p.count(key)) throw std::invalid_argument("gen_special(" + kind + "): unknown parameter '" + key + "'");
        if (!std::isfinite(val)) throw std::invalid_argument("gen_special(" + kind + "): parameter '" + key + "' not finite");
        p[key] = val;
    }
    SynthResult r;
    if (kind == "sphere")
        r = gen_sphere(p, seed);
    else if (kind == "cylinder")
        r = gen_cylinder(p, seed);
    else if (kind == "crossing_planes")
        r = gen_crossing(p, seed);
    else if (kind == "tangent_touch")
        r = gen_touch(p, seed);
    else
        r = gen_c1alpha(p, seed);
    r.truth.params = p;
    r.truth.seed = seed;
    return r;
}

GraphFunction graph_plane(int m) {
    GraphFunction f;
    f.m = m;
    f.k = 1;
    f.eval = [m](const double*, double* u, double* Du, double* D2u) {
        u[0] = 0.0;
        std::fill(Du, Du + m, 0.0);
        std::fill(D2u, D2u + m * m, 0.0);
    };
    return f;
}

GraphFunction graph_c1alpha(double amplitude, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("graph_c1alpha: alpha must be in (0, 1]");
    GraphFunction f;
    f.m = 2;
    f.k = 1;
    f.eval = [amplitude, alpha](const double* x, double* u, double* Du, double* D2u) {
        const double t = std::fabs(x[0]), sg = x[0] < 0.0 ? -1.0 : 1.0;
        u[0] = amplitude * std::pow(t, 1.0 + alpha);
        Du[0] = amplitude * (1.0 + alpha) * std::pow(t, alpha) * sg;
        Du[1] = 0.0;
        std::fill(D2u, D2u + 4, 0.0);
        // the second derivative is unbounded on x_1 = 0; the line itself has measure zero
        if (t > 0.0) D2u[0] = amplitude * (1.0 + alpha) * alpha * std::pow(t, alpha - 1.0);
    };
    return f;
}

GraphFunction graph_sine(int m, double eps) {
    if (m < 1 || m > 2) throw std::invalid_argument("graph_sine: m must be 1 or 2");
    GraphFunction f;
    f.m = m;
    f.k = 1;
    f.eval = [m, eps](const double* x, double* u, double* Du, double* D2u) {
        u[0] = eps * std::sin(x[0]);
        std::fill(Du, Du + m, 0.0);
        std::fill(D2u, D2u + m * m, 0.0);
        Du[0] = eps * std::cos(x[0]);
        D2u[0] = -eps * std::sin(x[0]);
    };
    return f;
}

}  // namespace rect2
