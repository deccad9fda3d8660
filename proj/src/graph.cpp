#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <map>
#include <numeric>
#include <sstream>

#include "rect2/elliptic.hpp"
#include "rect2/kernels.hpp"
#include "rect2/parallel.hpp"
#include "rect2/varifold.hpp"

namespace rect2 {

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// projection onto the span of the rows of B (rows x n)
Mat row_span_projection(const Mat& B) {
    Eigen::ColPivHouseholderQR<Mat> qr(B.transpose());
    const int r = static_cast<int>(B.rows());
    Mat Q = qr.householderQ() * Mat::Identity(B.cols(), r);
    Mat P = Q * Q.transpose();
    return 0.5 * (P + P.transpose());
}

// projection onto im DG for DG(e_i) = pi1^* e_i + pi2^* Dg e_i; Dg laid out [c*m + i]
Mat graph_plane(const GraphFrame& f, const double* Dg) {
    const int m = f.m, n = f.n, k = n - m;
    Mat B(m, n);
    for (int i = 0; i < m; ++i)
        for (int a = 0; a < n; ++a) {
            double v = f.pi1[i * n + a];
            for (int c = 0; c < k; ++c) v += Dg[c * m + i] * f.pi2[c * n + a];
            B(i, a) = v;
        }
    return row_span_projection(B);
}

// nodes whose centered difference stencil lies in K, so Dg there uses only extracted values
std::vector<unsigned char> stencil_in_K(const GridDomain& d, const std::vector<unsigned char>& K) {
    std::vector<unsigned char> out(d.size(), 0);
    for (std::size_t idx = 0; idx < d.size(); ++idx) {
        if (!K[idx]) continue;
        bool ok = true;
        for (int a = 0; a < d.dim() && ok; ++a)
            for (int dir : {-1, 1}) {
                const std::size_t nb = d.neighbor(idx, a, dir);
                if (nb == GridDomain::npos || !K[nb]) ok = false;
            }
        out[idx] = ok ? 1 : 0;
    }
    return out;
}

}  // namespace

GraphFrame GraphFrame::standard(int m, int n) {
    if (m < 1 || m >= n) throw std::invalid_argument("GraphFrame: need 1 <= m < n");
    GraphFrame f;
    f.m = m;
    f.n = n;
    f.pi1.assign(m * n, 0.0);
    f.pi2.assign((n - m) * n, 0.0);
    for (int i = 0; i < m; ++i) f.pi1[i * n + i] = 1.0;
    for (int i = 0; i < n - m; ++i) f.pi2[i * n + m + i] = 1.0;
    return f;
}

GraphFrame GraphFrame::from_plane(const std::vector<double>& S, int m) {
    const int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(S.size()))));
    if (static_cast<std::size_t>(n) * n != S.size() || m < 1 || m >= n)
        throw std::invalid_argument("GraphFrame::from_plane: bad plane");
    Mat A = Eigen::Map<const Mat>(S.data(), n, n);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (A + A.transpose()));
    GraphFrame f;
    f.m = m;
    f.n = n;
    for (int c = n - 1; c >= n - m; --c)
        for (int a = 0; a < n; ++a) f.pi1.push_back(es.eigenvectors()(a, c));
    for (int c = n - m - 1; c >= 0; --c)
        for (int a = 0; a < n; ++a) f.pi2.push_back(es.eigenvectors()(a, c));
    f.validate();
    return f;
}

void GraphFrame::validate() const {
    const int k = n - m;
    if (m < 1 || k < 1 || pi1.size() != static_cast<std::size_t>(m) * n || pi2.size() != static_cast<std::size_t>(k) * n)
        throw std::invalid_argument("GraphFrame: dimension mismatch");
    auto dot = [&](const double* a, const double* b) { return kernels::dot(a, b, n); };
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            if (std::fabs(dot(&pi1[i * n], &pi1[j * n]) - (i == j)) > 1e-10)
                throw std::invalid_argument("GraphFrame: pi1 rows not orthonormal");
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            if (std::fabs(dot(&pi2[i * n], &pi2[j * n]) - (i == j)) > 1e-10)
                throw std::invalid_argument("GraphFrame: pi2 rows not orthonormal");
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < m; ++j)
            if (std::fabs(dot(&pi2[i * n], &pi1[j * n])) > 1e-10)
                throw std::invalid_argument("GraphFrame: pi2 pi1^* must vanish");
}

void GraphFrame::project1(const double* z, double* x) const {
    for (int i = 0; i < m; ++i) x[i] = kernels::dot(&pi1[i * n], z, n);
}

void GraphFrame::project2(const double* z, double* y) const {
    for (int i = 0; i < n - m; ++i) y[i] = kernels::dot(&pi2[i * n], z, n);
}

void GraphFrame::lift(const double* x, const double* y, double* z) const {
    for (int a = 0; a < n; ++a) {
        double v = 0.0;
        for (int i = 0; i < m; ++i) v += pi1[i * n + a] * x[i];
        for (int i = 0; i < n - m; ++i) v += pi2[i * n + a] * y[i];
        z[a] = v;
    }
}

std::string GraphExtraction::to_json() const {
    nlohmann::json j;
    std::size_t nk = 0;
    for (auto v : K) nk += v != 0;
    j["m"] = frame.m;
    j["n"] = frame.n;
    j["Q"] = Q;
    j["nodes"] = g.size();
    j["spacing"] = g.domain.spacing();
    j["K_nodes"] = nk;
    j["coverage"] = coverage;
    j["ambiguous_fraction"] = ambiguous_fraction;
    j["max_lip_on_K"] = max_lip_on_K;
    j["max_tangent_angle_deg"] = max_tangent_angle_deg;
    return j.dump(2);
}

GraphExtraction graph_extract(const DiscreteVarifold& V, const GraphFrame& frame, const GraphExtractOptions& opt,
                              const std::vector<double>& lo_in, const std::vector<double>& hi_in) {
    frame.validate();
    const int n = V.ambient(), m = V.dim(), k = n - m;
    if (frame.n != n || frame.m != m) throw std::invalid_argument("graph_extract: frame does not match varifold");
    if (V.empty()) throw AnalysisError("graph_extract: empty varifold");
    if (!(opt.L > 0.0)) throw std::invalid_argument("graph_extract: L must be positive");
    const std::size_t N = V.size();

    std::vector<double> xs(N * m), ys(N * k);
    for (std::size_t i = 0; i < N; ++i) {
        frame.project1(V.z(i), &xs[i * m]);
        frame.project2(V.z(i), &ys[i * k]);
    }
    std::vector<double> wsort(V.size());
    for (std::size_t i = 0; i < N; ++i) wsort[i] = V.w(i);
    std::nth_element(wsort.begin(), wsort.begin() + N / 2, wsort.end());
    const double ell = std::pow(wsort[N / 2], 1.0 / m);
    const double h = opt.spacing > 0.0 ? opt.spacing : 2.0 * ell;
    const double gap = opt.gap > 0.0 ? opt.gap : 4.0 * ell;

    std::vector<double> lo = lo_in, hi = hi_in;
    if (lo.empty() || hi.empty()) {
        lo.assign(m, kInf);
        hi.assign(m, -kInf);
        for (std::size_t i = 0; i < N; ++i)
            for (int a = 0; a < m; ++a) {
                lo[a] = std::min(lo[a], xs[i * m + a]);
                hi[a] = std::max(hi[a], xs[i * m + a]);
            }
    }
    if (static_cast<int>(lo.size()) != m || static_cast<int>(hi.size()) != m)
        throw std::invalid_argument("graph_extract: box dimension mismatch");
    std::vector<double> extent(m);
    for (int a = 0; a < m; ++a) extent[a] = hi[a] - lo[a];
    GridDomain d = GridDomain::from_extent(lo, extent, h);
    for (int a = 0; a < m; ++a)
        if (d.counts()[a] < 5) throw AnalysisError("graph_extract: region spans fewer than 5 grid nodes");

    // particles per node support: tent (cloud in cell) deposit onto the 2^m surrounding nodes
    std::vector<std::vector<std::uint32_t>> cell(d.size());
    {
        std::vector<long> base(m), mk(m);
        for (std::size_t i = 0; i < N; ++i) {
            bool inside = true;
            for (int a = 0; a < m; ++a) {
                base[a] = static_cast<long>(std::floor((xs[i * m + a] - d.origin()[a]) / h));
                if (base[a] < -1 || base[a] >= d.counts()[a]) inside = false;
            }
            if (!inside) continue;
            for (int corner = 0; corner < (1 << m); ++corner) {
                for (int a = 0; a < m; ++a) mk[a] = base[a] + ((corner >> a) & 1);
                if (!d.in_range(mk.data())) continue;
                std::vector<int> mi2(mk.begin(), mk.end());
                cell[d.linear_index(mi2.data())].push_back(static_cast<std::uint32_t>(i));
            }
        }
    }
    auto tent = [&](std::size_t i, const double* node) {
        double t = 1.0;
        for (int a = 0; a < m; ++a) t *= std::max(0.0, 1.0 - std::fabs(xs[i * m + a] - node[a]) / h);
        return t;
    };

    std::vector<int> mi(m);
    auto interior = [&](std::size_t idx) {
        d.multi_index(idx, mi.data());
        for (int a = 0; a < m; ++a)
            if (mi[a] < 1 || mi[a] > d.counts()[a] - 2) return false;
        return true;
    };

    GraphExtraction ex;
    ex.frame = frame;
    ex.g = SampledField(d, k);
    ex.K.assign(d.size(), 0);
    ex.theta.assign(d.size(), 0.0);
    ex.sheets.assign(d.size(), 0);
    ex.spread.assign(d.size(), 0.0);
    std::vector<int> qnode(d.size(), 0);
    std::vector<unsigned char> ambiguous(d.size(), 0), inner(d.size(), 0);
    for (std::size_t idx = 0; idx < d.size(); ++idx) inner[idx] = interior(idx) ? 1 : 0;
    const double cell_area = d.cell_volume();

    parallel_for(d.size(), [&](std::size_t idx) {
        const auto& parts = cell[idx];
        double* gv = ex.g.at(idx);
        std::fill(gv, gv + k, 0.0);
        if (parts.empty()) return;
        std::vector<double> node(m);
        d.coords(idx, node.data());
        const std::size_t np = parts.size();
        std::vector<double> yc(np * k), pw(np);
        bool steep = false;
        for (std::size_t t = 0; t < np; ++t) {
            const std::size_t i = parts[t];
            Eigen::Map<const Mat> P(V.P(i), n, n);
            Eigen::Map<const Mat> p1(frame.pi1.data(), m, n), p2(frame.pi2.data(), k, n);
            const Mat B1 = p1 * P * p1.transpose();
            const Mat B2 = p2 * P * p1.transpose();
            const double det = B1.determinant();
            if (!(det > 1e-12)) {
                steep = true;
                pw[t] = 0.0;
                for (int c = 0; c < k; ++c) yc[t * k + c] = ys[i * k + c];
                continue;
            }
            const Mat A = B2 * B1.inverse();
            for (int c = 0; c < k; ++c) {
                double v = ys[i * k + c];
                for (int a = 0; a < m; ++a) v -= A(c, a) * (xs[i * m + a] - node[a]);
                yc[t * k + c] = v;
            }
            pw[t] = V.w(i) * std::sqrt(det) * tent(i, node.data());
        }
        // single linkage clustering of the corrected heights
        std::vector<std::size_t> label(np);
        std::iota(label.begin(), label.end(), 0);
        std::function<std::size_t(std::size_t)> find = [&](std::size_t a) {
            while (label[a] != a) a = label[a] = label[label[a]];
            return a;
        };
        if (k == 1) {
            std::vector<std::size_t> ord(np);
            std::iota(ord.begin(), ord.end(), 0);
            std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return yc[a] < yc[b]; });
            for (std::size_t t = 1; t < np; ++t)
                if (yc[ord[t]] - yc[ord[t - 1]] <= gap) label[find(ord[t])] = find(ord[t - 1]);
        } else {
            for (std::size_t a = 0; a < np; ++a)
                for (std::size_t b = a + 1; b < np; ++b)
                    if (std::sqrt(kernels::dist_sq(&yc[a * k], &yc[b * k], k)) <= gap) label[find(b)] = find(a);
        }
        std::map<std::size_t, std::pair<double, std::vector<double>>> sheets;
        for (std::size_t t = 0; t < np; ++t) {
            auto& s = sheets[find(t)];
            if (s.second.empty()) s.second.assign(k, 0.0);
            s.first += pw[t];
            for (int c = 0; c < k; ++c) s.second[c] += pw[t] * yc[t * k + c];
        }
        double total = 0.0;
        int q = 0;
        bool amb = steep || (opt.Q_hint > 0 && static_cast<int>(sheets.size()) > opt.Q_hint);
        std::vector<double> center(k, 0.0), fallback(k, 0.0);
        for (auto& [key, s] : sheets) {
            (void)key;
            const double th = s.first / cell_area;
            total += th;
            if (s.first > 0.0)
                for (int c = 0; c < k; ++c) s.second[c] /= s.first;
            const long qj = std::lround(th);
            if (qj < 1 || std::fabs(th - qj) > opt.theta_tol) amb = true;
            q += static_cast<int>(std::max(0L, qj));
            for (int c = 0; c < k; ++c) {
                center[c] += qj * s.second[c];
                fallback[c] += th * s.second[c];
            }
        }
        double spread = 0.0;
        for (auto& [key, sh] : sheets) {
            (void)key;
            if (sh.first > 0.0) {
                double dd = 0.0;
                for (int c = 0; c < k; ++c) dd += sqr(sh.second[c] - (!amb && q > 0 ? center[c] / q : fallback[c] / total));
                spread = std::max(spread, std::sqrt(dd));
            }
        }
        ex.spread[idx] = spread;
        ex.theta[idx] = total;
        ex.sheets[idx] = static_cast<int>(sheets.size());
        qnode[idx] = q;
        ambiguous[idx] = amb ? 1 : 0;
        for (int c = 0; c < k; ++c) gv[c] = (!amb && q > 0) ? center[c] / q : (total > 0.0 ? fallback[c] / total : 0.0);
    });

    std::size_t occupied = 0, amb_count = 0;
    std::map<int, std::size_t> qcount;
    for (std::size_t idx = 0; idx < d.size(); ++idx) {
        if (!inner[idx] || cell[idx].empty()) continue;
        ++occupied;
        if (ambiguous[idx])
            ++amb_count;
        else
            ++qcount[qnode[idx]];
    }
    if (occupied == 0) throw AnalysisError("graph_extract: no occupied interior nodes");
    ex.ambiguous_fraction = static_cast<double>(amb_count) / static_cast<double>(occupied);
    if (ex.ambiguous_fraction > opt.max_ambiguous) {
        std::ostringstream os;
        os << "graph_extract: sheet clustering ambiguous at " << amb_count << " of " << occupied
           << " occupied nodes (fraction " << ex.ambiguous_fraction << " > " << opt.max_ambiguous << ")";
        throw AnalysisError(os.str());
    }
    if (opt.Q_hint > 0) {
        ex.Q = opt.Q_hint;
    } else {
        std::size_t best = 0;
        for (auto [q, c] : qcount)
            if (c > best) {
                best = c;
                ex.Q = q;
            }
    }
    if (ex.Q < 1) throw AnalysisError("graph_extract: no multiplicity detected");

    std::vector<unsigned char> cand(d.size(), 0);
    for (std::size_t idx = 0; idx < d.size(); ++idx)
        cand[idx] = inner[idx] && !cell[idx].empty() && !ambiguous[idx] && qnode[idx] == ex.Q;
    std::vector<double> lip(d.size(), 0.0);
    for (std::size_t idx = 0; idx < d.size(); ++idx) {
        if (!cand[idx]) continue;
        for (int a = 0; a < m; ++a)
            for (int dir : {-1, 1}) {
                const std::size_t nb = d.neighbor(idx, a, dir);
                if (nb == GridDomain::npos || !cand[nb]) continue;
                const double diff = std::sqrt(kernels::dist_sq(ex.g.at(idx), ex.g.at(nb), k)) / h;
                lip[idx] = std::max(lip[idx], diff);
            }
        ex.K[idx] = lip[idx] <= opt.L ? 1 : 0;
    }
    std::vector<std::size_t> kn;
    for (std::size_t idx = 0; idx < d.size(); ++idx)
        if (ex.K[idx]) kn.push_back(idx);
    if (kn.empty()) throw AnalysisError("graph_extract: K is empty (no unambiguous node with Lip <= L)");
    ex.coverage = static_cast<double>(kn.size()) / static_cast<double>(occupied);
    for (std::size_t idx : kn)
        for (int a = 0; a < m; ++a) {
            const std::size_t nb = d.neighbor(idx, a, 1);
            if (nb != GridDomain::npos && ex.K[nb])
                ex.max_lip_on_K =
                    std::max(ex.max_lip_on_K, std::sqrt(kernels::dist_sq(ex.g.at(idx), ex.g.at(nb), k)) / h);
        }

    // coordinatewise inf-convolution off K
    const double Lc = opt.L / std::sqrt(static_cast<double>(k));
    std::vector<double> kx(kn.size() * m);
    for (std::size_t t = 0; t < kn.size(); ++t) d.coords(kn[t], &kx[t * m]);
    parallel_for(d.size(), [&](std::size_t idx) {
        if (ex.K[idx]) return;
        std::vector<double> x(m);
        d.coords(idx, x.data());
        double* gv = ex.g.at(idx);
        for (int c = 0; c < k; ++c) gv[c] = kInf;
        for (std::size_t t = 0; t < kn.size(); ++t) {
            const double dist = std::sqrt(kernels::dist_sq(x.data(), &kx[t * m], m));
            const double* gk = ex.g.at(kn[t]);
            for (int c = 0; c < k; ++c) gv[c] = std::min(gv[c], gk[c] + Lc * dist);
        }
    });
    std::fill(ex.g.mask.begin(), ex.g.mask.end(), 1);

    ex.T = apply_EL(area_integrand(m, k), ex.g, false).flux_form;

    const SampledField Dg = weak_gradient(ex.g, 1);
    const auto inK = stencil_in_K(d, ex.K);
    std::vector<double> angle(d.size(), 0.0);
    parallel_for(kn.size(), [&](std::size_t t) {
        const std::size_t idx = kn[t];
        if (!inK[idx] || !Dg.valid(idx)) return;
        const Mat PG = graph_plane(frame, Dg.at(idx));
        const Mat NG = Mat::Identity(n, n) - PG;
        double worst = 0.0;
        for (std::uint32_t i : cell[idx]) {
            Eigen::Map<const Mat> P(V.P(i), n, n);
            const Mat E = NG * P;
            Eigen::JacobiSVD<Mat> svd(E);
            worst = std::max(worst, svd.singularValues()(0));
        }
        angle[idx] = std::asin(std::min(1.0, worst)) * 180.0 / M_PI;
    });
    for (double a : angle) ex.max_tangent_angle_deg = std::max(ex.max_tangent_angle_deg, a);
    return ex;
}

TiltGraphReport tilt_vs_graph_check(const DiscreteVarifold& V, const GraphExtraction& ex,
                                    const std::vector<std::vector<double>>& points, const std::vector<double>& radii,
                                    double beta, double r_exp) {
    const GraphFrame& f = ex.frame;
    const int m = f.m, n = f.n, k = n - m;
    if (!(r_exp >= 1.0)) throw std::invalid_argument("tilt_vs_graph_check: exponent must be >= 1");
    const GridDomain& d = ex.g.domain;
    const SampledField Dg = weak_gradient(ex.g, 1);
    const auto inK = stencil_in_K(d, ex.K);
    const int nc = k * m;
    TiltGraphReport rep;
    std::vector<double> y(k), z(n), x(m), diff(nc), xi(m), yi(k);
    for (const auto& p : points) {
        if (static_cast<int>(p.size()) != m) throw std::invalid_argument("tilt_vs_graph_check: point dimension mismatch");
        const std::size_t node = d.nearest_node(p.data());
        if (node == GridDomain::npos || !inK[node] || !Dg.valid(node)) continue;
        d.coords(node, x.data());
        const double* D0 = Dg.at(node);
        for (int c = 0; c < k; ++c) y[c] = ex.g.at(node)[c];
        f.lift(x.data(), y.data(), z.data());
        const Mat R = graph_plane(f, D0);
        for (double s : radii) {
            TiltGraphRow row;
            row.x = x;
            row.s = s;
            const double scale = std::pow(s, -beta - m / r_exp);
            double acc = 0.0;
            for (std::size_t nb : ball_nodes(d, Ball{x, s})) {
                if (!inK[nb] || !Dg.valid(nb)) continue;
                for (int c = 0; c < nc; ++c) diff[c] = Dg.at(nb)[c] - D0[c];
                acc += std::pow(std::sqrt(kernels::sum_sq(diff.data(), nc)), r_exp);
            }
            row.lhs = scale * std::pow(acc * d.cell_volume(), 1.0 / r_exp);
            // V over the cylinder above B(x, s) reaching s beyond the outermost sheet
            const double height = s + ex.spread[node];
            double tilt = 0.0;
            V.query_ball(z.data(), std::hypot(s, height), [&](std::size_t i, double) {
                f.project1(V.z(i), xi.data());
                f.project2(V.z(i), yi.data());
                if (kernels::dist_sq(xi.data(), x.data(), m) > s * s) return;
                if (kernels::dist_sq(yi.data(), y.data(), k) > height * height) return;
                tilt += V.w(i) * std::pow(std::sqrt(kernels::dist_sq(V.P(i), R.data(), n * n)), r_exp);
            });
            row.rhs = 2.0 * std::sqrt(static_cast<double>(m)) * scale * std::pow(tilt, 1.0 / r_exp);
            rep.max_ratio = std::max(rep.max_ratio, row.ratio());
            rep.rows.push_back(row);
        }
    }
    return rep;
}

}  // namespace rect2
