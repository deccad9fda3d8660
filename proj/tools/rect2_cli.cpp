// rect2: command-line driver for the synthetic corpora and analyses.
#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "rect2/crit.hpp"
#include "rect2/decay.hpp"
#include "rect2/elliptic.hpp"
#include "rect2/kernels.hpp"
#include "rect2/parallel.hpp"
#include "rect2/report.hpp"
#include "rect2/synth.hpp"
#include "rect2/varifold.hpp"

using namespace rect2;
using json = nlohmann::json;

namespace {

// usage errors exit 1, analysis-quality failures exit 2
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config_path;
    std::string out = "rect2_out";
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 0;
};

// defaults overlaid with the user config; unknown keys are rejected (nested objects checked recursively
// except free-form "params")
void overlay(json& base, const json& user, const std::string& path) {
    if (!user.is_object()) throw UsageError("config: " + (path.empty() ? std::string("top level") : path) + " must be an object");
    for (auto it = user.begin(); it != user.end(); ++it) {
        const std::string key = path.empty() ? it.key() : path + "." + it.key();
        if (!base.contains(it.key())) throw UsageError("config: unknown key '" + key + "'");
        json& slot = base[it.key()];
        if (slot.is_object() && it.key() != "params")
            overlay(slot, it.value(), key);
        else
            slot = it.value();
    }
}

json load_config(const Common& c, json defaults) {
    if (!c.config_path.empty()) {
        std::ifstream is(c.config_path);
        if (!is) throw UsageError("config: cannot open " + c.config_path);
        json user;
        try {
            is >> user;
        } catch (const json::exception& e) {
            throw UsageError(std::string("config: not valid JSON (") + e.what() + ")");
        }
        overlay(defaults, user, "");
    }
    if (c.seed_given) defaults["seed"] = c.seed;
    return defaults;
}

double get_pos(const json& cfg, const char* key) {
    if (!cfg.at(key).is_number()) throw UsageError(std::string("config: ") + key + " must be a number");
    const double v = cfg.at(key).get<double>();
    if (!(v > 0.0) || !std::isfinite(v)) throw UsageError(std::string("config: ") + key + " must be positive");
    return v;
}

std::vector<double> get_vec(const json& cfg, const char* key) {
    try {
        return cfg.at(key).get<std::vector<double>>();
    } catch (const json::exception&) {
        throw UsageError(std::string("config: ") + key + " must be a list of numbers");
    }
}

std::vector<double> get_radii_key(const json& cfg, const char* key) {
    auto r = get_vec(cfg, key);
    if (r.empty()) throw UsageError(std::string("config: ") + key + " must not be empty");
    for (double v : r)
        if (!(v > 0.0)) throw UsageError(std::string("config: ") + key + " must be positive");
    return r;
}

std::vector<double> get_radii(const json& cfg) { return get_radii_key(cfg, "radii"); }

std::vector<std::vector<double>> lattice_points(int per_axis, double half, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jit(-0.25, 0.25);
    std::vector<std::vector<double>> pts;
    const double step = 2.0 * half / per_axis;
    for (int i = 0; i < per_axis; ++i)
        for (int j = 0; j < per_axis; ++j)
            pts.push_back({-half + (i + 0.5 + jit(rng)) * step, -half + (j + 0.5 + jit(rng)) * step});
    return pts;
}

Integrand make_integrand(const json& cfg, int m, int k) {
    const std::string name = cfg.at("integrand").get<std::string>();
    if (name == "dirichlet") return dirichlet_integrand(m, k);
    if (name == "area") return area_integrand(m, k);
    if (name == "area_cutoff") return cutoff_integrand(area_integrand(m, k), std::vector<double>(m * k, 0.0), get_pos(cfg, "delta"));
    throw UsageError("config: integrand must be dirichlet, area or area_cutoff");
}

// closed-form scalar fields on R^2
std::function<double(const double*)> preset_field(const std::string& name) {
    if (name == "harmonic") return [](const double* x) { return x[0] * x[0] - x[1] * x[1] + 0.5 * x[0] * x[1] + x[0]; };
    if (name == "smooth")
        return [](const double* x) {
            const double r2 = x[0] * x[0] + x[1] * x[1];
            return std::sin(x[0]) * std::cos(x[1]) + 0.1 * r2 * r2;
        };
    if (name == "graph") return [](const double* x) { return 0.15 * std::sin(x[0] + 0.2) * std::cos(x[1]) + 0.05 * x[0] * x[1]; };
    if (name == "abs") return [](const double* x) { return std::fabs(x[0]); };
    if (name == "lipschitz_density")
        return [](const double* x) { return 1.0 + 0.5 * std::sin(x[0]) * std::cos(x[1]) + 0.3 * x[0] * x[1]; };
    throw UsageError("config: unknown field '" + name + "'");
}

int finish(const Report& rep, const Common& c) {
    rep.write(c.out, rep.command);
    std::cout << rep.command << ": " << (rep.pass ? "ok" : "threshold failure") << ", report " << c.out << "/" << rep.command
              << ".json\n";
    if (!rep.pass) std::cerr << rep.summary.dump() << '\n';
    return rep.pass ? 0 : 2;
}

// ---------------------------------------------------------------- synth

json synth_defaults() {
    return {{"kind", "sphere"},
            {"params", json::object()},
            {"seed", 1},
            {"graph",
             {{"function", "sine"},
              {"m", 2},
              {"eps", 0.2},
              {"amplitude", 0.2},
              {"alpha", 0.5},
              {"lo", {-1.0, -1.0}},
              {"hi", {1.0, 1.0}},
              {"spacing", 0.02},
              {"Q", 1},
              {"offset", 0.0},
              {"noise", 0.0}}}};
}

SynthResult synth_from(const json& cfg) {
    const std::string kind = cfg.at("kind").get<std::string>();
    const auto seed = cfg.at("seed").get<std::uint64_t>();
    if (kind != "graph") {
        std::map<std::string, double> params;
        try {
            params = cfg.at("params").get<std::map<std::string, double>>();
        } catch (const json::exception&) {
            throw UsageError("config: params must map names to numbers");
        }
        try {
            return gen_special(kind, params, seed);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    const json& g = cfg.at("graph");
    const std::string fn = g.at("function").get<std::string>();
    const int m = g.at("m").get<int>();
    GraphFunction u;
    if (fn == "sine")
        u = graph_sine(m, g.at("eps").get<double>());
    else if (fn == "plane")
        u = graph_plane(m);
    else if (fn == "c1alpha")
        u = graph_c1alpha(g.at("amplitude").get<double>(), g.at("alpha").get<double>());
    else
        throw UsageError("config: graph.function must be sine, plane or c1alpha");
    GraphSampling s;
    s.lo = get_vec(g, "lo");
    s.hi = get_vec(g, "hi");
    s.spacing = get_pos(g, "spacing");
    s.Q = g.at("Q").get<int>();
    s.offset = g.at("offset").get<double>();
    s.noise = g.at("noise").get<double>();
    s.seed = seed;
    try {
        return gen_graph_varifold(u, s);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

int run_synth(const Common& c) {
    const json cfg = load_config(c, synth_defaults());
    const SynthResult S = synth_from(cfg);
    std::filesystem::create_directories(c.out);
    write_varifold_file((std::filesystem::path(c.out) / "varifold.jsonl").string(), S.V);
    S.truth.write_file((std::filesystem::path(c.out) / "truth.jsonl").string());
    Report rep("synth", cfg);
    std::map<int, std::pair<std::size_t, double>> pieces;
    for (std::size_t i = 0; i < S.V.size(); ++i) {
        auto& p = pieces[S.truth.piece[i]];
        ++p.first;
        p.second += S.V.w(i);
    }
    for (const auto& [piece, cm] : pieces)
        rep.add_row({{"kind", S.truth.kind}, {"piece", piece}, {"particles", cm.first}, {"mass", cm.second}});
    rep.summary = {{"particles", S.V.size()}, {"total_mass", S.V.total_mass()}, {"ambient", S.V.ambient()}, {"dim", S.V.dim()}};
    return finish(rep, c);
}

struct Corpus {
    DiscreteVarifold V{2, 1};
    GroundTruth truth;
    bool have_truth = false;
};

// input file (with optional truth file), else a generated corpus from kind/params/seed
Corpus load_corpus(const json& cfg) {
    Corpus c;
    const std::string input = cfg.at("input").get<std::string>();
    if (input.empty()) {
        json sc = synth_defaults();
        sc["kind"] = cfg.at("kind");
        sc["params"] = cfg.at("params");
        sc["seed"] = cfg.at("seed");
        SynthResult S = synth_from(sc);
        c.V = std::move(S.V);
        c.truth = std::move(S.truth);
        c.have_truth = true;
        return c;
    }
    c.V = read_varifold_file(input);
    const std::string tp = cfg.at("truth").get<std::string>();
    if (!tp.empty()) {
        c.truth = GroundTruth::read_file(tp);
        if (c.truth.size() != c.V.size() || c.truth.n != c.V.ambient())
            throw UsageError("truth does not match the varifold");
        c.have_truth = true;
    }
    return c;
}

// ---------------------------------------------------------------- crit

json crit_defaults() {
    return {{"field", "smooth"},       {"field_file", ""},      {"half", 1.0},         {"grid_h", 1.0 / 128.0},
            {"integrand", "area_cutoff"}, {"delta", 0.25},       {"points_per_axis", 15}, {"points_half", 0.6},
            {"radii", {0.2, 0.1, 0.05}}, {"p", 1.0},             {"j", 0},              {"min_fraction_in_A", 0.99},
            {"seed", 1}};
}

int run_crit(const Common& c) {
    const json cfg = load_config(c, crit_defaults());
    SampledField u;
    const std::string file = cfg.at("field_file").get<std::string>();
    if (!file.empty()) {
        u = read_field_file(file);
    } else {
        const GridDomain d = GridDomain::cube(2, get_pos(cfg, "half"), get_pos(cfg, "grid_h"));
        u = SampledField::scalar(d, preset_field(cfg.at("field").get<std::string>()));
    }
    const int m = u.domain.dim();
    const Integrand F = make_integrand(cfg, m, u.ncomp);
    CriterionOptions opt;
    opt.p = get_pos(cfg, "p");
    opt.j = cfg.at("j").get<int>();
    if (opt.p < 1.0 || (opt.j != 0 && opt.j != 1)) throw UsageError("config: need p >= 1 and j in {0, 1}");
    if (m != 2) throw UsageError("crit: sample lattice supports m = 2 fields");
    const auto pts = lattice_points(cfg.at("points_per_axis").get<int>(), get_pos(cfg, "points_half"),
                                    cfg.at("seed").get<std::uint64_t>());
    const ClassificationReport cr = classify_criterion(u, F, pts, get_radii(cfg), opt);
    Report rep("crit", cfg);
    const double need = cfg.at("min_fraction_in_A").get<double>();
    rep.add_threshold("min_fraction_in_A", need, "acceptance 1");
    std::size_t id = 0;
    for (const PointReport& P : cr.points) {
        json row = {{"point", id++}, {"x", P.a[0]}, {"y", P.a[1]}, {"in_A", P.in_A},
                    {"k", std::isfinite(P.k) ? json(P.k) : json(nullptr)}, {"error", P.error}};
        if (P.jet) row["hessian"] = P.jet->hessian;
        rep.add_row(row);
    }
    const double frac = cr.fraction_in_A();
    rep.summary = {{"points", cr.points.size()}, {"fraction_in_A", frac}};
    rep.pass = frac >= need;
    return finish(rep, c);
}

// ---------------------------------------------------------------- lebesgue

json lebesgue_defaults() {
    return {{"density", "lipschitz_density"},
            {"field_file", ""},
            {"half", 1.0},
            {"grid_h", 1.0 / 256.0},
            {"q", {1.0, 2.0}},
            {"points_per_axis", 10},
            {"points_half", 0.55},
            {"radii", {0.32, 0.16, 0.08, 0.04}},
            {"spike", {0.703125, -0.703125}},
            {"spike_weight", 0.05},
            {"spike_radii", {0.16, 0.08, 0.04, 0.02}},
            {"max_density_error", 1e-3},
            {"min_slope_excess", 1.5},
            {"seed", 4}};
}

int run_lebesgue(const Common& c) {
    const json cfg = load_config(c, lebesgue_defaults());
    SampledField dens;
    std::function<double(const double*)> exact;
    const std::string file = cfg.at("field_file").get<std::string>();
    if (!file.empty()) {
        dens = read_field_file(file);
    } else {
        const GridDomain d = GridDomain::cube(2, get_pos(cfg, "half"), get_pos(cfg, "grid_h"));
        exact = preset_field(cfg.at("density").get<std::string>());
        dens = SampledField::scalar(d, exact);
    }
    const GridDomain& d = dens.domain;
    if (d.dim() != 2) throw UsageError("lebesgue: sample lattice supports m = 2");
    std::vector<double> spike = get_vec(cfg, "spike");
    const double sw = cfg.at("spike_weight").get<double>();
    std::size_t sn = GridDomain::npos;
    if (sw > 0.0) {
        if (spike.size() != 2) throw UsageError("config: spike must have two coordinates");
        sn = d.nearest_node(spike.data());
        if (sn == GridDomain::npos) throw UsageError("config: spike outside the grid");
        dens.at(sn)[0] += sw / d.cell_volume();
        spike = {d.coord(sn, 0), d.coord(sn, 1)};
    }
    const DistributionRep T = DistributionRep::from_density(dens);
    auto pts = lattice_points(cfg.at("points_per_axis").get<int>(), get_pos(cfg, "points_half"),
                              cfg.at("seed").get<std::uint64_t>());
    const auto radii = get_radii(cfg);
    Report rep("lebesgue", cfg);
    const double tol = cfg.at("max_density_error").get<double>();
    const double min_slope = 2.0 + cfg.at("min_slope_excess").get<double>();
    rep.add_threshold("max_density_error", tol, "acceptance 4");
    rep.add_threshold("min_slope", min_slope, "acceptance 4");
    double worst_err = 0.0, worst_slope = kInf;
    std::size_t not_finite = 0;
    bool spike_ok = true;
    for (double q : get_vec(cfg, "q")) {
        if (q < 1.0) throw UsageError("config: q must be >= 1");
        auto res = lebesgue_scan(T, q, pts, radii);
        if (sn != GridDomain::npos) res.push_back(lebesgue_scan(T, q, {spike}, get_radii_key(cfg, "spike_radii"))[0]);
        for (std::size_t i = 0; i < res.size(); ++i) {
            const LebesgueResult& L = res[i];
            const bool is_spike = sn != GridDomain::npos && i + 1 == res.size();
            json row = {{"q", q}, {"x", L.a[0]}, {"y", L.a[1]}, {"spike", is_spike}, {"finite", L.finite},
                        {"vanishes", L.vanishes}};
            if (L.density) row["density"] = (*L.density)[0];
            if (is_spike) {
                spike_ok = spike_ok && !L.finite;
            } else if (!L.finite || !L.density) {
                ++not_finite;
            } else {
                const double slope = loglog_slope(L.radii, L.raw);
                row["slope"] = slope;
                worst_slope = std::min(worst_slope, slope);
                if (exact) {
                    const double err = std::fabs((*L.density)[0] - exact(L.a.data()));
                    row["density_error"] = err;
                    worst_err = std::max(worst_err, err);
                }
            }
            rep.add_row(row);
        }
    }
    rep.summary = {{"max_density_error", worst_err}, {"min_slope", std::isfinite(worst_slope) ? json(worst_slope) : json(nullptr)},
                   {"not_finite", not_finite}, {"spike_excluded", spike_ok}};
    rep.pass = not_finite == 0 && worst_err <= tol && worst_slope >= min_slope && spike_ok;
    return finish(rep, c);
}

// ---------------------------------------------------------------- varifold

json varifold_defaults() {
    return {{"input", ""},
            {"truth", ""},
            {"kind", "tangent_touch"},
            {"params", json::object()},
            {"seed", 1},
            {"radius", 0.08},
            {"slab", 0.008},
            {"points", 150},
            {"exclude_center", {0.0, 0.0, 0.0}},
            {"exclude_radius", 0.2},
            {"max_radius", 0.5},
            {"flat_tol", 0.02},
            {"curved_tol", 0.05},
            {"graph", {{"enabled", false}, {"lo", json::array()}, {"hi", json::array()}, {"Q_hint", 0}, {"L", 1.0}}}};
}

int run_varifold(const Common& c) {
    const json cfg = load_config(c, varifold_defaults());
    Corpus corpus = load_corpus(cfg);
    const DiscreteVarifold& V = corpus.V;
    const GroundTruth& truth = corpus.truth;
    const bool have_truth = corpus.have_truth;
    const int n = V.ambient();
    const double r = get_pos(cfg, "radius");
    MeanCurvatureOptions mopt;
    mopt.slab = cfg.at("slab").get<double>();
    const auto center = get_vec(cfg, "exclude_center");
    if (static_cast<int>(center.size()) != n) throw UsageError("config: exclude_center dimension");
    const double excl = cfg.at("exclude_radius").get<double>(), far = get_pos(cfg, "max_radius");

    // evenly spaced sample of particles away from the excluded ball (and off singular sets)
    std::vector<std::size_t> cand;
    double hscale = 0.0;
    for (std::size_t i = 0; i < V.size(); ++i) {
        double d2 = 0.0;
        for (int a = 0; a < n; ++a) d2 += sqr(V.z(i)[a] - center[a]);
        if (have_truth) {
            if (!truth.has_tangent[i]) continue;
            hscale = std::max(hscale, std::sqrt(kernels::sum_sq(truth.h(i), n)));
        }
        if (std::sqrt(d2) >= excl && std::sqrt(d2) <= far) cand.push_back(i);
    }
    const std::size_t k = std::min<std::size_t>(cand.size(), cfg.at("points").get<std::size_t>());
    Report rep("varifold", cfg);
    const double flat_tol = cfg.at("flat_tol").get<double>(), curved_tol = cfg.at("curved_tol").get<double>();
    rep.add_threshold("flat_tol", flat_tol, "acceptance 6");
    rep.add_threshold("curved_tol", curved_tol, "acceptance 6");
    std::vector<json> rows(k);
    std::vector<unsigned char> ok(k, 1);
    parallel_for(k, [&](std::size_t t) {
        const std::size_t i = cand[(t * cand.size()) / k];
        json row = {{"particle", i}};
        row["z"] = std::vector<double>(V.z(i), V.z(i) + n);
        try {
            const auto e = mean_curvature_estimate(V, V.z(i), r, mopt);
            row["h"] = e.h;
            row["fit_residual"] = e.residual;
            if (have_truth) {
                const double* h = truth.h(i);
                double err = 0.0, ref = 0.0, mag = 0.0;
                for (int a = 0; a < n; ++a) {
                    err += sqr(e.h[a] - h[a]);
                    ref += sqr(h[a]);
                    mag += sqr(e.h[a]);
                }
                row["piece"] = truth.piece[i];
                row["h_true"] = std::vector<double>(h, h + n);
                if (ref > 1e-24) {
                    row["residual"] = std::sqrt(err / ref);
                    row["residual_kind"] = "relative";
                    ok[t] = std::sqrt(err / ref) <= curved_tol;
                } else {
                    const double rel = hscale > 0.0 ? std::sqrt(mag) / hscale : std::sqrt(mag);
                    row["residual"] = rel;
                    row["residual_kind"] = hscale > 0.0 ? "absolute/max|h|" : "absolute";
                    ok[t] = rel <= flat_tol;
                }
            }
        } catch (const AnalysisError& e) {
            row["error"] = e.what();
            ok[t] = 0;
        }
        rows[t] = row;
    });
    std::size_t failures = 0;
    for (std::size_t t = 0; t < k; ++t) {
        rows[t]["pass"] = ok[t] != 0;
        failures += ok[t] == 0;
        rep.add_row(rows[t]);
    }
    rep.summary = {{"particles", V.size()}, {"points", k}, {"failures", failures}, {"truth", have_truth}};
    if (cfg.at("graph").at("enabled").get<bool>()) {
        const json& g = cfg.at("graph");
        GraphExtractOptions go;
        go.Q_hint = g.at("Q_hint").get<int>();
        go.L = get_pos(g, "L");
        const auto ex = graph_extract(V, GraphFrame::standard(V.dim(), n), go, get_vec(g, "lo"), get_vec(g, "hi"));
        rep.summary["graph"] = json::parse(ex.to_json());
    }
    rep.pass = k > 0 && failures == 0;
    return finish(rep, c);
}

// ---------------------------------------------------------------- decay

json decay_defaults() {
    return {{"input", ""},
            {"truth", ""},
            {"kind", "sphere"},
            {"params", {{"graded", 1.0}, {"s0", 0.0015}, {"focus", 0.06}, {"growth", 0.1}, {"cap", 0.03}}},
            {"seed", 1},
            {"r0", 0.2},
            {"K", 3},
            {"p", 2.0},
            {"resolve_factor", 8.0},
            {"min_particles", 50},
            {"center", {0.0, 0.0, -1.0}},
            {"sample_radius", 0.03},
            {"points", 50},
            {"tau_min", 0.9},
            {"min_fraction", 0.9},
            {"induction", true}};
}

int run_decay(const Common& c) {
    const json cfg = load_config(c, decay_defaults());
    Corpus corpus = load_corpus(cfg);
    const DiscreteVarifold& V = corpus.V;
    const GroundTruth& truth = corpus.truth;
    const bool have_truth = corpus.have_truth;
    const int n = V.ambient();
    DecayOptions dopt;
    dopt.K = cfg.at("K").get<int>();
    dopt.p = cfg.at("p").get<double>();
    dopt.resolve_factor = get_pos(cfg, "resolve_factor");
    dopt.min_particles = cfg.at("min_particles").get<std::size_t>();
    if (dopt.K < 1 || dopt.p < 1.0) throw UsageError("config: need K >= 1 and p >= 1");
    const double r0 = get_pos(cfg, "r0");
    const auto center = get_vec(cfg, "center");
    if (static_cast<int>(center.size()) != n) throw UsageError("config: center dimension");
    const double srad = get_pos(cfg, "sample_radius");
    std::vector<std::size_t> cand;
    V.query_ball(center.data(), srad, [&](std::size_t i, double) {
        if (!have_truth || truth.has_tangent[i]) cand.push_back(i);
    });
    std::sort(cand.begin(), cand.end());
    if (cand.empty()) cand.push_back(V.nearest(center.data()));
    const std::size_t k = std::min<std::size_t>(cand.size(), cfg.at("points").get<std::size_t>());

    Report rep("decay", cfg);
    const double tau_min = cfg.at("tau_min").get<double>(), min_frac = cfg.at("min_fraction").get<double>();
    rep.add_threshold("tau_min", tau_min, "acceptance 7");
    rep.add_threshold("min_fraction", min_frac, "acceptance 7");
    const bool do_ind = cfg.at("induction").get<bool>();
    std::size_t good = 0, closed = 0, ran = 0;
    std::vector<double> d3;
    std::string csv = decay_csv_header() + "\n";
    for (std::size_t t = 0; t < k; ++t) {
        const std::size_t i = cand[(t * cand.size()) / k];
        const double* T = have_truth ? truth.T(i) : V.P(i);
        DecayReport dr = decay_scan(V, V.z(i), T, r0, dopt);
        if (dr.tau_defined && dr.tau_hat >= tau_min) ++good;
        std::vector<double> radii;
        for (std::size_t s = 0; s < dr.radii.size(); ++s)
            if (dr.resolved[s]) radii.push_back(dr.radii[s]);
        json ind_json = nullptr;
        if (do_ind && radii.size() >= 2) {
            InductionOptions io;
            io.p = dopt.p;
            const auto ind = quarter_induction(V, V.z(i), T, radii, io);
            ++ran;
            closed += ind.closes;
            d3.push_back(ind.Delta3);
            dr.induction_pass.assign(dr.radii.size(), 0);
            for (std::size_t s = 0, step = 0; s < dr.radii.size(); ++s)
                if (dr.resolved[s] && step < ind.steps.size() && std::fabs(ind.steps[step].r - dr.radii[s]) < 1e-12 * dr.radii[s])
                    dr.induction_pass[s] = ind.steps[step++].pass();
            ind_json = {{"closes", ind.closes}, {"Delta2", ind.Delta2}, {"Delta3", ind.Delta3},
                        {"Delta3_bound", ind.Delta3_bound}, {"hypotheses_ok", ind.hypotheses_ok},
                        {"failed_hypotheses", ind.failed_hypotheses}};
        }
        csv += decay_csv_rows(dr, t);
        for (std::size_t s = 0; s < dr.radii.size(); ++s) {
            json row = {{"point", t},
                        {"r", dr.radii[s]},
                        {"phi", dr.phi[s]},
                        {"resolved", dr.resolved[s] != 0},
                        {"tau_hat", dr.tau_defined ? json(dr.tau_hat) : json(nullptr)},
                        {"theory_tau", dr.theory_tau}};
            if (s < dr.induction_pass.size()) row["induction_pass"] = dr.induction_pass[s] != 0;
            if (s == 0 && !ind_json.is_null()) row["induction"] = ind_json;
            rep.add_row(row);
        }
    }
    const double frac = double(good) / double(k);
    rep.summary = {{"points", k}, {"fraction_tau_ok", frac}, {"induction_runs", ran}, {"induction_closes", closed}};
    if (!d3.empty()) {
        std::sort(d3.begin(), d3.end());
        rep.summary["median_Delta3"] = d3[d3.size() / 2];
    }
    rep.pass = frac >= min_frac && closed == ran;
    std::filesystem::create_directories(c.out);
    std::ofstream((std::filesystem::path(c.out) / "decay_scan.csv").string()) << csv;
    return finish(rep, c);
}

// ---------------------------------------------------------------- apriori

json apriori_defaults() {
    return {{"integrand", "area_cutoff"}, {"delta", 0.25},  {"m", 2},          {"codim", 1},  {"half", 1.0},
            {"grid_h", {1.0 / 32.0, 1.0 / 64.0}}, {"trials", 3}, {"radius", 0.5}, {"max_spread", 1.5}, {"seed", 7}};
}

int run_apriori(const Common& c) {
    const json cfg = load_config(c, apriori_defaults());
    const int m = cfg.at("m").get<int>(), k = cfg.at("codim").get<int>();
    if (m < 1 || m > 3 || k < 1) throw UsageError("config: need 1 <= m <= 3 and codim >= 1");
    const Integrand F = make_integrand(cfg, m, k);
    const auto hs = get_vec(cfg, "grid_h");
    if (hs.empty()) throw UsageError("config: grid_h must not be empty");
    Report rep("apriori", cfg);
    const double max_spread = cfg.at("max_spread").get<double>();
    rep.add_threshold("max_spread", max_spread, "acceptance 9");
    std::map<std::string, std::vector<double>> consts;
    for (double h : hs) {
        if (!(h > 0.0)) throw UsageError("config: grid_h must be positive");
        const GridDomain d = GridDomain::cube(m, get_pos(cfg, "half"), h);
        AprioriOptions opt;
        opt.trials = cfg.at("trials").get<int>();
        opt.seed = cfg.at("seed").get<std::uint64_t>();
        opt.radius = get_pos(cfg, "radius");
        const AprioriReport ar = apriori_suite(F, d, Ball{std::vector<double>(m, 0.0), opt.radius}, opt);
        for (const auto& rec : ar.records)
            rep.add_row({{"h", h}, {"estimate", rec.name}, {"lhs", rec.lhs}, {"rhs", rec.rhs},
                         {"ratio", std::isfinite(rec.ratio()) ? json(rec.ratio()) : json(nullptr)}});
        for (const auto& [name, v] : ar.constants) consts[name].push_back(v);
    }
    double worst = 1.0;
    json cs = json::object();
    for (const auto& [name, v] : consts) {
        cs[name] = v;
        const double lo = *std::min_element(v.begin(), v.end()), hi = *std::max_element(v.begin(), v.end());
        if (lo > 0.0) worst = std::max(worst, hi / lo);
    }
    rep.summary = {{"constants", cs}, {"max_spread", worst}};
    rep.pass = worst <= max_spread;
    return finish(rep, c);
}

// ---------------------------------------------------------------- report_merge

int run_merge(const std::vector<std::string>& inputs, const std::string& out) {
    std::vector<Report> reps;
    for (const auto& p : inputs) reps.push_back(Report::read_file(p));
    const Report merged = report_merge(reps);
    std::filesystem::create_directories(out);
    std::ofstream js((std::filesystem::path(out) / "merged.json").string());
    js << merged.to_json().dump(2) << '\n';
    std::ofstream cs((std::filesystem::path(out) / "merged.csv").string());
    cs << merged.to_csv();
    std::cout << "report_merge: " << merged.rows.size() << " rows, report " << out << "/merged.json\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rect2: second order rectifiability analyses on synthetic fields and varifolds"};
    app.require_subcommand(1);
    Common common;
    std::vector<std::string> merge_inputs;
    std::string merge_out = "rect2_out";

    struct Cmd {
        const char* name;
        const char* help;
        int (*run)(const Common&);
    };
    const Cmd cmds[] = {{"synth", "generate a synthetic varifold corpus with ground truth", run_synth},
                        {"crit", "classify points of a field by the harmonic deficit criterion", run_crit},
                        {"lebesgue", "scan dual norms for Lebesgue points of a distribution", run_lebesgue},
                        {"varifold", "mean curvature and locality check on a varifold", run_varifold},
                        {"decay", "tilt-excess decay scans and quarter-scale induction", run_decay},
                        {"apriori", "empirical constants of the a priori estimates", run_apriori}};
    std::vector<std::pair<CLI::App*, const Cmd*>> subs;
    for (const Cmd& c : cmds) {
        CLI::App* s = app.add_subcommand(c.name, c.help);
        s->add_option("--config", common.config_path, "JSON config file")->check(CLI::ExistingFile);
        s->add_option("--out", common.out, "output directory");
        s->add_option("--seed", common.seed, "seed (overrides the config)");
        s->add_option("--threads", common.threads, "worker threads (default RECT2_THREADS or all cores)")
            ->check(CLI::PositiveNumber);
        subs.push_back({s, &c});
    }
    CLI::App* merge = app.add_subcommand("report_merge", "merge reports sharing a schema version");
    merge->add_option("inputs", merge_inputs, "report JSON files")->required()->check(CLI::ExistingFile);
    merge->add_option("--out", merge_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    try {
        if (merge->parsed()) return run_merge(merge_inputs, merge_out);
        for (auto& [s, c] : subs) {
            if (!s->parsed()) continue;
            common.seed_given = s->count("--seed") > 0;
            if (common.threads > 0) set_threads(common.threads);
            return c->run(common);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const AnalysisError& e) {
        std::cerr << "analysis failure: " << e.what() << '\n';
        return 2;
    } catch (const std::domain_error& e) {
        // resolution limits of the grid-based estimators
        std::cerr << "analysis failure: " << e.what() << '\n';
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: config value has the wrong type (" << e.what() << ")\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
