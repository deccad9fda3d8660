#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "rect2/grid.hpp"

namespace rect2 {

SampledField weak_gradient(const SampledField& f, int order) {
    if (order != 1 && order != 2) throw std::invalid_argument("weak_gradient: order must be 1 or 2");
    const GridDomain& d = f.domain;
    const int m = d.dim(), nc = f.ncomp;
    const double h = d.spacing();
    const int out_nc = order == 1 ? nc * m : nc * m * m;
    SampledField out(d, out_nc);
    std::size_t n_valid = 0;
    for (std::size_t idx = 0; idx < d.size(); ++idx) {
        double* o = out.at(idx);
        bool ok = f.valid(idx);
        if (ok && order == 1) {
            for (int i = 0; i < m && ok; ++i) {
                const std::size_t p = d.neighbor(idx, i, +1), q = d.neighbor(idx, i, -1);
                if (p == GridDomain::npos || q == GridDomain::npos || !f.valid(p) || !f.valid(q)) {
                    ok = false;
                    break;
                }
                for (int c = 0; c < nc; ++c) o[c * m + i] = (f.at(p)[c] - f.at(q)[c]) / (2.0 * h);
            }
        } else if (ok) {
            for (int i = 0; i < m && ok; ++i) {
                const std::size_t p = d.neighbor(idx, i, +1), q = d.neighbor(idx, i, -1);
                if (p == GridDomain::npos || q == GridDomain::npos || !f.valid(p) || !f.valid(q)) {
                    ok = false;
                    break;
                }
                for (int c = 0; c < nc; ++c)
                    o[c * m * m + i * m + i] = (f.at(p)[c] - 2.0 * f.at(idx)[c] + f.at(q)[c]) / (h * h);
                for (int j = i + 1; j < m && ok; ++j) {
                    std::size_t pp = d.neighbor(p, j, +1), pm = d.neighbor(p, j, -1);
                    std::size_t mp = d.neighbor(q, j, +1), mm = d.neighbor(q, j, -1);
                    if (pp == GridDomain::npos || pm == GridDomain::npos || mp == GridDomain::npos ||
                        mm == GridDomain::npos || !f.valid(pp) || !f.valid(pm) || !f.valid(mp) || !f.valid(mm)) {
                        ok = false;
                        break;
                    }
                    for (int c = 0; c < nc; ++c) {
                        const double v = (f.at(pp)[c] - f.at(pm)[c] - f.at(mp)[c] + f.at(mm)[c]) / (4.0 * h * h);
                        o[c * m * m + i * m + j] = v;
                        o[c * m * m + j * m + i] = v;
                    }
                }
            }
        }
        out.mask[idx] = ok ? 1 : 0;
        if (!ok) std::fill(o, o + out_nc, 0.0);
        n_valid += ok;
    }
    if (n_valid == 0) throw std::domain_error("weak_gradient: domain too small for stencil");
    return out;
}

const GridDomain& DistributionRep::domain() const {
    if (density) return density->domain;
    if (flux) return flux->domain;
    throw std::logic_error("DistributionRep: empty");
}

void DistributionRep::validate() const {
    if (!density && !flux) throw std::invalid_argument("DistributionRep: need density or flux");
    if (density && density->ncomp != codim) throw std::invalid_argument("DistributionRep: density components");
    if (flux) {
        if (flux->ncomp != codim * flux->domain.dim()) throw std::invalid_argument("DistributionRep: flux components");
        if (density && !density->domain.same_as(flux->domain))
            throw std::invalid_argument("DistributionRep: density and flux on different grids");
    }
}

void DistributionRep::nodal_load(std::vector<double>& t, std::vector<unsigned char>& valid) const {
    validate();
    const GridDomain& d = domain();
    const int m = d.dim();
    const double h = d.spacing(), w = d.cell_volume();
    t.assign(d.size() * codim, 0.0);
    valid.assign(d.size(), 1);
    for (std::size_t idx = 0; idx < d.size(); ++idx) {
        double* o = t.data() + idx * codim;
        bool ok = true;
        if (density) {
            if (!density->valid(idx)) ok = false;
            else
                for (int c = 0; c < codim; ++c) o[c] += density->at(idx)[c];
        }
        if (ok && flux) {
            for (int i = 0; i < m && ok; ++i) {
                const std::size_t p = d.neighbor(idx, i, +1), q = d.neighbor(idx, i, -1);
                if (p == GridDomain::npos || q == GridDomain::npos || !flux->valid(p) || !flux->valid(q)) {
                    ok = false;
                    break;
                }
                for (int c = 0; c < codim; ++c) o[c] += (flux->at(p)[c * m + i] - flux->at(q)[c * m + i]) / (2.0 * h);
            }
        }
        if (!ok) {
            std::fill(o, o + codim, 0.0);
            valid[idx] = 0;
        } else {
            for (int c = 0; c < codim; ++c) o[c] *= w;
        }
    }
}

double DistributionRep::action(const SampledField& theta) const {
    if (theta.ncomp != codim || !theta.domain.same_as(domain()))
        throw std::invalid_argument("DistributionRep::action: test field mismatch");
    std::vector<double> t;
    std::vector<unsigned char> valid;
    nodal_load(t, valid);
    double s = 0.0;
    for (std::size_t idx = 0; idx < theta.size(); ++idx)
        for (int c = 0; c < codim; ++c) s += theta.at(idx)[c] * t[idx * codim + c];
    return s;
}

DistributionRep DistributionRep::from_density(SampledField f) {
    DistributionRep T;
    T.codim = f.ncomp;
    T.density = std::move(f);
    return T;
}

DistributionRep DistributionRep::from_flux(SampledField g, int codim) {
    DistributionRep T;
    T.codim = codim;
    T.flux = std::move(g);
    T.validate();
    return T;
}

DistributionRep DistributionRep::constant(const GridDomain& d, const std::vector<double>& y) {
    SampledField f(d, static_cast<int>(y.size()));
    for (std::size_t i = 0; i < d.size(); ++i) std::copy(y.begin(), y.end(), f.at(i));
    return from_density(std::move(f));
}

DistributionRep operator-(const DistributionRep& a, const DistributionRep& b) {
    if (a.codim != b.codim) throw std::invalid_argument("DistributionRep difference: codim mismatch");
    DistributionRep out;
    out.codim = a.codim;
    auto sub = [](const std::optional<SampledField>& x, const std::optional<SampledField>& y) -> std::optional<SampledField> {
        if (x && y) return *x - *y;
        if (x) return *x;
        if (y) return scaled(*y, -1.0);
        return std::nullopt;
    };
    out.density = sub(a.density, b.density);
    out.flux = sub(a.flux, b.flux);
    out.validate();
    return out;
}

bool interpolate(const SampledField& f, const double* x, double* out) {
    const GridDomain& d = f.domain;
    const int m = d.dim();
    std::vector<int> base(m);
    std::vector<double> frac(m);
    for (int i = 0; i < m; ++i) {
        const double t = (x[i] - d.origin()[i]) / d.spacing();
        if (t < -1e-9 || t > d.counts()[i] - 1 + 1e-9) return false;
        int k = static_cast<int>(std::floor(t));
        k = std::clamp(k, 0, d.counts()[i] - 2);
        base[i] = k;
        frac[i] = std::clamp(t - k, 0.0, 1.0);
    }
    std::fill(out, out + f.ncomp, 0.0);
    std::vector<int> mi(m);
    for (int corner = 0; corner < (1 << m); ++corner) {
        double wgt = 1.0;
        for (int i = 0; i < m; ++i) {
            const int bit = (corner >> i) & 1;
            mi[i] = base[i] + bit;
            wgt *= bit ? frac[i] : 1.0 - frac[i];
        }
        if (wgt == 0.0) continue;
        const std::size_t idx = d.linear_index(mi.data());
        if (!f.valid(idx)) return false;
        for (int c = 0; c < f.ncomp; ++c) out[c] += wgt * f.at(idx)[c];
    }
    return true;
}

SampledField scale_translate(const SampledField& f, const std::vector<double>& a, double r, double out_spacing) {
    const GridDomain& d = f.domain;
    const int m = d.dim();
    if (static_cast<int>(a.size()) != m) throw std::invalid_argument("scale_translate: point dimension");
    if (!(r > 0.0)) throw std::invalid_argument("scale_translate: scale must be positive");
    for (int i = 0; i < m; ++i) {
        const double lo = d.origin()[i], hi = lo + (d.counts()[i] - 1) * d.spacing();
        if (a[i] - r < lo - 1e-12 || a[i] + r > hi + 1e-12) throw std::domain_error("scale_translate: out of domain");
    }
    double hs = out_spacing > 0.0 ? out_spacing : d.spacing() / r;
    hs = std::min(hs, 0.5);
    const int per_side = static_cast<int>(std::llround(1.0 / hs));
    hs = 1.0 / per_side;
    GridDomain od(m, std::vector<double>(m, -1.0), std::vector<int>(m, 2 * per_side + 1), hs);
    SampledField out(od, f.ncomp);
    std::vector<double> x(m), y(m);
    for (std::size_t idx = 0; idx < od.size(); ++idx) {
        od.coords(idx, x.data());
        double n2 = 0.0;
        for (int i = 0; i < m; ++i) {
            n2 += x[i] * x[i];
            y[i] = a[i] + r * x[i];
        }
        double* o = out.at(idx);
        bool ok = n2 <= 1.0 + 1e-12 && interpolate(f, y.data(), o);
        if (ok)
            for (int c = 0; c < f.ncomp; ++c) o[c] /= r;
        else
            std::fill(o, o + f.ncomp, 0.0);
        out.mask[idx] = ok;
    }
    return out;
}

namespace {

nlohmann::json header_json(const SampledField& f, bool binary) {
    nlohmann::json j;
    j["m"] = f.domain.dim();
    j["codim"] = f.ncomp;
    j["origin"] = f.domain.origin();
    j["extent"] = f.domain.extent();
    j["spacing"] = f.domain.spacing();
    j["counts"] = f.domain.counts();
    j["format"] = binary ? "binary" : "csv";
    j["byte_order"] = "little";
    j["layout"] = "row-major, axis 0 slowest, components contiguous; invalid nodes stored as NaN";
    return j;
}

bool host_little_endian() {
    const std::uint16_t v = 1;
    unsigned char b;
    std::memcpy(&b, &v, 1);
    return b == 1;
}

}  // namespace

void write_field(std::ostream& os, const SampledField& f, bool binary) {
    os << header_json(f, binary).dump() << '\n';
    const double nan = std::nan("");
    if (binary) {
        const bool le = host_little_endian();
        for (std::size_t i = 0; i < f.size(); ++i)
            for (int c = 0; c < f.ncomp; ++c) {
                double v = f.valid(i) ? f.at(i)[c] : nan;
                unsigned char buf[8];
                std::memcpy(buf, &v, 8);
                if (!le) std::reverse(buf, buf + 8);
                os.write(reinterpret_cast<const char*>(buf), 8);
            }
    } else {
        os << std::setprecision(17);
        for (std::size_t i = 0; i < f.size(); ++i) {
            for (int c = 0; c < f.ncomp; ++c) {
                if (c) os << ',';
                if (f.valid(i)) os << f.at(i)[c];
                else os << "nan";
            }
            os << '\n';
        }
    }
}

SampledField read_field(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("read_field: missing header");
    nlohmann::json j = nlohmann::json::parse(line);
    const int m = j.at("m").get<int>();
    const int nc = j.at("codim").get<int>();
    auto origin = j.at("origin").get<std::vector<double>>();
    const double h = j.at("spacing").get<double>();
    GridDomain d = j.contains("counts") ? GridDomain(m, origin, j["counts"].get<std::vector<int>>(), h)
                                        : GridDomain::from_extent(origin, j.at("extent").get<std::vector<double>>(), h);
    if (d.dim() != m) throw std::runtime_error("read_field: dimension mismatch");
    SampledField f(d, nc);
    const std::string fmt = j.value("format", "binary");
    if (fmt == "binary") {
        if (j.value("byte_order", "little") != "little") throw std::runtime_error("read_field: unsupported byte order");
        const bool le = host_little_endian();
        for (double& v : f.values) {
            unsigned char buf[8];
            if (!is.read(reinterpret_cast<char*>(buf), 8)) throw std::runtime_error("read_field: truncated payload");
            if (!le) std::reverse(buf, buf + 8);
            std::memcpy(&v, buf, 8);
        }
    } else if (fmt == "csv") {
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (!std::getline(is, line)) throw std::runtime_error("read_field: truncated csv");
            std::stringstream ss(line);
            std::string tok;
            for (int c = 0; c < nc; ++c) {
                if (!std::getline(ss, tok, ',')) throw std::runtime_error("read_field: short csv row");
                f.at(i)[c] = (tok == "nan") ? std::nan("") : std::stod(tok);
            }
        }
    } else {
        throw std::runtime_error("read_field: unknown format " + fmt);
    }
    for (std::size_t i = 0; i < f.size(); ++i)
        for (int c = 0; c < nc; ++c)
            if (!std::isfinite(f.at(i)[c])) {
                f.mask[i] = 0;
                f.at(i)[c] = 0.0;
            }
    return f;
}

void write_field_file(const std::string& path, const SampledField& f, bool binary) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    write_field(os, f, binary);
}

SampledField read_field_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_field(is);
}

}  // namespace rect2
