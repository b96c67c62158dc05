#include "jdconvex/lcp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "jdconvex/errors.hpp"

namespace jdconvex {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Quadratic form u^T H u for row-major H.
double quad_form(std::span<const double> H, std::span<const double> u) {
    const std::size_t n = u.size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) s += u[i] * H[i * n + j] * u[j];
    return s;
}

void check_direction(std::span<const double> v, std::size_t n) {
    if (v.size() != n) throw Error("direction has the wrong dimension");
    if (std::abs(norm(v) - 1.0) > 1e-12) throw Error("direction must be a unit vector");
}

// a(y, t) : Hf(y), i.e. (A f)(y).
double apply_A_pointwise(const ModelSpec& m, std::span<const double> y, double t, const TestFunction& f) {
    const std::size_t n = m.dimension();
    std::vector<double> beta(n * n), H(n * n);
    m.beta_at(y, t, beta);
    f.hessian(y, H);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double a = 0.0;
            for (std::size_t l = 0; l < n; ++l) a += beta[i * n + l] * beta[j * n + l];
            s += 0.5 * a * H[i * n + j];
        }
    return s;
}

}  // namespace

const char* to_string(Family f) {
    switch (f) {
        case Family::Q: return "Q";
        case Family::R: return "R";
        case Family::H: return "H";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Test functions

TestFunction TestFunction::quadratic(std::vector<double> anchor, std::vector<double> w) {
    return {Family::Q, std::move(anchor), std::move(w), 0.0, 0.0};
}

TestFunction TestFunction::ridge(std::vector<double> anchor, std::vector<double> w, double k, double eps) {
    if (!(k > 0.0 && eps > 0.0)) throw Error("ridge needs k > 0 and eps > 0");
    return {Family::R, std::move(anchor), std::move(w), k, eps};
}

TestFunction TestFunction::hinge(std::vector<double> anchor, std::vector<double> w, double k, double eps) {
    if (!(k > 0.0 && eps > 0.0)) throw Error("hinge needs k > 0 and eps > 0");
    return {Family::H, std::move(anchor), std::move(w), k, eps};
}

double TestFunction::rho(double s) const {
    switch (family) {
        case Family::Q: return s * s;
        case Family::R:
            if (s <= 0.0) return 0.0;
            if (s <= eps) return s * s * s / (6.0 * eps);
            return 0.5 * (s * s - eps * s + eps * eps / 3.0);
        case Family::H: {
            if (s <= 0.0) return 0.0;
            double e2 = eps * eps;
            if (s <= 0.5 * eps) return 2.0 * s * s * s / (3.0 * e2);
            if (s <= eps) {
                double r = eps - s;
                return s - 0.5 * eps + 2.0 * r * r * r / (3.0 * e2);
            }
            return s - 0.5 * eps;
        }
    }
    return 0.0;
}

double TestFunction::rho1(double s) const {
    switch (family) {
        case Family::Q: return 2.0 * s;
        case Family::R:
            if (s <= 0.0) return 0.0;
            if (s <= eps) return s * s / (2.0 * eps);
            return s - 0.5 * eps;
        case Family::H: {
            if (s <= 0.0) return 0.0;
            double e2 = eps * eps;
            if (s <= 0.5 * eps) return 2.0 * s * s / e2;
            if (s <= eps) {
                double r = eps - s;
                return 1.0 - 2.0 * r * r / e2;
            }
            return 1.0;
        }
    }
    return 0.0;
}

double TestFunction::rho2(double s) const {
    switch (family) {
        case Family::Q: return 2.0;
        case Family::R: return std::clamp(s / eps, 0.0, 1.0);
        case Family::H:
            if (s <= 0.0 || s >= eps) return 0.0;
            if (s <= 0.5 * eps) return 4.0 * s / (eps * eps);
            return 4.0 * (eps - s) / (eps * eps);
    }
    return 0.0;
}

namespace {
double offset(const TestFunction& f, std::span<const double> y) {
    double s = -f.k;
    for (std::size_t i = 0; i < y.size(); ++i) s += f.w[i] * (y[i] - f.anchor[i]);
    return s;
}
}  // namespace

double TestFunction::value(std::span<const double> y) const { return rho(offset(*this, y)); }

void TestFunction::gradient(std::span<const double> y, std::span<double> out) const {
    double d = rho1(offset(*this, y));
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = d * w[i];
}

void TestFunction::hessian(std::span<const double> y, std::span<double> out) const {
    double d = rho2(offset(*this, y));
    const std::size_t n = w.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = d * w[i] * w[j];
}

// ---------------------------------------------------------------------------
// Functionals

double d2B(const ModelSpec& m, std::span<const double> x, double t, std::span<const double> v,
           const TestFunction& f) {
    const std::size_t n = m.dimension();
    check_direction(v, n);
    double lam = m.lambda_at(t);
    if (lam == 0.0) return 0.0;
    std::vector<DirDeriv> d(n);
    std::vector<double> y(n), u(n), H(n * n), gy(n), gx(n);
    f.gradient(x, gx);
    double sum = 0.0;
    for (const auto& node : m.jump_nodes()) {
        m.phi_dir_at(node, x, t, v, d);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = x[i] + d[i].value;
            u[i] = d[i].d_v;
        }
        f.hessian(y, H);
        f.gradient(y, gy);
        // f_vv(y) + 2 phi_v . Hf(y) v + phi_v^T Hf(y) phi_v
        double term = quad_form(H, v) + quad_form(H, u);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) term += 2.0 * u[i] * H[i * n + j] * v[j];
        for (std::size_t i = 0; i < n; ++i) term += d[i].d_vv * (gy[i] - gx[i]);
        sum += node.weight * term;
    }
    return lam * sum;
}

double d2A(const ModelSpec& m, std::span<const double> x, double t, std::span<const double> v,
           const TestFunction& f) {
    const std::size_t n = m.dimension();
    check_direction(v, n);
    double h = 1e-3 * norm(x);
    // Keep x +- 2h v inside the orthant.
    for (std::size_t i = 0; i < n; ++i)
        if (v[i] != 0.0) h = std::min(h, 0.45 * x[i] / std::abs(v[i]));
    if (!(h > 0.0)) throw Error("finite-difference stencil leaves the positive orthant");

    std::vector<double> y(n);
    auto g = [&](double s) {
        for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + s * v[i];
        return apply_A_pointwise(m, y, t, f);
    };
    double g0 = g(0.0);
    auto second = [&](double hh) {
        return (-g(2 * hh) + 16.0 * g(hh) - 30.0 * g0 + 16.0 * g(-hh) - g(-2 * hh)) / (12.0 * hh * hh);
    };
    double coarse = second(h);
    double fine = second(0.5 * h);
    return (16.0 * fine - coarse) / 15.0;
}

double cond_value(const ModelSpec& m, std::span<const double> x, double t, std::span<const double> v,
                  const TestFunction& f) {
    const std::size_t n = m.dimension();
    check_direction(v, n);
    std::vector<DirDeriv> d(n);
    std::vector<double> y(n), gy(n), gx(n);
    f.gradient(x, gx);
    double sum = 0.0;
    for (const auto& node : m.jump_nodes()) {
        m.phi_dir_at(node, x, t, v, d);
        for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + d[i].value;
        f.gradient(y, gy);
        double term = 0.0;
        for (std::size_t i = 0; i < n; ++i) term += d[i].d_vv * (gy[i] - gx[i]);
        sum += node.weight * term;
    }
    return sum;
}

double cond_value(const ModelSpec& m, std::span<const double> x, double t, std::span<const double> v,
                  const CoeffExpr& f) {
    const std::size_t n = m.dimension();
    check_direction(v, n);
    std::vector<DirDeriv> d(n);
    std::vector<double> y(n);
    auto gx = gradient(f, EvalEnv{x, t, std::nullopt});
    double sum = 0.0;
    for (const auto& node : m.jump_nodes()) {
        m.phi_dir_at(node, x, t, v, d);
        for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + d[i].value;
        auto gy = gradient(f, EvalEnv{y, t, std::nullopt});
        double term = 0.0;
        for (std::size_t i = 0; i < n; ++i) term += d[i].d_vv * (gy[i] - gx[i]);
        sum += node.weight * term;
    }
    return sum;
}

double bildt_value(const ModelSpec& m, std::span<const double> x, double t, std::size_t i,
                   std::span<const double> v) {
    const std::size_t n = m.dimension();
    check_direction(v, n);
    if (i >= n) throw Error("component index out of range");
    std::vector<DirDeriv> d(n);
    double sum = 0.0;
    for (const auto& node : m.jump_nodes()) {
        m.phi_dir_at(node, x, t, v, d);
        sum += node.weight * d[i].d_vv * d[i].value;
    }
    return sum;
}

// ---------------------------------------------------------------------------
// Scans

const char* to_string(LcpOperator op) {
    switch (op) {
        case LcpOperator::A: return "A";
        case LcpOperator::B: return "B";
        case LcpOperator::M: return "M";
        case LcpOperator::Cond: return "cond";
        case LcpOperator::Bildt: return "bildt";
    }
    return "?";
}

std::vector<std::vector<double>> battery_directions(std::size_t n, std::size_t count) {
    std::vector<std::vector<double>> out;
    if (n == 1) return {{1.0}, {-1.0}};
    if (n == 2) {
        for (std::size_t j = 0; j < count; ++j) {
            double a = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(count);
            out.push_back({std::cos(a), std::sin(a)});
        }
        return out;
    }
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> g;
    while (out.size() < count) {
        std::vector<double> w(n);
        for (auto& c : w) c = g(rng);
        double r = norm(w);
        if (r < 1e-8) continue;
        for (auto& c : w) c /= r;
        out.push_back(std::move(w));
    }
    return out;
}

double evaluate_cell(const ModelSpec& m, LcpOperator op, const LcpCell& cell, double t,
                     const std::optional<CoeffExpr>& payoff) {
    switch (op) {
        case LcpOperator::A: return d2A(m, cell.x, t, cell.v, *cell.f);
        case LcpOperator::B: return d2B(m, cell.x, t, cell.v, *cell.f);
        case LcpOperator::M: return d2A(m, cell.x, t, cell.v, *cell.f) + d2B(m, cell.x, t, cell.v, *cell.f);
        case LcpOperator::Cond:
            if (cell.payoff) {
                if (!payoff) throw Error("payoff cell needs the payoff expression");
                return cond_value(m, cell.x, t, cell.v, *payoff);
            }
            return cond_value(m, cell.x, t, cell.v, *cell.f);
        case LcpOperator::Bildt: return bildt_value(m, cell.x, t, cell.component, cell.v);
    }
    return 0.0;
}

LcpReport lcp_scan(const ModelSpec& m, LcpOperator op, const ScanConfig& cfg, std::optional<double> tol) {
    const std::size_t n = m.dimension();
    LcpReport rep;
    rep.op = op;
    rep.t = cfg.t;
    rep.min_value = std::numeric_limits<double>::infinity();
    double scale = 0.0;
    const auto ws = battery_directions(n, cfg.n_w);
    const bool orthogonal_q = op != LcpOperator::Cond;

    auto visit = [&](LcpCell cell) {
        ++rep.n_cells;
        try {
            cell.value = evaluate_cell(m, op, cell, cfg.t, cfg.payoff);
        } catch (const std::exception& e) {
            if (rep.n_failed++ == 0) rep.first_failure = e.what();
            return;
        }
        scale = std::max(scale, std::abs(cell.value));
        if (cell.value < rep.min_value) {
            rep.min_value = cell.value;
            rep.certificate = cell;
        }
        if (cfg.keep_cells) rep.cells.push_back(std::move(cell));
    };

    for (std::size_t p = 0; p < cfg.points.size(); ++p) {
        const auto& x = cfg.points[p];
        if (x.size() != n) throw Error("scan point has the wrong dimension");
        double xn = norm(x);
        for (std::size_t d = 0; d < cfg.directions.size(); ++d) {
            const auto& v = cfg.directions[d];
            LcpCell base;
            base.point_index = p;
            base.direction_index = d;
            base.x = x;
            base.v = v;
            if (op == LcpOperator::Bildt) {
                for (std::size_t i = 0; i < n; ++i) {
                    LcpCell c = base;
                    c.component = i;
                    visit(std::move(c));
                }
                continue;
            }
            for (Family fam : cfg.families) {
                if (fam == Family::Q) {
                    for (const auto& w0 : ws) {
                        std::vector<double> w = w0;
                        if (orthogonal_q) {
                            double c = dot(w, v);
                            for (std::size_t i = 0; i < n; ++i) w[i] -= c * v[i];
                            double r = norm(w);
                            if (r < 1e-8) continue;
                            for (auto& wi : w) wi /= r;
                        }
                        LcpCell c = base;
                        c.f = TestFunction::quadratic(x, std::move(w));
                        visit(std::move(c));
                    }
                    continue;
                }
                for (const auto& w : ws)
                    for (double kf : cfg.k_factors)
                        for (double ef : cfg.eps_factors) {
                            double k = kf * xn;
                            LcpCell c = base;
                            c.f = fam == Family::R ? TestFunction::ridge(x, w, k, ef * k)
                                                   : TestFunction::hinge(x, w, k, ef * k);
                            visit(std::move(c));
                        }
            }
            if (op == LcpOperator::Cond && cfg.payoff) {
                LcpCell c = base;
                c.payoff = true;
                visit(std::move(c));
            }
        }
    }
    if (!std::isfinite(rep.min_value)) rep.min_value = 0.0;
    rep.tolerance = tol ? *tol : op == LcpOperator::A ? 1e-6 * std::max(1.0, scale) : 1e-9;
    if (op == LcpOperator::M && !tol) rep.tolerance = 1e-6 * std::max(1.0, scale);
    rep.violation = rep.certificate && rep.min_value < -rep.tolerance;
    return rep;
}

// ---------------------------------------------------------------------------

const char* to_string(VolatilityKind k) { return k == VolatilityKind::Jump ? "jump" : "diffusion"; }

MonotonicityReport volatility_monotonicity(const ModelSpec& m, std::size_t i, std::span<const double> samples,
                                           std::span<const double> base, double t, VolatilityKind kind) {
    const std::size_t n = m.dimension();
    if (i >= n) throw Error("component index out of range");
    if (samples.size() < 3) throw Error("need at least 3 samples along the axis");
    if (base.size() != n) throw Error("base point has the wrong dimension");
    for (std::size_t j = 1; j < samples.size(); ++j)
        if (!(samples[j] > samples[j - 1])) throw Error("axis samples must be strictly increasing");
    MonotonicityReport rep;
    rep.kind = kind;
    rep.component = i;
    rep.samples.assign(samples.begin(), samples.end());
    std::vector<double> x(base.begin(), base.end());
    for (double s : samples) {
        x[i] = s;
        rep.values.push_back(kind == VolatilityKind::Jump ? jump_volatility(m, i, x, t)
                                                          : diffusion_volatility(m, i, x, t));
    }
    for (std::size_t j = 0; j + 1 < rep.values.size(); ++j)
        if (rep.values[j + 1] < rep.values[j] - rep.tolerance) rep.decreasing_pairs.push_back(j);
    return rep;
}

std::vector<std::vector<double>> scan_points(const Box& box, std::size_t count, std::uint64_t seed) {
    static constexpr std::uint64_t primes[] = {2, 3, 5, 7, 11, 13, 17, 19};
    const std::size_t n = box.lo.size();
    if (n > std::size(primes)) throw Error("scan_points supports at most 8 dimensions");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> shift(n);
    for (auto& s : shift) s = u(rng);
    std::vector<std::vector<double>> out;
    for (std::size_t k = 0; k < count; ++k) {
        std::vector<double> x(n);
        for (std::size_t d = 0; d < n; ++d) {
            double r = 0.0, f = 1.0 / static_cast<double>(primes[d]);
            for (std::uint64_t i = k + 1; i > 0; i /= primes[d]) {
                r += f * static_cast<double>(i % primes[d]);
                f /= static_cast<double>(primes[d]);
            }
            r += shift[d];
            r -= std::floor(r);
            x[d] = box.lo[d] + r * (box.hi[d] - box.lo[d]);
        }
        out.push_back(std::move(x));
    }
    return out;
}

}  // namespace jdconvex
