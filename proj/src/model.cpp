#include "jdconvex/model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "jdconvex/errors.hpp"

namespace jdconvex {

namespace {

constexpr double kWeightTol = 1e-12;

void require(bool cond, const std::string& msg) {
    if (!cond) throw ModelError(msg);
}

void check_phi_vector(const std::vector<CoeffExpr>& phi, std::size_t n, bool allow_z,
                      const std::string& where) {
    require(phi.size() == n, where + ": expected " + std::to_string(n) + " components");
    for (const auto& e : phi) {
        require(!e.empty(), where + ": empty expression");
        require(e.max_x_index() <= n, where + ": variable index exceeds dimension");
        require(allow_z || !e.uses_z(), where + ": z is not permitted in an atom");
    }
}

// Radical inverse in base b; used for Halton points.
double radical_inverse(std::uint64_t i, std::uint64_t base) {
    double inv = 1.0 / static_cast<double>(base);
    double f = inv, r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

constexpr std::uint64_t kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

// Cranley-Patterson rotated Halton sequence.
class QuasiRandom {
public:
    QuasiRandom(std::size_t dim, std::uint64_t seed) : shift_(dim) {
        require(dim <= std::size(kPrimes), "quasi-random dimension too large");
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (auto& s : shift_) s = u(rng);
    }
    std::vector<double> point(std::uint64_t i) const {
        std::vector<double> p(shift_.size());
        for (std::size_t d = 0; d < p.size(); ++d) {
            double v = radical_inverse(i + 1, kPrimes[d]) + shift_[d];
            p[d] = v - std::floor(v);
        }
        return p;
    }

private:
    std::vector<double> shift_;
};

}  // namespace

ModelSpec::ModelSpec(std::size_t n, double horizon, std::vector<CoeffExpr> beta, CoeffExpr lambda,
                     JumpField jumps, std::string description)
    : n_(n),
      horizon_(horizon),
      beta_(std::move(beta)),
      lambda_(std::move(lambda)),
      jumps_(std::move(jumps)),
      description_(std::move(description)) {
    require(n_ >= 1, "dimension must be at least 1");
    require(horizon_ > 0.0, "horizon T must be positive");
    require(beta_.size() == n_ * n_, "beta must have n*n entries");
    for (const auto& b : beta_) {
        require(!b.empty(), "beta: empty expression");
        require(b.max_x_index() <= n_, "beta: variable index exceeds dimension");
        require(!b.uses_z(), "beta: z is not permitted");
    }
    require(!lambda_.empty(), "lambda: empty expression");
    require(lambda_.max_x_index() == 0 && !lambda_.uses_z(), "lambda may depend on t only");

    if (auto* d = std::get_if<DensityJumps>(&jumps_)) {
        check_phi_vector(d->phi, n_, true, "jumps.phi");
        require(d->n_z >= 1, "jumps.n_z must be positive");
        double w = 1.0 / static_cast<double>(d->n_z);
        for (std::size_t k = 0; k < d->n_z; ++k)
            nodes_.push_back({w, (static_cast<double>(k) + 0.5) * w, JumpNode::kNoAtom});
    } else {
        auto& a = std::get<AtomJumps>(jumps_);
        require(!a.atoms.empty(), "jumps.atoms must not be empty");
        double sum = 0.0;
        for (std::size_t k = 0; k < a.atoms.size(); ++k) {
            const auto& atom = a.atoms[k];
            require(atom.weight > 0.0, "jumps.atoms.weights must be positive");
            check_phi_vector(atom.phi, n_, false, "jumps.atoms[" + std::to_string(k) + "].phi");
            nodes_.push_back({atom.weight, sum + 0.5 * atom.weight, k});
            sum += atom.weight;
            cumulative_.push_back(sum);
        }
        require(std::abs(sum - 1.0) <= kWeightTol, "jumps.atoms.weights must sum to 1");
    }
}

void ModelSpec::beta_at(std::span<const double> x, double t, std::span<double> out) const {
    EvalEnv env{x, t, std::nullopt};
    for (std::size_t k = 0; k < beta_.size(); ++k) out[k] = eval(beta_[k], env);
}

double ModelSpec::lambda_at(double t) const { return eval(lambda_, EvalEnv{{}, t, std::nullopt}); }

const CoeffExpr& ModelSpec::phi_expr(const JumpNode& node, std::size_t i) const {
    if (node.atom != JumpNode::kNoAtom) return std::get<AtomJumps>(jumps_).atoms[node.atom].phi[i];
    return std::get<DensityJumps>(jumps_).phi[i];
}

void ModelSpec::phi_at(const JumpNode& node, std::span<const double> x, double t,
                       std::span<double> out) const {
    EvalEnv env{x, t, node.z};
    for (std::size_t i = 0; i < n_; ++i) out[i] = eval(phi_expr(node, i), env);
}

std::size_t ModelSpec::atom_for_label(double z) const {
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), z);
    auto k = static_cast<std::size_t>(it - cumulative_.begin());
    return std::min(k, cumulative_.size() - 1);
}

void ModelSpec::phi_at(std::span<const double> x, double t, double z, std::span<double> out) const {
    JumpNode node{1.0, z, JumpNode::kNoAtom};
    if (finite_atoms()) node.atom = atom_for_label(z);
    phi_at(node, x, t, out);
}

void ModelSpec::phi_dir_at(const JumpNode& node, std::span<const double> x, double t,
                           std::span<const double> v, std::span<DirDeriv> out) const {
    EvalEnv env{x, t, node.z};
    for (std::size_t i = 0; i < n_; ++i) out[i] = dir_derivs(phi_expr(node, i), env, v);
}

// ---------------------------------------------------------------------------

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Fail: return "fail";
        case Verdict::NotCheckable: return "not-checkable";
    }
    return "?";
}

bool ValidationReport::ok() const {
    return std::none_of(checks.begin(), checks.end(),
                        [](const AssumptionCheck& c) { return c.verdict == Verdict::Fail; });
}

const AssumptionCheck* ValidationReport::find(const std::string& id) const {
    for (const auto& c : checks)
        if (c.id == id) return &c;
    return nullptr;
}

ValidationReport validate(const ModelSpec& m, const Box& box, const ValidationOptions& opts) {
    const std::size_t n = m.dimension();
    require(box.lo.size() == n && box.hi.size() == n, "validation box dimension mismatch");
    for (std::size_t i = 0; i < n; ++i)
        require(box.lo[i] > 0.0 && box.hi[i] >= box.lo[i], "validation box must lie in the positive orthant");

    ValidationReport rep;
    rep.n_samples = opts.n_samples;
    const auto& nodes = m.jump_nodes();
    QuasiRandom qr(n + 2, opts.seed);

    std::vector<double> beta(n * n), phi(n);
    double growth = 0.0, min_ratio = std::numeric_limits<double>::infinity();
    std::optional<Witness> growth_w, gamma_w, det_w, lambda_w, domain_w;
    double min_det = std::numeric_limits<double>::infinity();
    double min_lambda = std::numeric_limits<double>::infinity();
    bool zero_jump_seen = false;
    std::string domain_msg;

    for (std::size_t s = 0; s < opts.n_samples; ++s) {
        auto u = qr.point(s);
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = box.lo[i] + u[i] * (box.hi[i] - box.lo[i]);
        double t = u[n] * m.horizon();
        try {
            double lam = m.lambda_at(t);
            if (lam < min_lambda) {
                min_lambda = lam;
                lambda_w = Witness{x, t, std::nullopt, std::nullopt, lam};
            }
            m.beta_at(x, t, beta);
            Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> B(
                beta.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
            double det = std::abs(B.determinant());
            if (det < min_det) {
                min_det = det;
                det_w = Witness{x, t, std::nullopt, std::nullopt, det};
            }
            for (const auto& node : nodes) {
                m.phi_at(node, x, t, phi);
                bool all_zero = std::all_of(phi.begin(), phi.end(), [](double p) { return p == 0.0; });
                zero_jump_seen = zero_jump_seen || all_zero;
                for (std::size_t i = 0; i < n; ++i) {
                    double row = 0.0;
                    for (std::size_t j = 0; j < n; ++j) row += beta[i * n + j] * beta[i * n + j];
                    double ratio = (row + phi[i] * phi[i]) / (x[i] * x[i]);
                    if (!(ratio <= growth)) {
                        growth = ratio;
                        growth_w = Witness{x, t, node.z, i, ratio};
                    }
                    double r = phi[i] / x[i];
                    if (r < min_ratio) {
                        min_ratio = r;
                        gamma_w = Witness{x, t, node.z, i, 1.0 + r};
                    }
                }
            }
        } catch (const DomainError& e) {
            if (!domain_w) {
                domain_w = Witness{x, t, std::nullopt, std::nullopt, 0.0};
                domain_msg = e.what();
            }
        }
    }

    // (A4): random pairs, same (t, z node).
    double lipschitz = 0.0;
    std::optional<Witness> lip_w;
    {
        std::mt19937_64 rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<double> beta_y(n * n), phi_y(n);
        const std::size_t n_pairs = 10 * opts.n_samples;
        for (std::size_t p = 0; p < n_pairs; ++p) {
            std::vector<double> x(n), y(n);
            for (std::size_t i = 0; i < n; ++i) {
                x[i] = box.lo[i] + unit(rng) * (box.hi[i] - box.lo[i]);
                y[i] = box.lo[i] + unit(rng) * (box.hi[i] - box.lo[i]);
            }
            double t = unit(rng) * m.horizon();
            const auto& node = nodes[static_cast<std::size_t>(unit(rng) * nodes.size()) % nodes.size()];
            double dist = 0.0;
            for (std::size_t i = 0; i < n; ++i) dist += (x[i] - y[i]) * (x[i] - y[i]);
            dist = std::sqrt(dist);
            if (dist == 0.0) continue;
            try {
                m.beta_at(x, t, beta);
                m.beta_at(y, t, beta_y);
                m.phi_at(node, x, t, phi);
                m.phi_at(node, y, t, phi_y);
            } catch (const DomainError&) {
                continue;  // already reported by the pointwise pass
            }
            double db = 0.0, dp = 0.0;
            for (std::size_t k = 0; k < n * n; ++k) db += (beta[k] - beta_y[k]) * (beta[k] - beta_y[k]);
            for (std::size_t i = 0; i < n; ++i) dp += (phi[i] - phi_y[i]) * (phi[i] - phi_y[i]);
            double ratio = (std::sqrt(db) + std::sqrt(dp)) / dist;
            if (!(ratio <= lipschitz)) {
                lipschitz = ratio;
                lip_w = Witness{x, t, node.z, std::nullopt, ratio};
            }
        }
    }

    rep.growth_constant = growth;
    rep.lipschitz_constant = lipschitz;
    rep.gamma = min_ratio;

    auto fmt = [](double v) { return std::to_string(v); };
    rep.checks.push_back({"A1", Verdict::NotCheckable, "Holder regularity of beta asserted via the expression language", {}});
    rep.checks.push_back({"A2", Verdict::NotCheckable, "Holder regularity of lambda asserted via the expression language", {}});
    {
        bool ok = std::isfinite(growth) && growth <= opts.constant_cap;
        rep.checks.push_back({"A3", ok ? Verdict::Pass : Verdict::Fail, "sampled D = " + fmt(growth),
                              ok ? std::nullopt : growth_w});
    }
    {
        bool ok = std::isfinite(lipschitz) && lipschitz <= opts.constant_cap;
        rep.checks.push_back({"A4", ok ? Verdict::Pass : Verdict::Fail, "sampled Lipschitz ratio = " + fmt(lipschitz),
                              ok ? std::nullopt : lip_w});
    }
    {
        bool ok = min_det > 1e-12;
        rep.checks.push_back({"A5", ok ? Verdict::Pass : Verdict::Fail, "min |det beta| = " + fmt(min_det),
                              ok ? std::nullopt : det_w});
    }
    rep.checks.push_back({"A6", Verdict::NotCheckable, "measurability and regularity of phi asserted via the expression language", {}});
    if (zero_jump_seen)
        rep.warnings.push_back("A6: phi vanishes on a set of labels of positive measure at some sampled point");
    {
        bool ok = 1.0 + min_ratio > 0.0;
        rep.checks.push_back({"A7", ok ? Verdict::Pass : Verdict::Fail, "sampled gamma = min phi_i/x_i = " + fmt(min_ratio),
                              ok ? std::nullopt : gamma_w});
    }
    {
        bool ok = min_lambda >= 0.0;
        rep.checks.push_back({"lambda", ok ? Verdict::Pass : Verdict::Fail, "min lambda = " + fmt(min_lambda),
                              ok ? std::nullopt : lambda_w});
    }
    if (domain_w)
        rep.checks.push_back({"domain", Verdict::Fail, domain_msg, domain_w});
    return rep;
}

std::vector<double> compensator_drift(const ModelSpec& m, std::span<const double> x, double t) {
    const std::size_t n = m.dimension();
    std::vector<double> drift(n, 0.0), phi(n);
    double lam = m.lambda_at(t);
    if (lam == 0.0) return drift;
    for (const auto& node : m.jump_nodes()) {
        m.phi_at(node, x, t, phi);
        for (std::size_t i = 0; i < n; ++i) drift[i] += node.weight * phi[i];
    }
    for (auto& d : drift) d *= -lam;
    return drift;
}

double jump_volatility(const ModelSpec& m, std::size_t i, std::span<const double> x, double t) {
    double lam = m.lambda_at(t);
    if (lam == 0.0) return 0.0;
    std::vector<double> phi(m.dimension());
    double second_moment = 0.0;
    for (const auto& node : m.jump_nodes()) {
        m.phi_at(node, x, t, phi);
        second_moment += node.weight * phi[i] * phi[i];
    }
    return std::abs(lam) * std::sqrt(second_moment) / x[i];
}

double diffusion_volatility(const ModelSpec& m, std::size_t i, std::span<const double> x, double t) {
    const std::size_t n = m.dimension();
    EvalEnv env{x, t, std::nullopt};
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double b = eval(m.beta_expr(i, j), env);
        row += b * b;
    }
    return std::sqrt(row) / x[i];
}

namespace {

template <class Check>
bool probe_pairs(const ModelSpec& m, const Box& box, std::uint64_t seed, std::size_t n_probe, Check&& check) {
    const std::size_t n = m.dimension();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> x(n), y(n);
    for (std::size_t p = 0; p < n_probe; ++p) {
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = box.lo[i] + unit(rng) * (box.hi[i] - box.lo[i]);
            y[i] = box.lo[i] + unit(rng) * (box.hi[i] - box.lo[i]);
        }
        double t = unit(rng) * m.horizon();
        double z = unit(rng);
        if (!check(x, y, t, z)) return false;
    }
    return true;
}

}  // namespace

bool beta_row_proportional(const ModelSpec& m, std::size_t i, const Box& box, std::uint64_t seed,
                           std::size_t n_probe, double tol) {
    const std::size_t n = m.dimension();
    return probe_pairs(m, box, seed, n_probe, [&](const auto& x, const auto& y, double t, double) {
        EvalEnv ex{x, t, std::nullopt}, ey{y, t, std::nullopt};
        for (std::size_t j = 0; j < n; ++j) {
            const auto& b = m.beta_expr(i, j);
            if (std::abs(eval(b, ex) / x[i] - eval(b, ey) / y[i]) >= tol) return false;
        }
        return true;
    });
}

bool is_linear(const ModelSpec& m, const Box& box, std::uint64_t seed, std::size_t n_probe, double tol) {
    const std::size_t n = m.dimension();
    for (std::size_t i = 0; i < n; ++i)
        if (!beta_row_proportional(m, i, box, seed + i, n_probe, tol)) return false;
    std::vector<double> px(n), py(n);
    return probe_pairs(m, box, seed ^ 0x5bd1e995ULL, n_probe, [&](const auto& x, const auto& y, double t, double z) {
        auto same_ratio = [&] {
            for (std::size_t i = 0; i < n; ++i)
                if (std::abs(px[i] / x[i] - py[i] / y[i]) >= tol) return false;
            return true;
        };
        m.phi_at(x, t, z, px);
        m.phi_at(y, t, z, py);
        if (!same_ratio()) return false;
        for (const auto& node : m.jump_nodes()) {
            m.phi_at(node, x, t, px);
            m.phi_at(node, y, t, py);
            if (!same_ratio()) return false;
        }
        return true;
    });
}

}  // namespace jdconvex
