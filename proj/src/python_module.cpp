#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "jdconvex/cli.hpp"
#include "jdconvex/errors.hpp"
#include "jdconvex/harness.hpp"
#include "jdconvex/io.hpp"
#include "jdconvex/lcp.hpp"
#include "jdconvex/mc.hpp"
#include "jdconvex/pide.hpp"

namespace py = pybind11;
using namespace jdconvex;

namespace {

CoeffExpr payoff_expr(const std::string& text, std::size_t n) { return parse(text, n, VarPolicy{true, false, false}); }

SimulationOptions sim_options(std::size_t paths, std::size_t steps, std::uint64_t seed, std::size_t shards) {
    SimulationOptions o;
    o.n_paths = paths;
    o.n_steps = steps;
    o.seed = seed;
    o.shards = shards;
    return o;
}

py::dict witness_dict(const std::optional<Witness>& w) {
    py::dict d;
    if (!w) return d;
    d["x"] = w->x;
    d["t"] = w->t;
    d["value"] = w->value;
    if (w->z) d["z"] = *w->z;
    if (w->component) d["component"] = *w->component;
    return d;
}

py::dict lcp_dict(const LcpReport& r) {
    py::dict d;
    d["operator"] = to_string(r.op);
    d["n_cells"] = r.n_cells;
    d["n_failed"] = r.n_failed;
    d["min_value"] = r.min_value;
    d["tolerance"] = r.tolerance;
    d["violation"] = r.violation;
    d["verdict"] = r.verdict();
    if (r.certificate) {
        py::dict c;
        c["x"] = r.certificate->x;
        c["v"] = r.certificate->v;
        c["value"] = r.certificate->value;
        if (r.certificate->f) {
            c["family"] = to_string(r.certificate->f->family);
            c["w"] = r.certificate->f->w;
            c["k"] = r.certificate->f->k;
            c["eps"] = r.certificate->f->eps;
        } else {
            c["component"] = r.certificate->component;
        }
        d["certificate"] = c;
    } else {
        d["certificate"] = py::none();
    }
    return d;
}

py::dict convexity_dict(const ConvexityReport& r) {
    py::dict d;
    d["min_value"] = r.min_value;
    d["argmin_x"] = r.argmin_x;
    d["argmin_t"] = r.argmin_t;
    d["argmin_direction"] = r.argmin_direction;
    d["tolerance"] = r.tolerance;
    d["pass"] = r.pass;
    return d;
}

LcpOperator parse_op(const std::string& s) {
    if (s == "A") return LcpOperator::A;
    if (s == "B") return LcpOperator::B;
    if (s == "M") return LcpOperator::M;
    if (s == "cond") return LcpOperator::Cond;
    if (s == "bildt") return LcpOperator::Bildt;
    throw Error("operator must be one of A, B, M, cond, bildt");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Jump-diffusion pricing and convexity audits";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

    py::class_<ModelSpec>(m, "Model")
        .def_property_readonly("dimension", &ModelSpec::dimension)
        .def_property_readonly("horizon", &ModelSpec::horizon)
        .def_property_readonly("description", &ModelSpec::description)
        .def_property_readonly("finite_atoms", &ModelSpec::finite_atoms)
        .def("to_json", [](const ModelSpec& s) { return model_to_json(s); })
        .def("jump_volatility",
             [](const ModelSpec& s, std::size_t i, std::vector<double> x, double t) {
                 return jump_volatility(s, i, x, t);
             },
             py::arg("i"), py::arg("x"), py::arg("t") = 0.0)
        .def("diffusion_volatility",
             [](const ModelSpec& s, std::size_t i, std::vector<double> x, double t) {
                 return diffusion_volatility(s, i, x, t);
             },
             py::arg("i"), py::arg("x"), py::arg("t") = 0.0);

    m.def("load_model", &load_model, py::arg("path"));
    m.def("parse_model", &parse_model, py::arg("json_text"));

    m.def("evaluate",
          [](const std::string& source, std::vector<double> x, double t, std::optional<double> z) {
              auto e = parse(source, x.size());
              return eval(e, EvalEnv{x, t, z});
          },
          py::arg("source"), py::arg("x"), py::arg("t") = 0.0, py::arg("z") = py::none());

    m.def("validate",
          [](const ModelSpec& s, double lo, double hi, std::uint64_t seed) {
              ValidationOptions o;
              o.seed = seed;
              auto r = validate(s, Box::cube(s.dimension(), lo, hi), o);
              py::list checks;
              for (const auto& c : r.checks) {
                  py::dict d;
                  d["id"] = c.id;
                  d["verdict"] = to_string(c.verdict);
                  d["detail"] = c.detail;
                  d["witness"] = witness_dict(c.witness);
                  checks.append(d);
              }
              py::dict out;
              out["ok"] = r.ok();
              out["checks"] = checks;
              out["warnings"] = r.warnings;
              return out;
          },
          py::arg("model"), py::arg("lo") = 0.25, py::arg("hi") = 4.0, py::arg("seed") = 1);

    m.def("black_scholes_call", &black_scholes_call, py::arg("x"), py::arg("strike"), py::arg("sigma"), py::arg("tau"));
    m.def("merton_series_price", &merton_series_price, py::arg("sigma"), py::arg("lam"), py::arg("gamma"),
          py::arg("x"), py::arg("strike"), py::arg("tau"));

    m.def("price_mc",
          [](const ModelSpec& s, const std::string& payoff, std::vector<double> x, double t, double T0,
             std::size_t paths, std::size_t steps, std::uint64_t seed, std::size_t shards) {
              auto e = price_mc(s, payoff_expr(payoff, s.dimension()), x, t, T0, sim_options(paths, steps, seed, shards));
              return py::make_tuple(e.mean, e.std_error);
          },
          py::arg("model"), py::arg("payoff"), py::arg("x"), py::arg("t") = 0.0, py::arg("maturity") = 1.0,
          py::arg("paths") = 10000, py::arg("steps") = 50, py::arg("seed") = 1, py::arg("shards") = 1);

    m.def("simulate",
          [](const ModelSpec& s, std::vector<double> x0, double t, double T0, std::size_t paths, std::size_t steps,
             std::uint64_t seed, std::size_t shards, bool closed_form) {
              auto o = sim_options(paths, steps, seed, shards);
              o.keep_jump_log = false;
              auto ens = closed_form ? simulate_linear_closed_form(s, x0, t, T0, o) : simulate(s, x0, t, T0, o);
              py::array_t<double> out({ens.n_paths, ens.dimension});
              std::copy(ens.terminal.begin(), ens.terminal.end(), out.mutable_data());
              return out;
          },
          py::arg("model"), py::arg("x0"), py::arg("t") = 0.0, py::arg("maturity") = 1.0, py::arg("paths") = 10000,
          py::arg("steps") = 50, py::arg("seed") = 1, py::arg("shards") = 1, py::arg("closed_form") = false);

    m.def("solve",
          [](const ModelSpec& s, const std::string& payoff, std::vector<double> center, double half_width,
             std::size_t nodes, double t, double T0, std::size_t steps) {
              const std::size_t n = s.dimension();
              std::vector<std::size_t> k(n, nodes);
              SolveOptions o;
              o.n_time_steps = steps;
              auto sol = solve(s, payoff_expr(payoff, n), Grid::centered(center, half_width, k), t, T0, o);
              py::array_t<double> u({sol.u.size(), sol.grid.total()});
              for (std::size_t l = 0; l < sol.u.size(); ++l)
                  std::copy(sol.u[l].begin(), sol.u[l].end(), u.mutable_data() + l * sol.grid.total());
              py::list axes;
              for (std::size_t a = 0; a < n; ++a) axes.append(sol.grid.axis(a));
              py::dict out;
              out["times"] = sol.times;
              out["axes"] = axes;
              out["u"] = u;
              out["n_steps"] = sol.n_steps;
              out["value"] = sol.value_at(center);
              out["convexity"] = convexity_dict(convexity_report(sol));
              return out;
          },
          py::arg("model"), py::arg("payoff"), py::arg("center"), py::arg("half_width") = 2.0, py::arg("nodes") = 201,
          py::arg("t") = 0.0, py::arg("maturity") = 1.0, py::arg("steps") = 100);

    m.def("bildt_value",
          [](const ModelSpec& s, std::vector<double> x, std::size_t i, std::vector<double> v, double t) {
              return bildt_value(s, x, t, i, v);
          },
          py::arg("model"), py::arg("x"), py::arg("i"), py::arg("v"), py::arg("t") = 0.0);

    m.def("cond_value",
          [](const ModelSpec& s, std::vector<double> x, std::vector<double> v, const std::string& f, double t) {
              return cond_value(s, x, t, v, payoff_expr(f, s.dimension()));
          },
          py::arg("model"), py::arg("x"), py::arg("v"), py::arg("f"), py::arg("t") = 0.0);

    m.def("lcp_scan",
          [](const ModelSpec& s, const std::string& op, std::vector<std::vector<double>> points,
             std::optional<std::vector<std::vector<double>>> directions, double t, std::optional<double> tol) {
              ScanConfig cfg;
              cfg.points = std::move(points);
              cfg.directions = directions ? *directions : battery_directions(s.dimension(), 8);
              cfg.t = t;
              return lcp_dict(lcp_scan(s, parse_op(op), cfg, tol));
          },
          py::arg("model"), py::arg("op"), py::arg("points"), py::arg("directions") = py::none(), py::arg("t") = 0.0,
          py::arg("tol") = py::none());

    m.def("volatility_monotonicity",
          [](const ModelSpec& s, std::size_t i, std::vector<double> samples, std::vector<double> base, double t,
             const std::string& kind) {
              if (kind != "jump" && kind != "diffusion") throw Error("kind must be jump or diffusion");
              auto r = volatility_monotonicity(s, i, samples, base, t,
                                               kind == "jump" ? VolatilityKind::Jump : VolatilityKind::Diffusion);
              py::dict d;
              d["values"] = r.values;
              d["decreasing_pairs"] = r.decreasing_pairs;
              d["pass"] = r.pass();
              return d;
          },
          py::arg("model"), py::arg("i"), py::arg("samples"), py::arg("base"), py::arg("t") = 0.0,
          py::arg("kind") = "jump");

    m.def("verify_ordering",
          [](const ModelSpec& hi, const ModelSpec& lo, const std::string& k, const std::string& payoff,
             std::vector<std::vector<double>> spots, double t, double T0, const std::string& method,
             std::size_t paths, std::uint64_t seed) {
              OrderingOptions o;
              if (method == "mc") o.method = Method::Mc;
              else if (method != "pide") throw Error("method must be pide or mc");
              o.sim.n_paths = paths;
              o.sim.seed = seed;
              const std::size_t n = hi.dimension();
              auto r = verify_ordering({hi, lo, parse(k, n, VarPolicy{false, false, true})}, payoff_expr(payoff, n),
                                       spots, t, T0, o);
              py::list pts;
              for (const auto& p : r.points) {
                  py::dict d;
                  d["x"] = p.x;
                  d["u_hi"] = p.u_hi;
                  d["u_lo"] = p.u_lo;
                  d["gap"] = p.gap;
                  d["slack"] = p.slack;
                  d["pass"] = p.pass;
                  pts.append(d);
              }
              py::dict d;
              d["points"] = pts;
              d["pass"] = r.pass;
              d["label"] = r.label();
              d["hypotheses_pass"] = r.hypotheses.all_pass();
              d["min_gap"] = r.min_gap;
              return d;
          },
          py::arg("hi"), py::arg("lo"), py::arg("k"), py::arg("payoff"), py::arg("spots"), py::arg("t") = 0.0,
          py::arg("maturity") = 1.0, py::arg("method") = "pide", py::arg("paths") = 10000, py::arg("seed") = 1);

    m.def("convex_payoff_set", &convex_payoff_set, py::arg("n"));

    m.def("run_cli",
          [](std::vector<std::string> args) {
              args.insert(args.begin(), "jdconvex");
              std::vector<const char*> argv;
              for (const auto& a : args) argv.push_back(a.c_str());
              std::ostringstream out, err;
              int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
              return py::make_tuple(code, out.str(), err.str());
          },
          py::arg("args"));
}
