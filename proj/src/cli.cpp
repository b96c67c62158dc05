#include "jdconvex/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "jdconvex/errors.hpp"
#include "jdconvex/harness.hpp"
#include "jdconvex/io.hpp"
#include "jdconvex/lcp.hpp"
#include "jdconvex/mc.hpp"
#include "jdconvex/pide.hpp"

namespace jdconvex {

using nlohmann::json;

namespace {

struct Args {
    std::string model;
    std::string model2;
    std::string pair;
    std::string k = "1";
    std::string payoff;
    std::string spot;
    double t = 0.0;
    std::optional<double> maturity;
    std::string grid;
    std::size_t paths = 10000;
    std::size_t steps = 0;
    std::uint64_t seed = 1;
    std::string method;
    std::string out = "jdconvex-out";
    std::optional<double> tol;
    std::string op = "all";
    std::size_t points = 10;
    std::string box = "0.5,2";
    std::size_t shards = 1;
    std::string scheme = "euler";
    std::string boundary = "linear";
};

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos)
            throw Error(flag + ": cannot parse '" + item + "' as a number");
        out.push_back(v);
    }
    return out;
}

// Consecutive groups of n coordinates.
std::vector<std::vector<double>> parse_points(const std::string& text, std::size_t n, const std::string& flag) {
    auto flat = parse_list(text, flag);
    if (flat.empty() || flat.size() % n != 0)
        throw Error(flag + ": expected a multiple of " + std::to_string(n) + " coordinates");
    std::vector<std::vector<double>> out;
    for (std::size_t p = 0; p < flat.size(); p += n) out.emplace_back(flat.begin() + p, flat.begin() + p + n);
    for (const auto& x : out)
        for (double c : x)
            if (!(c > 0.0)) throw Error(flag + ": coordinates must be positive");
    return out;
}

std::vector<std::vector<double>> spots_or(const Args& a, std::size_t n, double fallback) {
    if (a.spot.empty()) return {std::vector<double>(n, fallback)};
    return parse_points(a.spot, n, "--spot");
}

Box parse_box(const Args& a, std::size_t n) {
    auto v = parse_list(a.box, "--box");
    if (v.size() != 2 || !(v[0] > 0.0) || !(v[1] > v[0])) throw Error("--box: expected lo,hi with 0 < lo < hi");
    return Box::cube(n, v[0], v[1]);
}

std::vector<std::size_t> grid_nodes(const Args& a, std::size_t n, std::size_t d1, std::size_t d2) {
    if (n > 2) throw Error("the PIDE solver supports one or two dimensions");
    std::vector<std::size_t> nodes(n, n == 1 ? d1 : d2);
    if (!a.grid.empty()) {
        auto v = parse_list(a.grid, "--grid");
        if (v.size() != 1 && v.size() != n) throw Error("--grid: expected 1 or " + std::to_string(n) + " values");
        for (std::size_t i = 0; i < n; ++i) {
            double g = v.size() == 1 ? v[0] : v[i];
            if (!(g >= 5.0) || g != std::floor(g)) throw Error("--grid: node counts must be integers >= 5");
            nodes[i] = static_cast<std::size_t>(g);
        }
    }
    return nodes;
}

Method parse_method(const std::string& s, Method fallback) {
    if (s.empty()) return fallback;
    if (s == "pide") return Method::Pide;
    if (s == "mc") return Method::Mc;
    throw Error("--method: expected pide or mc");
}

SolveOptions solve_options(const Args& a) {
    SolveOptions so;
    if (a.steps) so.n_time_steps = a.steps;
    if (a.boundary == "linear") so.boundary = BoundaryRule::Linear;
    else if (a.boundary == "dirichlet") so.boundary = BoundaryRule::PayoffDirichlet;
    else throw Error("--boundary: expected linear or dirichlet");
    return so;
}

SimulationOptions sim_options(const Args& a) {
    SimulationOptions so;
    so.n_paths = a.paths;
    so.n_steps = a.steps ? a.steps : 50;
    so.seed = a.seed;
    so.shards = a.shards;
    return so;
}

double maturity_of(const Args& a, const ModelSpec& m) {
    double T0 = a.maturity.value_or(m.horizon());
    if (!(T0 > a.t)) throw Error("--maturity must exceed --t");
    if (T0 > m.horizon() + 1e-12) throw Error("--maturity exceeds the model horizon");
    return T0;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string csv_num(double v) { return format_double(v); }

json witness_json(const std::optional<Witness>& w) {
    if (!w) return nullptr;
    json j{{"x", w->x}, {"t", w->t}, {"value", w->value}};
    if (w->z) j["z"] = *w->z;
    if (w->component) j["component"] = *w->component;
    return j;
}

json validation_json(const ValidationReport& r) {
    json checks = json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"id", c.id}, {"verdict", to_string(c.verdict)}, {"detail", c.detail},
                          {"witness", witness_json(c.witness)}});
    return {{"ok", r.ok()},
            {"checks", checks},
            {"warnings", r.warnings},
            {"growth_constant", r.growth_constant},
            {"lipschitz_constant", r.lipschitz_constant},
            {"gamma", r.gamma},
            {"n_samples", r.n_samples},
            {"note", "sampled checks; pass means no counterexample found"}};
}

json test_function_json(const TestFunction& f) {
    json j{{"family", to_string(f.family)}, {"anchor", f.anchor}, {"w", f.w}};
    if (f.family != Family::Q) {
        j["k"] = f.k;
        j["eps"] = f.eps;
    }
    return j;
}

json cell_json(const LcpCell& c) {
    json j{{"point_index", c.point_index}, {"direction_index", c.direction_index}, {"x", c.x}, {"v", c.v},
           {"value", c.value}};
    if (c.f) j["test_function"] = test_function_json(*c.f);
    if (c.payoff) j["test_function"] = "payoff";
    if (!c.f && !c.payoff) j["component"] = c.component;
    return j;
}

json lcp_json(const LcpReport& r) {
    return {{"operator", to_string(r.op)},
            {"t", r.t},
            {"n_cells", r.n_cells},
            {"n_failed", r.n_failed},
            {"first_failure", r.first_failure},
            {"min_value", r.min_value},
            {"tolerance", r.tolerance},
            {"verdict", r.verdict()},
            {"certificate", r.certificate ? cell_json(*r.certificate) : json(nullptr)},
            {"note", "the test battery can find violations; no-violation-found does not prove the property"}};
}

json convexity_json(const ConvexityReport& r) {
    return {{"min_value", r.min_value}, {"argmin_x", r.argmin_x},     {"argmin_t", r.argmin_t},
            {"argmin_level", r.argmin_level}, {"argmin_direction", r.argmin_direction},
            {"tolerance", r.tolerance}, {"pass", r.pass}};
}

json hypotheses_json(const HypothesisReport& r) {
    json checks = json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"id", c.id}, {"pass", c.pass}, {"detail", c.detail}, {"witness", witness_json(c.witness)}});
    return {{"all_pass", r.all_pass()}, {"checks", checks}};
}

class Output {
public:
    Output(const Args& a, std::string command) : dir_(a.out), command_(std::move(command)) {
        report_["schema_version"] = kSchemaVersion;
        report_["command"] = command_;
    }
    json& report() { return report_; }
    std::ostringstream& csv() { return csv_; }
    void write() {
        namespace fs = std::filesystem;
        write_file_atomic((fs::path(dir_) / (command_ + ".json")).string(), report_.dump(2) + "\n");
        write_file_atomic((fs::path(dir_) / (command_ + ".csv")).string(), csv_.str());
    }

private:
    std::string dir_;
    std::string command_;
    json report_;
    std::ostringstream csv_;
};

ModelSpec load_checked(const std::string& path, const std::string& flag, json& report, std::ostream& err) {
    if (path.empty()) throw Error(flag + " is required");
    ModelSpec m = load_model(path);
    std::size_t n = m.dimension();
    auto v = validate(m, Box::cube(n, 0.25, 4.0));
    report["validation" + std::string(flag == "--model2" ? "_2" : "")] = validation_json(v);
    if (!v.ok()) {
        std::string failed;
        for (const auto& c : v.checks)
            if (c.verdict == Verdict::Fail) failed += (failed.empty() ? "" : ",") + c.id;
        err << "warning: " << path << " fails sampled validation: " << failed << "\n";
    }
    return m;
}

void csv_header_x(std::ostream& os, std::size_t n, const char* prefix = "x") {
    for (std::size_t i = 1; i <= n; ++i) os << prefix << i << ",";
}

// ---------------------------------------------------------------------------

int cmd_price(const Args& a, std::ostream& out, std::ostream& err) {
    Output o(a, "price");
    auto m = load_checked(a.model, "--model", o.report(), err);
    const std::size_t n = m.dimension();
    if (a.payoff.empty()) throw Error("--payoff is required");
    auto g = parse(a.payoff, n, VarPolicy{true, false, false});
    auto spots = spots_or(a, n, 1.0);
    double T0 = maturity_of(a, m);
    Method method = parse_method(a.method, Method::Mc);

    auto& csv = o.csv();
    csv_header_x(csv, n);
    csv << "price,stderr\n";
    json rows = json::array();
    std::vector<double> prices, errors;
    if (method == Method::Mc) {
        auto so = sim_options(a);
        for (const auto& x : spots) {
            auto e = price_mc(m, g, x, a.t, T0, so);
            prices.push_back(e.mean);
            errors.push_back(e.std_error);
        }
        o.report()["paths"] = so.n_paths;
        o.report()["steps"] = so.n_steps;
        o.report()["seed"] = so.seed;
    } else {
        auto nodes = grid_nodes(a, n, 401, 101);
        for (const auto& x : spots) {
            auto so = solve_options(a);
            so.store_stride = std::numeric_limits<std::size_t>::max();
            auto sol = solve(m, g, Grid::centered(x, 2.5, nodes), a.t, T0, so);
            prices.push_back(sol.value_at(x));
            errors.push_back(0.0);
            o.report()["steps"] = sol.n_steps;
        }
        o.report()["grid"] = nodes;
    }
    for (std::size_t s = 0; s < spots.size(); ++s) {
        for (double c : spots[s]) csv << csv_num(c) << ",";
        csv << csv_num(prices[s]) << "," << csv_num(errors[s]) << "\n";
        rows.push_back({{"x", spots[s]}, {"price", prices[s]}, {"stderr", errors[s]}});
    }
    o.report()["method"] = to_string(method);
    o.report()["payoff"] = a.payoff;
    o.report()["t"] = a.t;
    o.report()["maturity"] = T0;
    o.report()["results"] = rows;
    o.write();
    out << "price=" << fmt(prices[0]) << " stderr=" << fmt(errors[0]) << " method=" << to_string(method);
    if (spots.size() > 1) out << " n_spots=" << spots.size();
    out << "\n";
    return kExitPass;
}

int cmd_solve(const Args& a, std::ostream& out, std::ostream& err) {
    Output o(a, "solve");
    auto m = load_checked(a.model, "--model", o.report(), err);
    const std::size_t n = m.dimension();
    if (a.payoff.empty()) throw Error("--payoff is required");
    auto g = parse(a.payoff, n, VarPolicy{true, false, false});
    auto center = spots_or(a, n, 1.0).front();
    double T0 = maturity_of(a, m);
    auto nodes = grid_nodes(a, n, 201, 61);
    auto sol = solve(m, g, Grid::centered(center, 2.0, nodes), a.t, T0, solve_options(a));
    auto conv = convexity_report(sol, a.tol.value_or(-1.0));
    double value = sol.value_at(center);
    sol.write_csv(o.csv());
    o.report()["payoff"] = a.payoff;
    o.report()["grid"] = nodes;
    o.report()["scheme"] = sol.scheme;
    o.report()["boundary"] = to_string(sol.boundary);
    o.report()["n_steps"] = sol.n_steps;
    o.report()["quadrature_nodes"] = sol.quadrature_nodes;
    o.report()["t"] = a.t;
    o.report()["maturity"] = T0;
    o.report()["x"] = center;
    o.report()["value"] = value;
    o.report()["convexity"] = convexity_json(conv);
    o.write();
    out << "value=" << fmt(value) << " convex=" << (conv.pass ? "true" : "false") << " min=" << fmt(conv.min_value)
        << " steps=" << sol.n_steps << "\n";
    return conv.pass ? kExitPass : kExitFinding;
}

ScanConfig scan_config(const Args& a, std::size_t n) {
    ScanConfig cfg;
    if (!a.spot.empty()) cfg.points = parse_points(a.spot, n, "--spot");
    for (auto& x : scan_points(parse_box(a, n), a.points, a.seed)) cfg.points.push_back(std::move(x));
    cfg.directions = battery_directions(n, 8);
    cfg.t = a.t;
    cfg.keep_cells = true;
    return cfg;
}

void cells_csv(std::ostream& csv, std::size_t n, const std::vector<LcpReport>& reps) {
    csv << "operator,point_index,direction_index,";
    csv_header_x(csv, n);
    csv_header_x(csv, n, "v");
    csv << "family,";
    csv_header_x(csv, n, "w");
    csv << "k,eps,component,value\n";
    for (const auto& r : reps)
        for (const auto& c : r.cells) {
            csv << to_string(r.op) << "," << c.point_index << "," << c.direction_index << ",";
            for (double v : c.x) csv << csv_num(v) << ",";
            for (double v : c.v) csv << csv_num(v) << ",";
            if (c.f) {
                csv << to_string(c.f->family) << ",";
                for (double v : c.f->w) csv << csv_num(v) << ",";
                csv << csv_num(c.f->k) << "," << csv_num(c.f->eps) << ",,";
            } else {
                csv << (c.payoff ? "payoff" : "") << ",";
                for (std::size_t i = 0; i < n; ++i) csv << ",";
                csv << ",," << (c.payoff ? "" : std::to_string(c.component));
                csv << ",";
            }
            csv << csv_num(c.value) << "\n";
        }
}

int run_scans(const Args& a, std::ostream& out, std::ostream& err, const std::string& command,
              const std::vector<LcpOperator>& ops) {
    Output o(a, command);
    auto m = load_checked(a.model, "--model", o.report(), err);
    const std::size_t n = m.dimension();
    auto cfg = scan_config(a, n);
    if (command == "cond-check" && !a.payoff.empty()) cfg.payoff = parse(a.payoff, n, VarPolicy{true, false, false});
    std::vector<LcpReport> reps;
    json arr = json::array();
    bool violation = false;
    std::string summary;
    for (auto op : ops) {
        reps.push_back(lcp_scan(m, op, cfg, a.tol));
        const auto& r = reps.back();
        violation = violation || r.violation;
        arr.push_back(lcp_json(r));
        summary += std::string(" ") + to_string(op) + "=" + fmt(r.min_value);
    }
    cells_csv(o.csv(), n, reps);
    o.report()["t"] = a.t;
    o.report()["points"] = cfg.points;
    o.report()["directions"] = cfg.directions;
    if (cfg.payoff) o.report()["payoff"] = a.payoff;
    o.report()["reports"] = arr;
    o.report()["verdict"] = violation ? "violation" : "no-violation-found";
    o.write();
    out << "verdict=" << (violation ? "violation" : "no-violation-found") << summary << "\n";
    return violation ? kExitFinding : kExitPass;
}

int cmd_lcp_check(const Args& a, std::ostream& out, std::ostream& err) {
    std::vector<LcpOperator> ops;
    if (a.op == "all") ops = {LcpOperator::A, LcpOperator::B, LcpOperator::M, LcpOperator::Bildt};
    else if (a.op == "A") ops = {LcpOperator::A};
    else if (a.op == "B") ops = {LcpOperator::B};
    else if (a.op == "M") ops = {LcpOperator::M};
    else if (a.op == "bildt") ops = {LcpOperator::Bildt};
    else throw Error("--op: expected all, A, B, M or bildt");
    return run_scans(a, out, err, "lcp-check", ops);
}

int cmd_cond_check(const Args& a, std::ostream& out, std::ostream& err) {
    return run_scans(a, out, err, "cond-check", {LcpOperator::Cond});
}

int cmd_vol_check(const Args& a, std::ostream& out, std::ostream& err) {
    Output o(a, "vol-check");
    auto m = load_checked(a.model, "--model", o.report(), err);
    const std::size_t n = m.dimension();
    Box box = parse_box(a, n);
    if (a.points < 3) throw Error("--points must be at least 3");
    auto base = a.spot.empty() ? std::vector<double>(n, std::sqrt(box.lo[0] * box.hi[0]))
                               : parse_points(a.spot, n, "--spot").front();
    auto& csv = o.csv();
    csv << "kind,component,x,value,decreasing\n";
    json arr = json::array();
    std::size_t dec_jump = 0, dec_diff = 0;
    for (auto kind : {VolatilityKind::Jump, VolatilityKind::Diffusion})
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> xs(a.points);
            for (std::size_t j = 0; j < a.points; ++j)
                xs[j] = box.lo[i] * std::pow(box.hi[i] / box.lo[i], static_cast<double>(j) / (a.points - 1.0));
            auto r = volatility_monotonicity(m, i, xs, base, a.t, kind);
            (kind == VolatilityKind::Jump ? dec_jump : dec_diff) += r.decreasing_pairs.size();
            for (std::size_t j = 0; j < xs.size(); ++j) {
                bool flag = std::find(r.decreasing_pairs.begin(), r.decreasing_pairs.end(), j) !=
                            r.decreasing_pairs.end();
                csv << to_string(kind) << "," << i + 1 << "," << csv_num(xs[j]) << "," << csv_num(r.values[j]) << ","
                    << (flag ? 1 : 0) << "\n";
            }
            arr.push_back({{"kind", to_string(kind)},
                           {"component", i + 1},
                           {"samples", r.samples},
                           {"values", r.values},
                           {"decreasing_pairs", r.decreasing_pairs},
                           {"tolerance", r.tolerance},
                           {"pass", r.pass()}});
        }
    bool violation = dec_jump + dec_diff > 0;
    o.report()["t"] = a.t;
    o.report()["base"] = base;
    o.report()["reports"] = arr;
    o.report()["verdict"] = violation ? "violation" : "no-violation-found";
    o.write();
    out << "verdict=" << (violation ? "violation" : "no-violation-found") << " jump_decreasing=" << dec_jump
        << " diffusion_decreasing=" << dec_diff << "\n";
    return violation ? kExitFinding : kExitPass;
}

int cmd_order(const Args& a, std::ostream& out, std::ostream& err) {
    Output o(a, "order");
    std::string hi_path = a.model, lo_path = a.model2, k_text = a.k, payoff = a.payoff;
    std::vector<double> spot_list;
    double t = a.t;
    std::optional<double> T0 = a.maturity;
    if (!a.pair.empty()) {
        namespace fs = std::filesystem;
        json spec;
        try {
            spec = json::parse(read_file(a.pair));
        } catch (const json::exception& e) {
            throw SchemaError("", std::string("invalid JSON: ") + e.what());
        }
        if (spec.value("schema_version", kSchemaVersion) != kSchemaVersion)
            throw SchemaError("schema_version", "unsupported version");
        fs::path dir = fs::path(a.pair).parent_path();
        auto str = [&](const char* key) {
            if (!spec.contains(key) || !spec[key].is_string()) throw SchemaError(key, "expected a string");
            return spec[key].get<std::string>();
        };
        if (hi_path.empty()) hi_path = (dir / str("model_hi")).string();
        if (lo_path.empty()) lo_path = (dir / str("model_lo")).string();
        if (spec.contains("k")) k_text = str("k");
        if (payoff.empty()) payoff = str("payoff");
        if (spec.contains("spots")) {
            if (!spec["spots"].is_array()) throw SchemaError("spots", "expected an array of numbers");
            for (const auto& v : spec["spots"]) {
                if (!v.is_number()) throw SchemaError("spots", "expected an array of numbers");
                spot_list.push_back(v.get<double>());
            }
        }
        if (spec.contains("t")) t = spec["t"].get<double>();
        if (!T0 && spec.contains("maturity")) T0 = spec["maturity"].get<double>();
        o.report()["pair"] = a.pair;
    }
    auto hi = load_checked(hi_path, "--model", o.report(), err);
    auto lo = load_checked(lo_path, "--model2", o.report(), err);
    const std::size_t n = hi.dimension();
    if (payoff.empty()) throw Error("--payoff is required");
    std::vector<std::vector<double>> spots;
    if (!a.spot.empty()) spots = parse_points(a.spot, n, "--spot");
    else if (!spot_list.empty()) {
        std::ostringstream ss;
        for (std::size_t i = 0; i < spot_list.size(); ++i) ss << (i ? "," : "") << format_double(spot_list[i]);
        spots = parse_points(ss.str(), n, "spots");
    } else spots = {std::vector<double>(n, 1.0)};
    double mat = T0.value_or(std::min(hi.horizon(), lo.horizon()));
    if (!(mat > t)) throw Error("maturity must exceed t");

    ModelPair pair{hi, lo, parse(k_text, n, VarPolicy{false, false, true})};
    OrderingOptions opts;
    opts.method = parse_method(a.method, Method::Pide);
    opts.solve = solve_options(a);
    if (n <= 2) {
        auto nodes = grid_nodes(a, n, 401, 101);
        opts.grid_nodes = nodes[0];
        opts.grid_nodes_2d = nodes[0];
    }
    opts.sim = sim_options(a);
    if (a.tol) {
        opts.pide_slack = *a.tol;
        opts.mc_slack_stderr = *a.tol;
    }
    auto rep = verify_ordering(pair, parse(payoff, n, VarPolicy{true, false, false}), spots, t, mat, opts);

    auto& csv = o.csv();
    csv_header_x(csv, n);
    csv << "t,u_hi,u_lo,gap,stderr_hi,stderr_lo,verdict\n";
    json pts = json::array();
    double max_slack = 0.0;
    for (const auto& p : rep.points) {
        for (double c : p.x) csv << csv_num(c) << ",";
        csv << csv_num(p.t) << "," << csv_num(p.u_hi) << "," << csv_num(p.u_lo) << "," << csv_num(p.gap) << ","
            << csv_num(p.stderr_hi) << "," << csv_num(p.stderr_lo) << "," << (p.pass ? "pass" : "fail") << "\n";
        pts.push_back({{"x", p.x}, {"t", p.t}, {"u_hi", p.u_hi}, {"u_lo", p.u_lo}, {"gap", p.gap},
                       {"stderr_hi", p.stderr_hi}, {"stderr_lo", p.stderr_lo}, {"slack", p.slack},
                       {"pass", p.pass}});
        max_slack = std::max(max_slack, p.slack);
    }
    o.report()["model_hi"] = hi_path;
    o.report()["model_lo"] = lo_path;
    o.report()["k"] = k_text;
    o.report()["payoff"] = payoff;
    o.report()["maturity"] = mat;
    o.report()["method"] = to_string(rep.method);
    o.report()["hypotheses"] = hypotheses_json(rep.hypotheses);
    o.report()["payoff_certified"] = rep.payoff_certified;
    o.report()["slack_policy"] = rep.slack_policy;
    o.report()["points"] = pts;
    o.report()["pass"] = rep.pass;
    o.report()["label"] = rep.label();
    o.report()["min_gap"] = rep.min_gap;
    o.report()["max_abs_gap"] = rep.max_abs_gap;
    o.write();
    out << "verdict=" << (rep.pass ? "pass" : "fail") << " max_abs_gap=" << fmt(rep.max_abs_gap)
        << " min_gap=" << fmt(rep.min_gap) << " slack=" << fmt(max_slack) << " label=\"" << rep.label() << "\"\n";
    return rep.pass ? kExitPass : kExitFinding;
}

int cmd_scan(const Args& a, std::ostream& out, std::ostream& err) {
    Output o(a, "scan");
    auto m = load_checked(a.model, "--model", o.report(), err);
    const std::size_t n = m.dimension();
    std::vector<std::string> texts = a.payoff.empty() ? convex_payoff_set(n) : std::vector<std::string>{a.payoff};
    std::vector<CoeffExpr> payoffs;
    for (const auto& s : texts) payoffs.push_back(parse(s, n, VarPolicy{true, false, false}));
    auto center = spots_or(a, n, 1.0).front();
    double T0 = maturity_of(a, m);
    auto nodes = grid_nodes(a, n, 201, 61);
    PreservationOptions po;
    po.solve = solve_options(a);
    po.seed = a.seed;
    if (a.tol) po.tol_factor = *a.tol;
    auto rep = preservation_scan(m, payoffs, Grid::centered(center, 2.0, nodes), a.t, T0, po);

    auto& csv = o.csv();
    csv << "payoff,pass,min_value,tolerance,argmin_t,";
    csv_header_x(csv, n);
    csv << "lcp_verdict,lcp_min\n";
    json arr = json::array();
    for (const auto& p : rep.payoffs) {
        csv << "\"" << p.payoff << "\"," << (p.convexity.pass ? 1 : 0) << "," << csv_num(p.convexity.min_value) << ","
            << csv_num(p.convexity.tolerance) << "," << csv_num(p.convexity.argmin_t) << ",";
        for (double c : p.convexity.argmin_x) csv << csv_num(c) << ",";
        csv << (p.lcp ? p.lcp->verdict() : "") << "," << (p.lcp ? csv_num(p.lcp->min_value) : "") << "\n";
        arr.push_back({{"payoff", p.payoff},
                       {"payoff_certified", p.payoff_certified},
                       {"n_steps", p.n_steps},
                       {"convexity", convexity_json(p.convexity)},
                       {"lcp", p.lcp ? lcp_json(*p.lcp) : json(nullptr)}});
    }
    o.report()["grid"] = nodes;
    o.report()["t"] = a.t;
    o.report()["maturity"] = T0;
    o.report()["tol_factor"] = po.tol_factor;
    o.report()["payoffs"] = arr;
    o.report()["pass"] = rep.pass;
    o.report()["lcp_corroborated"] = rep.lcp_corroborated;
    o.report()["verdict"] = rep.verdict();
    o.write();
    out << "verdict=" << (rep.pass ? "pass" : "fail") << " payoffs=" << rep.payoffs.size()
        << " lcp_corroborated=" << (rep.lcp_corroborated ? "true" : "false") << "\n";
    return rep.pass ? kExitPass : kExitFinding;
}

int cmd_simulate(const Args& a, std::ostream& out, std::ostream& err) {
    Output o(a, "simulate");
    auto m = load_checked(a.model, "--model", o.report(), err);
    const std::size_t n = m.dimension();
    auto x0 = spots_or(a, n, 1.0).front();
    double T0 = maturity_of(a, m);
    auto so = sim_options(a);
    PathEnsemble ens;
    if (a.scheme == "euler") ens = simulate(m, x0, a.t, T0, so);
    else if (a.scheme == "closed-form") ens = simulate_linear_closed_form(m, x0, a.t, T0, so);
    else throw Error("--scheme: expected euler or closed-form");

    auto& csv = o.csv();
    csv << "path,";
    csv_header_x(csv, n);
    csv << "n_jumps\n";
    std::vector<double> mean(n, 0.0), sq(n, 0.0);
    for (std::size_t p = 0; p < ens.n_paths; ++p) {
        csv << p << ",";
        auto x = ens.path(p);
        for (std::size_t i = 0; i < n; ++i) {
            csv << csv_num(x[i]) << ",";
            mean[i] += x[i];
        }
        csv << (ens.jump_log.empty() ? 0 : ens.jump_log[p].size()) << "\n";
    }
    const double N = static_cast<double>(ens.n_paths);
    for (auto& v : mean) v /= N;
    for (std::size_t p = 0; p < ens.n_paths; ++p)
        for (std::size_t i = 0; i < n; ++i) sq[i] += (ens.path(p)[i] - mean[i]) * (ens.path(p)[i] - mean[i]);
    std::vector<double> se(n);
    bool martingale = true;
    for (std::size_t i = 0; i < n; ++i) {
        se[i] = N > 1 ? std::sqrt(sq[i] / (N - 1.0) / N) : 0.0;
        martingale = martingale && std::abs(mean[i] - x0[i]) <= 4.0 * se[i];
    }
    o.report()["scheme"] = to_string(ens.scheme);
    o.report()["x0"] = x0;
    o.report()["t"] = a.t;
    o.report()["maturity"] = T0;
    o.report()["paths"] = ens.n_paths;
    o.report()["steps"] = ens.n_steps;
    o.report()["seed"] = ens.master_seed;
    o.report()["mean"] = mean;
    o.report()["stderr"] = se;
    o.report()["martingale_check"] = martingale ? "pass" : "fail";
    o.write();
    out << "mean=" << fmt(mean[0]) << " stderr=" << fmt(se[0]) << " martingale=" << (martingale ? "pass" : "fail")
        << "\n";
    return martingale ? kExitPass : kExitFinding;
}

int cmd_validate(const Args& a, std::ostream& out, std::ostream&) {
    Output o(a, "validate");
    if (a.model.empty()) throw Error("--model is required");
    auto m = load_model(a.model);
    const std::size_t n = m.dimension();
    ValidationOptions vo;
    vo.seed = a.seed;
    auto rep = validate(m, parse_box(a, n), vo);
    o.report()["model"] = a.model;
    o.report()["n"] = n;
    o.report()["validation"] = validation_json(rep);
    auto& csv = o.csv();
    csv << "id,verdict,detail\n";
    std::size_t failed = 0;
    for (const auto& c : rep.checks) {
        csv << c.id << "," << to_string(c.verdict) << ",\"" << c.detail << "\"\n";
        failed += c.verdict == Verdict::Fail;
    }
    o.write();
    out << "validation=" << (rep.ok() ? "pass" : "fail") << " checks=" << rep.checks.size() << " failed=" << failed
        << "\n";
    return rep.ok() ? kExitPass : kExitFinding;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Jump-diffusion pricing and convexity audits"};
    app.require_subcommand(1);
    Args a;
    using Handler = int (*)(const Args&, std::ostream&, std::ostream&);
    std::vector<std::pair<CLI::App*, Handler>> commands;
    auto add = [&](const char* name, const char* help, Handler h) {
        CLI::App* c = app.add_subcommand(name, help);
        c->add_option("--model", a.model, "Model file");
        c->add_option("--model2", a.model2, "Second model file (order: the lower model)");
        c->add_option("--pair", a.pair, "Paired-ordering spec file (order)");
        c->add_option("--k", a.k, "Jump scaling k(z) of the pair (order)");
        c->add_option("--payoff", a.payoff, "Payoff expression in x1..xn");
        c->add_option("--spot", a.spot, "Spot coordinates, comma separated; n per point");
        c->add_option("--t", a.t, "Start time");
        c->add_option("--maturity", a.maturity, "Maturity T0 (default: model horizon)");
        c->add_option("--grid", a.grid, "PIDE nodes per axis: n or n1,n2");
        c->add_option("--paths", a.paths, "Monte Carlo paths");
        c->add_option("--steps", a.steps, "Time steps (MC default 50, PIDE default 100)");
        c->add_option("--seed", a.seed, "Master seed");
        c->add_option("--method", a.method, "pide or mc");
        c->add_option("--out", a.out, "Output directory");
        c->add_option("--tol", a.tol, "Tolerance override");
        c->add_option("--op", a.op, "lcp-check operator: all, A, B, M, bildt");
        c->add_option("--points", a.points, "Scan points (lcp/cond) or axis samples (vol)");
        c->add_option("--box", a.box, "Sample box lo,hi");
        c->add_option("--shards", a.shards, "Monte Carlo worker threads");
        c->add_option("--scheme", a.scheme, "simulate: euler or closed-form");
        c->add_option("--boundary", a.boundary, "PIDE boundary: linear or dirichlet");
        commands.emplace_back(c, h);
    };
    add("price", "Price a claim by Monte Carlo or PIDE", cmd_price);
    add("solve", "PIDE solve with convexity report", cmd_solve);
    add("lcp-check", "Scan the LCP functionals of A, B, M and the f = x_i^2 case", cmd_lcp_check);
    add("cond-check", "Scan the sufficient jump condition", cmd_cond_check);
    add("vol-check", "Jump and diffusion volatility monotonicity", cmd_vol_check);
    add("order", "Price ordering between two models", cmd_order);
    add("scan", "Convexity preservation scan over a payoff set", cmd_scan);
    add("simulate", "Simulate terminal values", cmd_simulate);
    add("validate", "Sampled checks of the model assumptions", cmd_validate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitPass : kExitError;
    }
    try {
        for (auto& [c, h] : commands)
            if (c->parsed()) return h(a, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        out << "error=\"" << e.what() << "\"\n";
        return kExitError;
    }
    return kExitError;
}

}  // namespace jdconvex
