#include "jdconvex/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "jdconvex/errors.hpp"

namespace jdconvex {

using nlohmann::json;

namespace {

const json& field(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key)) throw SchemaError(path + key, "missing field");
    return obj.at(key);
}

std::string expr_text(const json& j, const std::string& path) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number()) return format_double(j.get<double>());
    throw SchemaError(path, "expected an expression string or a number");
}

CoeffExpr expr_field(const json& j, const std::string& path, std::size_t n, VarPolicy policy) {
    std::string text = expr_text(j, path);
    try {
        return parse(text, n, policy);
    } catch (const ParseError& e) {
        throw SchemaError(path, e.what());
    }
}

std::vector<CoeffExpr> expr_vector(const json& j, const std::string& path, std::size_t n, VarPolicy policy) {
    if (!j.is_array() || j.size() != n)
        throw SchemaError(path, "expected an array of " + std::to_string(n) + " expressions");
    std::vector<CoeffExpr> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(expr_field(j[i], path + "[" + std::to_string(i) + "]", n, policy));
    return out;
}

double number_field(const json& j, const std::string& path) {
    if (!j.is_number()) throw SchemaError(path, "expected a number");
    return j.get<double>();
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

ModelSpec parse_model(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw SchemaError("", std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw SchemaError("", "model file must be a JSON object");
    if (doc.contains("schema_version") && doc["schema_version"] != kSchemaVersion)
        throw SchemaError("schema_version", "unsupported version");

    const json& jn = field(doc, "n", "");
    if (!jn.is_number_integer() || jn.get<long>() < 1) throw SchemaError("n", "expected a positive integer");
    auto n = static_cast<std::size_t>(jn.get<long>());
    double T = number_field(field(doc, "T", ""), "T");
    if (!(T > 0.0)) throw SchemaError("T", "horizon must be positive");

    const json& jb = field(doc, "beta", "");
    if (!jb.is_array() || jb.size() != n) throw SchemaError("beta", "expected " + std::to_string(n) + " rows");
    std::vector<CoeffExpr> beta;
    for (std::size_t i = 0; i < n; ++i) {
        auto row = expr_vector(jb[i], "beta[" + std::to_string(i) + "]", n, {true, true, false});
        for (auto& e : row) beta.push_back(std::move(e));
    }
    CoeffExpr lambda = expr_field(field(doc, "lambda", ""), "lambda", n, {false, true, false});

    JumpField jumps;
    if (!doc.contains("jumps") || doc["jumps"].is_null()) {
        JumpAtom zero{1.0, {}};
        for (std::size_t i = 0; i < n; ++i) zero.phi.push_back(parse("0", n));
        jumps = AtomJumps{{zero}};
    } else {
        const json& jj = doc["jumps"];
        const json& type = field(jj, "type", "jumps.");
        if (type == "density") {
            DensityJumps d;
            d.phi = expr_vector(field(jj, "phi", "jumps."), "jumps.phi", n, {});
            if (jj.contains("n_z")) {
                if (!jj["n_z"].is_number_integer() || jj["n_z"].get<long>() < 1)
                    throw SchemaError("jumps.n_z", "expected a positive integer");
                d.n_z = jj["n_z"].get<std::size_t>();
            }
            jumps = std::move(d);
        } else if (type == "atoms") {
            const json& ja = field(jj, "atoms", "jumps.");
            if (!ja.is_array() || ja.empty()) throw SchemaError("jumps.atoms", "expected a non-empty array");
            AtomJumps a;
            double sum = 0.0;
            for (std::size_t k = 0; k < ja.size(); ++k) {
                std::string p = "jumps.atoms[" + std::to_string(k) + "].";
                JumpAtom atom;
                atom.weight = number_field(field(ja[k], "weight", p), p + "weight");
                if (!(atom.weight > 0.0)) throw SchemaError("jumps.atoms.weights", "weights must be positive");
                atom.phi = expr_vector(field(ja[k], "phi", p), p + "phi", n, {true, true, false});
                sum += atom.weight;
                a.atoms.push_back(std::move(atom));
            }
            if (std::abs(sum - 1.0) > 1e-12)
                throw SchemaError("jumps.atoms.weights", "weights sum to " + format_double(sum) + ", expected 1");
            jumps = std::move(a);
        } else {
            throw SchemaError("jumps.type", "expected \"density\" or \"atoms\"");
        }
    }
    std::string description;
    if (doc.contains("description")) {
        if (!doc["description"].is_string()) throw SchemaError("description", "expected a string");
        description = doc["description"].get<std::string>();
    }
    try {
        return ModelSpec(n, T, std::move(beta), std::move(lambda), std::move(jumps), description);
    } catch (const ModelError& e) {
        throw SchemaError("", e.what());
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ModelSpec load_model(const std::string& path) { return parse_model(read_file(path)); }

std::string model_to_json(const ModelSpec& m) {
    const std::size_t n = m.dimension();
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["n"] = n;
    doc["T"] = m.horizon();
    json beta = json::array();
    for (std::size_t i = 0; i < n; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < n; ++j) row.push_back(m.beta_expr(i, j).source());
        beta.push_back(row);
    }
    doc["beta"] = beta;
    doc["lambda"] = m.lambda_expr().source();
    if (const auto* d = std::get_if<DensityJumps>(&m.jumps())) {
        json phi = json::array();
        for (const auto& e : d->phi) phi.push_back(e.source());
        doc["jumps"] = {{"type", "density"}, {"n_z", d->n_z}, {"phi", phi}};
    } else {
        json atoms = json::array();
        for (const auto& a : std::get<AtomJumps>(m.jumps()).atoms) {
            json phi = json::array();
            for (const auto& e : a.phi) phi.push_back(e.source());
            atoms.push_back({{"weight", a.weight}, {"phi", phi}});
        }
        doc["jumps"] = {{"type", "atoms"}, {"atoms", atoms}};
    }
    if (!m.description().empty()) doc["description"] = m.description();
    return doc.dump(2) + "\n";
}

void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        if (!out) throw Error("write failed for " + tmp.string());
    }
    fs::rename(tmp, target);
}

}  // namespace jdconvex
