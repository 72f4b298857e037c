#include "ebsvie/problem_io.hpp"

#include <cstdint>
#include <cstdio>
#include <set>

#include <nlohmann/json.hpp>

#include "ebsvie/errors.hpp"

namespace ebsvie {
namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.contains(key)) {
            throw LoadError("model", "unknown key '" + key + "' in " + where);
        }
    }
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) throw LoadError("model", "missing key '" + key + "' in " + where);
    return obj.at(key);
}

template <typename Family, typename Resolve>
std::pair<Family, std::vector<double>> read_family(const json& obj, const std::string& where,
                                                   Resolve resolve, double* shift = nullptr) {
    if (!obj.is_object()) throw LoadError("model", where + " must be an object");
    std::set<std::string> allowed{"family", "params"};
    if (shift) allowed.insert("shift");
    reject_unknown_keys(obj, allowed, where);
    const auto name = require(obj, "family", where).get<std::string>();
    const Family family = resolve(name);
    std::vector<double> params;
    if (obj.contains("params")) params = obj.at("params").get<std::vector<double>>();
    if (params.size() != param_count(family)) {
        throw LoadError("model", where + " family '" + name + "' expects " +
                                     std::to_string(param_count(family)) + " params, got " +
                                     std::to_string(params.size()));
    }
    if (shift && obj.contains("shift")) *shift = obj.at("shift").get<double>();
    return {family, std::move(params)};
}

template <typename Family>
json write_family(Family family, const std::vector<double>& params) {
    return json{{"family", std::string(family_name(family))}, {"params", params}};
}

json to_json_value(const ProblemSpec& spec) {
    json free_term = write_family(spec.free_term.family, spec.free_term.params);
    if (spec.free_term.shift != 0.0) free_term["shift"] = spec.free_term.shift;
    return json{{"dim_state", spec.dim_state},
                {"dim_value", spec.dim_value},
                {"dim_noise", spec.dim_noise},
                {"horizon", spec.horizon},
                {"drift", write_family(spec.drift.family, spec.drift.params)},
                {"diffusion", write_family(spec.diffusion.family, spec.diffusion.params)},
                {"generator", write_family(spec.generator.family, spec.generator.params)},
                {"free_term", free_term},
                {"lipschitz_L", spec.lipschitz_L},
                {"modulus_rho", write_family(spec.modulus_rho.family, spec.modulus_rho.params)},
                {"flags",
                 {{"x_independent", spec.flags.x_independent},
                  {"yprime_independent", spec.flags.yprime_independent},
                  {"y_independent", spec.flags.y_independent}}}};
}

ProblemSpec base(double horizon = 1.0) {
    ProblemSpec s;
    s.horizon = horizon;
    s.modulus_rho.params = {1.0, 1.0};
    return s;
}

}  // namespace

ProblemSpec problem_from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw LoadError("model", std::string("problem document is not valid JSON: ") + e.what());
    }
    const std::string where = "problem";
    if (!doc.is_object()) throw LoadError("model", "problem document must be a JSON object");
    reject_unknown_keys(doc,
                        {"dim_state", "dim_value", "dim_noise", "horizon", "drift", "diffusion",
                         "generator", "free_term", "lipschitz_L", "modulus_rho", "flags"},
                        where);
    ProblemSpec spec;
    try {
        spec.dim_state = require(doc, "dim_state", where).get<int>();
        spec.dim_value = doc.value("dim_value", 1);
        spec.dim_noise = doc.value("dim_noise", spec.dim_state);
        spec.horizon = require(doc, "horizon", where).get<double>();
        std::tie(spec.drift.family, spec.drift.params) = read_family<DriftFamily>(
            require(doc, "drift", where), "drift", [](const std::string& n) { return drift_family_from(n); });
        std::tie(spec.diffusion.family, spec.diffusion.params) = read_family<DiffusionFamily>(
            require(doc, "diffusion", where), "diffusion",
            [](const std::string& n) { return diffusion_family_from(n); });
        std::tie(spec.generator.family, spec.generator.params) = read_family<GeneratorFamily>(
            require(doc, "generator", where), "generator",
            [](const std::string& n) { return generator_family_from(n); });
        std::tie(spec.free_term.family, spec.free_term.params) = read_family<FreeTermFamily>(
            require(doc, "free_term", where), "free_term",
            [](const std::string& n) { return free_term_family_from(n); }, &spec.free_term.shift);
        spec.lipschitz_L = require(doc, "lipschitz_L", where).get<double>();
        if (doc.contains("modulus_rho")) {
            std::tie(spec.modulus_rho.family, spec.modulus_rho.params) =
                read_family<ModulusFamily>(doc.at("modulus_rho"), "modulus_rho",
                                           [](const std::string& n) { return modulus_family_from(n); });
        }
        if (doc.contains("flags")) {
            const auto& f = doc.at("flags");
            reject_unknown_keys(f, {"x_independent", "yprime_independent", "y_independent"},
                                "flags");
            spec.flags.x_independent = f.value("x_independent", false);
            spec.flags.yprime_independent = f.value("yprime_independent", false);
            spec.flags.y_independent = f.value("y_independent", false);
        }
    } catch (const json::exception& e) {
        throw LoadError("model", std::string("malformed problem document: ") + e.what());
    }
    try {
        spec.check();
    } catch (const ArgumentError& e) {
        throw LoadError("model", e.what());
    }
    return spec;
}

std::string problem_to_json(const ProblemSpec& spec, int indent) {
    return to_json_value(spec).dump(indent);
}

std::string problem_hash(const ProblemSpec& spec) {
    const std::string text = to_json_value(spec).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace catalog {

ProblemSpec constant(double c) {
    ProblemSpec s = base();
    s.drift = {DriftFamily::OrnsteinUhlenbeck, {1.0, 0.0}};
    s.diffusion = {DiffusionFamily::Constant, {1.0}};
    s.generator = {GeneratorFamily::Zero, {}};
    s.free_term = {FreeTermFamily::Constant, {c}};
    s.flags = {true, true, true};
    return s;
}

ProblemSpec deterministic_linear(double a, double beta) {
    ProblemSpec s = base();
    s.generator = {GeneratorFamily::Linear, {a, beta, 0.0, 0.0, 0.0}};
    s.free_term = {FreeTermFamily::AffineT, {1.0, 0.5}};
    s.lipschitz_L = std::max(std::abs(a), std::abs(beta));
    s.modulus_rho.params = {0.5, 1.0};
    s.flags = {true, beta == 0.0, a == 0.0};
    return s;
}

ProblemSpec diagonal_volterra(double beta, double psi0) {
    ProblemSpec s = base();
    s.generator = {GeneratorFamily::Linear, {0.0, beta, 0.0, 0.0, 0.0}};
    s.free_term = {FreeTermFamily::Constant, {psi0}};
    s.lipschitz_L = std::abs(beta);
    s.flags = {true, false, true};
    return s;
}

ProblemSpec heat_quadratic() {
    ProblemSpec s = base();
    s.diffusion = {DiffusionFamily::Constant, {1.0}};
    s.free_term = {FreeTermFamily::QuadraticX, {1.0, 0.0}};
    s.flags = {false, true, true};
    return s;
}

ProblemSpec heat_linear() {
    ProblemSpec s = base();
    s.diffusion = {DiffusionFamily::Constant, {1.0}};
    s.free_term = {FreeTermFamily::AffineX, {1.0, 0.0}};
    s.flags = {false, true, true};
    return s;
}

ProblemSpec nonlinear_ou() {
    ProblemSpec s = base();
    s.drift = {DriftFamily::OrnsteinUhlenbeck, {1.0, 0.0}};
    s.diffusion = {DiffusionFamily::Constant, {1.0}};
    s.generator = {GeneratorFamily::Composite, {0.3, 0.3, 0.3}};
    s.free_term = {FreeTermFamily::SinTTanhX, {1.0}};
    s.lipschitz_L = 0.3;
    s.flags = {false, false, false};
    return s;
}

ProblemSpec tanh_product() {
    ProblemSpec s = base();
    s.generator = {GeneratorFamily::TanhProduct, {1.0}};
    s.free_term = {FreeTermFamily::AffineT, {1.0, 0.5}};
    s.lipschitz_L = 1.0;
    s.modulus_rho.params = {0.5, 1.0};
    s.flags = {true, false, false};
    return s;
}

std::vector<std::string> names() {
    return {"constant",       "deterministic_linear", "diagonal_volterra", "heat_quadratic",
            "heat_linear",    "nonlinear_ou",         "tanh_product"};
}

ProblemSpec by_name(std::string_view name) {
    if (name == "constant") return constant();
    if (name == "deterministic_linear") return deterministic_linear();
    if (name == "diagonal_volterra") return diagonal_volterra();
    if (name == "heat_quadratic") return heat_quadratic();
    if (name == "heat_linear") return heat_linear();
    if (name == "nonlinear_ou") return nonlinear_ou();
    if (name == "tanh_product") return tanh_product();
    throw LoadError("model", "unknown catalog instance '" + std::string(name) + "'");
}

}  // namespace catalog

}  // namespace ebsvie
