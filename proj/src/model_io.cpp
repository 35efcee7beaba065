#include "rpsim/model_io.hpp"

#include <cmath>

#include "rpsim/errors.hpp"

namespace rpsim {
namespace {

double number_field(const nlohmann::json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_number()) throw ConfigError(where + "." + key + ": expected a number");
    return it->get<double>();
}

double number_or(const nlohmann::json& obj, const char* key, double fallback, const std::string& where) {
    return obj.contains(key) ? number_field(obj, key, where) : fallback;
}

std::vector<double> number_array(const nlohmann::json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_array()) throw ConfigError(where + "." + key + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : *it) {
        if (!v.is_number()) throw ConfigError(where + "." + key + ": expected an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

void reject_unknown(const nlohmann::json& obj, std::initializer_list<const char*> known, const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError(where + "." + key + ": unknown field");
    }
}

}  // namespace

AssumptionConstants constants_from_json(const nlohmann::json& c) {
    const std::string where = "model.constants";
    if (!c.is_object()) throw ConfigError(where + ": expected an object");
    reject_unknown(c, {"C_f", "growth", "sigma", "C_xi", "C_hat_f", "q", "L", "p"}, where);
    AssumptionConstants out;
    auto opt = [&](const char* key, std::optional<double>& slot) {
        if (c.contains(key)) slot = number_field(c, key, where);
    };
    opt("C_f", out.one_sided_lipschitz);
    opt("growth", out.growth);
    opt("sigma", out.sigma);
    opt("C_xi", out.initial_bound);
    opt("C_hat_f", out.tangent);
    opt("q", out.poly_exponent);
    opt("L", out.poly_lipschitz);
    opt("p", out.moment_order);
    return out;
}

ModelSpec model_from_json(const nlohmann::json& spec) {
    ModelSpec model;
    if (spec.is_string()) {
        model = builtin_model(spec.get<std::string>());
    } else if (spec.is_object() && spec.contains("builtin")) {
        reject_unknown(spec, {"builtin", "g_scale"}, "model");
        if (!spec["builtin"].is_string()) throw ConfigError("model.builtin: expected a name");
        model = builtin_model(spec["builtin"].get<std::string>());
        if (spec.contains("g_scale")) model = scale_diffusion(std::move(model), number_field(spec, "g_scale", "model"));
    } else if (spec.is_object()) {
        reject_unknown(spec, {"name", "lambda", "drift", "g", "tau", "constants"}, "model");
        PolyTrigFamily fam;
        fam.eigenvalues = number_array(spec, "lambda", "model");
        if (fam.eigenvalues.empty()) throw ConfigError("model.lambda: at least one eigenvalue required");
        if (spec.contains("drift")) {
            const auto& d = spec["drift"];
            if (!d.is_object()) throw ConfigError("model.drift: expected an object");
            reject_unknown(d, {"poly_coeffs", "trig_amp", "trig_freq"}, "model.drift");
            if (d.contains("poly_coeffs")) fam.poly_coeffs = number_array(d, "poly_coeffs", "model.drift");
            fam.trig_amp = number_or(d, "trig_amp", 0.0, "model.drift");
            fam.trig_freq = number_or(d, "trig_freq", 1.0, "model.drift");
        }
        if (spec.contains("g")) {
            const auto& g = spec["g"];
            if (!g.is_object()) throw ConfigError("model.g: expected an object");
            reject_unknown(g, {"amp", "trig_amp", "trig_freq"}, "model.g");
            fam.g_amp = number_or(g, "amp", 0.0, "model.g");
            fam.g_trig_amp = number_or(g, "trig_amp", 0.0, "model.g");
            fam.g_trig_freq = number_or(g, "trig_freq", 1.0, "model.g");
        }
        fam.period = number_or(spec, "tau", 1.0, "model");
        if (spec.contains("constants")) fam.constants = constants_from_json(spec["constants"]);
        const std::string name = spec.contains("name") && spec["name"].is_string() ? spec["name"].get<std::string>()
                                                                                   : std::string("poly-trig");
        model = fam.build(name);
    } else {
        throw ConfigError("model: expected a builtin name or an object");
    }
    model.validate();
    return model;
}

}  // namespace rpsim
