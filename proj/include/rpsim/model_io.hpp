#pragma once

// JSON model descriptions.
//
//   "benchmark-7.1"
//   {"builtin": "benchmark-7.1", "g_scale": 0.0}
//   {"lambda": [..], "drift": {"poly_coeffs": [..], "trig_amp": a, "trig_freq": w},
//    "g": {"amp": s, "trig_amp": b, "trig_freq": v}, "tau": 1.0,
//    "constants": {"C_f": .., "growth": .., "sigma": .., "C_xi": .., "C_hat_f": .., "q": .., "L": .., "p": ..}}

#include <json.hpp>

#include "rpsim/model.hpp"

namespace rpsim {

/// Throws ConfigError naming the offending field.
ModelSpec model_from_json(const nlohmann::json& spec);

/// Parses the "constants" object; unknown keys are rejected.
AssumptionConstants constants_from_json(const nlohmann::json& constants);

}  // namespace rpsim
