#pragma once

#include "drltrade/nn.hpp"

#include <json.hpp>

namespace drltrade::nn {

// Versioned JSON documents. Doubles are written in shortest round-trip form,
// so a save/load cycle is bit-faithful.
nlohmann::json to_json(const Mlpd& net);
Mlpd mlp_from_json(const nlohmann::json& j);

nlohmann::json to_json(const OptimizerState<double>& opt);
OptimizerState<double> optimizer_from_json(const nlohmann::json& j, const Mlpd& net);

}  // namespace drltrade::nn
