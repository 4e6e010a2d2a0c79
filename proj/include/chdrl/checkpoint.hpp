#pragma once

#include <string>

#include <json.hpp>

#include "chdrl/numerics.hpp"

namespace chdrl {

// {"layer_sizes": [...], "activation": "tanh", "flat_params": [...]}
nlohmann::json network_to_json(const Mlp<double>& net);
Mlp<double> network_from_json(const nlohmann::json& j);

void save_network(const Mlp<double>& net, const std::string& path);
Mlp<double> load_network(const std::string& path);

} // namespace chdrl
