#include "chdrl/checkpoint.hpp"

#include <fstream>

namespace chdrl {

nlohmann::json network_to_json(const Mlp<double>& net)
{
    const Vec& flat = net.flatten();
    return {
        {"layer_sizes", net.layer_sizes()},
        {"activation", to_string(net.hidden_activation())},
        {"output_activation", to_string(net.output_activation())},
        {"flat_params", std::vector<double>(flat.data(), flat.data() + flat.size())},
    };
}

Mlp<double> network_from_json(const nlohmann::json& j)
{
    try {
        const auto sizes = j.at("layer_sizes").get<std::vector<Index>>();
        const Activation hidden = activation_from_string(j.value("activation", std::string("tanh")));
        const Activation output = activation_from_string(j.value("output_activation", std::string("identity")));
        Mlp<double> net(sizes, hidden, output);
        const auto flat = j.at("flat_params").get<std::vector<double>>();
        net.load(std::span<const double>(flat));
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed network checkpoint: ") + e.what());
    }
}

void save_network(const Mlp<double>& net, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write checkpoint '" + path + "'");
    out << network_to_json(net).dump() << '\n';
}

Mlp<double> load_network(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot read checkpoint '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("checkpoint '" + path + "' is not valid JSON: " + e.what());
    }
    return network_from_json(j);
}

} // namespace chdrl
