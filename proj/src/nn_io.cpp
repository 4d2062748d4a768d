#include "drltrade/nn_io.hpp"

namespace drltrade::nn {

namespace {

constexpr int kMlpVersion = 1;

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    // Row-major nested arrays.
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) throw io_error("checkpoint: matrix row count");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw io_error("checkpoint: matrix column count");
        }
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from_json(const nlohmann::json& j, Eigen::Index size) {
    const auto values = j.get<std::vector<double>>();
    if (static_cast<Eigen::Index>(values.size()) != size) throw io_error("checkpoint: vector length");
    return Eigen::Map<const Eigen::VectorXd>(values.data(), size);
}

}  // namespace

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
    }
    return "identity";
}

Activation activation_from_string(const std::string& s) {
    if (s == "identity") return Activation::Identity;
    if (s == "relu") return Activation::Relu;
    if (s == "tanh") return Activation::Tanh;
    throw config_error("unknown activation '" + s + "'");
}

nlohmann::json to_json(const Mlpd& net) {
    nlohmann::json j;
    j["format"] = "drltrade.mlp";
    j["version"] = kMlpVersion;
    j["layer_sizes"] = net.layer_sizes;
    j["hidden_activation"] = to_string(net.hidden_activation);
    j["output_activation"] = to_string(net.output_activation);
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        layers.push_back({{"weights", matrix_to_json(net.weights[l])}, {"biases", vector_to_json(net.biases[l])}});
    }
    j["layers"] = std::move(layers);
    return j;
}

Mlpd mlp_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "drltrade.mlp") throw io_error("checkpoint: not an MLP document");
        if (j.at("version").get<int>() != kMlpVersion) throw io_error("checkpoint: unsupported MLP version");
        Mlpd net;
        net.layer_sizes = j.at("layer_sizes").get<std::vector<Eigen::Index>>();
        net.hidden_activation = activation_from_string(j.at("hidden_activation").get<std::string>());
        net.output_activation = activation_from_string(j.at("output_activation").get<std::string>());
        const auto& layers = j.at("layers");
        if (net.layer_sizes.size() < 2 || layers.size() + 1 != net.layer_sizes.size()) {
            throw io_error("checkpoint: layer count mismatch");
        }
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const auto rows = net.layer_sizes[l + 1];
            const auto cols = net.layer_sizes[l];
            net.weights.push_back(matrix_from_json(layers[l].at("weights"), rows, cols));
            net.biases.push_back(vector_from_json(layers[l].at("biases"), rows));
        }
        if (!net.all_finite()) throw io_error("checkpoint: non-finite parameters");
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw io_error(std::string("checkpoint: malformed MLP document: ") + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config) throw io_error(e.what());
        throw;
    }
}

nlohmann::json to_json(const OptimizerState<double>& opt) {
    nlohmann::json j;
    j["step"] = opt.step;
    j["learning_rate"] = opt.learning_rate;
    j["beta1"] = opt.beta1;
    j["beta2"] = opt.beta2;
    j["epsilon"] = opt.epsilon;
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < opt.m_weights.size(); ++l) {
        layers.push_back({{"m_weights", matrix_to_json(opt.m_weights[l])},
                          {"v_weights", matrix_to_json(opt.v_weights[l])},
                          {"m_biases", vector_to_json(opt.m_biases[l])},
                          {"v_biases", vector_to_json(opt.v_biases[l])}});
    }
    j["layers"] = std::move(layers);
    return j;
}

OptimizerState<double> optimizer_from_json(const nlohmann::json& j, const Mlpd& net) {
    try {
        OptimizerState<double> opt = make_optimizer(net, j.at("learning_rate").get<double>(), j.at("beta1").get<double>(),
                                                    j.at("beta2").get<double>(), j.at("epsilon").get<double>());
        opt.step = j.at("step").get<std::int64_t>();
        const auto& layers = j.at("layers");
        if (layers.size() != net.num_layers()) throw io_error("checkpoint: optimizer layer count mismatch");
        for (std::size_t l = 0; l < net.num_layers(); ++l) {
            const auto rows = net.weights[l].rows();
            const auto cols = net.weights[l].cols();
            opt.m_weights[l] = matrix_from_json(layers[l].at("m_weights"), rows, cols);
            opt.v_weights[l] = matrix_from_json(layers[l].at("v_weights"), rows, cols);
            opt.m_biases[l] = vector_from_json(layers[l].at("m_biases"), rows);
            opt.v_biases[l] = vector_from_json(layers[l].at("v_biases"), rows);
        }
        return opt;
    } catch (const nlohmann::json::exception& e) {
        throw io_error(std::string("checkpoint: malformed optimizer document: ") + e.what());
    }
}

}  // namespace drltrade::nn
