#include "mfbf/checkpoint.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>

namespace mfbf {

using nlohmann::ordered_json;

void write_checkpoint(const MlpRegressor& model, std::ostream& out, const std::map<std::string, std::string>& metadata)
{
    const Mlp& net = model.network();
    const FeatureEncoder& enc = model.encoder();
    ordered_json j;
    j["format"] = "mfbf-mlp-v1";
    j["layer_sizes"] = net.layer_sizes();
    j["activation"] = "relu";
    j["dropout"] = net.dropout();
    j["seed"] = net.seed();
    j["target_scale"] = model.target_scale();
    ordered_json e;
    e["lower"] = std::vector<double>(enc.normalizer().lower().data(),
                                     enc.normalizer().lower().data() + enc.normalizer().lower().size());
    e["upper"] = std::vector<double>(enc.normalizer().upper().data(),
                                     enc.normalizer().upper().data() + enc.normalizer().upper().size());
    e["angle_dims"] = enc.angle_dims();
    e["raw_angles"] = enc.raw_angles();
    e["action_count"] = enc.action_count();
    j["encoder"] = e;
    ordered_json weights = ordered_json::array();
    ordered_json biases = ordered_json::array();
    for (std::size_t l = 0; l < net.weights().size(); ++l) {
        const auto& w = net.weights()[l];
        std::vector<float> flat;
        flat.reserve(static_cast<std::size_t>(w.size()));
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c)
                flat.push_back(w(r, c));
        weights.push_back(flat);
        const auto& b = net.biases()[l];
        biases.push_back(std::vector<float>(b.data(), b.data() + b.size()));
    }
    j["weights"] = std::move(weights);
    j["biases"] = std::move(biases);
    j["metadata"] = metadata;
    out << j.dump(1) << '\n';
}

MlpRegressor read_checkpoint(std::istream& in)
{
    ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("checkpoint is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format") != "mfbf-mlp-v1")
            throw std::runtime_error("unsupported checkpoint format");
        if (j.at("activation") != "relu")
            throw std::runtime_error("unsupported activation");
        const auto sizes = j.at("layer_sizes").get<std::vector<int>>();
        const auto dropout = j.at("dropout").get<float>();
        const auto seed = j.at("seed").get<std::uint64_t>();
        const auto scale = j.at("target_scale").get<double>();

        const auto& e = j.at("encoder");
        const auto lower = e.at("lower").get<std::vector<double>>();
        const auto upper = e.at("upper").get<std::vector<double>>();
        FeatureEncoder enc(Normalizer(Eigen::Map<const Eigen::VectorXd>(lower.data(), static_cast<Eigen::Index>(lower.size())),
                                      Eigen::Map<const Eigen::VectorXd>(upper.data(), static_cast<Eigen::Index>(upper.size()))),
                           e.at("angle_dims").get<std::vector<int>>(), e.at("raw_angles").get<bool>(),
                           e.at("action_count").get<int>());

        const auto& jw = j.at("weights");
        const auto& jb = j.at("biases");
        if (sizes.size() < 2 || jw.size() + 1 != sizes.size() || jb.size() + 1 != sizes.size())
            throw std::runtime_error("layer count mismatch");
        std::vector<Eigen::MatrixXf> weights;
        std::vector<Eigen::VectorXf> biases;
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            const auto flat = jw[l].get<std::vector<float>>();
            const auto b = jb[l].get<std::vector<float>>();
            const int rows = sizes[l + 1];
            const int cols = sizes[l];
            if (flat.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) ||
                b.size() != static_cast<std::size_t>(rows))
                throw std::runtime_error("weight count mismatch in layer " + std::to_string(l));
            Eigen::MatrixXf w(rows, cols);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c)
                    w(r, c) = flat[static_cast<std::size_t>(r) * cols + c];
            weights.push_back(std::move(w));
            biases.push_back(Eigen::Map<const Eigen::VectorXf>(b.data(), rows));
        }
        return MlpRegressor(std::move(enc), Mlp(sizes, dropout, seed, std::move(weights), std::move(biases)), scale);
    } catch (const nlohmann::json::exception& ex) {
        throw std::runtime_error(std::string("malformed checkpoint: ") + ex.what());
    }
}

void save_checkpoint(const MlpRegressor& model, const std::filesystem::path& path,
                     const std::map<std::string, std::string>& metadata)
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write checkpoint " + path.string());
    write_checkpoint(model, out, metadata);
    if (!out)
        throw std::runtime_error("failed writing checkpoint " + path.string());
}

MlpRegressor load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open checkpoint " + path.string());
    return read_checkpoint(in);
}

} // namespace mfbf
