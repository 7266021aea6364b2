#include "dmrl/model_io.hpp"

#include <fstream>

namespace dmrl::reward {

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) {
    auto a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Eigen::VectorXd json_vec(const nlohmann::json& a, const char* what) {
    if (!a.is_array()) throw InputError(std::string("model field '") + what + "' must be an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
    for (size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    return v;
}

}  // namespace

nlohmann::json to_json(const RewardModel& model) {
    nlohmann::json doc;
    doc["feature_dim"] = model.feature_dim();
    doc["standardizer"] = {{"mean", vec_json(model.standardizer.mean())},
                           {"scale", vec_json(model.standardizer.scale())}};
    doc["kernel"] = {{"lengthscale", model.kernel.lengthscale}, {"amplitude", model.kernel.amplitude}};
    doc["lambda"] = model.lambda;
    doc["beta"] = model.beta;
    doc["delta"] = model.delta;
    auto inducing = nlohmann::json::array();
    for (Eigen::Index i = 0; i < model.inducing.rows(); ++i) inducing.push_back(vec_json(model.inducing.row(i).transpose()));
    doc["inducing"] = std::move(inducing);
    doc["alpha"] = vec_json(model.alpha);
    return doc;
}

RewardModel model_from_json(const nlohmann::json& doc) {
    try {
        RewardModel m;
        const auto dim = doc.at("feature_dim").get<Eigen::Index>();
        m.standardizer = Standardizer(json_vec(doc.at("standardizer").at("mean"), "standardizer.mean"),
                                      json_vec(doc.at("standardizer").at("scale"), "standardizer.scale"));
        m.kernel.lengthscale = doc.at("kernel").at("lengthscale").get<double>();
        m.kernel.amplitude = doc.at("kernel").at("amplitude").get<double>();
        m.lambda = doc.at("lambda").get<double>();
        m.beta = doc.at("beta").get<double>();
        m.delta = doc.value("delta", 1.0);
        const auto& rows = doc.at("inducing");
        m.inducing.resize(static_cast<Eigen::Index>(rows.size()), dim);
        for (size_t i = 0; i < rows.size(); ++i) {
            const auto r = json_vec(rows[i], "inducing");
            if (r.size() != dim) throw InputError("inducing point has wrong dimension");
            m.inducing.row(static_cast<Eigen::Index>(i)) = r.transpose();
        }
        m.alpha = json_vec(doc.at("alpha"), "alpha");
        m.validate();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed model document: ") + e.what());
    }
}

void save_json(const std::filesystem::path& path, const nlohmann::json& doc) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << doc.dump(1) << '\n';
}

RewardModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read model file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("model file " + path.string() + " is not valid JSON: " + e.what());
    }
    return model_from_json(doc);
}

}  // namespace dmrl::reward
