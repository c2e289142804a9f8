#include "nnevclus/bundle.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nnevclus/errors.hpp"

namespace nnevclus {

namespace {

using nlohmann::json;

std::string fnv1a64(const std::string& data) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char ch : data) {
        hash ^= ch;
        hash *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

json matrixToJson(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrixFromJson(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw IoError("bundle field " + what + " is not a matrix");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (static_cast<Eigen::Index>(j[static_cast<std::size_t>(r)].size()) != cols)
            throw IoError("bundle field " + what + " has ragged rows");
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

json vectorToJson(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Eigen::VectorXd vectorFromJson(const json& j, const std::string& what) {
    if (!j.is_array()) throw IoError("bundle field " + what + " is not a vector");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
    return v;
}

json payloadToJson(const ModelBundle& b) {
    json payload;
    payload["input_mode"] = b.inputMode == ModelBundle::InputMode::Attribute ? "attribute" : "relational";
    payload["clusters"] = b.clusterCount;
    payload["scheme"] = toString(b.scheme);
    json net;
    net["hidden"] = json::array();
    for (const auto& w : b.params.hiddenWeights) net["hidden"].push_back(matrixToJson(w));
    net["output"] = matrixToJson(b.params.outputWeights);
    net["beta0"] = b.params.beta0;
    net["beta1"] = b.params.beta1;
    payload["network"] = std::move(net);
    json phi;
    phi["gamma"] = b.phi.gamma;
    phi["delta0"] = b.phi.delta0;
    phi["quantile"] = b.phi.quantileLevel;
    payload["phi"] = std::move(phi);
    if (b.svm) {
        json svm;
        svm["support_vectors"] = matrixToJson(b.svm->supportVectors);
        svm["alphas"] = vectorToJson(b.svm->alphas);
        svm["offset"] = b.svm->offset;
        svm["sigma"] = b.svm->sigma;
        svm["nu"] = b.svm->nu;
        payload["svm"] = std::move(svm);
    }
    if (b.pca) {
        json pca;
        pca["mean_row"] = vectorToJson(b.pca->meanRow);
        pca["projection"] = matrixToJson(b.pca->projection);
        pca["requested_components"] = b.pca->requestedComponents;
        payload["pca"] = std::move(pca);
    }
    return payload;
}

ModelBundle payloadFromJson(const json& payload, const std::string& context) {
    ModelBundle b;
    const std::string mode = payload.at("input_mode").get<std::string>();
    if (mode == "attribute")
        b.inputMode = ModelBundle::InputMode::Attribute;
    else if (mode == "relational")
        b.inputMode = ModelBundle::InputMode::Relational;
    else
        throw IoError(context + ": unknown input mode '" + mode + "'");
    b.clusterCount = payload.at("clusters").get<int>();
    b.scheme = focalSchemeFromString(payload.at("scheme").get<std::string>());
    const json& net = payload.at("network");
    for (const auto& w : net.at("hidden"))
        b.params.hiddenWeights.push_back(matrixFromJson(w, "network.hidden"));
    b.params.outputWeights = matrixFromJson(net.at("output"), "network.output");
    b.params.beta0 = net.at("beta0").get<double>();
    b.params.beta1 = net.at("beta1").get<double>();
    const json& phi = payload.at("phi");
    b.phi.gamma = phi.at("gamma").get<double>();
    b.phi.delta0 = phi.at("delta0").get<double>();
    b.phi.quantileLevel = phi.at("quantile").get<double>();
    if (payload.contains("svm")) {
        OneClassSvm svm;
        svm.supportVectors = matrixFromJson(payload["svm"].at("support_vectors"), "svm.sv");
        svm.alphas = vectorFromJson(payload["svm"].at("alphas"), "svm.alphas");
        svm.offset = payload["svm"].at("offset").get<double>();
        svm.sigma = payload["svm"].at("sigma").get<double>();
        svm.nu = payload["svm"].at("nu").get<double>();
        b.svm = std::move(svm);
    }
    if (payload.contains("pca")) {
        PcaEmbedding pca;
        pca.meanRow = vectorFromJson(payload["pca"].at("mean_row"), "pca.mean_row");
        pca.projection = matrixFromJson(payload["pca"].at("projection"), "pca.projection");
        pca.requestedComponents = payload["pca"].at("requested_components").get<int>();
        b.pca = std::move(pca);
    }
    return b;
}

}  // namespace

int ModelBundle::expectedInputWidth() const {
    if (inputMode == InputMode::Relational) {
        if (!pca) throw ValidationError("relational bundle is missing its embedding");
        return static_cast<int>(pca->meanRow.size());
    }
    return static_cast<int>(params.hiddenWeights.front().cols() - 1);
}

std::shared_ptr<const FocalSetStructure> ModelBundle::focalSets() const {
    return std::make_shared<FocalSetStructure>(buildFocalSets(Frame(clusterCount), scheme));
}

EvidentialPartition ModelBundle::predict(const Eigen::MatrixXd& Xnew) const {
    if (Xnew.cols() != expectedInputWidth() && Xnew.rows() > 0)
        throw ValidationError("input width " + std::to_string(Xnew.cols()) +
                              " does not match the bundle's expected width " +
                              std::to_string(expectedInputWidth()));
    Eigen::MatrixXd features;
    if (inputMode == InputMode::Relational) {
        features.resize(Xnew.rows(), pca->effectiveComponents());
        for (Eigen::Index i = 0; i < Xnew.rows(); ++i)
            features.row(i) = pcaProject(*pca, Xnew.row(i).transpose()).transpose();
    } else {
        features = Xnew;
    }
    const auto fs = focalSets();
    std::optional<Eigen::VectorXd> scores;
    if (svm && features.rows() > 0) scores = svm->decisionBatch(features);
    if (features.rows() == 0) {
        EvidentialPartition ep;
        ep.fs = fs;
        ep.masses.resize(0, fs->size());
        return ep;
    }
    return predictMasses(params, fs, features, scores);
}

std::string bundleToJson(const ModelBundle& bundle) {
    json root;
    root["format"] = "nnevclus-model";
    root["version"] = ModelBundle::kFormatVersion;
    json payload = payloadToJson(bundle);
    root["checksum"] = fnv1a64(payload.dump());
    root["payload"] = std::move(payload);
    return root.dump(2) + "\n";
}

ModelBundle bundleFromJson(const std::string& text, const std::string& context) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(context + ": invalid JSON (" + e.what() + ")");
    }
    try {
        if (root.at("format").get<std::string>() != "nnevclus-model")
            throw IoError(context + ": not a model bundle");
        const int version = root.at("version").get<int>();
        if (version != ModelBundle::kFormatVersion)
            throw IoError(context + ": unsupported bundle version " + std::to_string(version));
        const std::string expected = root.at("checksum").get<std::string>();
        const std::string actual = fnv1a64(root.at("payload").dump());
        if (expected != actual)
            throw IoError(context + ": checksum mismatch (stored " + expected + ", computed " +
                          actual + ")");
        return payloadFromJson(root.at("payload"), context);
    } catch (const json::exception& e) {
        throw IoError(context + ": malformed bundle (" + e.what() + ")");
    }
}

void saveBundle(const std::string& path, const ModelBundle& bundle) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << bundleToJson(bundle);
    if (!out) throw IoError("write failed for " + path);
}

ModelBundle loadBundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return bundleFromJson(buffer.str(), path);
}

}  // namespace nnevclus
