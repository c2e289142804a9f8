#include "nnevclus/config.hpp"

#include <fstream>
#include <sstream>

#include "nnevclus/csv.hpp"
#include "nnevclus/errors.hpp"

namespace nnevclus {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

bool parseBool(const std::string& v, const std::string& ctx) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw IoError(ctx + ": expected a boolean, got '" + v + "'");
}

std::vector<int> parseIntList(const std::string& v, const std::string& ctx) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parseInt(item, ctx));
    }
    return out;
}

std::string pairModeName(PairMode m, bool isAuto) {
    if (isAuto) return "auto";
    switch (m) {
        case PairMode::Dense: return "dense";
        case PairMode::Sampled: return "sampled";
        case PairMode::Minibatch: return "minibatch";
    }
    return "?";
}

}  // namespace

RunConfig parseConfig(const std::string& text, const std::string& context) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        const std::string ctx = context + ":" + std::to_string(lineNo);
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw IoError(ctx + ": unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw IoError(ctx + ": expected key = value");
        const std::string key = section + "." + trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));

        if (key == "data.attributes") cfg.attributesPath = value;
        else if (key == "data.dissimilarities") cfg.dissimilaritiesPath = value;
        else if (key == "data.dissimilarity_format") {
            if (value == "square") cfg.dissimilarityFormat = RunConfig::DissimFormat::Square;
            else if (value == "triplet") cfg.dissimilarityFormat = RunConfig::DissimFormat::Triplet;
            else throw IoError(ctx + ": unknown dissimilarity format '" + value + "'");
        } else if (key == "data.mode") {
            if (value == "attribute") cfg.mode = RunConfig::DataMode::Attribute;
            else if (value == "relational") cfg.mode = RunConfig::DataMode::Relational;
            else throw IoError(ctx + ": unknown data mode '" + value + "'");
        } else if (key == "data.constraints") cfg.constraintsPath = value;
        else if (key == "data.labels") cfg.labelsPath = value;
        else if (key == "model.clusters") cfg.clusters = parseInt(value, ctx);
        else if (key == "model.scheme") cfg.scheme = focalSchemeFromString(value);
        else if (key == "model.hidden") cfg.hiddenSizes = parseIntList(value, ctx);
        else if (key == "transform.d0_quantile") cfg.d0Quantile = parseDouble(value, ctx);
        else if (key == "transform.pair_mode") {
            cfg.pairModeAuto = value == "auto";
            if (value == "dense") cfg.pairMode = PairMode::Dense;
            else if (value == "sampled") cfg.pairMode = PairMode::Sampled;
            else if (value == "minibatch") cfg.pairMode = PairMode::Minibatch;
            else if (value != "auto") throw IoError(ctx + ": unknown pair mode '" + value + "'");
        } else if (key == "transform.p") cfg.sampledP = parseInt(value, ctx);
        else if (key == "transform.s") cfg.blocks = parseInt(value, ctx);
        else if (key == "transform.pca_p") cfg.pcaComponents = parseInt(value, ctx);
        else if (key == "penalty.lambda") cfg.lambda = parseDouble(value, ctx);
        else if (key == "penalty.xi") cfg.xi = parseDouble(value, ctx);
        else if (key == "penalty.nu") cfg.nuBlend = parseDouble(value, ctx);
        else if (key == "svm.enabled") cfg.svmEnabled = parseBool(value, ctx);
        else if (key == "svm.nu") cfg.svmNu = parseDouble(value, ctx);
        else if (key == "svm.sigma") cfg.svmSigma = parseDouble(value, ctx);
        else if (key == "optimizer.max_epochs") cfg.maxEpochs = parseInt(value, ctx);
        else if (key == "optimizer.restarts") cfg.restarts = parseInt(value, ctx);
        else if (key == "optimizer.initial_step") cfg.initialStep = parseDouble(value, ctx);
        else if (key == "optimizer.step_up") cfg.stepUp = parseDouble(value, ctx);
        else if (key == "optimizer.step_down") cfg.stepDown = parseDouble(value, ctx);
        else if (key == "optimizer.learning_rate") cfg.learningRate = parseDouble(value, ctx);
        else if (key == "optimizer.rms_decay") cfg.rmsDecay = parseDouble(value, ctx);
        else if (key == "optimizer.rms_stabilizer") cfg.rmsStabilizer = parseDouble(value, ctx);
        else if (key == "optimizer.early_stopping") cfg.earlyStopping = parseBool(value, ctx);
        else if (key == "optimizer.patience") cfg.patience = parseInt(value, ctx);
        else if (key == "optimizer.batch_threshold") cfg.batchThreshold = parseInt(value, ctx);
        else if (key == "run.seed") {
            try {
                std::size_t pos = 0;
                cfg.seed = std::stoull(value, &pos);
                if (pos != value.size()) throw std::invalid_argument(value);
            } catch (const std::exception&) {
                throw IoError(ctx + ": cannot parse seed '" + value + "'");
            }
        }
        else if (key == "run.threads") cfg.threads = parseInt(value, ctx);
        else if (key == "run.out") cfg.outDir = value;
        else throw IoError(ctx + ": unknown config key '" + key + "'");
    }
    return cfg;
}

RunConfig loadConfigFile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parseConfig(buffer.str(), path);
}

std::string serializeConfig(const RunConfig& cfg) {
    std::ostringstream out;
    out << "[data]\n";
    out << "attributes = " << cfg.attributesPath << "\n";
    out << "dissimilarities = " << cfg.dissimilaritiesPath << "\n";
    out << "dissimilarity_format = "
        << (cfg.dissimilarityFormat == RunConfig::DissimFormat::Square ? "square" : "triplet")
        << "\n";
    out << "mode = " << (cfg.mode == RunConfig::DataMode::Attribute ? "attribute" : "relational")
        << "\n";
    out << "constraints = " << cfg.constraintsPath << "\n";
    out << "labels = " << cfg.labelsPath << "\n";
    out << "\n[model]\n";
    out << "clusters = " << cfg.clusters << "\n";
    out << "scheme = " << toString(cfg.scheme) << "\n";
    out << "hidden = ";
    for (std::size_t i = 0; i < cfg.hiddenSizes.size(); ++i)
        out << (i ? "," : "") << cfg.hiddenSizes[i];
    out << "\n";
    out << "\n[transform]\n";
    out << "d0_quantile = " << formatDouble(cfg.d0Quantile) << "\n";
    out << "pair_mode = " << pairModeName(cfg.pairMode, cfg.pairModeAuto) << "\n";
    out << "p = " << cfg.sampledP << "\n";
    out << "s = " << cfg.blocks << "\n";
    out << "pca_p = " << cfg.pcaComponents << "\n";
    out << "\n[penalty]\n";
    out << "lambda = " << formatDouble(cfg.lambda) << "\n";
    out << "xi = " << formatDouble(cfg.xi) << "\n";
    out << "nu = " << formatDouble(cfg.nuBlend) << "\n";
    out << "\n[svm]\n";
    out << "enabled = " << (cfg.svmEnabled ? "true" : "false") << "\n";
    out << "nu = " << formatDouble(cfg.svmNu) << "\n";
    out << "sigma = " << formatDouble(cfg.svmSigma) << "\n";
    out << "\n[optimizer]\n";
    out << "max_epochs = " << cfg.maxEpochs << "\n";
    out << "restarts = " << cfg.restarts << "\n";
    out << "initial_step = " << formatDouble(cfg.initialStep) << "\n";
    out << "step_up = " << formatDouble(cfg.stepUp) << "\n";
    out << "step_down = " << formatDouble(cfg.stepDown) << "\n";
    out << "learning_rate = " << formatDouble(cfg.learningRate) << "\n";
    out << "rms_decay = " << formatDouble(cfg.rmsDecay) << "\n";
    out << "rms_stabilizer = " << formatDouble(cfg.rmsStabilizer) << "\n";
    out << "early_stopping = " << (cfg.earlyStopping ? "true" : "false") << "\n";
    out << "patience = " << cfg.patience << "\n";
    out << "batch_threshold = " << cfg.batchThreshold << "\n";
    out << "\n[run]\n";
    out << "seed = " << cfg.seed << "\n";
    out << "threads = " << cfg.threads << "\n";
    out << "out = " << cfg.outDir << "\n";
    return out.str();
}

}  // namespace nnevclus
