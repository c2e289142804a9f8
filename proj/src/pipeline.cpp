#include "nnevclus/pipeline.hpp"

#include <filesystem>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "nnevclus/csv.hpp"
#include "nnevclus/errors.hpp"
#include "nnevclus/rng.hpp"

namespace nnevclus {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

int resolveThreads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

ConstraintSet loadConstraints(const std::string& path, int n) {
    ConstraintSet cs;
    if (path.empty()) return cs;
    const CsvTable table = readCsv(path, /*hasHeader=*/false);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string ctx = path + ":" + std::to_string(r + 1);
        if (row.size() != 3) throw IoError(ctx + ": expected (i, j, ML|CL)");
        const int i = parseInt(row[0], ctx) - 1;
        const int j = parseInt(row[1], ctx) - 1;
        if (row[2] == "ML") cs.mustLink.emplace_back(i, j);
        else if (row[2] == "CL") cs.cannotLink.emplace_back(i, j);
        else throw IoError(ctx + ": constraint type must be ML or CL, got '" + row[2] + "'");
    }
    cs.validate(n);
    return cs;
}

LabelSet loadLabels(const std::string& path, int n, int c) {
    LabelSet ls;
    if (path.empty()) return ls;
    const CsvTable table = readCsv(path, /*hasHeader=*/false);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string ctx = path + ":" + std::to_string(r + 1);
        if (row.size() != 2) throw IoError(ctx + ": expected (i, class)");
        ls.entries.emplace_back(parseInt(row[0], ctx) - 1, parseInt(row[1], ctx));
    }
    ls.validate(n, c);
    return ls;
}

Eigen::MatrixXd loadDissimilarities(const RunConfig& cfg) {
    if (cfg.dissimilarityFormat == RunConfig::DissimFormat::Triplet)
        return readTripletCsv(cfg.dissimilaritiesPath);
    return readSquareMatrixCsv(cfg.dissimilaritiesPath);
}

std::string roughToJson(const RoughPartition& rp) {
    json j;
    auto oneBased = [](const std::vector<int>& v) {
        json arr = json::array();
        for (int i : v) arr.push_back(i + 1);
        return arr;
    };
    j["lower"] = json::array();
    j["upper"] = json::array();
    for (const auto& l : rp.lower) j["lower"].push_back(oneBased(l));
    for (const auto& u : rp.upper) j["upper"].push_back(oneBased(u));
    j["outliers"] = oneBased(rp.outliers);
    return j.dump(2) + "\n";
}

std::string reportToJsonl(const TrainResult& result) {
    std::ostringstream out;
    for (const auto& rec : result.report) {
        json j;
        j["epoch"] = rec.epoch;
        j["loss"] = rec.loss.total;
        j["base"] = rec.loss.base;
        j["regularization"] = rec.loss.regularization;
        j["constraint_term"] = rec.loss.constraintTerm;
        j["label_penalty"] = rec.loss.labelPenalty;
        j["grad_norm"] = rec.gradNorm;
        j["wall_seconds"] = rec.wallSeconds;
        out << j.dump() << "\n";
    }
    json tail;
    tail["final_loss"] = result.finalLoss;
    tail["best_restart"] = result.bestRestart;
    tail["diverged_restarts"] = result.divergedRestarts;
    out << tail.dump() << "\n";
    return out.str();
}

}  // namespace

FitOutcome cmdFit(const RunConfig& cfg) {
    if (cfg.clusters < 1) throw ValidationError("cluster count must be positive");
    const auto fsPtr =
        std::make_shared<FocalSetStructure>(buildFocalSets(Frame(cfg.clusters), cfg.scheme));

    // Inputs: network features X and raw dissimilarities (dense when needed).
    Eigen::MatrixXd X;
    std::optional<Eigen::MatrixXd> D;
    std::optional<PcaEmbedding> pca;
    if (cfg.mode == RunConfig::DataMode::Relational) {
        if (cfg.dissimilaritiesPath.empty())
            throw ValidationError("relational mode needs a dissimilarity file");
        D = symmetrize(loadDissimilarities(cfg));
        auto [embedding, scores] = pcaEmbed(*D, cfg.pcaComponents);
        pca = std::move(embedding);
        X = std::move(scores);
    } else {
        if (cfg.attributesPath.empty()) throw ValidationError("attribute mode needs an attribute file");
        X = readAttributeCsv(cfg.attributesPath).first;
        if (!cfg.dissimilaritiesPath.empty()) D = symmetrize(loadDissimilarities(cfg));
    }
    const int n = static_cast<int>(X.rows());
    if (n < 2) throw ValidationError("need at least two objects to cluster");
    if (D && D->rows() != n)
        throw ValidationError("dissimilarity matrix size does not match the object count");

    PairMode pairMode = cfg.pairMode;
    if (cfg.pairModeAuto) pairMode = n <= cfg.batchThreshold ? PairMode::Dense : PairMode::Minibatch;

    // Transformed pair supply.
    DissimilarityView view;
    PhiCalibration phi;
    if (pairMode == PairMode::Sampled) {
        const auto neighbors = samplePairs(n, cfg.sampledP, Rng::deriveSeed(cfg.seed, 101));
        std::function<double(int, int)> delta;
        if (D) delta = [&](int i, int j) { return (*D)(i, j); };
        else delta = [&](int i, int j) { return (X.row(i) - X.row(j)).norm(); };
        std::tie(view, phi) = phiTransformSampled(n, neighbors, delta, cfg.d0Quantile);
    } else {
        if (!D) D = euclideanDistances(X);
        std::tie(view, phi) = phiTransform(*D, cfg.d0Quantile);
    }

    // Optional novelty gate.
    std::optional<OneClassSvm> svm;
    std::optional<Eigen::VectorXd> svmScores;
    if (cfg.svmEnabled) {
        const double sigma = cfg.svmSigma > 0.0 ? cfg.svmSigma : medianHeuristicSigma(X);
        svm = fitOneClassSvm(X, cfg.svmNu, sigma, Rng::deriveSeed(cfg.seed, 202));
        svmScores = svm->decisionBatch(X);
    }

    TrainingInstance instance;
    instance.X = X;
    instance.fs = fsPtr;
    instance.view = std::move(view);
    instance.svmScores = svmScores;
    instance.constraints = loadConstraints(cfg.constraintsPath, n);
    instance.labels = loadLabels(cfg.labelsPath, n, cfg.clusters);

    LossConfig loss;
    loss.lambda = cfg.lambda;
    loss.xi = cfg.xi;
    loss.nuBlend = cfg.nuBlend;
    loss.mode = pairMode;
    loss.sampledP = cfg.sampledP;
    loss.blocks = cfg.blocks;

    Architecture arch;
    arch.inputDim = static_cast<int>(X.cols());
    arch.focalCount = fsPtr->size();
    arch.hiddenSizes =
        cfg.hiddenSizes.empty() ? std::vector<int>{defaultHiddenSize(arch.focalCount)} : cfg.hiddenSizes;

    const int threads = resolveThreads(cfg.threads);
    TrainResult training;
    if (pairMode == PairMode::Minibatch) {
        MinibatchOptConfig opt;
        opt.blocks = cfg.blocks;
        opt.learningRate = cfg.learningRate;
        opt.decay = cfg.rmsDecay;
        opt.stabilizer = cfg.rmsStabilizer;
        opt.maxEpochs = cfg.maxEpochs;
        opt.restarts = cfg.restarts;
        opt.seed = cfg.seed;
        opt.earlyStopping = cfg.earlyStopping;
        opt.patience = cfg.patience;
        opt.threads = threads;
        training = trainMinibatch(instance, loss, opt, arch);
    } else {
        BatchOptConfig opt;
        opt.maxEpochs = cfg.maxEpochs;
        opt.restarts = cfg.restarts;
        opt.seed = cfg.seed;
        opt.initialStep = cfg.initialStep;
        opt.stepUp = cfg.stepUp;
        opt.stepDown = cfg.stepDown;
        opt.threads = threads;
        training = trainBatch(instance, loss, opt, arch);
    }

    FitOutcome outcome;
    outcome.training = training;
    outcome.bundle.inputMode = cfg.mode == RunConfig::DataMode::Relational
                                   ? ModelBundle::InputMode::Relational
                                   : ModelBundle::InputMode::Attribute;
    outcome.bundle.clusterCount = cfg.clusters;
    outcome.bundle.scheme = cfg.scheme;
    outcome.bundle.params = training.params;
    outcome.bundle.phi = phi;
    outcome.bundle.svm = svm;
    outcome.bundle.pca = pca;
    outcome.partition = predictMasses(training.params, fsPtr, X, svmScores);

    fs::create_directories(cfg.outDir);
    outcome.bundlePath = (fs::path(cfg.outDir) / "model.json").string();
    outcome.partitionCsvPath = (fs::path(cfg.outDir) / "partition.csv").string();
    saveBundle(outcome.bundlePath, outcome.bundle);
    writePartitionCsv(outcome.partitionCsvPath, outcome.partition);
    writeTextFile((fs::path(cfg.outDir) / "rough.json").string(),
                  roughToJson(roughPartition(outcome.partition)));
    writeTextFile((fs::path(cfg.outDir) / "report.jsonl").string(), reportToJsonl(training));
    writeTextFile((fs::path(cfg.outDir) / "config.ini").string(), serializeConfig(cfg));
    return outcome;
}

void cmdPredict(const std::string& bundlePath, const std::string& newDataPath,
                const std::string& outPath) {
    const ModelBundle bundle = loadBundle(bundlePath);
    Eigen::MatrixXd Xnew;
    const CsvTable table = readCsv(newDataPath, /*hasHeader=*/true);
    if (table.header.empty() && table.rows.empty()) {
        Xnew.resize(0, bundle.expectedInputWidth());
    } else {
        const auto d = static_cast<Eigen::Index>(table.header.size());
        Xnew.resize(static_cast<Eigen::Index>(table.rows.size()), d);
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            if (static_cast<Eigen::Index>(table.rows[i].size()) != d)
                throw IoError(newDataPath + ": ragged row " + std::to_string(i + 2));
            for (Eigen::Index k = 0; k < d; ++k)
                Xnew(static_cast<Eigen::Index>(i), k) =
                    parseDouble(table.rows[i][static_cast<std::size_t>(k)],
                                newDataPath + ":" + std::to_string(i + 2));
        }
        if (Xnew.rows() > 0 && static_cast<int>(Xnew.cols()) != bundle.expectedInputWidth())
            throw ValidationError("input width " + std::to_string(Xnew.cols()) +
                                  " does not match the bundle's expected width " +
                                  std::to_string(bundle.expectedInputWidth()));
    }
    const EvidentialPartition ep = bundle.predict(Xnew);
    writePartitionCsv(outPath, ep);
}

EvalReport cmdEvaluate(const std::string& partitionPath, const std::string& truthPath,
                       const std::string& bundlePath, const std::string& dataPath,
                       const std::string& outDir) {
    const PartitionCsvContents partition = readPartitionCsv(partitionPath);
    const std::vector<std::string> truth = readLabelColumn(truthPath);
    if (truth.size() != partition.labels.size())
        throw ValidationError("partition has " + std::to_string(partition.labels.size()) +
                              " objects, truth has " + std::to_string(truth.size()));
    std::vector<std::string> predicted;
    predicted.reserve(partition.labels.size());
    for (int l : partition.labels) predicted.push_back(std::to_string(l));

    EvalReport report;
    report.ari = adjustedRandIndex(predicted, truth);
    for (int flag : partition.outlierFlags) report.outlierCount += flag;

    if (!bundlePath.empty()) {
        if (dataPath.empty())
            throw ValidationError("Shepard data needs the original data along with the bundle");
        const ModelBundle bundle = loadBundle(bundlePath);
        Eigen::MatrixXd raw;
        if (bundle.inputMode == ModelBundle::InputMode::Relational)
            raw = symmetrize(readSquareMatrixCsv(dataPath));
        else
            raw = readAttributeCsv(dataPath).first;
        const EvidentialPartition ep = bundle.predict(raw);
        const Eigen::MatrixXd D = bundle.inputMode == ModelBundle::InputMode::Relational
                                      ? raw
                                      : euclideanDistances(raw);
        Eigen::MatrixXd star(D.rows(), D.cols());
        for (Eigen::Index i = 0; i < D.rows(); ++i)
            for (Eigen::Index j = 0; j < D.cols(); ++j)
                star(i, j) = i == j ? 0.0 : bundle.phi(D(i, j));
        const DissimilarityView view = DissimilarityView::dense(std::move(star));
        report.shepardPairs = shepardData(ep, view);
        report.finalLoss = meanSquaredResidual(report.shepardPairs);
    }

    if (!outDir.empty()) {
        fs::create_directories(outDir);
        writeTextFile((fs::path(outDir) / "eval.json").string(), report.toJson());
        if (!report.shepardPairs.empty())
            writeTextFile((fs::path(outDir) / "shepard.csv").string(), report.shepardCsv());
    }
    return report;
}

bool cmdGradCheck(const RunConfig& cfg, bool injectFault, std::string* summaryOut) {
    const auto fsPtr =
        std::make_shared<FocalSetStructure>(buildFocalSets(Frame(cfg.clusters), cfg.scheme));
    Rng rng(Rng::deriveSeed(cfg.seed, 303));

    const int n = 8;
    const int d = 3;
    TrainingInstance instance;
    instance.fs = fsPtr;
    instance.X.resize(n, d);
    for (Eigen::Index i = 0; i < instance.X.size(); ++i)
        instance.X(i / d, i % d) = rng.uniform(-2.0, 2.0);
    auto [view, phi] = phiTransform(euclideanDistances(instance.X), cfg.d0Quantile);
    instance.view = std::move(view);
    if (cfg.svmEnabled) {
        Eigen::VectorXd scores(n);
        for (int i = 0; i < n; ++i) scores(i) = rng.uniform(-2.0, 2.0);
        instance.svmScores = scores;
    }
    if (cfg.xi > 0.0) {
        instance.constraints.mustLink = {{0, 1}, {2, 3}};
        instance.constraints.cannotLink = {{0, 4}, {5, 6}};
    }
    if (cfg.nuBlend > 0.0)
        instance.labels.entries = {{0, 1}, {3, std::min(2, cfg.clusters)}};

    LossConfig loss;
    loss.lambda = cfg.lambda;
    loss.xi = cfg.xi;
    loss.nuBlend = cfg.nuBlend;

    Architecture arch;
    arch.inputDim = d;
    arch.focalCount = fsPtr->size();
    arch.hiddenSizes =
        cfg.hiddenSizes.empty() ? std::vector<int>{defaultHiddenSize(arch.focalCount)} : cfg.hiddenSizes;
    const NetworkParams params = initParams(arch, rng);

    GradCheckReport report;
    if (injectFault) {
        GradientBundle corrupted = gradients(params, instance, loss);
        corrupted.output(0, 0) += 1e-3;
        report = gradCheck(params, instance, loss, 1e-6, &corrupted);
    } else {
        report = gradCheck(params, instance, loss);
    }
    if (summaryOut) *summaryOut = report.summary();
    return report.pass(1e-5);
}

}  // namespace nnevclus
