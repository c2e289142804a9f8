#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "nnevclus/errors.hpp"
#include "nnevclus/pipeline.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

// Flags override the config file; unset flags leave the file values alone.
template <typename T>
void override_if(const CLI::Option* opt, T& target, const T& value) {
    if (opt->count() > 0) target = value;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Evidential clustering with a conflict-matching neural network"};
    app.require_subcommand(1);

    // fit -------------------------------------------------------------
    auto* fit = app.add_subcommand("fit", "Train a model and write its artifacts");
    std::string configPath, dataPath, dissimPath, modeName, schemeName, pairModeName, outDir;
    std::string constraintsPath, labelsPath, hiddenSpec;
    int clusters = 0, sampledP = 0, blocks = 0, epochs = 0, restarts = 0, threads = 0, pcaP = 0;
    double d0q = 0, lambda = 0, xi = 0, nuBlend = 0, svmNu = 0, svmSigma = 0;
    bool svmOn = false;
    std::uint64_t seed = 0;
    auto* fConfig = fit->add_option("--config", configPath, "Config file");
    auto* fData = fit->add_option("--data", dataPath, "Attribute CSV (header row)");
    auto* fDissim = fit->add_option("--dissim", dissimPath, "Dissimilarity CSV");
    auto* fMode = fit->add_option("--mode", modeName, "attribute | relational");
    auto* fClusters = fit->add_option("--clusters", clusters, "Number of clusters");
    auto* fScheme = fit->add_option("--scheme", schemeName, "full | singletons_plus | pairs_plus");
    auto* fPairMode = fit->add_option("--pair-mode", pairModeName, "auto | dense | sampled | minibatch");
    auto* fP = fit->add_option("--p", sampledP, "Pairs per object in sampled mode");
    auto* fS = fit->add_option("--s", blocks, "Minibatch block count");
    auto* fPcaP = fit->add_option("--pca-p", pcaP, "Embedding dimension (relational mode)");
    auto* fD0 = fit->add_option("--d0-quantile", d0q, "Calibration quantile");
    auto* fHidden = fit->add_option("--hidden", hiddenSpec, "Hidden sizes, comma separated");
    auto* fLambda = fit->add_option("--lambda", lambda, "L2 coefficient");
    auto* fXi = fit->add_option("--xi", xi, "Constraint weight");
    auto* fNu = fit->add_option("--nu", nuBlend, "Labeled-data blend");
    auto* fConstraints = fit->add_option("--constraints", constraintsPath, "Constraint CSV (i,j,ML|CL)");
    auto* fLabels = fit->add_option("--labels", labelsPath, "Label CSV (i,class)");
    auto* fSvm = fit->add_flag("--svm", svmOn, "Enable the one-class SVM gate");
    auto* fSvmNu = fit->add_option("--svm-nu", svmNu, "SVM nu");
    auto* fSvmSigma = fit->add_option("--svm-sigma", svmSigma, "SVM kernel inverse width");
    auto* fEpochs = fit->add_option("--epochs", epochs, "Training epochs");
    auto* fRestarts = fit->add_option("--restarts", restarts, "Random restarts");
    auto* fSeed = fit->add_option("--seed", seed, "Random seed");
    auto* fThreads = fit->add_option("--threads", threads, "Worker threads (0 = cores)");
    auto* fOut = fit->add_option("--out", outDir, "Output directory");

    // predict ----------------------------------------------------------
    auto* predict = app.add_subcommand("predict", "Score new data through a stored model");
    std::string bundlePath, newDataPath, predictOut = "predictions.csv";
    predict->add_option("--model", bundlePath, "Model bundle")->required();
    predict->add_option("--data", newDataPath, "New data CSV")->required();
    predict->add_option("--out", predictOut, "Output partition CSV");

    // evaluate ----------------------------------------------------------
    auto* evaluate = app.add_subcommand("evaluate", "Compare a partition against ground truth");
    std::string partitionPath, truthPath, evalBundle, evalData, evalOut;
    evaluate->add_option("--partition", partitionPath, "Partition CSV")->required();
    evaluate->add_option("--truth", truthPath, "Truth labels, one per line")->required();
    evaluate->add_option("--model", evalBundle, "Bundle for Shepard data");
    evaluate->add_option("--data", evalData, "Original data for Shepard data");
    evaluate->add_option("--out", evalOut, "Output directory");

    // gradcheck ----------------------------------------------------------
    auto* gradcheck = app.add_subcommand("gradcheck", "Verify gradients against finite differences");
    std::string gcConfigPath;
    bool injectFault = false;
    int gcClusters = 3;
    double gcLambda = 0, gcXi = 0, gcNu = 0;
    bool gcSvm = false;
    std::uint64_t gcSeed = 0;
    gradcheck->add_option("--config", gcConfigPath, "Config file");
    gradcheck->add_option("--clusters", gcClusters, "Clusters of the probe instance");
    gradcheck->add_option("--lambda", gcLambda, "L2 coefficient");
    gradcheck->add_option("--xi", gcXi, "Constraint weight");
    gradcheck->add_option("--nu", gcNu, "Labeled-data blend");
    gradcheck->add_flag("--svm", gcSvm, "Enable the gate in the probe");
    gradcheck->add_option("--seed", gcSeed, "Random seed");
    gradcheck->add_flag("--inject-fault", injectFault, "Corrupt one gradient component (test hook)");

    app.add_subcommand("version", "Print the version");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("version")) {
            std::printf("nnevclus %s\n", kVersion);
            return 0;
        }
        if (app.got_subcommand(fit)) {
            nnevclus::RunConfig cfg;
            if (fConfig->count() > 0) cfg = nnevclus::loadConfigFile(configPath);
            override_if(fData, cfg.attributesPath, dataPath);
            override_if(fDissim, cfg.dissimilaritiesPath, dissimPath);
            if (fMode->count() > 0)
                cfg.mode = modeName == "relational" ? nnevclus::RunConfig::DataMode::Relational
                                                    : nnevclus::RunConfig::DataMode::Attribute;
            override_if(fClusters, cfg.clusters, clusters);
            if (fScheme->count() > 0) cfg.scheme = nnevclus::focalSchemeFromString(schemeName);
            if (fPairMode->count() > 0) {
                cfg.pairModeAuto = pairModeName == "auto";
                if (pairModeName == "dense") cfg.pairMode = nnevclus::PairMode::Dense;
                else if (pairModeName == "sampled") cfg.pairMode = nnevclus::PairMode::Sampled;
                else if (pairModeName == "minibatch") cfg.pairMode = nnevclus::PairMode::Minibatch;
                else if (pairModeName != "auto")
                    throw nnevclus::ValidationError("unknown pair mode '" + pairModeName + "'");
            }
            override_if(fP, cfg.sampledP, sampledP);
            override_if(fS, cfg.blocks, blocks);
            override_if(fPcaP, cfg.pcaComponents, pcaP);
            override_if(fD0, cfg.d0Quantile, d0q);
            if (fHidden->count() > 0) {
                cfg.hiddenSizes.clear();
                std::stringstream ss(hiddenSpec);
                std::string item;
                while (std::getline(ss, item, ','))
                    if (!item.empty()) cfg.hiddenSizes.push_back(std::stoi(item));
            }
            override_if(fLambda, cfg.lambda, lambda);
            override_if(fXi, cfg.xi, xi);
            override_if(fNu, cfg.nuBlend, nuBlend);
            override_if(fConstraints, cfg.constraintsPath, constraintsPath);
            override_if(fLabels, cfg.labelsPath, labelsPath);
            if (fSvm->count() > 0) cfg.svmEnabled = svmOn;
            override_if(fSvmNu, cfg.svmNu, svmNu);
            override_if(fSvmSigma, cfg.svmSigma, svmSigma);
            override_if(fEpochs, cfg.maxEpochs, epochs);
            override_if(fRestarts, cfg.restarts, restarts);
            override_if(fSeed, cfg.seed, seed);
            override_if(fThreads, cfg.threads, threads);
            override_if(fOut, cfg.outDir, outDir);

            const auto outcome = nnevclus::cmdFit(cfg);
            std::printf("fit: final loss %.6g, best restart %d, artifacts in %s\n",
                        outcome.training.finalLoss, outcome.training.bestRestart,
                        cfg.outDir.c_str());
            return 0;
        }
        if (app.got_subcommand(predict)) {
            nnevclus::cmdPredict(bundlePath, newDataPath, predictOut);
            std::printf("predict: wrote %s\n", predictOut.c_str());
            return 0;
        }
        if (app.got_subcommand(evaluate)) {
            const auto report =
                nnevclus::cmdEvaluate(partitionPath, truthPath, evalBundle, evalData, evalOut);
            std::printf("ARI %.4f, outliers %d", report.ari, report.outlierCount);
            if (!report.shepardPairs.empty()) std::printf(", base loss %.6g", report.finalLoss);
            std::printf("\n");
            return 0;
        }
        if (app.got_subcommand(gradcheck)) {
            nnevclus::RunConfig cfg;
            if (!gcConfigPath.empty()) cfg = nnevclus::loadConfigFile(gcConfigPath);
            if (gradcheck->get_option("--clusters")->count() > 0) cfg.clusters = gcClusters;
            if (cfg.clusters < 2) cfg.clusters = 3;
            if (gradcheck->get_option("--lambda")->count() > 0) cfg.lambda = gcLambda;
            if (gradcheck->get_option("--xi")->count() > 0) cfg.xi = gcXi;
            if (gradcheck->get_option("--nu")->count() > 0) cfg.nuBlend = gcNu;
            if (gradcheck->get_option("--svm")->count() > 0) cfg.svmEnabled = gcSvm;
            if (gradcheck->get_option("--seed")->count() > 0) cfg.seed = gcSeed;
            std::string summary;
            const bool ok = nnevclus::cmdGradCheck(cfg, injectFault, &summary);
            std::printf("%s%s\n", summary.c_str(), ok ? "PASS" : "FAIL");
            return ok ? 0 : 1;
        }
    } catch (const nnevclus::IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const nnevclus::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
