#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "nnevclus/bundle.hpp"
#include "nnevclus/csv.hpp"
#include "nnevclus/errors.hpp"
#include "nnevclus/evaluation.hpp"
#include "nnevclus/pipeline.hpp"
#include "nnevclus/rng.hpp"
#include "nnevclus/synthetic.hpp"

using namespace nnevclus;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void writeBlobCsv(const std::string& path, const LabeledData& data) {
    std::ostringstream out;
    out << "x,y\n";
    for (Eigen::Index i = 0; i < data.X.rows(); ++i)
        out << formatDouble(data.X(i, 0)) << ',' << formatDouble(data.X(i, 1)) << '\n';
    writeTextFile(path, out.str());
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_SUITE_BEGIN("pipeline");

TEST_CASE("config round trip") {
    RunConfig cfg;
    cfg.attributesPath = "somewhere/data.csv";
    cfg.clusters = 4;
    cfg.scheme = FocalScheme::SingletonsPlus;
    cfg.hiddenSizes = {12, 8};
    cfg.d0Quantile = 0.85;
    cfg.pairMode = PairMode::Sampled;
    cfg.pairModeAuto = false;
    cfg.sampledP = 64;
    cfg.lambda = 1e-5;
    cfg.xi = 0.5;
    cfg.svmEnabled = true;
    cfg.svmSigma = 0.2;
    cfg.maxEpochs = 321;
    cfg.seed = 987654321;
    cfg.outDir = "runs/exp1";
    const RunConfig back = parseConfig(serializeConfig(cfg), "roundtrip");
    CHECK(back == cfg);
}

TEST_CASE("config parse errors") {
    CHECK_THROWS_AS(parseConfig("[data\nmode = attribute\n", "t"), IoError);
    CHECK_THROWS_AS(parseConfig("[data]\nnonsense = 1\n", "t"), IoError);
    CHECK_THROWS_AS(parseConfig("[data]\nmode attribute\n", "t"), IoError);
    CHECK_NOTHROW(parseConfig("# just a comment\n\n", "t"));
}

TEST_CASE("model bundle round trip and integrity") {
    TempDir tmp("nnevclus_bundle_test");
    Rng rng(3);
    ModelBundle bundle;
    bundle.clusterCount = 3;
    bundle.scheme = FocalScheme::PairsPlus;
    bundle.params = initParams({2, {5}, 8}, rng);
    bundle.params.beta0 = -0.25;
    bundle.phi.gamma = 1.5;
    bundle.phi.delta0 = 2.25;
    OneClassSvm svm;
    svm.supportVectors = Eigen::MatrixXd::Random(4, 2);
    svm.alphas = Eigen::VectorXd::Constant(4, 0.25);
    svm.offset = 0.8;
    svm.sigma = 0.2;
    svm.nu = 0.2;
    bundle.svm = svm;

    const std::string path = tmp.file("model.json");
    saveBundle(path, bundle);
    const ModelBundle back = loadBundle(path);
    CHECK(back.clusterCount == 3);
    CHECK((back.scheme == FocalScheme::PairsPlus));
    CHECK(flattenParams(back.params) == flattenParams(bundle.params));
    CHECK(back.phi.gamma == bundle.phi.gamma);
    REQUIRE(back.svm.has_value());
    CHECK(back.svm->alphas == svm.alphas);

    SUBCASE("tampering breaks the checksum") {
        std::string text = slurp(path);
        const auto pos = text.find("\"beta0\"");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 7, "\"beta9\"");
        writeTextFile(path, text);
        CHECK_THROWS_AS(loadBundle(path), IoError);
    }
    SUBCASE("wrong version is rejected") {
        std::string text = slurp(path);
        const auto pos = text.find("\"version\": 1");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 12, "\"version\": 9");
        writeTextFile(path, text);
        CHECK_THROWS_AS(loadBundle(path), IoError);
    }
}

TEST_CASE("fit, predict and evaluate on a small blob problem") {
    TempDir tmp("nnevclus_pipeline_test");
    Eigen::MatrixXd centers(2, 2);
    centers << 0, 0, 8, 8;
    const LabeledData blobs = gaussianBlobs(centers, 15, 0.4, 7);
    writeBlobCsv(tmp.file("blobs.csv"), blobs);
    {
        std::ostringstream truth;
        for (int l : blobs.labels) truth << l << '\n';
        writeTextFile(tmp.file("truth.csv"), truth.str());
    }

    RunConfig cfg;
    cfg.attributesPath = tmp.file("blobs.csv");
    cfg.clusters = 2;
    cfg.scheme = FocalScheme::SingletonsPlus;
    cfg.maxEpochs = 150;
    cfg.restarts = 2;
    cfg.seed = 9;
    cfg.threads = 1;
    cfg.outDir = tmp.file("run");
    const FitOutcome outcome = cmdFit(cfg);

    CHECK(fs::exists(outcome.bundlePath));
    CHECK(fs::exists(outcome.partitionCsvPath));
    CHECK(fs::exists(tmp.file("run/rough.json")));
    CHECK(fs::exists(tmp.file("run/report.jsonl")));

    SUBCASE("partition has the documented shape") {
        const auto parsed = readPartitionCsv(outcome.partitionCsvPath);
        CHECK(parsed.masses.rows() == 30);
        CHECK(parsed.masses.cols() == 4);  // empty, two singletons, frame
        CHECK(parsed.massHeader.front() == "m_{}");
        CHECK(parsed.massHeader.back() == "m_{Omega}");
    }
    SUBCASE("refitting with the same config is byte identical") {
        RunConfig again = cfg;
        again.outDir = tmp.file("run2");
        cmdFit(again);
        CHECK(slurp(outcome.partitionCsvPath) == slurp(tmp.file("run2/partition.csv")));
    }
    SUBCASE("the thread count does not change the result") {
        RunConfig wide = cfg;
        wide.threads = 2;
        wide.outDir = tmp.file("run_threads");
        cmdFit(wide);
        CHECK(slurp(outcome.partitionCsvPath) == slurp(tmp.file("run_threads/partition.csv")));
        CHECK(slurp(outcome.bundlePath) == slurp(tmp.file("run_threads/model.json")));
    }
    SUBCASE("predict on the training file reproduces the fitted masses") {
        cmdPredict(outcome.bundlePath, tmp.file("blobs.csv"), tmp.file("pred.csv"));
        CHECK(slurp(tmp.file("pred.csv")) == slurp(outcome.partitionCsvPath));
    }
    SUBCASE("predict on an empty file emits just the header") {
        writeTextFile(tmp.file("empty.csv"), "");
        cmdPredict(outcome.bundlePath, tmp.file("empty.csv"), tmp.file("pred_empty.csv"));
        CHECK(slurp(tmp.file("pred_empty.csv")) == "m_{},m_{1},m_{2},m_{Omega},label,outlier\n");
    }
    SUBCASE("evaluate recovers a high ARI and writes reports") {
        const EvalReport report = cmdEvaluate(outcome.partitionCsvPath, tmp.file("truth.csv"),
                                              outcome.bundlePath, tmp.file("blobs.csv"),
                                              tmp.file("eval"));
        CHECK(report.ari == doctest::Approx(1.0));
        CHECK(fs::exists(tmp.file("eval/eval.json")));
        CHECK(fs::exists(tmp.file("eval/shepard.csv")));
        CHECK(report.shepardPairs.size() == 30u * 29u / 2u);
    }
    SUBCASE("evaluate rejects mismatched truth length") {
        writeTextFile(tmp.file("short.csv"), "1\n2\n");
        CHECK_THROWS_AS(cmdEvaluate(outcome.partitionCsvPath, tmp.file("short.csv"), "", "", ""),
                        ValidationError);
    }
    SUBCASE("missing truth file raises an io error") {
        CHECK_THROWS_AS(cmdEvaluate(outcome.partitionCsvPath, tmp.file("nope.csv"), "", "", ""),
                        IoError);
    }
}

TEST_CASE("relational fit round trip") {
    TempDir tmp("nnevclus_relational_test");
    // three clear clusters, dissimilarities supplied as a matrix file
    Eigen::MatrixXd centers(3, 3);
    centers << 0, 0, 0, 9, 0, 0, 0, 9, 0;
    const LabeledData blobs = gaussianBlobs(centers, 12, 0.5, 13);
    const Eigen::MatrixXd D = euclideanDistances(blobs.X);
    {
        std::ostringstream out;
        for (Eigen::Index i = 0; i < D.rows(); ++i) {
            for (Eigen::Index j = 0; j < D.cols(); ++j)
                out << (j ? "," : "") << formatDouble(D(i, j));
            out << '\n';
        }
        writeTextFile(tmp.file("dissim.csv"), out.str());
    }

    RunConfig cfg;
    cfg.mode = RunConfig::DataMode::Relational;
    cfg.dissimilaritiesPath = tmp.file("dissim.csv");
    cfg.clusters = 3;
    cfg.scheme = FocalScheme::SingletonsPlus;
    cfg.pcaComponents = 3;
    cfg.maxEpochs = 200;
    cfg.restarts = 2;
    cfg.seed = 21;
    cfg.threads = 1;
    cfg.outDir = tmp.file("run");
    const FitOutcome outcome = cmdFit(cfg);

    const auto labels = hardPartition(outcome.partition);
    CHECK(adjustedRandIndex(labels, blobs.labels) == doctest::Approx(1.0));

    SUBCASE("a duplicated training row predicts the training mass") {
        const ModelBundle bundle = loadBundle(outcome.bundlePath);
        CHECK((bundle.inputMode == ModelBundle::InputMode::Relational));
        const EvidentialPartition one = bundle.predict(D.row(5));
        CHECK((one.masses.row(0) - outcome.partition.masses.row(5)).cwiseAbs().maxCoeff() <
              1e-12);
    }
}

TEST_CASE("fit with an explicit two-layer architecture") {
    TempDir tmp("nnevclus_deep_test");
    Eigen::MatrixXd centers(2, 2);
    centers << 0, 0, 7, 7;
    const LabeledData blobs = gaussianBlobs(centers, 12, 0.4, 31);
    writeBlobCsv(tmp.file("blobs.csv"), blobs);

    RunConfig cfg;
    cfg.attributesPath = tmp.file("blobs.csv");
    cfg.clusters = 2;
    cfg.scheme = FocalScheme::SingletonsPlus;
    cfg.hiddenSizes = {6, 4};
    cfg.maxEpochs = 200;
    cfg.restarts = 2;
    cfg.seed = 13;
    cfg.threads = 1;
    cfg.outDir = tmp.file("run");
    const FitOutcome outcome = cmdFit(cfg);
    CHECK(outcome.bundle.params.hiddenWeights.size() == 2);
    CHECK(outcome.bundle.params.hiddenWeights[0].rows() == 6);
    CHECK(outcome.bundle.params.hiddenWeights[1].rows() == 4);
    CHECK(adjustedRandIndex(hardPartition(outcome.partition), blobs.labels) ==
          doctest::Approx(1.0));

    // the bundle round-trips the deeper stack
    const ModelBundle back = loadBundle(outcome.bundlePath);
    CHECK(back.params.hiddenWeights.size() == 2);
    cmdPredict(outcome.bundlePath, tmp.file("blobs.csv"), tmp.file("pred.csv"));
    CHECK(slurp(tmp.file("pred.csv")) == slurp(outcome.partitionCsvPath));
}

TEST_CASE("fit consumes constraint and label files") {
    TempDir tmp("nnevclus_sideinfo_test");
    Eigen::MatrixXd centers(2, 2);
    centers << 0, 0, 6, 6;
    const LabeledData blobs = gaussianBlobs(centers, 10, 0.4, 55);
    writeBlobCsv(tmp.file("blobs.csv"), blobs);
    // 1-based indices: objects 1 and 2 share a blob, 1 and 11 do not
    writeTextFile(tmp.file("constraints.csv"), "1,2,ML\n1,11,CL\n");
    writeTextFile(tmp.file("labels.csv"), "1,1\n11,2\n");

    RunConfig cfg;
    cfg.attributesPath = tmp.file("blobs.csv");
    cfg.constraintsPath = tmp.file("constraints.csv");
    cfg.labelsPath = tmp.file("labels.csv");
    cfg.clusters = 2;
    cfg.scheme = FocalScheme::SingletonsPlus;
    cfg.xi = 0.5;
    cfg.nuBlend = 0.3;
    cfg.maxEpochs = 60;
    cfg.restarts = 1;
    cfg.seed = 3;
    cfg.threads = 1;
    cfg.outDir = tmp.file("run");
    const FitOutcome outcome = cmdFit(cfg);
    CHECK(outcome.training.finalLoss >= 0.0);

    SUBCASE("malformed constraint type is rejected") {
        writeTextFile(tmp.file("constraints.csv"), "1,2,MAYBE\n");
        CHECK_THROWS_AS(cmdFit(cfg), IoError);
    }
    SUBCASE("out-of-range constraint object is rejected") {
        writeTextFile(tmp.file("constraints.csv"), "1,999,CL\n");
        CHECK_THROWS_AS(cmdFit(cfg), ValidationError);
    }
    SUBCASE("label class outside the frame is rejected") {
        writeTextFile(tmp.file("labels.csv"), "1,7\n");
        CHECK_THROWS_AS(cmdFit(cfg), ValidationError);
    }
}

TEST_CASE("gradcheck command") {
    RunConfig cfg;
    cfg.clusters = 3;
    cfg.scheme = FocalScheme::SingletonsPlus;
    cfg.svmEnabled = true;
    cfg.xi = 0.4;
    cfg.nuBlend = 0.3;
    cfg.lambda = 0.1;
    std::string summary;
    CHECK(cmdGradCheck(cfg, false, &summary));
    CHECK(summary.find("max relative error") != std::string::npos);
    CHECK_FALSE(cmdGradCheck(cfg, true, &summary));
}

TEST_CASE("triplet dissimilarity ingestion") {
    TempDir tmp("nnevclus_triplet_test");
    writeTextFile(tmp.file("tri.csv"), "1,2,1.5\n1,3,2.5\n2,3,3.5\n");
    const Eigen::MatrixXd D = readTripletCsv(tmp.file("tri.csv"));
    CHECK(D(0, 1) == 1.5);
    CHECK(D(1, 0) == 1.5);
    CHECK(D(2, 1) == 3.5);
    CHECK(D(0, 0) == 0.0);

    writeTextFile(tmp.file("gap.csv"), "1,2,1.5\n1,3,2.5\n");
    CHECK_THROWS_AS(readTripletCsv(tmp.file("gap.csv")), IoError);
}

TEST_SUITE_END();
