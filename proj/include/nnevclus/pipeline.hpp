#pragma once

#include <optional>
#include <string>

#include "nnevclus/bundle.hpp"
#include "nnevclus/config.hpp"
#include "nnevclus/evaluation.hpp"
#include "nnevclus/training.hpp"

namespace nnevclus {

// Command implementations shared by the CLI binary and the tests. All throw
// ValidationError / IoError; main() maps exceptions to exit codes.

struct FitOutcome {
    ModelBundle bundle;
    EvidentialPartition partition;
    TrainResult training;
    std::string partitionCsvPath;
    std::string bundlePath;
};

// load -> (relational: symmetrize + embed) -> distances -> transform ->
// optional SVM -> batch or minibatch training -> artifacts in cfg.outDir:
// model.json, partition.csv, rough.json, report.jsonl, config.ini.
FitOutcome cmdFit(const RunConfig& cfg);

// Masses for new rows through a stored bundle; writes a partition CSV.
void cmdPredict(const std::string& bundlePath, const std::string& newDataPath,
                const std::string& outPath);

// ARI of a partition CSV against a truth label column; Shepard data and the
// base loss when a bundle and the original data are also provided.
EvalReport cmdEvaluate(const std::string& partitionPath, const std::string& truthPath,
                       const std::string& bundlePath, const std::string& dataPath,
                       const std::string& outDir);

// Random small instance from the config dimensions, checked against central
// finite differences. `injectFault` corrupts one output-layer component to
// prove the check catches it. Returns true when the check passes.
bool cmdGradCheck(const RunConfig& cfg, bool injectFault, std::string* summaryOut);

}  // namespace nnevclus
