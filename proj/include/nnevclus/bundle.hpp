#pragma once

#include <optional>
#include <string>

#include "nnevclus/dissimilarity.hpp"
#include "nnevclus/evidential.hpp"
#include "nnevclus/network.hpp"
#include "nnevclus/one_class_svm.hpp"

namespace nnevclus {

// Everything needed to score new data: frame and focal scheme, network
// weights and gate, the dissimilarity transform calibration, the optional
// novelty SVM, and the optional dissimilarity-row embedding for relational
// inputs. Serialized as versioned JSON with an integrity checksum.
struct ModelBundle {
    static constexpr int kFormatVersion = 1;

    enum class InputMode { Attribute, Relational };

    InputMode inputMode = InputMode::Attribute;
    int clusterCount = 0;
    FocalScheme scheme = FocalScheme::PairsPlus;
    NetworkParams params;
    PhiCalibration phi;
    std::optional<OneClassSvm> svm;
    std::optional<PcaEmbedding> pca;

    // Width of the rows predict() expects: the attribute dimension, or the
    // training-set size in relational mode (raw dissimilarity vectors).
    int expectedInputWidth() const;

    std::shared_ptr<const FocalSetStructure> focalSets() const;

    // Masses for new rows: relational inputs are centered and projected
    // through the stored embedding first, then gated by the SVM if present.
    EvidentialPartition predict(const Eigen::MatrixXd& Xnew) const;
};

std::string bundleToJson(const ModelBundle& bundle);
ModelBundle bundleFromJson(const std::string& text, const std::string& context);

void saveBundle(const std::string& path, const ModelBundle& bundle);
ModelBundle loadBundle(const std::string& path);

}  // namespace nnevclus
