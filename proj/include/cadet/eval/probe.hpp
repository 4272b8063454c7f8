#pragma once

#include "cadet/data/dataset.hpp"
#include "cadet/model/networks.hpp"

#include <Eigen/Dense>
#include <torch/torch.h>

#include <cstdint>
#include <string>
#include <vector>

namespace cadet {

/// How a (n,h,w) feature map becomes a probe input vector.
enum class ProbeFeature {
    pooled,  // channel means, n values
    gram,    // upper triangle of the normalized Gram matrix, n(n+1)/2 values
    flat,    // the whole map, n*h*w values
};

ProbeFeature parse_probe_feature(const std::string& s);
std::string to_string(ProbeFeature f);

struct ProbeConfig {
    std::int64_t folds = 5;
    double ridge = 1.0;
    std::uint64_t seed = 0;
};

/// Cross-validated accuracy of a ridge-regularized one-vs-rest linear
/// classifier on standardized features. Throws UserError if fewer than two
/// classes are present or a training fold holds a single class.
double linear_probe(const Eigen::MatrixXd& features, const std::vector<std::int64_t>& targets,
                    const ProbeConfig& cfg = {});

/// Encoder output for `rows` in eval mode, (N,n,h,w), no gradient.
torch::Tensor extract_features(ModelBundle& model, const ImageStore& store, const std::vector<std::int64_t>& rows,
                               EncoderKind which, std::int64_t batch_size = 256);

Eigen::MatrixXd probe_matrix(const torch::Tensor& features, ProbeFeature kind);

/// The four disentanglement probes.
struct ProbeReport {
    double artifact_label = 0.0;
    double content_label = 0.0;
    double content_identity = 0.0;
    double content_background = 0.0;
    std::int64_t samples = 0;
};

ProbeReport run_probes(ModelBundle& model, const ImageStore& store, const std::vector<std::int64_t>& rows,
                       ProbeFeature kind, const ProbeConfig& cfg = {});

}  // namespace cadet
