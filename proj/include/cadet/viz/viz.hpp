#pragma once

#include "cadet/data/png_io.hpp"
#include "cadet/model/networks.hpp"

#include <Eigen/Dense>
#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cadet {

/// (H,W) float64 map in [0,1]; max is 1 unless the map is all zero.
struct HeatMap {
    torch::Tensor map;

    std::int64_t height() const { return map.size(0); }
    std::int64_t width() const { return map.size(1); }
};

/// ReLU(sum_k w_k F_k) with w_k the spatial mean of dY/dF_k. Inputs are
/// (n,h,w); output (h,w), not normalized.
torch::Tensor cam_from(const torch::Tensor& features, const torch::Tensor& gradients);

/// Bilinear upsampling to size x size, then division by the max.
HeatMap finalize_cam(const torch::Tensor& cam, std::int64_t size);

/// Grad-CAM at the classifier input (the artifact feature map) for each image
/// of a (B,3,H,W) batch, targeting logit `target_class` (1 = fake).
std::vector<HeatMap> grad_cam(ModelBundle& model, const torch::Tensor& images, std::int64_t target_class = 1);

struct RegionStats {
    double inside = 0.0;   // mean map value inside the mask
    double outside = 0.0;  // and outside it
    double ratio() const { return inside / std::max(outside, 1e-12); }
};

/// `mask` is (H,W) or (1,H,W), nonzero inside the region.
RegionStats region_stats(const torch::Tensor& map, const torch::Tensor& mask);

/// Grayscale overlay: image darkened where the map is low, red channel boosted where high.
Raster cam_overlay(const torch::Tensor& image, const HeatMap& cam);

enum class EmbedMethod { pca, tsne };

EmbedMethod parse_embed_method(const std::string& s);

/// Projection onto the two leading principal axes. Each axis is signed so that
/// its largest-magnitude loading is positive. Inputs with fewer than two
/// feature dimensions are zero-padded.
Eigen::MatrixXd pca_2d(const Eigen::MatrixXd& X);

struct TsneConfig {
    double perplexity = 30.0;
    std::int64_t iterations = 500;
    double learning_rate = 0.0;  // <= 0 picks max(n / 48, 50)
    std::uint64_t seed = 0;
};

/// Exact (O(N^2)) t-SNE to two dimensions.
Eigen::MatrixXd tsne_2d(const Eigen::MatrixXd& X, const TsneConfig& cfg = {});

/// Mean silhouette coefficient under Euclidean distance.
double silhouette_score(const Eigen::MatrixXd& coords, const std::vector<std::int64_t>& labels);

/// 2-D coordinates; writes <prefix>.csv and <prefix>.png when `prefix` is non-empty.
/// Throws UserError with fewer than three samples.
Eigen::MatrixXd embed_scatter(const Eigen::MatrixXd& X, const std::vector<std::int64_t>& labels, EmbedMethod method,
                              const std::filesystem::path& prefix = {}, const TsneConfig& tsne = {});

Raster scatter_plot(const Eigen::MatrixXd& coords, const std::vector<std::int64_t>& labels, int size = 256);

enum class FeatureStage { content, artifact, backbone_mid };

FeatureStage parse_feature_stage(const std::string& s);

/// (n,h,w) activations of one (3,H,W) image at `stage`, eval mode.
torch::Tensor stage_features(ModelBundle& model, const torch::Tensor& image, FeatureStage stage);

/// Channels tiled into a near-square grid of gray panels, each min-max
/// normalized on its own; a constant panel renders as 128. Panels are
/// upscaled by `scale` and separated by one black pixel.
Raster feature_grid(const torch::Tensor& features, int scale = 4);

/// Grid geometry used by feature_grid: {columns, rows}.
std::pair<int, int> grid_layout(std::int64_t channels);

void dump_feature_maps(ModelBundle& model, const torch::Tensor& image, FeatureStage stage,
                       const std::filesystem::path& path, int scale = 4);

/// Mean squared activation inside the (downsampled) mask over the mean outside.
double masked_energy_ratio(const torch::Tensor& features, const torch::Tensor& mask);

}  // namespace cadet
