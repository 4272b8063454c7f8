#pragma once

#include "cadet/core/config.hpp"
#include "cadet/disentangle/pair.hpp"
#include "cadet/losses/embedders.hpp"

#include <torch/torch.h>

#include <array>
#include <string>

namespace cadet {

/// Channel Gram matrix of a feature map, normalized by the number of spatial
/// positions: G[i][j] = sum_p F[i][p] F[j][p] / (h w).
struct GramDescriptor {
    torch::Tensor matrix;  // (n,n), or (B,n,n) for batched input

    /// Row-major flattening: (n*n,) or (B, n*n).
    torch::Tensor flat() const { return matrix.flatten(matrix.dim() - 2); }
};

/// Accepts (n,h,w) or (B,n,h,w). Throws ShapeError on an empty map.
GramDescriptor gram(const torch::Tensor& features);

/// Weights of the five auxiliary losses relative to cross entropy.
struct LossWeights {
    double rec_img = 1.0;   // lambda1
    double rec_fea = 0.01;  // lambda2
    double id = 1.0;        // lambda3
    double bg = 0.01;       // lambda4
    double contrast = 0.01; // lambda5

    static LossWeights zeros() { return {0, 0, 0, 0, 0}; }
    void validate() const;
    bool any_reconstruction() const { return rec_img > 0 || rec_fea > 0 || id > 0 || bg > 0; }
    bool needs_embedders() const { return id > 0 || bg > 0; }
};

void to_json(Json& j, const LossWeights& w);
void from_json(const Json& j, LossWeights& w);

/// Scalar values of all loss components and their weighted total.
struct LossBreakdown {
    double ce = 0, rec_img = 0, rec_fea = 0, id = 0, bg = 0, contrast = 0, total = 0;

    static constexpr std::array<const char*, 7> kNames{"L_ce", "L_rec_img", "L_rec_fea", "L_id",
                                                       "L_bg", "L_c",       "total"};
    std::array<double, 7> values() const { return {ce, rec_img, rec_fea, id, bg, contrast, total}; }
};

/// total = ce + sum(lambda_k * component_k). Throws ConfigError on a negative weight.
LossBreakdown total_loss(LossBreakdown components, const LossWeights& weights);

/// Differentiable loss terms; an undefined tensor means "not computed" and
/// counts as zero.
struct LossTerms {
    torch::Tensor ce, rec_img, rec_fea, id, bg, contrast;

    torch::Tensor weighted_total(const LossWeights& w) const;
    LossBreakdown breakdown(const LossWeights& w) const;
};

/// Mean-L1 between each self reconstruction and its source image, summed over the pair.
torch::Tensor image_reconstruction_loss(const ReconstructionSet& rec, const PairBatch& batch);

/// Re-encodes the self and cross reconstructions with both encoders and sums
/// the eight mean-L1 distances to the features they were decoded from.
torch::Tensor feature_reconstruction_loss(const ReconstructionSet& rec, const DisentangledFeatures& feats,
                                          ModelBundle& model);

/// 1 - cos(identity(cross), identity(content source)), averaged over both
/// cross reconstructions and the batch.
torch::Tensor identity_loss(const ReconstructionSet& rec, const PairBatch& batch, EmbedderPair& embedders);

/// Mean-L1 between perceptual features of each cross reconstruction and its
/// content source, averaged over both crosses.
torch::Tensor background_loss(const ReconstructionSet& rec, const PairBatch& batch, EmbedderPair& embedders);

/// InfoNCE term -log(e^pos / (e^pos + e^neg0 + e^neg1)), element-wise.
torch::Tensor info_nce_term(const torch::Tensor& pos, const torch::Tensor& neg0, const torch::Tensor& neg1);

/// Contrastive constraint on Gram descriptors: artifact-artifact and
/// content-content pairs are positives, artifact_i vs content_{1-i} are the
/// shared negatives. Temperature 1, batch mean.
torch::Tensor grcc_loss(const DisentangledFeatures& feats);

/// Mean softmax cross entropy of (N,2) logits against labels in [0,1]
/// (probability of "fake"; soft labels allowed). Throws UserError on labels
/// outside [0,1].
torch::Tensor classification_loss(const torch::Tensor& logits, const torch::Tensor& labels);

}  // namespace cadet
