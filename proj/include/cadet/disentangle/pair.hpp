#pragma once

#include "cadet/model/networks.hpp"

#include <torch/torch.h>

#include <cstdint>
#include <vector>

namespace cadet {

/// Content provenance of one image.
struct ContentTag {
    std::int64_t identity_id = 0;
    std::int64_t background_id = 0;
};

/// One real and one fake image, in either order. Images are (3,H,W) in [-1,1].
struct ImagePair {
    torch::Tensor img0, img1;
    int y0 = 0, y1 = 1;  // 0 = real, 1 = fake
    ContentTag content0, content1;
    std::int64_t index0 = -1, index1 = -1;  // dataset rows, when known

    /// Throws UserError unless exactly one member is fake and shapes agree.
    void validate() const;
};

/// A stack of pairs, as fed to the model. Labels are float so that mixup can
/// make them soft.
struct PairBatch {
    torch::Tensor img0, img1;  // (B,3,H,W)
    torch::Tensor y0, y1;      // (B,) in [0,1]
    torch::Tensor identity0, identity1, background0, background1;  // (B,) int64

    std::int64_t size() const { return img0.defined() ? img0.size(0) : 0; }

    static PairBatch stack(const std::vector<ImagePair>& pairs);

    /// Both members concatenated along the batch axis: [img0; img1], [y0; y1].
    torch::Tensor images() const { return torch::cat({img0, img1}, 0); }
    torch::Tensor labels() const { return torch::cat({y0, y1}, 0); }

    PairBatch swapped() const;
    PairBatch to(torch::ScalarType dtype) const;
};

/// Content features c and artifact features a for both pair members.
struct DisentangledFeatures {
    torch::Tensor c0, c1, a0, a1;  // (B,n,h,w)
};

/// Decoded images: self reconstructions D(a_i + c_i) and cross
/// reconstructions cross01 = D(a0 + c1), cross10 = D(a1 + c0).
struct ReconstructionSet {
    torch::Tensor self0, self1, cross01, cross10;
};

DisentangledFeatures disentangle_pair(const PairBatch& batch, ModelBundle& model);

/// Latent for decoding: artifact + content, element-wise.
torch::Tensor recombine(const torch::Tensor& a, const torch::Tensor& c);

ReconstructionSet reconstruct_all(const DisentangledFeatures& feats, ModelBundle& model);

}  // namespace cadet
