#pragma once

#include <torch/torch.h>

#include <span>
#include <string_view>

namespace cadet {

/// Throws ShapeError unless both tensors have identical sizes.
void require_same_shape(const torch::Tensor& x, const torch::Tensor& y, std::string_view what);

/// Throws NumericError if any element is NaN or infinite.
void require_finite(const torch::Tensor& x, std::string_view what);

torch::Tensor elementwise_add(const torch::Tensor& x, const torch::Tensor& y);

/// Mean absolute difference over every element (0-dim tensor, differentiable).
torch::Tensor l1_distance(const torch::Tensor& x, const torch::Tensor& y);

/// Row-wise cosine similarity of (B, D) matrices; rows with zero norm give 0.
torch::Tensor cosine_similarity_rows(const torch::Tensor& u, const torch::Tensor& v);

/// Cosine similarity of two plain vectors. A zero-norm input yields 0 and logs
/// a warning.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

}  // namespace cadet
