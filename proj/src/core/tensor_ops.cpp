#include "cadet/core/tensor_ops.hpp"

#include "cadet/error.hpp"
#include "cadet/log.hpp"

#include <cmath>
#include <sstream>

namespace cadet {

namespace {
std::string shape_str(const torch::Tensor& t)
{
    std::ostringstream os;
    os << t.sizes();
    return os.str();
}
}  // namespace

void require_same_shape(const torch::Tensor& x, const torch::Tensor& y, std::string_view what)
{
    if (!x.defined() || !y.defined() || x.sizes() != y.sizes()) {
        throw ShapeError(std::string(what) + ": shape mismatch " +
                         (x.defined() ? shape_str(x) : "<undefined>") + " vs " +
                         (y.defined() ? shape_str(y) : "<undefined>"));
    }
}

void require_finite(const torch::Tensor& x, std::string_view what)
{
    if (!torch::isfinite(x.detach()).all().item<bool>()) {
        throw NumericError(std::string(what) + ": non-finite values");
    }
}

torch::Tensor elementwise_add(const torch::Tensor& x, const torch::Tensor& y)
{
    require_same_shape(x, y, "elementwise_add");
    return x + y;
}

torch::Tensor l1_distance(const torch::Tensor& x, const torch::Tensor& y)
{
    require_same_shape(x, y, "l1_distance");
    return (x - y).abs().mean();
}

torch::Tensor cosine_similarity_rows(const torch::Tensor& u, const torch::Tensor& v)
{
    require_same_shape(u, v, "cosine_similarity");
    if (u.dim() != 2) throw ShapeError("cosine_similarity: expected (B, D) matrices");
    const auto dot = (u * v).sum(1);
    const auto norms = u.norm(2, 1) * v.norm(2, 1);
    const auto zero = norms == 0;
    if (zero.any().item<bool>()) {
        log::warn("cosine similarity of a zero-norm vector; using 0");
    }
    // where() keeps the backward pass finite for zero rows.
    return torch::where(zero, torch::zeros_like(dot), dot / torch::where(zero, torch::ones_like(norms), norms));
}

double cosine_similarity(std::span<const double> u, std::span<const double> v)
{
    if (u.size() != v.size()) throw ShapeError("cosine_similarity: length mismatch");
    double dot = 0.0, uu = 0.0, vv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    if (uu == 0.0 || vv == 0.0) {
        log::warn("cosine similarity of a zero-norm vector; using 0");
        return 0.0;
    }
    return dot / (std::sqrt(uu) * std::sqrt(vv));
}

}  // namespace cadet
