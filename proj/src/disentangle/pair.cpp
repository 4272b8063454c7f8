#include "cadet/disentangle/pair.hpp"

#include "cadet/core/tensor_ops.hpp"
#include "cadet/error.hpp"

namespace cadet {

void ImagePair::validate() const
{
    if (y0 + y1 != 1 || (y0 != 0 && y0 != 1)) {
        throw UserError("image pair must hold exactly one real and one fake image");
    }
    require_same_shape(img0, img1, "image pair");
    if (img0.dim() != 3 || img0.size(0) != 3) throw ShapeError("image pair: expected (3,H,W) images");
}

PairBatch PairBatch::stack(const std::vector<ImagePair>& pairs)
{
    if (pairs.empty()) throw UserError("cannot stack an empty list of pairs");
    std::vector<torch::Tensor> i0, i1;
    std::vector<float> y0, y1;
    std::vector<std::int64_t> id0, id1, bg0, bg1;
    for (const auto& p : pairs) {
        p.validate();
        i0.push_back(p.img0);
        i1.push_back(p.img1);
        y0.push_back(static_cast<float>(p.y0));
        y1.push_back(static_cast<float>(p.y1));
        id0.push_back(p.content0.identity_id);
        id1.push_back(p.content1.identity_id);
        bg0.push_back(p.content0.background_id);
        bg1.push_back(p.content1.background_id);
    }
    auto longs = [](const std::vector<std::int64_t>& v) { return torch::tensor(v, torch::kInt64); };
    PairBatch b;
    b.img0 = torch::stack(i0);
    b.img1 = torch::stack(i1);
    b.y0 = torch::tensor(y0);
    b.y1 = torch::tensor(y1);
    b.identity0 = longs(id0);
    b.identity1 = longs(id1);
    b.background0 = longs(bg0);
    b.background1 = longs(bg1);
    return b;
}

PairBatch PairBatch::swapped() const
{
    PairBatch b = *this;
    std::swap(b.img0, b.img1);
    std::swap(b.y0, b.y1);
    std::swap(b.identity0, b.identity1);
    std::swap(b.background0, b.background1);
    return b;
}

PairBatch PairBatch::to(torch::ScalarType dtype) const
{
    PairBatch b = *this;
    b.img0 = img0.to(dtype);
    b.img1 = img1.to(dtype);
    b.y0 = y0.to(dtype);
    b.y1 = y1.to(dtype);
    return b;
}

DisentangledFeatures disentangle_pair(const PairBatch& batch, ModelBundle& model)
{
    require_same_shape(batch.img0, batch.img1, "disentangle_pair");
    const auto images = batch.images();
    auto c = model->encode(images, EncoderKind::content).chunk(2, 0);
    auto a = model->encode(images, EncoderKind::artifact).chunk(2, 0);
    return {c[0], c[1], a[0], a[1]};
}

torch::Tensor recombine(const torch::Tensor& a, const torch::Tensor& c)
{
    return elementwise_add(a, c);
}

ReconstructionSet reconstruct_all(const DisentangledFeatures& f, ModelBundle& model)
{
    const auto z = torch::cat({recombine(f.a0, f.c0), recombine(f.a1, f.c1), recombine(f.a0, f.c1),
                               recombine(f.a1, f.c0)},
                              0);
    auto out = model->decode(z).chunk(4, 0);
    return {out[0], out[1], out[2], out[3]};
}

}  // namespace cadet
