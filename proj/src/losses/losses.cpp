#include "cadet/losses/losses.hpp"

#include "cadet/core/tensor_ops.hpp"
#include "cadet/error.hpp"

namespace cadet {

GramDescriptor gram(const torch::Tensor& features)
{
    if (features.dim() != 3 && features.dim() != 4) throw ShapeError("gram: expected (n,h,w) or (B,n,h,w)");
    if (features.numel() == 0) throw ShapeError("gram: empty feature map");
    const auto f = features.flatten(features.dim() - 2);  // (..., n, hw)
    const auto hw = static_cast<double>(f.size(-1));
    return {torch::matmul(f, f.transpose(-1, -2)) / hw};
}

void LossWeights::validate() const
{
    for (double w : {rec_img, rec_fea, id, bg, contrast}) {
        if (!(w >= 0.0)) throw ConfigError("loss weights must be non-negative");
    }
}

void to_json(Json& j, const LossWeights& w)
{
    j = Json{{"rec_img", w.rec_img}, {"rec_fea", w.rec_fea}, {"id", w.id}, {"bg", w.bg}, {"contrast", w.contrast}};
}

void from_json(const Json& j, LossWeights& w)
{
    w.rec_img = j.value("rec_img", w.rec_img);
    w.rec_fea = j.value("rec_fea", w.rec_fea);
    w.id = j.value("id", w.id);
    w.bg = j.value("bg", w.bg);
    w.contrast = j.value("contrast", w.contrast);
    w.validate();
}

LossBreakdown total_loss(LossBreakdown c, const LossWeights& w)
{
    w.validate();
    c.total = c.ce + w.rec_img * c.rec_img + w.rec_fea * c.rec_fea + w.id * c.id + w.bg * c.bg +
              w.contrast * c.contrast;
    return c;
}

torch::Tensor LossTerms::weighted_total(const LossWeights& w) const
{
    w.validate();
    torch::Tensor total = ce;
    auto add = [&total](const torch::Tensor& term, double weight) {
        if (!term.defined() || weight == 0.0) return;
        total = total.defined() ? total + weight * term : weight * term;
    };
    add(rec_img, w.rec_img);
    add(rec_fea, w.rec_fea);
    add(id, w.id);
    add(bg, w.bg);
    add(contrast, w.contrast);
    return total;
}

LossBreakdown LossTerms::breakdown(const LossWeights& w) const
{
    auto v = [](const torch::Tensor& t) { return t.defined() ? t.detach().item<double>() : 0.0; };
    return total_loss({v(ce), v(rec_img), v(rec_fea), v(id), v(bg), v(contrast), 0.0}, w);
}

torch::Tensor image_reconstruction_loss(const ReconstructionSet& rec, const PairBatch& batch)
{
    return l1_distance(rec.self0, batch.img0) + l1_distance(rec.self1, batch.img1);
}

torch::Tensor feature_reconstruction_loss(const ReconstructionSet& rec, const DisentangledFeatures& f,
                                          ModelBundle& model)
{
    // One encoder pass per encoder over [self0, self1, cross01, cross10].
    const auto images = torch::cat({rec.self0, rec.self1, rec.cross01, rec.cross10}, 0);
    const auto ec = model->encode(images, EncoderKind::content).chunk(4, 0);
    const auto ea = model->encode(images, EncoderKind::artifact).chunk(4, 0);
    // i = 0: self0 -> (c0, a0); cross01 = D(a0 + c1) -> (c1, a0)
    // i = 1: self1 -> (c1, a1); cross10 = D(a1 + c0) -> (c0, a1)
    return l1_distance(ec[0], f.c0) + l1_distance(ea[0], f.a0) + l1_distance(ec[2], f.c1) +
           l1_distance(ea[2], f.a0) + l1_distance(ec[1], f.c1) + l1_distance(ea[1], f.a1) +
           l1_distance(ec[3], f.c0) + l1_distance(ea[3], f.a1);
}

torch::Tensor identity_loss(const ReconstructionSet& rec, const PairBatch& batch, EmbedderPair& emb)
{
    // cross10 carries img0's content, cross01 carries img1's.
    const auto crosses = emb->identity->embed(torch::cat({rec.cross10, rec.cross01}, 0));
    const auto sources = emb->identity->embed(batch.images());
    return (1.0 - cosine_similarity_rows(crosses, sources)).mean();
}

torch::Tensor background_loss(const ReconstructionSet& rec, const PairBatch& batch, EmbedderPair& emb)
{
    const auto crosses = emb->perceptual->features(torch::cat({rec.cross10, rec.cross01}, 0)).chunk(2, 0);
    const auto sources = emb->perceptual->features(batch.images()).chunk(2, 0);
    return 0.5 * (l1_distance(crosses[0], sources[0]) + l1_distance(crosses[1], sources[1]));
}

torch::Tensor info_nce_term(const torch::Tensor& pos, const torch::Tensor& neg0, const torch::Tensor& neg1)
{
    return torch::logsumexp(torch::stack({pos, neg0, neg1}, 0), 0) - pos;
}

torch::Tensor grcc_loss(const DisentangledFeatures& f)
{
    const auto ga0 = gram(f.a0).flat();
    const auto ga1 = gram(f.a1).flat();
    const auto gc0 = gram(f.c0).flat();
    const auto gc1 = gram(f.c1).flat();
    const auto pos_a = cosine_similarity_rows(ga0, ga1);
    const auto pos_c = cosine_similarity_rows(gc0, gc1);
    const auto neg0 = cosine_similarity_rows(ga0, gc1);
    const auto neg1 = cosine_similarity_rows(ga1, gc0);
    return (info_nce_term(pos_a, neg0, neg1) + info_nce_term(pos_c, neg0, neg1)).mean();
}

torch::Tensor classification_loss(const torch::Tensor& logits, const torch::Tensor& labels)
{
    if (logits.dim() != 2 || logits.size(1) != 2) throw ShapeError("classification_loss: expected (N,2) logits");
    if (labels.dim() != 1 || labels.size(0) != logits.size(0)) {
        throw ShapeError("classification_loss: expected one label per row");
    }
    const auto y = labels.detach();
    if (!torch::isfinite(y).all().item<bool>() || (y < 0).any().item<bool>() || (y > 1).any().item<bool>()) {
        throw UserError("classification_loss: labels must lie in [0,1]");
    }
    const auto logp = torch::log_softmax(logits, 1);
    const auto target = labels.to(logits.scalar_type());
    return -(target * logp.select(1, 1) + (1.0 - target) * logp.select(1, 0)).mean();
}

}  // namespace cadet
