#include "cadet/augment/augment.hpp"

#include "cadet/core/tensor_ops.hpp"
#include "cadet/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cadet {

using torch::indexing::Slice;

void AugmentPolicy::validate() const
{
    auto prob = [](double p, const char* what) {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string("augment: ") + what + " must lie in [0,1]");
    };
    prob(erase_params.p, "erase probability");
    prob(hflip_p, "hflip probability");
    prob(mixup_p, "mixup probability");
    const auto& e = erase_params;
    if (!(e.area_min > 0.0 && e.area_min <= e.area_max && e.area_max < 1.0)) {
        throw ConfigError("augment: erase area ratios must satisfy 0 < min <= max < 1");
    }
    if (!(e.aspect_min > 0.0 && e.aspect_min <= e.aspect_max)) throw ConfigError("augment: bad erase aspect range");
    if (mixup && !(mixup_alpha > 0.0)) throw ConfigError("augment: mixup alpha must be > 0");
}

void to_json(Json& j, const AugmentPolicy& p)
{
    j = Json{{"level", p.level == AugmentLevel::image ? "image" : "feature"},
             {"erase", p.erase},
             {"hflip", p.hflip},
             {"mixup", p.mixup},
             {"erase_p", p.erase_params.p},
             {"erase_area", {p.erase_params.area_min, p.erase_params.area_max}},
             {"erase_aspect", {p.erase_params.aspect_min, p.erase_params.aspect_max}},
             {"hflip_p", p.hflip_p},
             {"mixup_p", p.mixup_p},
             {"mixup_alpha", p.mixup_alpha}};
}

void from_json(const Json& j, AugmentPolicy& p)
{
    const auto level = j.value("level", std::string(p.level == AugmentLevel::image ? "image" : "feature"));
    if (level == "image") {
        p.level = AugmentLevel::image;
    } else if (level == "feature") {
        p.level = AugmentLevel::feature;
    } else {
        throw ConfigError("augment.level must be 'image' or 'feature'");
    }
    p.erase = j.value("erase", p.erase);
    p.hflip = j.value("hflip", p.hflip);
    p.mixup = j.value("mixup", p.mixup);
    p.erase_params.p = j.value("erase_p", p.erase_params.p);
    if (j.contains("erase_area")) {
        p.erase_params.area_min = j["erase_area"].at(0).get<double>();
        p.erase_params.area_max = j["erase_area"].at(1).get<double>();
    }
    if (j.contains("erase_aspect")) {
        p.erase_params.aspect_min = j["erase_aspect"].at(0).get<double>();
        p.erase_params.aspect_max = j["erase_aspect"].at(1).get<double>();
    }
    p.hflip_p = j.value("hflip_p", p.hflip_p);
    p.mixup_p = j.value("mixup_p", p.mixup_p);
    p.mixup_alpha = j.value("mixup_alpha", p.mixup_alpha);
    p.validate();
}

std::string describe(const AugmentPolicy& p)
{
    if (!p.any()) return "none";
    std::string s = p.level == AugmentLevel::image ? "image:" : "feature:";
    if (p.erase) s += "erase+";
    if (p.hflip) s += "hflip+";
    if (p.mixup) s += "mixup+";
    s.pop_back();
    return s;
}

namespace {
bool coin(double p, std::mt19937_64& rng)
{
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

torch::Tensor as_batch(const torch::Tensor& x, const char* what)
{
    if (x.dim() == 3) return x.unsqueeze(0);
    if (x.dim() == 4) return x;
    throw ShapeError(std::string(what) + ": expected (C,H,W) or (B,C,H,W)");
}
}  // namespace

torch::Tensor random_erase(const torch::Tensor& x, const EraseParams& prm, std::mt19937_64& rng)
{
    const auto batch = as_batch(x, "random_erase");
    const auto H = batch.size(2), W = batch.size(3);
    const double area = static_cast<double>(H * W);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    // Multiply by a 0/1 mask so autograd sees erased features as constants.
    auto keep = torch::ones({batch.size(0), 1, H, W}, batch.options().requires_grad(false));
    bool any = false;
    for (std::int64_t b = 0; b < batch.size(0); ++b) {
        if (!coin(prm.p, rng)) continue;
        const double target = area * (prm.area_min + (prm.area_max - prm.area_min) * u01(rng));
        const double log_lo = std::log(prm.aspect_min), log_hi = std::log(prm.aspect_max);
        const double aspect = std::exp(log_lo + (log_hi - log_lo) * u01(rng));
        auto h = static_cast<std::int64_t>(std::lround(std::sqrt(target * aspect)));
        auto w = static_cast<std::int64_t>(std::lround(std::sqrt(target / aspect)));
        h = std::clamp<std::int64_t>(h, 1, H);
        w = std::clamp<std::int64_t>(w, 1, W);
        const auto top = std::uniform_int_distribution<std::int64_t>(0, H - h)(rng);
        const auto left = std::uniform_int_distribution<std::int64_t>(0, W - w)(rng);
        keep.index_put_({b, Slice(), Slice(top, top + h), Slice(left, left + w)}, 0.0);
        any = true;
    }
    if (!any) return x;
    const auto out = batch * keep;
    return x.dim() == 3 ? out.squeeze(0) : out;
}

torch::Tensor horizontal_flip(const torch::Tensor& x, double p, std::mt19937_64& rng)
{
    const auto batch = as_batch(x, "horizontal_flip");
    std::vector<std::int64_t> flip_rows;
    for (std::int64_t b = 0; b < batch.size(0); ++b) {
        if (coin(p, rng)) flip_rows.push_back(b);
    }
    if (flip_rows.empty()) return x;
    auto sel = torch::zeros({batch.size(0), 1, 1, 1}, batch.options().requires_grad(false));
    for (auto b : flip_rows) sel[b] = 1.0;
    const auto out = sel * batch.flip({3}) + (1.0 - sel) * batch;
    return x.dim() == 3 ? out.squeeze(0) : out;
}

Mixed mix_with(const torch::Tensor& x0, const torch::Tensor& x1, const torch::Tensor& y0, const torch::Tensor& y1,
               double lambda)
{
    require_same_shape(x0, x1, "mixup");
    require_same_shape(y0, y1, "mixup labels");
    return {lambda * x0 + (1.0 - lambda) * x1, lambda * y0 + (1.0 - lambda) * y1, lambda};
}

double sample_beta(double alpha, double beta, std::mt19937_64& rng)
{
    const double x = std::gamma_distribution<double>(alpha, 1.0)(rng);
    const double y = std::gamma_distribution<double>(beta, 1.0)(rng);
    if (x + y == 0.0) return coin(0.5, rng) ? 1.0 : 0.0;
    return x / (x + y);
}

Mixed mixup(const torch::Tensor& x0, const torch::Tensor& x1, const torch::Tensor& y0, const torch::Tensor& y1,
            double alpha, std::mt19937_64& rng)
{
    if (!(alpha > 0.0)) throw ConfigError("mixup alpha must be > 0");
    return mix_with(x0, x1, y0, y1, sample_beta(alpha, alpha, rng));
}

Augmented apply_policy(const AugmentPolicy& policy, const torch::Tensor& x, const torch::Tensor& y,
                       std::mt19937_64& rng, bool training)
{
    if (!training || !policy.any()) return {x, y};
    auto out = x;
    auto labels = y;
    if (policy.erase) out = random_erase(out, policy.erase_params, rng);
    if (policy.hflip) out = horizontal_flip(out, policy.hflip_p, rng);
    if (policy.mixup && coin(policy.mixup_p, rng)) {
        std::vector<std::int64_t> perm(static_cast<std::size_t>(out.size(0)));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        const auto idx = torch::tensor(perm, torch::kInt64);
        auto mixed = mixup(out, out.index_select(0, idx), labels, labels.index_select(0, idx), policy.mixup_alpha, rng);
        out = mixed.x;
        labels = mixed.y;
    }
    return {out, labels};
}

}  // namespace cadet
