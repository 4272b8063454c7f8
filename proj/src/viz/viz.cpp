#include "cadet/viz/viz.hpp"

#include "cadet/core/seed.hpp"
#include "cadet/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace cadet {

namespace F = torch::nn::functional;

torch::Tensor cam_from(const torch::Tensor& features, const torch::Tensor& gradients)
{
    if (features.dim() != 3 || !features.sizes().equals(gradients.sizes())) {
        throw ShapeError("cam_from: expected equal (n,h,w) features and gradients");
    }
    const auto weights = gradients.mean({1, 2}, true);
    return torch::relu((weights * features).sum(0));
}

HeatMap finalize_cam(const torch::Tensor& cam, std::int64_t size)
{
    if (cam.dim() != 2) throw ShapeError("finalize_cam: expected (h,w)");
    auto up = F::interpolate(cam.to(torch::kFloat64).unsqueeze(0).unsqueeze(0),
                             F::InterpolateFuncOptions()
                                 .size(std::vector<std::int64_t>{size, size})
                                 .mode(torch::kBilinear)
                                 .align_corners(false))
                  .squeeze(0)
                  .squeeze(0)
                  .clamp_min(0.0);
    const double peak = up.max().item<double>();
    if (peak > 0.0) up = up / peak;
    return {up};
}

std::vector<HeatMap> grad_cam(ModelBundle& model, const torch::Tensor& images, std::int64_t target_class)
{
    if (images.dim() != 4) throw ShapeError("grad_cam: expected (B,3,H,W) images");
    if (target_class < 0 || target_class > 1) throw UserError("grad_cam: target class must be 0 or 1");
    model->eval();
    torch::Tensor a;
    {
        torch::NoGradGuard no_grad;
        a = model->encode(images, EncoderKind::artifact);
    }
    a = a.detach().requires_grad_(true);
    const auto logits = model->classify(a);
    // Samples are independent, so the batch sum gives each sample its own gradient.
    const auto grads = torch::autograd::grad({logits.select(1, target_class).sum()}, {a})[0];
    std::vector<HeatMap> out;
    for (std::int64_t b = 0; b < images.size(0); ++b) {
        out.push_back(finalize_cam(cam_from(a[b].detach(), grads[b]), images.size(2)));
    }
    return out;
}

RegionStats region_stats(const torch::Tensor& map, const torch::Tensor& mask)
{
    const auto m = mask.dim() == 3 ? mask.squeeze(0) : mask;
    if (!m.sizes().equals(map.sizes())) throw ShapeError("region_stats: mask and map sizes differ");
    const auto in = m.ne(0);
    const auto out = in.logical_not();
    RegionStats s;
    const auto v = map.to(torch::kFloat64);
    if (in.any().item<bool>()) s.inside = v.masked_select(in).mean().item<double>();
    if (out.any().item<bool>()) s.outside = v.masked_select(out).mean().item<double>();
    return s;
}

Raster cam_overlay(const torch::Tensor& image, const HeatMap& cam)
{
    const auto img = ((image.to(torch::kFloat64).clamp(-1.0, 1.0) + 1.0) * 0.5).permute({1, 2, 0}).contiguous();
    const auto h = static_cast<int>(img.size(0)), w = static_cast<int>(img.size(1));
    const auto m = cam.map.contiguous();
    Raster r(w, h, 3);
    const auto* p = img.data_ptr<double>();
    const auto* q = m.data_ptr<double>();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double heat = q[y * w + x];
            double gray = 0.0;
            for (int c = 0; c < 3; ++c) gray += p[(y * w + x) * 3 + c] / 3.0;
            const double base = 0.35 * gray;
            r.at(x, y, 0) = static_cast<std::uint8_t>(std::lround(255.0 * std::min(1.0, base + 0.65 * heat)));
            r.at(x, y, 1) = static_cast<std::uint8_t>(std::lround(255.0 * base));
            r.at(x, y, 2) = static_cast<std::uint8_t>(std::lround(255.0 * std::min(1.0, base + 0.3 * (1.0 - heat))));
        }
    }
    return r;
}

EmbedMethod parse_embed_method(const std::string& s)
{
    if (s == "pca") return EmbedMethod::pca;
    if (s == "tsne") return EmbedMethod::tsne;
    throw ConfigError("unknown embedding method: " + s + " (expected pca|tsne)");
}

Eigen::MatrixXd pca_2d(const Eigen::MatrixXd& X)
{
    Eigen::MatrixXd P = X;
    if (P.cols() < 2) {
        P.conservativeResize(Eigen::NoChange, 2);
        P.rightCols(2 - X.cols()).setZero();
    }
    const Eigen::MatrixXd C = P.rowwise() - P.colwise().mean();
    const Eigen::MatrixXd cov = C.transpose() * C;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    // Eigenvalues ascend; the two leading axes are the last columns.
    Eigen::MatrixXd axes(P.cols(), 2);
    for (int k = 0; k < 2; ++k) {
        Eigen::VectorXd v = es.eigenvectors().col(P.cols() - 1 - k);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v[arg] < 0) v = -v;
        axes.col(k) = v;
    }
    return C * axes;
}

namespace {

/// Row of conditional probabilities with the Gaussian width chosen by
/// bisection to hit the target perplexity.
void conditional_row(const Eigen::VectorXd& d2, Eigen::Index self, double perplexity, Eigen::VectorXd& row)
{
    const double target = std::log(perplexity);
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 64; ++it) {
        double sum = 0.0, weighted = 0.0;
        for (Eigen::Index j = 0; j < d2.size(); ++j) {
            row[j] = j == self ? 0.0 : std::exp(-beta * d2[j]);
            sum += row[j];
            weighted += row[j] * d2[j];
        }
        if (sum <= 0.0) {
            hi = beta;
            beta = (lo + hi) / 2.0;
            continue;
        }
        const double entropy = std::log(sum) + beta * weighted / sum;
        row /= sum;
        if (std::abs(entropy - target) < 1e-5) return;
        if (entropy > target) {
            lo = beta;
            beta = std::isinf(hi) ? beta * 2.0 : (lo + hi) / 2.0;
        } else {
            hi = beta;
            beta = (lo + hi) / 2.0;
        }
    }
}

}  // namespace

Eigen::MatrixXd tsne_2d(const Eigen::MatrixXd& X, const TsneConfig& cfg)
{
    const auto n = X.rows();
    if (n < 3) throw UserError("t-SNE needs at least three samples");
    const double perplexity = std::min(cfg.perplexity, static_cast<double>(n - 1) / 3.0);

    const Eigen::VectorXd sq = X.rowwise().squaredNorm();
    Eigen::MatrixXd D2 = (sq.replicate(1, n) + sq.transpose().replicate(n, 1) - 2.0 * X * X.transpose()).cwiseMax(0.0);
    Eigen::MatrixXd P(n, n);
    Eigen::VectorXd row(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        conditional_row(D2.row(i).transpose(), i, perplexity, row);
        P.row(i) = row.transpose();
    }
    P = (P + P.transpose()).eval() / (2.0 * static_cast<double>(n));
    P = P.cwiseMax(1e-12);

    auto rng = SeedState(cfg.seed).engine(Stream::viz);
    std::normal_distribution<double> normal(0.0, 1e-4);
    Eigen::MatrixXd Y(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) Y(i, 0) = normal(rng), Y(i, 1) = normal(rng);
    Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(n, 2);
    Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(n, 2);

    const std::int64_t exaggeration_iters = std::min<std::int64_t>(100, cfg.iterations / 4);
    const double lr = cfg.learning_rate > 0.0 ? cfg.learning_rate : std::max(static_cast<double>(n) / 48.0, 50.0);
    for (std::int64_t it = 0; it < cfg.iterations; ++it) {
        const double exaggeration = it < exaggeration_iters ? 12.0 : 1.0;
        const double momentum = it < exaggeration_iters ? 0.5 : 0.8;
        const Eigen::VectorXd ysq = Y.rowwise().squaredNorm();
        Eigen::MatrixXd num = ysq.replicate(1, n) + ysq.transpose().replicate(n, 1) - 2.0 * Y * Y.transpose();
        num = (1.0 + num.array()).inverse().matrix();
        num.diagonal().setZero();
        const double z = num.sum();
        const Eigen::MatrixXd Q = (num / z).cwiseMax(1e-12);
        const Eigen::MatrixXd W = ((exaggeration * P - Q).array() * num.array()).matrix();
        Eigen::MatrixXd grad(n, 2);
        for (Eigen::Index i = 0; i < n; ++i) {
            grad.row(i) = 4.0 * (W.row(i).sum() * Y.row(i) - W.row(i) * Y);
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            for (int k = 0; k < 2; ++k) {
                const bool same = (grad(i, k) > 0) == (velocity(i, k) > 0);
                gains(i, k) = std::max(0.01, same ? gains(i, k) * 0.8 : gains(i, k) + 0.2);
            }
        }
        velocity = momentum * velocity - lr * gains.cwiseProduct(grad);
        Y += velocity;
        Y = Y.rowwise() - Y.colwise().mean();
    }
    return Y;
}

double silhouette_score(const Eigen::MatrixXd& coords, const std::vector<std::int64_t>& labels)
{
    const auto n = coords.rows();
    if (static_cast<std::size_t>(n) != labels.size()) throw UserError("silhouette: label count mismatch");
    std::map<std::int64_t, std::int64_t> sizes;
    for (auto l : labels) sizes[l]++;
    if (sizes.size() < 2) throw UserError("silhouette needs at least two clusters");
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        std::map<std::int64_t, double> dist_sum;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i != j) dist_sum[labels[static_cast<std::size_t>(j)]] += (coords.row(i) - coords.row(j)).norm();
        }
        const auto own = labels[static_cast<std::size_t>(i)];
        if (sizes[own] == 1) continue;  // singleton clusters score 0
        const double a = dist_sum[own] / static_cast<double>(sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (const auto& [l, s] : dist_sum) {
            if (l != own) b = std::min(b, s / static_cast<double>(sizes[l]));
        }
        const double m = std::max(a, b);
        total += m > 0.0 ? (b - a) / m : 0.0;
    }
    return total / static_cast<double>(n);
}

Raster scatter_plot(const Eigen::MatrixXd& coords, const std::vector<std::int64_t>& labels, int size)
{
    static constexpr std::uint8_t palette[8][3] = {{31, 119, 180}, {214, 39, 40},  {44, 160, 44},  {255, 127, 14},
                                                    {148, 103, 189}, {140, 86, 75}, {227, 119, 194}, {127, 127, 127}};
    Raster r(size, size, 3);
    std::fill(r.pixels.begin(), r.pixels.end(), 255);
    const Eigen::RowVectorXd lo = coords.colwise().minCoeff();
    const Eigen::RowVectorXd hi = coords.colwise().maxCoeff();
    const int margin = 6;
    auto to_px = [&](double v, int k) {
        const double span = hi[k] - lo[k];
        const double t = span > 0.0 ? (v - lo[k]) / span : 0.5;
        return margin + static_cast<int>(std::lround(t * (size - 1 - 2 * margin)));
    };
    for (Eigen::Index i = 0; i < coords.rows(); ++i) {
        const auto* col = palette[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]) % 8];
        const int px = to_px(coords(i, 0), 0);
        const int py = size - 1 - to_px(coords(i, 1), 1);
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                for (int c = 0; c < 3; ++c) r.at(px + dx, py + dy, c) = col[c];
    }
    return r;
}

Eigen::MatrixXd embed_scatter(const Eigen::MatrixXd& X, const std::vector<std::int64_t>& labels, EmbedMethod method,
                              const std::filesystem::path& prefix, const TsneConfig& tsne)
{
    if (X.rows() < 3) throw UserError("embedding needs at least three samples");
    if (static_cast<std::size_t>(X.rows()) != labels.size()) throw UserError("embedding: label count mismatch");
    const Eigen::MatrixXd Y = method == EmbedMethod::pca ? pca_2d(X) : tsne_2d(X, tsne);
    if (!prefix.empty()) {
        if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
        std::ofstream csv(prefix.string() + ".csv");
        if (!csv) throw UserError("cannot write " + prefix.string() + ".csv");
        csv << "index,x,y,label\n";
        char buf[96];
        for (Eigen::Index i = 0; i < Y.rows(); ++i) {
            std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%lld\n", static_cast<long long>(i), Y(i, 0), Y(i, 1),
                          static_cast<long long>(labels[static_cast<std::size_t>(i)]));
            csv << buf;
        }
        write_png(prefix.string() + ".png", scatter_plot(Y, labels));
    }
    return Y;
}

FeatureStage parse_feature_stage(const std::string& s)
{
    if (s == "content") return FeatureStage::content;
    if (s == "artifact") return FeatureStage::artifact;
    if (s == "backbone-mid" || s == "backbone_mid") return FeatureStage::backbone_mid;
    throw UserError("unknown stage: " + s + " (expected content|artifact|backbone-mid)");
}

torch::Tensor stage_features(ModelBundle& model, const torch::Tensor& image, FeatureStage stage)
{
    if (image.dim() != 3) throw ShapeError("stage_features: expected one (3,H,W) image");
    torch::NoGradGuard no_grad;
    model->eval();
    const auto batch = image.unsqueeze(0);
    switch (stage) {
    case FeatureStage::content: return model->encode(batch, EncoderKind::content)[0];
    case FeatureStage::artifact: return model->encode(batch, EncoderKind::artifact)[0];
    case FeatureStage::backbone_mid:
        model->encode(batch, EncoderKind::artifact);  // shape checks
        return model->artifact_encoder->forward_mid(batch)[0];
    }
    return {};
}

std::pair<int, int> grid_layout(std::int64_t channels)
{
    if (channels < 1) throw ShapeError("feature grid needs at least one channel");
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(channels))));
    const int rows = static_cast<int>((channels + cols - 1) / cols);
    return {cols, rows};
}

Raster feature_grid(const torch::Tensor& features, int scale)
{
    if (features.dim() != 3) throw ShapeError("feature_grid: expected (n,h,w)");
    if (scale < 1) throw UserError("feature_grid: scale must be >= 1");
    const auto f = features.to(torch::kFloat64).contiguous();
    const int n = static_cast<int>(f.size(0)), h = static_cast<int>(f.size(1)), w = static_cast<int>(f.size(2));
    const auto [cols, rows] = grid_layout(n);
    const int ph = h * scale, pw = w * scale;
    Raster r(cols * (pw + 1) + 1, rows * (ph + 1) + 1, 1);
    const auto* p = f.data_ptr<double>();
    for (int k = 0; k < n; ++k) {
        const double* ch = p + static_cast<std::ptrdiff_t>(k) * h * w;
        const auto [mn, mx] = std::minmax_element(ch, ch + h * w);
        const double span = *mx - *mn;
        const int ox = 1 + (k % cols) * (pw + 1), oy = 1 + (k / cols) * (ph + 1);
        for (int y = 0; y < ph; ++y) {
            for (int x = 0; x < pw; ++x) {
                const double v = ch[(y / scale) * w + x / scale];
                const double g = span > 0.0 ? 255.0 * (v - *mn) / span : 128.0;
                r.at(ox + x, oy + y, 0) = static_cast<std::uint8_t>(std::lround(g));
            }
        }
    }
    return r;
}

void dump_feature_maps(ModelBundle& model, const torch::Tensor& image, FeatureStage stage,
                       const std::filesystem::path& path, int scale)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    write_png(path, feature_grid(stage_features(model, image, stage), scale));
}

double masked_energy_ratio(const torch::Tensor& features, const torch::Tensor& mask)
{
    if (features.dim() != 3) throw ShapeError("masked_energy_ratio: expected (n,h,w) features");
    auto m = mask.to(torch::kFloat64);
    if (m.dim() == 2) m = m.unsqueeze(0);
    m = F::adaptive_avg_pool2d(m.unsqueeze(0), F::AdaptiveAvgPool2dFuncOptions({features.size(1), features.size(2)}))
            .squeeze(0)
            .squeeze(0)
            .gt(0.5);
    const auto energy = features.to(torch::kFloat64).square().mean(0);
    const auto out = m.logical_not();
    if (!m.any().item<bool>() || !out.any().item<bool>()) throw UserError("masked_energy_ratio: degenerate mask");
    return energy.masked_select(m).mean().item<double>() /
           std::max(energy.masked_select(out).mean().item<double>(), 1e-12);
}

}  // namespace cadet
