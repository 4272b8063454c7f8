#include "cadet/eval/probe.hpp"

#include "cadet/core/seed.hpp"
#include "cadet/error.hpp"
#include "cadet/losses/losses.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

namespace cadet {

ProbeFeature parse_probe_feature(const std::string& s)
{
    if (s == "pooled") return ProbeFeature::pooled;
    if (s == "gram") return ProbeFeature::gram;
    if (s == "flat") return ProbeFeature::flat;
    throw ConfigError("unknown probe feature: " + s + " (expected pooled|gram|flat)");
}

std::string to_string(ProbeFeature f)
{
    switch (f) {
    case ProbeFeature::pooled: return "pooled";
    case ProbeFeature::gram: return "gram";
    case ProbeFeature::flat: return "flat";
    }
    return "pooled";
}

namespace {

struct Standardizer {
    Eigen::RowVectorXd mean, scale;

    explicit Standardizer(const Eigen::MatrixXd& X)
    {
        mean = X.colwise().mean();
        scale = ((X.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(X.rows())).sqrt();
        for (Eigen::Index j = 0; j < scale.size(); ++j) {
            if (!(scale[j] > 1e-12)) scale[j] = 1.0;
        }
    }
    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const
    {
        return (X.rowwise() - mean).array().rowwise() / scale.array();
    }
};

/// Ridge one-vs-rest: weights for targets in {-1,+1} per class, centred so no
/// bias column is needed. Uses the dual form when features outnumber samples.
Eigen::MatrixXd fit_ridge(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double lambda)
{
    const auto n = X.rows(), d = X.cols();
    if (d <= n) {
        Eigen::MatrixXd A = X.transpose() * X;
        A.diagonal().array() += lambda;
        return A.ldlt().solve(X.transpose() * Y);
    }
    Eigen::MatrixXd K = X * X.transpose();
    K.diagonal().array() += lambda;
    return X.transpose() * K.ldlt().solve(Y);
}

}  // namespace

double linear_probe(const Eigen::MatrixXd& features, const std::vector<std::int64_t>& targets, const ProbeConfig& cfg)
{
    const auto n = features.rows();
    if (static_cast<std::size_t>(n) != targets.size()) throw UserError("probe: feature/target count mismatch");
    if (cfg.folds < 2 || cfg.folds > n) throw UserError("probe: folds must lie in [2, samples]");
    if (!(cfg.ridge > 0.0)) throw UserError("probe: ridge must be > 0");

    std::map<std::int64_t, Eigen::Index> class_index;
    for (auto t : targets) class_index.emplace(t, 0);
    if (class_index.size() < 2) throw UserError("probe needs at least two classes");
    Eigen::Index k = 0;
    for (auto& [cls, idx] : class_index) idx = k++;

    // Stratified folds: shuffle each class, then deal round-robin.
    std::vector<std::int64_t> fold(static_cast<std::size_t>(n));
    {
        auto rng = SeedState(cfg.seed).engine(Stream::probe);
        std::map<std::int64_t, std::vector<std::int64_t>> by_class;
        for (std::int64_t i = 0; i < n; ++i) by_class[targets[static_cast<std::size_t>(i)]].push_back(i);
        std::int64_t dealt = 0;
        for (auto& [cls, rows] : by_class) {
            std::shuffle(rows.begin(), rows.end(), rng);
            for (auto r : rows) fold[static_cast<std::size_t>(r)] = dealt++ % cfg.folds;
        }
    }

    std::int64_t correct = 0;
    for (std::int64_t f = 0; f < cfg.folds; ++f) {
        std::vector<Eigen::Index> train, test;
        for (std::int64_t i = 0; i < n; ++i) (fold[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
        std::map<std::int64_t, int> seen;
        for (auto i : train) seen[targets[static_cast<std::size_t>(i)]] = 1;
        if (seen.size() < 2) throw UserError("probe: a training fold contains a single class");

        const Eigen::MatrixXd Xtr = features(train, Eigen::all);
        const Standardizer st(Xtr);
        const Eigen::MatrixXd Ztr = st.apply(Xtr);
        Eigen::MatrixXd Y = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(train.size()), k, -1.0);
        for (std::size_t r = 0; r < train.size(); ++r) {
            Y(static_cast<Eigen::Index>(r), class_index.at(targets[static_cast<std::size_t>(train[r])])) = 1.0;
        }
        const Eigen::RowVectorXd y_mean = Y.colwise().mean();
        const Eigen::MatrixXd W = fit_ridge(Ztr, Y.rowwise() - y_mean, cfg.ridge);

        const Eigen::MatrixXd pred = (st.apply(features(test, Eigen::all)) * W).rowwise() + y_mean;
        for (std::size_t r = 0; r < test.size(); ++r) {
            Eigen::Index best = 0;
            pred.row(static_cast<Eigen::Index>(r)).maxCoeff(&best);
            correct += best == class_index.at(targets[static_cast<std::size_t>(test[r])]);
        }
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

torch::Tensor extract_features(ModelBundle& model, const ImageStore& store, const std::vector<std::int64_t>& rows,
                               EncoderKind which, std::int64_t batch_size)
{
    torch::NoGradGuard no_grad;
    model->eval();
    std::vector<torch::Tensor> parts;
    for (std::size_t start = 0; start < rows.size(); start += static_cast<std::size_t>(batch_size)) {
        const auto end = std::min(rows.size(), start + static_cast<std::size_t>(batch_size));
        const std::vector<std::int64_t> chunk(rows.begin() + static_cast<std::ptrdiff_t>(start),
                                              rows.begin() + static_cast<std::ptrdiff_t>(end));
        parts.push_back(model->encode(store.batch(chunk), which));
    }
    if (parts.empty()) throw UserError("no rows to extract features from");
    return torch::cat(parts, 0);
}

Eigen::MatrixXd probe_matrix(const torch::Tensor& features, ProbeFeature kind)
{
    if (features.dim() != 4) throw ShapeError("probe features must be (N,n,h,w)");
    torch::Tensor flat;
    switch (kind) {
    case ProbeFeature::pooled: flat = features.mean({2, 3}); break;
    case ProbeFeature::flat: flat = features.flatten(1); break;
    case ProbeFeature::gram: {
        const auto g = gram(features).matrix;
        const auto n = g.size(1);
        const auto iu = torch::triu_indices(n, n, 0);
        flat = g.index({torch::indexing::Slice(), iu[0], iu[1]});
        break;
    }
    }
    flat = flat.to(torch::kFloat64).contiguous();
    Eigen::MatrixXd out(flat.size(0), flat.size(1));
    // Tensor is row-major; Eigen default is column-major.
    const auto* p = flat.data_ptr<double>();
    for (Eigen::Index i = 0; i < out.rows(); ++i)
        for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = p[i * out.cols() + j];
    return out;
}

ProbeReport run_probes(ModelBundle& model, const ImageStore& store, const std::vector<std::int64_t>& rows,
                       ProbeFeature kind, const ProbeConfig& cfg)
{
    std::vector<std::int64_t> label, identity, background;
    for (auto r : rows) {
        const auto& rec = store.manifest.records.at(static_cast<std::size_t>(r));
        label.push_back(rec.label);
        identity.push_back(rec.identity_id);
        background.push_back(rec.background_id);
    }
    const auto a = probe_matrix(extract_features(model, store, rows, EncoderKind::artifact), kind);
    const auto c = probe_matrix(extract_features(model, store, rows, EncoderKind::content), kind);
    ProbeReport r;
    r.samples = static_cast<std::int64_t>(rows.size());
    r.artifact_label = linear_probe(a, label, cfg);
    r.content_label = linear_probe(c, label, cfg);
    r.content_identity = linear_probe(c, identity, cfg);
    r.content_background = linear_probe(c, background, cfg);
    return r;
}

}  // namespace cadet
