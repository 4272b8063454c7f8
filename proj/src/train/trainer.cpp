#include "cadet/train/trainer.hpp"

#include "cadet/error.hpp"
#include "cadet/log.hpp"
#include "cadet/model/checkpoint.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace cadet {

Variant parse_variant(const std::string& s)
{
    if (s == "baseline") return Variant::baseline;
    if (s == "basic" || s == "A") return Variant::basic;
    if (s == "c2c" || s == "B") return Variant::c2c;
    if (s == "grcc" || s == "C") return Variant::grcc;
    if (s == "full" || s == "D") return Variant::full;
    throw ConfigError("unknown variant: " + s + " (expected baseline|basic|c2c|grcc|full)");
}

std::string to_string(Variant v)
{
    switch (v) {
    case Variant::baseline: return "baseline";
    case Variant::basic: return "basic";
    case Variant::c2c: return "c2c";
    case Variant::grcc: return "grcc";
    case Variant::full: return "full";
    }
    return "full";
}

LossWeights weights_for(Variant v, const LossWeights& base)
{
    LossWeights w = base;
    switch (v) {
    case Variant::baseline: return LossWeights::zeros();
    case Variant::basic: w.id = w.bg = w.contrast = 0.0; break;
    case Variant::c2c: w.contrast = 0.0; break;
    case Variant::grcc: w.id = w.bg = 0.0; break;
    case Variant::full: break;
    }
    return w;
}

TrainConfig TrainConfig::paper_scale()
{
    TrainConfig c;
    c.batch_size = 128;
    c.max_iters = 30000;
    c.lr_halve_every = 5000;
    return c;
}

void TrainConfig::validate() const
{
    if (batch_size < 2 || batch_size % 2) throw ConfigError("train.batch_size must be even and >= 2");
    if (max_iters < 0) throw ConfigError("train.max_iters must be >= 0");
    if (!(lr > 0.0)) throw ConfigError("train.lr must be > 0");
    if (lr_halve_every < 1) throw ConfigError("train.lr_halve_every must be >= 1");
    if (checkpoint_every < 0 || log_every < 1) throw ConfigError("train: bad checkpoint/log cadence");
    if (threads < 1) throw ConfigError("train.threads must be >= 1");
    weights.validate();
    augment.validate();
}

void to_json(Json& j, const TrainConfig& c)
{
    j = Json{{"batch_size", c.batch_size},
             {"max_iters", c.max_iters},
             {"lr", c.lr},
             {"lr_halve_every", c.lr_halve_every},
             {"adam_beta1", c.adam_beta1},
             {"adam_beta2", c.adam_beta2},
             {"adam_eps", c.adam_eps},
             {"weights", c.weights},
             {"variant", to_string(c.variant)},
             {"augment", c.augment},
             {"same_identity_pairs", c.same_identity_pairs},
             {"seed", c.seed},
             {"checkpoint_every", c.checkpoint_every},
             {"log_every", c.log_every},
             {"threads", c.threads}};
}

void from_json(const Json& j, TrainConfig& c)
{
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_iters = j.value("max_iters", c.max_iters);
    c.lr = j.value("lr", c.lr);
    c.lr_halve_every = j.value("lr_halve_every", c.lr_halve_every);
    c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    if (j.contains("weights")) c.weights = j["weights"].get<LossWeights>();
    c.variant = parse_variant(j.value("variant", to_string(c.variant)));
    if (j.contains("augment")) c.augment = j["augment"].get<AugmentPolicy>();
    c.same_identity_pairs = j.value("same_identity_pairs", c.same_identity_pairs);
    c.seed = j.value("seed", c.seed);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.log_every = j.value("log_every", c.log_every);
    c.threads = j.value("threads", c.threads);
    c.validate();
}

double lr_at(std::int64_t iter, const TrainConfig& cfg)
{
    if (iter < 0) throw UserError("lr_at: iteration must be >= 0");
    return cfg.lr * std::pow(0.5, static_cast<double>(iter / cfg.lr_halve_every));
}

LossTerms compute_loss_terms(const PairBatch& batch, ModelBundle& model, EmbedderPair* embedders,
                             const ObjectiveOptions& opts)
{
    const auto& w = opts.weights;
    const bool all = opts.all_terms;
    const bool need_recon = all || w.any_reconstruction();
    const bool need_content = need_recon || w.contrast > 0;
    const bool need_embedders = all ? embedders != nullptr : w.needs_embedders();
    if (need_embedders && embedders == nullptr) {
        throw UserError("identity/background losses need prepared embedders");
    }

    const auto images = batch.images();
    DisentangledFeatures f;
    const auto a = model->encode(images, EncoderKind::artifact);
    auto a_split = a.chunk(2, 0);
    f.a0 = a_split[0];
    f.a1 = a_split[1];
    if (need_content) {
        auto c = model->encode(images, EncoderKind::content).chunk(2, 0);
        f.c0 = c[0];
        f.c1 = c[1];
    }

    LossTerms t;
    auto cls_in = a;
    auto labels = batch.labels().to(a.scalar_type());
    if (opts.feature_augment && opts.feature_augment->level == AugmentLevel::feature && opts.rng) {
        auto aug = apply_policy(*opts.feature_augment, cls_in, labels, *opts.rng, opts.training);
        cls_in = aug.x;
        labels = aug.y;
    }
    t.ce = classification_loss(model->classify(cls_in), labels);

    if (need_recon) {
        const auto rec = reconstruct_all(f, model);
        if (all || w.rec_img > 0) t.rec_img = image_reconstruction_loss(rec, batch);
        if (all || w.rec_fea > 0) t.rec_fea = feature_reconstruction_loss(rec, f, model);
        if (embedders != nullptr && (all || w.id > 0)) t.id = identity_loss(rec, batch, *embedders);
        if (embedders != nullptr && (all || w.bg > 0)) t.bg = background_loss(rec, batch, *embedders);
    }
    if (all || w.contrast > 0) t.contrast = grcc_loss(f);
    return t;
}

std::unique_ptr<torch::optim::Adam> make_optimizer(ModelBundle& model, const TrainConfig& cfg)
{
    return std::make_unique<torch::optim::Adam>(
        model->parameters(),
        torch::optim::AdamOptions(cfg.lr).betas({cfg.adam_beta1, cfg.adam_beta2}).eps(cfg.adam_eps));
}

namespace {
std::string dump_breakdown(const LossBreakdown& b)
{
    std::ostringstream os;
    const auto v = b.values();
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << LossBreakdown::kNames[i] << '=' << v[i];
    return os.str();
}
}  // namespace

LossBreakdown train_step(const PairBatch& batch, ModelBundle& model, torch::optim::Adam& opt, const TrainConfig& cfg,
                         EmbedderPair* embedders, std::int64_t step)
{
    const SeedState seed(cfg.seed);
    auto rng = seed.engine(Stream::augment, static_cast<std::uint64_t>(step));
    model->train();

    PairBatch b = batch;
    if (cfg.augment.any() && cfg.augment.level == AugmentLevel::image) {
        auto aug = apply_policy(cfg.augment, b.images(), b.labels(), rng, true);
        auto x = aug.x.chunk(2, 0);
        auto y = aug.y.chunk(2, 0);
        b.img0 = x[0];
        b.img1 = x[1];
        b.y0 = y[0];
        b.y1 = y[1];
    }
    model->classifier->set_dropout_generator(seed.torch_generator(Stream::dropout, static_cast<std::uint64_t>(step)));

    const double lr = lr_at(step, cfg);
    for (auto& group : opt.param_groups()) static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);

    const auto weights = cfg.effective_weights();
    ObjectiveOptions opts;
    opts.weights = weights;
    opts.feature_augment = &cfg.augment;
    opts.rng = &rng;
    opts.training = true;

    opt.zero_grad();
    const auto terms = compute_loss_terms(b, model, embedders, opts);
    const auto total = terms.weighted_total(weights);
    const auto breakdown = terms.breakdown(weights);
    if (!std::isfinite(breakdown.total)) {
        throw NumericError("non-finite loss at iteration " + std::to_string(step) + ": " + dump_breakdown(breakdown));
    }
    total.backward();
    opt.step();
    return breakdown;
}

std::string format_log_header()
{
    std::string h = "iter";
    for (const auto* name : LossBreakdown::kNames) h += std::string(",") + name;
    return h + ",lr";
}

std::string format_log_row(const LogRow& row)
{
    std::string s = std::to_string(row.iter);
    char buf[40];
    for (double v : row.loss.values()) {
        std::snprintf(buf, sizeof(buf), ",%.17g", v);
        s += buf;
    }
    std::snprintf(buf, sizeof(buf), ",%.17g", row.lr);
    return s + buf;
}

Trainer::Trainer(TrainConfig cfg, ModelConfig model_cfg, const ImageStore& store, std::optional<EmbedderPair> embedders)
    : cfg_(std::move(cfg)),
      model_cfg_(model_cfg),
      store_(store),
      embedders_(std::move(embedders)),
      sampler_(store.manifest, store.manifest.split_indices("train"), SeedState(cfg_.seed), cfg_.same_identity_pairs)
{
    cfg_.validate();
    torch::set_num_threads(cfg_.threads);
    if (cfg_.effective_weights().needs_embedders() && !embedders_) {
        throw UserError("variant '" + to_string(cfg_.variant) + "' needs prepared embedders");
    }
    if (embedders_) (*embedders_)->freeze();
    model_ = ModelBundle(model_cfg_, SeedState(cfg_.seed));
    opt_ = make_optimizer(model_, cfg_);
}

LossBreakdown Trainer::step()
{
    const auto pairs = sample_pairs(store_, sampler_, iteration_, cfg_.batch_size);
    const auto batch = PairBatch::stack(pairs);
    EmbedderPair* emb = embedders_ ? &*embedders_ : nullptr;
    const auto b = train_step(batch, model_, *opt_, cfg_, emb, iteration_);
    history_.push_back({iteration_, b, lr_at(iteration_, cfg_)});
    ++iteration_;
    return b;
}

void Trainer::run_until(std::int64_t iteration)
{
    while (iteration_ < iteration) step();
}

Json Trainer::snapshot() const
{
    return Json{{"model", model_cfg_}, {"train", cfg_}};
}

void Trainer::save(const std::filesystem::path& path) const
{
    CheckpointMeta meta;
    meta.kind = "model";
    meta.config = snapshot();
    meta.seed = cfg_.seed;
    meta.iteration = iteration_;
    save_checkpoint(path, meta, *model_, opt_.get());
}

void Trainer::resume(const std::filesystem::path& path)
{
    const auto meta = load_checkpoint(path, *model_, opt_.get());
    if (meta.kind != "model") throw UserError("not a model checkpoint: " + path.string());
    iteration_ = meta.iteration;
}

TrainResult run_training(const TrainConfig& cfg, const ModelConfig& model_cfg, const ImageStore& store,
                         std::optional<EmbedderPair> embedders, const std::filesystem::path& out_dir,
                         const std::optional<std::filesystem::path>& resume_from)
{
    Trainer trainer(cfg, model_cfg, store, std::move(embedders));
    if (resume_from) trainer.resume(*resume_from);
    std::filesystem::create_directories(out_dir);
    write_config(trainer.snapshot(), out_dir / "train_config.json");

    TrainResult result;
    result.metrics_log = out_dir / "metrics.csv";
    const bool append = resume_from && std::filesystem::exists(result.metrics_log);
    std::ofstream log_file(result.metrics_log, append ? std::ios::app : std::ios::trunc);
    if (!log_file) throw UserError("cannot write " + result.metrics_log.string());
    if (!append) log_file << format_log_header() << '\n';

    while (trainer.iteration() < cfg.max_iters) {
        const auto it = trainer.iteration();
        const auto b = trainer.step();
        if (it % cfg.log_every == 0 || it + 1 == cfg.max_iters) {
            log_file << format_log_row({it, b, lr_at(it, cfg)}) << '\n';
        }
        if (cfg.checkpoint_every > 0 && (it + 1) % cfg.checkpoint_every == 0 && it + 1 < cfg.max_iters) {
            trainer.save(out_dir / ("iter_" + std::to_string(it + 1) + ".ckpt"));
        }
    }
    log_file.flush();
    result.checkpoint = out_dir / "final.ckpt";
    trainer.save(result.checkpoint);
    result.history = trainer.history();
    return result;
}

void to_json(Json& j, const EmbedderTrainConfig& c)
{
    j = Json{{"net", c.net}, {"epochs", c.epochs}, {"batch_size", c.batch_size}, {"lr", c.lr}, {"seed", c.seed}};
}

void from_json(const Json& j, EmbedderTrainConfig& c)
{
    if (j.contains("net")) c.net = j["net"].get<EmbedderConfig>();
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr = j.value("lr", c.lr);
    c.seed = j.value("seed", c.seed);
    if (c.epochs < 1 || c.batch_size < 1 || !(c.lr > 0)) throw ConfigError("embedders: bad training settings");
}

namespace {
double accuracy(const torch::Tensor& logits, const torch::Tensor& targets)
{
    return logits.argmax(1).eq(targets).to(torch::kFloat64).mean().item<double>();
}
}  // namespace

PreparedEmbedders prepare_embedders(const ImageStore& store, const EmbedderTrainConfig& cfg)
{
    const auto train_rows = store.manifest.split_indices("train");
    auto val_rows = store.manifest.split_indices("test");
    if (train_rows.empty()) throw UserError("prepare-embedders: manifest has no train split");
    if (val_rows.empty()) val_rows = train_rows;

    std::int64_t max_id = 0, max_bg = 0;
    for (const auto& r : store.manifest.records) {
        max_id = std::max(max_id, r.identity_id);
        max_bg = std::max(max_bg, r.background_id);
    }
    EmbedderConfig net = cfg.net;
    net.num_identities = std::max(net.num_identities, max_id + 1);
    net.num_backgrounds = std::max(net.num_backgrounds, max_bg + 1);
    if (max_id == 0 && max_bg == 0) {
        throw UserError("prepare-embedders: manifest carries no identity/background labels");
    }

    auto targets = [&store](const std::vector<std::int64_t>& rows, bool identity) {
        std::vector<std::int64_t> t;
        for (auto r : rows) {
            const auto& rec = store.manifest.records[static_cast<std::size_t>(r)];
            t.push_back(identity ? rec.identity_id : rec.background_id);
        }
        return torch::tensor(t, torch::kInt64);
    };

    const SeedState seed(cfg.seed);
    PreparedEmbedders out;
    out.embedders = EmbedderPair(net, seed);
    auto& emb = out.embedders;
    emb->train();
    torch::optim::Adam opt(emb->parameters(), torch::optim::AdamOptions(cfg.lr));

    for (std::int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto order = train_rows;
        auto rng = seed.engine(Stream::embedder, static_cast<std::uint64_t>(epoch) + 1);
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const auto end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            const std::vector<std::int64_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                 order.begin() + static_cast<std::ptrdiff_t>(end));
            const auto x = store.batch(rows);
            opt.zero_grad();
            const auto loss = torch::cross_entropy_loss(emb->identity->logits(x), targets(rows, true)) +
                              torch::cross_entropy_loss(emb->perceptual->logits(x), targets(rows, false));
            loss.backward();
            opt.step();
        }
    }

    emb->freeze();
    {
        torch::NoGradGuard no_grad;
        const auto x = store.batch(val_rows);
        out.identity_accuracy = accuracy(emb->identity->logits(x), targets(val_rows, true));
        out.background_accuracy = accuracy(emb->perceptual->logits(x), targets(val_rows, false));
    }
    log::info("embedders: identity acc ", out.identity_accuracy, ", background acc ", out.background_accuracy);
    return out;
}

void save_embedders(const std::filesystem::path& path, EmbedderPair& embedders, const Json& config)
{
    CheckpointMeta meta;
    meta.kind = "embedders";
    meta.config = config;
    meta.config["net"] = embedders->config();
    save_checkpoint(path, meta, *embedders);
}

EmbedderPair load_embedders(const std::filesystem::path& path)
{
    const auto meta = read_checkpoint_meta(path);
    if (meta.kind != "embedders") throw UserError("not an embedder checkpoint: " + path.string());
    EmbedderPair emb(meta.config.at("net").get<EmbedderConfig>(), SeedState(0));
    load_checkpoint(path, *emb);
    emb->freeze();
    return emb;
}

}  // namespace cadet
