#include "cadet/error.hpp"
#include "cadet/model/checkpoint.hpp"
#include "cadet/train/trainer.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace cadet;
using namespace cadet::testing;

namespace {

struct Fixture {
    DataSpec spec;
    ImageStore store;
    explicit Fixture(std::int64_t train = 32, std::int64_t test = 16)
    {
        spec = small_spec(train, test);
        spec.image_size = 16;
        store = ImageStore::render(build_dataset(spec), spec);
    }
};

TrainConfig quick(Variant v, std::int64_t iters = 4)
{
    TrainConfig c;
    c.variant = v;
    c.batch_size = 8;
    c.max_iters = iters;
    c.lr_halve_every = 100;
    c.seed = 3;
    return c;
}

EmbedderPair frozen_embedders(std::uint64_t seed = 1)
{
    EmbedderPair e(tiny_embedders(), SeedState(seed));
    e->freeze();
    return e;
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("lr_at schedule")
{
    auto c = TrainConfig::paper_scale();
    CHECK(c.batch_size == 128);
    CHECK(c.max_iters == 30000);
    CHECK(lr_at(0, c) == 0.001);
    CHECK(lr_at(4999, c) == 0.001);
    CHECK(lr_at(5000, c) == 0.0005);
    CHECK(lr_at(12500, c) == 0.00025);
    CHECK_THROWS_AS(lr_at(-1, c), UserError);
    TrainConfig desk;
    CHECK(desk.batch_size == 32);
    CHECK(desk.max_iters == 3000);
    CHECK(desk.lr_halve_every == 500);
}

TEST_CASE("variants and weights")
{
    const LossWeights w;
    const auto basic = weights_for(Variant::basic, w);
    CHECK(basic.rec_img == 1.0);
    CHECK(basic.rec_fea == 0.01);
    CHECK(basic.id == 0.0);
    CHECK(basic.bg == 0.0);
    CHECK(basic.contrast == 0.0);
    const auto c2c = weights_for(Variant::c2c, w);
    CHECK(c2c.id == 1.0);
    CHECK(c2c.bg == 0.01);
    CHECK(c2c.contrast == 0.0);
    const auto grcc = weights_for(Variant::grcc, w);
    CHECK(grcc.id == 0.0);
    CHECK(grcc.contrast == 0.01);
    const auto full = weights_for(Variant::full, w);
    CHECK(full.id == 1.0);
    CHECK(full.contrast == 0.01);
    const auto base = weights_for(Variant::baseline, w);
    CHECK(!base.any_reconstruction());
    CHECK(base.contrast == 0.0);
    CHECK(parse_variant("A") == Variant::basic);
    CHECK(parse_variant("D") == Variant::full);
    CHECK_THROWS_AS(parse_variant("E"), ConfigError);
}

TEST_CASE("train config json and validation")
{
    auto c = quick(Variant::grcc);
    Json j = c;
    auto back = j.get<TrainConfig>();
    CHECK(back.variant == Variant::grcc);
    CHECK(back.batch_size == 8);
    CHECK(Json(back) == j);
    CHECK_THROWS_AS((Json{{"batch_size", 7}}.get<TrainConfig>()), ConfigError);
    CHECK_THROWS_AS((Json{{"lr", 0.0}}.get<TrainConfig>()), ConfigError);
    CHECK_THROWS_AS((Json{{"weights", {{"rec_img", -1.0}}}}.get<TrainConfig>()), ConfigError);
}

TEST_CASE("zero weights reduce to a plain classifier update")
{
    Fixture fx;
    auto cfg = quick(Variant::baseline);
    PairSampler sampler(fx.store.manifest, fx.store.manifest.split_indices("train"), SeedState(0));
    const auto batch = PairBatch::stack(sample_pairs(fx.store, sampler, 0, 8));

    ModelBundle a(tiny_model(16), SeedState(1));
    ModelBundle b(tiny_model(16), SeedState(1));
    auto opt_a = make_optimizer(a, cfg);
    auto opt_b = make_optimizer(b, cfg);
    const auto bd = train_step(batch, a, *opt_a, cfg, nullptr, 0);

    b->train();
    opt_b->zero_grad();
    auto ce = classification_loss(b->detect(batch.images()), batch.labels());
    ce.backward();
    opt_b->step();

    CHECK(bd.ce == doctest::Approx(ce.item<double>()).epsilon(1e-6));
    CHECK(bd.total == bd.ce);
    CHECK(parameter_checksum(*a) == parameter_checksum(*b));
    // the content path and decoder are untouched
    ModelBundle fresh(tiny_model(16), SeedState(1));
    CHECK(parameter_checksum(*a->content_encoder) == parameter_checksum(*fresh->content_encoder));
    CHECK(parameter_checksum(*a->decoder) == parameter_checksum(*fresh->decoder));
}

TEST_CASE("variant A runs without embedders; embedder variants refuse to")
{
    Fixture fx;
    CHECK_NOTHROW(Trainer(quick(Variant::basic), tiny_model(16), fx.store, std::nullopt).step());
    CHECK_NOTHROW(Trainer(quick(Variant::grcc), tiny_model(16), fx.store, std::nullopt).step());
    CHECK_THROWS_AS(Trainer(quick(Variant::c2c), tiny_model(16), fx.store, std::nullopt), UserError);
    CHECK_THROWS_AS(Trainer(quick(Variant::full), tiny_model(16), fx.store, std::nullopt), UserError);
}

TEST_CASE("variant D logs all six nonzero components")
{
    Fixture fx;
    Trainer t(quick(Variant::full), tiny_model(16), fx.store, frozen_embedders());
    const auto b = t.step();
    for (double v : {b.ce, b.rec_img, b.rec_fea, b.id, b.bg, b.contrast}) CHECK(v > 0.0);
    CHECK(b.total == doctest::Approx(total_loss(b, t.config().effective_weights()).total).epsilon(1e-12));
}

TEST_CASE("frozen embedders keep their checksum through 100 steps")
{
    Fixture fx;
    auto emb = frozen_embedders();
    const auto before = parameter_checksum(*emb);
    Trainer t(quick(Variant::full, 100), tiny_model(16), fx.store, emb);
    t.run_until(100);
    CHECK(parameter_checksum(*emb) == before);
    for (const auto& p : emb->parameters()) CHECK(!p.requires_grad());
}

TEST_CASE("content and artifact encoders diverge after one step")
{
    Fixture fx;
    Trainer t(quick(Variant::basic), tiny_model(16), fx.store, std::nullopt);
    t.step();
    auto pc = t.model()->content_encoder->parameters();
    auto pa = t.model()->artifact_encoder->parameters();
    double linf = 0;
    for (std::size_t i = 0; i < pc.size(); ++i) linf = std::max(linf, (pc[i] - pa[i]).abs().max().item<double>());
    CHECK(linf > 0.0);
}

TEST_CASE("forward pass has no hidden state")
{
    Fixture fx;
    ModelBundle m(tiny_model(16), SeedState(2));
    auto emb = frozen_embedders();
    PairSampler sampler(fx.store.manifest, fx.store.manifest.split_indices("train"), SeedState(0));
    const auto batch = PairBatch::stack(sample_pairs(fx.store, sampler, 0, 8));
    ObjectiveOptions o;
    o.all_terms = true;
    m->train();
    const auto first = compute_loss_terms(batch, m, &emb, o).breakdown(LossWeights{});
    const auto second = compute_loss_terms(batch, m, &emb, o).breakdown(LossWeights{});
    CHECK(first.values() == second.values());

    // lr -> 0: an optimizer step with a vanishing rate leaves the loss where it was
    auto cfg = quick(Variant::full);
    cfg.lr = 1e-300;
    auto opt = make_optimizer(m, cfg);
    train_step(batch, m, *opt, cfg, &emb, 0);
    m->train();
    const auto third = compute_loss_terms(batch, m, &emb, o).breakdown(LossWeights{});
    CHECK(third.total == first.total);
}

TEST_CASE("200 steps on a 16-sample dataset halve the loss")
{
    Fixture fx(16, 8);
    auto cfg = quick(Variant::basic, 200);
    cfg.batch_size = 16;
    Trainer t(cfg, tiny_model(16), fx.store, std::nullopt);
    t.run_until(200);
    const auto& h = t.history();
    auto mean_total = [&](std::size_t from, std::size_t n) {
        double s = 0;
        for (std::size_t i = from; i < from + n; ++i) s += h[i].loss.total;
        return s / static_cast<double>(n);
    };
    CHECK(mean_total(190, 10) <= 0.5 * mean_total(0, 10));
}

TEST_CASE("same seed gives an identical loss stream")
{
    Fixture fx;
    auto cfg = quick(Variant::full, 6);
    cfg.augment.hflip = true;
    cfg.augment.mixup = true;
    Trainer a(cfg, tiny_model(16), fx.store, frozen_embedders());
    Trainer b(cfg, tiny_model(16), fx.store, frozen_embedders());
    a.run_until(6);
    b.run_until(6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(a.history()[i].loss.values() == b.history()[i].loss.values());
    CHECK(parameter_checksum(*a.model()) == parameter_checksum(*b.model()));
}

TEST_CASE("resume reproduces the uninterrupted run exactly")
{
    Fixture fx;
    const auto dir = temp_dir("resume");
    auto cfg = quick(Variant::full, 8);
    cfg.lr_halve_every = 3;
    cfg.checkpoint_every = 4;
    cfg.augment.erase = true;
    cfg.augment.level = AugmentLevel::feature;
    ModelConfig mc = tiny_model(16);
    mc.dropout = 0.2;

    const auto full = run_training(cfg, mc, fx.store, frozen_embedders(), dir / "full");
    REQUIRE(std::filesystem::exists(dir / "full" / "iter_4.ckpt"));

    const auto resumed =
        run_training(cfg, mc, fx.store, frozen_embedders(), dir / "resumed", dir / "full" / "iter_4.ckpt");
    CHECK(resumed.history.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(resumed.history[i].loss.values() == full.history[i + 4].loss.values());

    ModelBundle ma(mc, SeedState(0)), mb(mc, SeedState(0));
    load_checkpoint(full.checkpoint, *ma);
    load_checkpoint(resumed.checkpoint, *mb);
    CHECK(parameter_checksum(*ma) == parameter_checksum(*mb));

    // the resumed log holds exactly the tail of the uninterrupted one
    const auto log_full = slurp(dir / "full" / "metrics.csv");
    const auto log_tail = slurp(dir / "resumed" / "metrics.csv");
    const auto body = log_tail.substr(log_tail.find('\n') + 1);
    REQUIRE(log_full.size() > body.size());
    CHECK(log_full.substr(log_full.size() - body.size()) == body);
}

TEST_CASE("metrics log layout")
{
    Fixture fx;
    const auto dir = temp_dir("metrics");
    run_training(quick(Variant::basic, 3), tiny_model(16), fx.store, std::nullopt, dir);
    std::ifstream in(dir / "metrics.csv");
    std::string header, row;
    std::getline(in, header);
    CHECK(header == "iter,L_ce,L_rec_img,L_rec_fea,L_id,L_bg,L_c,total,lr");
    int rows = 0;
    while (std::getline(in, row)) ++rows;
    CHECK(rows == 3);
    CHECK(std::filesystem::exists(dir / "final.ckpt"));
    CHECK(std::filesystem::exists(dir / "train_config.json"));
}

TEST_CASE("non-finite loss aborts with a component dump")
{
    Fixture fx;
    auto cfg = quick(Variant::basic);
    ModelBundle m(tiny_model(16), SeedState(0));
    {
        torch::NoGradGuard ng;
        for (auto& p : m->classifier->parameters()) p.fill_(NAN);
    }
    auto opt = make_optimizer(m, cfg);
    PairSampler sampler(fx.store.manifest, fx.store.manifest.split_indices("train"), SeedState(0));
    const auto batch = PairBatch::stack(sample_pairs(fx.store, sampler, 0, 8));
    try {
        train_step(batch, m, *opt, cfg, nullptr, 0);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("L_ce") != std::string::npos);
    }
}

TEST_CASE("embedder preparation is seeded and reaches high identity accuracy")
{
    auto spec = small_spec(400, 200);
    spec.image_size = 16;
    const auto store = ImageStore::render(build_dataset(spec), spec);
    EmbedderTrainConfig ec;
    ec.net = tiny_embedders();
    ec.net.width = 8;
    ec.epochs = 8;
    ec.seed = 4;
    auto a = prepare_embedders(store, ec);
    auto b = prepare_embedders(store, ec);
    CHECK(parameter_checksum(*a.embedders) == parameter_checksum(*b.embedders));
    CHECK(a.identity_accuracy >= 0.9);
    CHECK(a.background_accuracy >= 0.9);
    CHECK(a.embedders->frozen());

    const auto dir = temp_dir("emb");
    save_embedders(dir / "e.ckpt", a.embedders, Json::object());
    auto loaded = load_embedders(dir / "e.ckpt");
    CHECK(parameter_checksum(*loaded) == parameter_checksum(*a.embedders));
    CHECK(loaded->frozen());

    auto unlabeled = store;
    for (auto& r : unlabeled.manifest.records) r.identity_id = r.background_id = 0;
    CHECK_THROWS_AS(prepare_embedders(unlabeled, ec), UserError);
}
