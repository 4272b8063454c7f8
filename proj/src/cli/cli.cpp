#include "cadet/cli/cli.hpp"

#include "cadet/data/dataset.hpp"
#include "cadet/error.hpp"
#include "cadet/eval/evaluate.hpp"
#include "cadet/eval/probe.hpp"
#include "cadet/eval/studies.hpp"
#include "cadet/log.hpp"
#include "cadet/model/checkpoint.hpp"
#include "cadet/train/trainer.hpp"
#include "cadet/viz/viz.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace cadet {

Json effective_config(const std::string& config_path, const std::vector<std::string>& overrides,
                      std::optional<std::uint64_t> seed)
{
    Json cfg = config_path.empty() ? Json::object() : load_config(config_path);
    if (!cfg.is_object()) throw ConfigError("config root must be an object");
    apply_overrides(cfg, overrides);
    if (seed) {
        for (const char* section : {"data", "train", "embedders", "probe", "viz"}) cfg[section]["seed"] = *seed;
    }
    return cfg;
}

namespace {

struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::string out;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c, bool out_required)
{
    cmd->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--set", c.sets, "override, dotted.key=value (repeatable)");
    auto* out = cmd->add_option("--out", c.out, "output directory");
    if (out_required) out->required();
    cmd->add_option("--seed", c.seed, "master seed for every stream");
}

template <typename T>
T section(const Json& cfg, const char* name)
{
    return cfg.contains(name) ? cfg.at(name).get<T>() : Json::object().get<T>();
}

void snapshot(const Json& cfg, const std::string& out, const std::string& command)
{
    if (out.empty()) return;
    Json snap = cfg;
    snap["command"] = command;
    write_config(snap, std::filesystem::path(out) / "config.json");
}

ModelConfig model_config_for(const Json& cfg, const ImageStore& store)
{
    auto mc = section<ModelConfig>(cfg, "model");
    const bool explicit_size = cfg.contains("model") && cfg["model"].contains("image_size");
    if (!explicit_size) mc.image_size = store.image_size();
    if (mc.image_size != store.image_size()) {
        throw ConfigError("model.image_size " + std::to_string(mc.image_size) + " does not match the dataset's " +
                          std::to_string(store.image_size()));
    }
    return mc;
}

std::vector<std::int64_t> rows_of(const ImageStore& store, const std::string& split)
{
    std::vector<std::int64_t> rows;
    if (split == "all") {
        for (std::int64_t i = 0; i < store.size(); ++i) rows.push_back(i);
    } else {
        rows = store.manifest.split_indices(split);
    }
    if (rows.empty()) throw UserError("no rows in split '" + split + "'");
    return rows;
}

void cmd_gen_data(const Common& c)
{
    const auto cfg = effective_config(c.config, c.sets, c.seed);
    const auto spec = section<DataSpec>(cfg, "data");
    const auto ds = build_dataset(spec);
    write_dataset(ds, spec, c.out);
    snapshot(cfg, c.out, "gen-data");
    std::cout << "wrote " << ds.manifest.size() << " samples to " << c.out << "\n";
}

void cmd_prepare_embedders(const Common& c, const std::string& manifest)
{
    const auto cfg = effective_config(c.config, c.sets, c.seed);
    const auto ecfg = section<EmbedderTrainConfig>(cfg, "embedders");
    const auto store = ImageStore::load(manifest);
    auto prepared = prepare_embedders(store, ecfg);
    const std::filesystem::path out(c.out);
    Json report{{"identity_accuracy", prepared.identity_accuracy},
                {"background_accuracy", prepared.background_accuracy},
                {"checksum", parameter_checksum(*prepared.embedders)},
                {"manifest", manifest}};
    Json meta_cfg;
    meta_cfg["embedders"] = ecfg;
    meta_cfg["report"] = report;
    save_embedders(out / "embedders.ckpt", prepared.embedders, meta_cfg);
    write_config(report, out / "embedders.json");
    snapshot(cfg, c.out, "prepare-embedders");
    std::printf("identity accuracy   %.4f\nbackground accuracy %.4f\n", prepared.identity_accuracy,
                prepared.background_accuracy);
}

std::optional<EmbedderPair> maybe_embedders(const std::string& path)
{
    if (path.empty()) return std::nullopt;
    return load_embedders(path);
}

void cmd_train(const Common& c, const std::string& manifest, const std::string& embedders, const std::string& variant,
               const std::string& resume)
{
    auto cfg = effective_config(c.config, c.sets, c.seed);
    if (!variant.empty()) cfg["train"]["variant"] = to_string(parse_variant(variant));
    const auto tc = section<TrainConfig>(cfg, "train");
    const auto store = ImageStore::load(manifest);
    const auto mc = model_config_for(cfg, store);
    cfg["model"] = mc;
    cfg["train"] = tc;
    snapshot(cfg, c.out, "train");
    std::optional<std::filesystem::path> resume_from;
    if (!resume.empty()) resume_from = resume;
    const auto result = run_training(tc, mc, store, maybe_embedders(embedders), c.out, resume_from);
    if (!result.history.empty()) {
        const auto& last = result.history.back();
        std::printf("iteration %lld  total %.6f  L_ce %.6f\n", static_cast<long long>(last.iter + 1), last.loss.total,
                    last.loss.ce);
    }
    std::cout << "checkpoint " << result.checkpoint.string() << "\n";
}

void cmd_eval(const Common& c, const std::string& checkpoint, const std::string& manifest, const std::string& split,
              bool cross)
{
    const auto cfg = effective_config(c.config, c.sets, c.seed);
    auto model = load_model(checkpoint);
    const auto store = ImageStore::load(manifest);
    const auto rows = rows_of(store, split);
    const auto scores = score_model(model, store, rows);
    const auto report = make_report(scores, std::filesystem::path(manifest).filename().string() + ":" + split);
    std::cout << report.table();
    std::vector<EvalReport> per_type;
    if (cross && split != "all") {
        per_type = cross_artifact_reports(model, store, split);
        std::cout << "\n" << EvalReport::csv_header() << "\n";
        for (const auto& r : per_type) std::cout << r.csv_row() << "\n";
    }
    if (c.out.empty()) return;
    const std::filesystem::path out(c.out);
    std::filesystem::create_directories(out);
    write_scores(out / "scores.csv", scores);
    std::ofstream csv(out / "report.csv");
    csv << EvalReport::csv_header() << "\n" << report.csv_row() << "\n";
    for (const auto& r : per_type) csv << r.csv_row() << "\n";
    std::ofstream jsonl(out / "report.jsonl");
    jsonl << Json(report).dump() << "\n";
    for (const auto& r : per_type) jsonl << Json(r).dump() << "\n";
    Json snap = cfg;
    snap["eval"] = {{"checkpoint", checkpoint}, {"manifest", manifest}, {"split", split}, {"cross", cross}};
    snapshot(snap, c.out, "eval");
}

void cmd_probe(const Common& c, const std::string& checkpoint, const std::string& manifest, const std::string& split,
               const std::string& feature)
{
    auto cfg = effective_config(c.config, c.sets, c.seed);
    ProbeConfig pc;
    if (cfg.contains("probe")) {
        pc.folds = cfg["probe"].value("folds", pc.folds);
        pc.ridge = cfg["probe"].value("ridge", pc.ridge);
        pc.seed = cfg["probe"].value("seed", pc.seed);
    }
    auto model = load_model(checkpoint);
    const auto store = ImageStore::load(manifest);
    const auto r = run_probes(model, store, rows_of(store, split), parse_probe_feature(feature), pc);
    std::printf("artifact -> forgery label     %.4f\n"
                "content  -> forgery label     %.4f\n"
                "content  -> identity_id       %.4f\n"
                "content  -> background_id     %.4f\n",
                r.artifact_label, r.content_label, r.content_identity, r.content_background);
    if (c.out.empty()) return;
    const Json report{{"artifact_label", r.artifact_label},
                      {"content_label", r.content_label},
                      {"content_identity", r.content_identity},
                      {"content_background", r.content_background},
                      {"samples", r.samples},
                      {"feature", feature}};
    write_config(report, std::filesystem::path(c.out) / "probe.json");
    cfg["probe_run"] = {{"checkpoint", checkpoint}, {"manifest", manifest}, {"split", split}};
    snapshot(cfg, c.out, "probe");
}

void cmd_viz(const Common& c, const std::string& checkpoint, const std::string& manifest, const std::string& split,
             const std::string& what, std::int64_t count, const std::string& method)
{
    auto cfg = effective_config(c.config, c.sets, c.seed);
    auto model = load_model(checkpoint);
    const auto store = ImageStore::load(manifest);
    const auto rows = rows_of(store, split);
    const std::filesystem::path out(c.out);
    std::filesystem::create_directories(out);
    const bool all = what == "all";
    if (!all && what != "cam" && what != "scatter" && what != "features") {
        throw UserError("--what must be cam, scatter, features or all");
    }

    std::vector<std::int64_t> fakes;
    for (auto r : rows) {
        if (store.manifest.records[static_cast<std::size_t>(r)].fake() && store.masks[r].sum().item<std::int64_t>() > 0) {
            fakes.push_back(r);
        }
    }
    if (all || what == "cam") {
        if (fakes.empty()) throw UserError("viz: no fake samples with artifact masks in split '" + split + "'");
        std::vector<std::int64_t> chosen(fakes.begin(), fakes.begin() + std::min<std::ptrdiff_t>(count, fakes.size()));
        const auto cams = grad_cam(model, store.batch(chosen), 1);
        const auto masks = store.mask_batch(chosen);
        const auto images = store.batch(chosen);
        std::ofstream csv(out / "cam_regions.csv");
        csv << "row,path,inside,outside,ratio\n";
        for (std::size_t i = 0; i < chosen.size(); ++i) {
            const auto k = static_cast<std::int64_t>(i);
            write_png(out / ("cam_" + std::to_string(i) + ".png"), cam_overlay(images[k], cams[i]));
            const auto s = region_stats(cams[i].map, masks[k]);
            csv << chosen[i] << ',' << store.manifest.records[static_cast<std::size_t>(chosen[i])].path << ','
                << s.inside << ',' << s.outside << ',' << s.ratio() << '\n';
        }
    }
    if (all || what == "scatter") {
        const auto m = parse_embed_method(method);
        TsneConfig tc;
        if (cfg.contains("viz")) tc.seed = cfg["viz"].value("seed", tc.seed);
        std::vector<std::int64_t> labels;
        for (auto r : rows) labels.push_back(store.manifest.records[static_cast<std::size_t>(r)].label);
        for (auto kind : {EncoderKind::artifact, EncoderKind::content}) {
            const auto name = kind == EncoderKind::artifact ? "artifact" : "content";
            const auto X = probe_matrix(extract_features(model, store, rows, kind), ProbeFeature::pooled);
            const auto Y = embed_scatter(X, labels, m, out / (std::string("scatter_") + name), tc);
            std::printf("%s features: silhouette by forgery label %.4f\n", name, silhouette_score(Y, labels));
        }
    }
    if (all || what == "features") {
        const auto r = fakes.empty() ? rows.front() : fakes.front();
        const auto image = store.batch({r})[0];
        for (const auto* stage : {"content", "artifact", "backbone-mid"}) {
            dump_feature_maps(model, image, parse_feature_stage(stage), out / (std::string("features_") + stage + ".png"));
        }
    }
    cfg["viz_run"] = {{"checkpoint", checkpoint}, {"manifest", manifest}, {"split", split}, {"what", what},
                      {"count", count}, {"method", method}};
    snapshot(cfg, c.out, "viz");
    std::cout << "figures written to " << c.out << "\n";
}

void cmd_augment_study(const Common& c, const std::string& manifest, const std::string& embedders,
                       const std::string& variant, const std::string& split)
{
    auto cfg = effective_config(c.config, c.sets, c.seed);
    if (!variant.empty()) cfg["train"]["variant"] = to_string(parse_variant(variant));
    const auto tc = section<TrainConfig>(cfg, "train");
    const auto store = ImageStore::load(manifest);
    const auto mc = model_config_for(cfg, store);
    cfg["model"] = mc;
    cfg["train"] = tc;
    auto emb = maybe_embedders(embedders);
    if (tc.effective_weights().needs_embedders() && !emb) {
        throw UserError("variant '" + to_string(tc.variant) + "' needs --embedders");
    }
    const auto cells = augment_study(store, emb, tc, mc, rows_of(store, split));
    std::cout << format_augment_table(cells);
    const std::filesystem::path out(c.out);
    std::filesystem::create_directories(out);
    std::ofstream csv(out / "augment_study.csv");
    csv << "op,level,auc,delta_auc,acc,eer,tdr_at_0.1\n";
    for (const auto& cell : cells) {
        csv << cell.op << ',' << cell.level << ',' << cell.report.auc << ',' << cell.delta_auc << ',' << cell.report.acc
            << ',' << cell.report.eer << ',' << cell.report.tdr << '\n';
    }
    snapshot(cfg, c.out, "augment-study");
}

}  // namespace

int run_cli(int argc, const char* const* argv)
{
    CLI::App app{"Content/artifact disentanglement for forgery detection on synthetic data"};
    app.require_subcommand(1);
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "debug|info|warn|error|off");

    Common common;
    std::string manifest, checkpoint, embedders, variant, resume, split = "test", feature = "pooled", what = "all",
                                                                  method = "pca";
    bool cross = false;
    std::int64_t count = 16;
    const std::vector<std::string> variants{"basic", "c2c", "grcc", "full", "baseline"};

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
    add_common(gen, common, true);

    auto* prep = app.add_subcommand("prepare-embedders", "train and freeze the identity/perceptual embedders");
    add_common(prep, common, true);
    prep->add_option("--manifest", manifest, "dataset manifest")->required();

    auto* train = app.add_subcommand("train", "train a model");
    add_common(train, common, true);
    train->add_option("--manifest", manifest, "dataset manifest")->required();
    train->add_option("--embedders", embedders, "embedder checkpoint (needed by c2c/full)");
    train->add_option("--variant", variant, "ablation variant")->check(CLI::IsMember(variants));
    train->add_option("--resume", resume, "checkpoint to resume from")->check(CLI::ExistingFile);

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    add_common(eval, common, false);
    eval->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    eval->add_option("--manifest", manifest, "dataset manifest")->required();
    eval->add_option("--split", split, "train|test|all");
    eval->add_flag("--cross", cross, "also report per artifact type");

    auto* probe = app.add_subcommand("probe", "linear probes on disentangled features");
    add_common(probe, common, false);
    probe->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    probe->add_option("--manifest", manifest, "dataset manifest")->required();
    probe->add_option("--split", split, "train|test|all");
    probe->add_option("--feature", feature, "pooled|gram|flat");

    auto* viz = app.add_subcommand("viz", "Grad-CAM, feature maps and embedding scatter plots");
    add_common(viz, common, true);
    viz->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    viz->add_option("--manifest", manifest, "dataset manifest")->required();
    viz->add_option("--split", split, "train|test|all");
    viz->add_option("--what", what, "cam|scatter|features|all");
    viz->add_option("--count", count, "number of Grad-CAM images");
    viz->add_option("--method", method, "pca|tsne");

    auto* aug = app.add_subcommand("augment-study", "image- vs feature-level augmentation grid");
    add_common(aug, common, true);
    aug->add_option("--manifest", manifest, "dataset manifest")->required();
    aug->add_option("--embedders", embedders, "embedder checkpoint");
    aug->add_option("--variant", variant, "ablation variant")->check(CLI::IsMember(variants));
    aug->add_option("--split", split, "evaluation split");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUserError;
    }

    try {
        if (log_level == "debug") log::set_level(log::Level::debug);
        else if (log_level == "info") log::set_level(log::Level::info);
        else if (log_level == "warn") log::set_level(log::Level::warn);
        else if (log_level == "error") log::set_level(log::Level::error);
        else if (log_level == "off") log::set_level(log::Level::off);
        else throw UserError("unknown log level: " + log_level);

        if (gen->parsed()) cmd_gen_data(common);
        else if (prep->parsed()) cmd_prepare_embedders(common, manifest);
        else if (train->parsed()) cmd_train(common, manifest, embedders, variant, resume);
        else if (eval->parsed()) cmd_eval(common, checkpoint, manifest, split, cross);
        else if (probe->parsed()) cmd_probe(common, checkpoint, manifest, split, feature);
        else if (viz->parsed()) cmd_viz(common, checkpoint, manifest, split, what, count, method);
        else if (aug->parsed()) cmd_augment_study(common, manifest, embedders, variant, split);
    } catch (const UserError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUserError;
    } catch (const Json::exception& e) {
        std::cerr << "error: bad config value: " << e.what() << "\n";
        return kExitUserError;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternalError;
    }
    return kExitOk;
}

}  // namespace cadet
