#include "cadet/eval/studies.hpp"

#include "cadet/error.hpp"
#include "cadet/eval/evaluate.hpp"
#include "cadet/log.hpp"
#include "cadet/viz/viz.hpp"

#include <cstdio>

namespace cadet {

ModelBundle train_model(const TrainConfig& cfg, const ModelConfig& model_cfg, const ImageStore& store,
                        std::optional<EmbedderPair> embedders)
{
    Trainer trainer(cfg, model_cfg, store, std::move(embedders));
    trainer.run_until(cfg.max_iters);
    trainer.model()->eval();
    return trainer.model();
}

AugmentPolicy single_op_policy(const std::string& op, AugmentLevel level)
{
    AugmentPolicy p;
    p.level = level;
    if (op == "erase") {
        p.erase = true;
    } else if (op == "hflip") {
        p.hflip = true;
    } else if (op == "mixup") {
        p.mixup = true;
    } else {
        throw ConfigError("unknown augmentation op: " + op);
    }
    return p;
}

std::vector<AugmentCell> augment_study(const ImageStore& store, const std::optional<EmbedderPair>& embedders,
                                       const TrainConfig& base, const ModelConfig& model_cfg,
                                       const std::vector<std::int64_t>& eval_rows)
{
    std::vector<AugmentCell> cells;
    auto run = [&](const std::string& op, const std::string& level, const AugmentPolicy& policy) {
        TrainConfig cfg = base;
        cfg.augment = policy;
        auto model = train_model(cfg, model_cfg, store, embedders);
        AugmentCell cell;
        cell.op = op;
        cell.level = level;
        cell.report = evaluate(model, store, eval_rows, op + "/" + level);
        cell.delta_auc = cells.empty() ? 0.0 : cell.report.auc - cells.front().report.auc;
        log::info("augment-study ", op, "/", level, ": AUC ", cell.report.auc);
        cells.push_back(cell);
    };
    run("none", "-", AugmentPolicy{});
    for (const std::string op : {"erase", "hflip", "mixup"}) {
        run(op, "image", single_op_policy(op, AugmentLevel::image));
        run(op, "feature", single_op_policy(op, AugmentLevel::feature));
    }
    return cells;
}

std::string format_augment_table(const std::vector<AugmentCell>& cells)
{
    std::string out = "op      level    AUC      dAUC     ACC\n";
    char buf[128];
    for (const auto& c : cells) {
        std::snprintf(buf, sizeof(buf), "%-7s %-8s %.4f  %+.4f  %.4f\n", c.op.c_str(), c.level.c_str(), c.report.auc,
                      c.delta_auc, c.report.acc);
        out += buf;
    }
    return out;
}

std::vector<CamRecord> cam_study(ModelBundle& model, const ImageStore& store, const std::vector<std::int64_t>& rows,
                                 std::int64_t batch_size)
{
    std::vector<std::int64_t> usable;
    for (auto r : rows) {
        if (store.masks[r].sum().item<std::int64_t>() > 0) usable.push_back(r);
    }
    std::vector<CamRecord> out;
    for (std::size_t start = 0; start < usable.size(); start += static_cast<std::size_t>(batch_size)) {
        const auto end = std::min(usable.size(), start + static_cast<std::size_t>(batch_size));
        const std::vector<std::int64_t> chunk(usable.begin() + static_cast<std::ptrdiff_t>(start),
                                              usable.begin() + static_cast<std::ptrdiff_t>(end));
        const auto cams = grad_cam(model, store.batch(chunk), 1);
        const auto masks = store.mask_batch(chunk);
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            const auto s = region_stats(cams[i].map, masks[static_cast<std::int64_t>(i)]);
            out.push_back({chunk[i], s.inside, s.outside});
        }
    }
    return out;
}

}  // namespace cadet
