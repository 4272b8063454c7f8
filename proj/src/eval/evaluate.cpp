#include "cadet/eval/evaluate.hpp"

#include "cadet/error.hpp"
#include "cadet/model/checkpoint.hpp"

#include <set>

namespace cadet {

ModelBundle load_model(const std::filesystem::path& checkpoint)
{
    const auto meta = read_checkpoint_meta(checkpoint);
    if (meta.kind != "model") throw UserError("not a model checkpoint: " + checkpoint.string());
    if (!meta.config.contains("model")) throw UserError("checkpoint has no model config: " + checkpoint.string());
    ModelBundle model(meta.config["model"].get<ModelConfig>(), SeedState(meta.seed));
    load_checkpoint(checkpoint, *model);
    model->eval();
    return model;
}

ScoreSet score_model(ModelBundle& model, const ImageStore& store, const std::vector<std::int64_t>& rows,
                     std::int64_t batch_size)
{
    torch::NoGradGuard no_grad;
    model->eval();
    ScoreSet s;
    for (std::size_t start = 0; start < rows.size(); start += static_cast<std::size_t>(batch_size)) {
        const auto end = std::min(rows.size(), start + static_cast<std::size_t>(batch_size));
        const std::vector<std::int64_t> chunk(rows.begin() + static_cast<std::ptrdiff_t>(start),
                                              rows.begin() + static_cast<std::ptrdiff_t>(end));
        const auto p = torch::softmax(model->detect(store.batch(chunk)).to(torch::kFloat64), 1)
                           .select(1, 1)
                           .contiguous();
        const auto* v = p.data_ptr<double>();
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            const auto& rec = store.manifest.records.at(static_cast<std::size_t>(chunk[i]));
            s.push(v[i], rec.label, rec.path);
        }
    }
    return s;
}

EvalReport evaluate(ModelBundle& model, const ImageStore& store, const std::vector<std::int64_t>& rows,
                    const std::string& dataset)
{
    return make_report(score_model(model, store, rows), dataset);
}

EvalReport evaluate(const std::filesystem::path& checkpoint, const std::filesystem::path& manifest,
                    const std::string& split)
{
    auto model = load_model(checkpoint);
    const auto store = ImageStore::load(manifest);
    std::vector<std::int64_t> rows;
    if (split == "all") {
        for (std::int64_t i = 0; i < store.size(); ++i) rows.push_back(i);
    } else {
        rows = store.manifest.split_indices(split);
    }
    if (rows.empty()) throw UserError("manifest has no rows in split '" + split + "'");
    return evaluate(model, store, rows, manifest.filename().string() + ":" + split);
}

std::vector<std::int64_t> artifact_rows(const DatasetManifest& manifest, const std::string& split,
                                        std::int64_t artifact_type)
{
    std::vector<std::int64_t> rows;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        const auto& r = manifest.records[i];
        if (r.split == split && (r.artifact_id == 0 || r.artifact_id == artifact_type)) {
            rows.push_back(static_cast<std::int64_t>(i));
        }
    }
    return rows;
}

std::vector<EvalReport> cross_artifact_reports(ModelBundle& model, const ImageStore& store, const std::string& split)
{
    std::set<std::int64_t> types;
    for (const auto& r : store.manifest.records) {
        if (r.split == split && r.artifact_id > 0) types.insert(r.artifact_id);
    }
    // Score the split once, then slice per type.
    const auto all = store.manifest.split_indices(split);
    const auto scores = score_model(model, store, all);
    std::vector<EvalReport> out;
    for (auto t : types) {
        ScoreSet s;
        for (std::size_t i = 0; i < all.size(); ++i) {
            const auto& r = store.manifest.records[static_cast<std::size_t>(all[i])];
            if (r.artifact_id == 0 || r.artifact_id == t) s.push(scores.scores[i], scores.labels[i], scores.ids[i]);
        }
        out.push_back(make_report(s, "artifact_" + std::to_string(t)));
    }
    return out;
}

}  // namespace cadet
