#include "cadet/model/checkpoint.hpp"

#include "cadet/error.hpp"

namespace cadet {

namespace {
constexpr const char* kMagic = "cadet-checkpoint";

CheckpointMeta read_meta(torch::serialize::InputArchive& in, const std::filesystem::path& path)
{
    c10::IValue v;
    if (!in.try_read("magic", v) || !v.isString() || v.toStringRef() != kMagic) {
        throw UserError("not a checkpoint file: " + path.string());
    }
    CheckpointMeta meta;
    in.read("version", v);
    meta.version = v.toInt();
    if (meta.version != kCheckpointVersion) {
        throw UserError("unsupported checkpoint version " + std::to_string(meta.version) + ": " + path.string());
    }
    in.read("kind", v);
    meta.kind = v.toStringRef();
    in.read("config", v);
    meta.config = Json::parse(v.toStringRef());
    in.read("seed", v);
    meta.seed = static_cast<std::uint64_t>(v.toInt());
    in.read("iteration", v);
    meta.iteration = v.toInt();
    return meta;
}

void open_archive(torch::serialize::InputArchive& in, const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path)) throw UserError("checkpoint not found: " + path.string());
    try {
        in.load_from(path.string());
    } catch (const c10::Error& e) {
        throw UserError("cannot read checkpoint " + path.string() + ": " + e.what_without_backtrace());
    }
}
}  // namespace

void save_checkpoint(const std::filesystem::path& path, const CheckpointMeta& meta,
                     const torch::nn::Module& module, const torch::optim::Optimizer* optimizer)
{
    torch::serialize::OutputArchive out;
    out.write("magic", c10::IValue(std::string(kMagic)));
    out.write("version", c10::IValue(meta.version));
    out.write("kind", c10::IValue(meta.kind));
    out.write("config", c10::IValue(meta.config.dump()));
    out.write("seed", c10::IValue(static_cast<std::int64_t>(meta.seed)));
    out.write("iteration", c10::IValue(meta.iteration));

    torch::serialize::OutputArchive model_archive;
    module.save(model_archive);
    out.write("model", model_archive);

    out.write("has_optimizer", c10::IValue(optimizer != nullptr));
    if (optimizer) {
        torch::serialize::OutputArchive opt_archive;
        optimizer->save(opt_archive);
        out.write("optimizer", opt_archive);
    }

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    // Write-then-rename so an interrupted save never leaves a torn checkpoint.
    auto tmp = path;
    tmp += ".tmp";
    out.save_to(tmp.string());
    std::filesystem::rename(tmp, path);
}

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path)
{
    torch::serialize::InputArchive in;
    open_archive(in, path);
    return read_meta(in, path);
}

CheckpointMeta load_checkpoint(const std::filesystem::path& path, torch::nn::Module& module,
                               torch::optim::Optimizer* optimizer)
{
    torch::serialize::InputArchive in;
    open_archive(in, path);
    auto meta = read_meta(in, path);

    torch::serialize::InputArchive model_archive;
    in.read("model", model_archive);
    module.load(model_archive);

    if (optimizer) {
        c10::IValue has;
        in.read("has_optimizer", has);
        if (!has.toBool()) throw UserError("checkpoint has no optimizer state: " + path.string());
        torch::serialize::InputArchive opt_archive;
        in.read("optimizer", opt_archive);
        optimizer->load(opt_archive);
    }
    return meta;
}

}  // namespace cadet
