#include "cadet/data/dataset.hpp"

#include "cadet/error.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

namespace cadet {

torch::Tensor normalize_images(const torch::Tensor& u8)
{
    return u8.to(torch::kFloat32) / 127.5 - 1.0;
}

torch::Tensor ImageStore::batch(const std::vector<std::int64_t>& rows) const
{
    return normalize_images(images.index_select(0, torch::tensor(rows, torch::kInt64)));
}

torch::Tensor ImageStore::mask_batch(const std::vector<std::int64_t>& rows) const
{
    return masks.index_select(0, torch::tensor(rows, torch::kInt64)).to(torch::kFloat32);
}

torch::Tensor ImageStore::labels(const std::vector<std::int64_t>& rows) const
{
    std::vector<float> y;
    y.reserve(rows.size());
    for (auto r : rows) y.push_back(static_cast<float>(manifest.records[static_cast<std::size_t>(r)].label));
    return torch::tensor(y);
}

ImageStore ImageStore::subset(const std::vector<std::int64_t>& rows) const
{
    ImageStore out;
    for (auto r : rows) out.manifest.records.push_back(manifest.records.at(static_cast<std::size_t>(r)));
    const auto idx = torch::tensor(rows, torch::kInt64);
    out.images = images.index_select(0, idx);
    out.masks = masks.index_select(0, idx);
    return out;
}

namespace {
torch::Tensor raster_to_tensor(const Raster& r)
{
    auto t = torch::from_blob(const_cast<std::uint8_t*>(r.pixels.data()), {r.height, r.width, r.channels},
                              torch::kUInt8);
    return t.permute({2, 0, 1}).clone();
}
}  // namespace

ImageStore ImageStore::render(const SyntheticDataset& ds, const DataSpec& spec)
{
    const auto n = static_cast<std::int64_t>(ds.draws.size());
    const auto s = spec.image_size;
    ImageStore store;
    store.manifest = ds.manifest;
    store.images = torch::empty({n, 3, s, s}, torch::kUInt8);
    store.masks = torch::empty({n, 1, s, s}, torch::kUInt8);
    for (std::int64_t i = 0; i < n; ++i) {
        const auto sample = generate_sample(spec, ds.draws[static_cast<std::size_t>(i)]);
        store.images[i] = raster_to_tensor(sample.image);
        store.masks[i] = raster_to_tensor(sample.mask).gt(0).to(torch::kUInt8);
    }
    return store;
}

ImageStore ImageStore::load(const std::filesystem::path& manifest_path)
{
    ImageStore store;
    store.manifest = read_manifest(manifest_path);
    store.manifest.validate();
    const auto root = manifest_path.parent_path();
    const auto n = static_cast<std::int64_t>(store.manifest.size());
    if (n == 0) throw UserError("manifest is empty: " + manifest_path.string());
    std::int64_t size = -1;
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& rec = store.manifest.records[static_cast<std::size_t>(i)];
        const auto img = read_png(root / rec.path, 3);
        if (img.width != img.height) throw UserError("images must be square: " + rec.path);
        if (size < 0) {
            size = img.width;
            store.images = torch::empty({n, 3, size, size}, torch::kUInt8);
            store.masks = torch::zeros({n, 1, size, size}, torch::kUInt8);
        } else if (img.width != size) {
            throw UserError("all images must share one size: " + rec.path);
        }
        store.images[i] = raster_to_tensor(img);
        const auto mask_path = root / "masks" / rec.path;
        if (std::filesystem::exists(mask_path)) {
            store.masks[i] = raster_to_tensor(read_png(mask_path, 1)).gt(0).to(torch::kUInt8);
        }
    }
    return store;
}

Json generation_report(const DatasetManifest& m, const DataSpec& spec)
{
    Json report;
    report["spec"] = spec;
    for (const std::string split : {"train", "test"}) {
        Json s;
        std::vector<std::array<std::int64_t, 2>> id_hist(static_cast<std::size_t>(spec.num_identities), {0, 0});
        std::vector<std::array<std::int64_t, 2>> bg_hist(static_cast<std::size_t>(spec.num_backgrounds), {0, 0});
        std::vector<std::int64_t> art_hist(static_cast<std::size_t>(kNumArtifactTypes + 1), 0);
        std::int64_t reals = 0, fakes = 0, biased_fakes = 0, biased_reals = 0;
        for (const auto& r : m.records) {
            if (r.split != split) continue;
            (r.label ? fakes : reals)++;
            id_hist.at(static_cast<std::size_t>(r.identity_id))[static_cast<std::size_t>(r.label)]++;
            bg_hist.at(static_cast<std::size_t>(r.background_id))[static_cast<std::size_t>(r.label)]++;
            art_hist.at(static_cast<std::size_t>(r.artifact_id))++;
            if (spec.bias_factor != BiasFactor::none) {
                const auto v = spec.bias_factor == BiasFactor::identity ? r.identity_id : r.background_id;
                if (in_biased_set(spec, spec.bias_factor, v)) (r.label ? biased_fakes : biased_reals)++;
            }
        }
        s["reals"] = reals;
        s["fakes"] = fakes;
        s["identity_by_label"] = id_hist;
        s["background_by_label"] = bg_hist;
        s["artifact_types"] = art_hist;
        if (spec.bias_factor != BiasFactor::none && fakes > 0 && reals > 0) {
            s["p_biased_given_fake"] = static_cast<double>(biased_fakes) / static_cast<double>(fakes);
            s["p_biased_given_real"] = static_cast<double>(biased_reals) / static_cast<double>(reals);
        }
        report[split] = s;
    }
    report["rho"] = spec.rho;
    report["bias_factor"] = to_string(spec.bias_factor);
    return report;
}

void write_dataset(const SyntheticDataset& ds, const DataSpec& spec, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < ds.draws.size(); ++i) {
        const auto sample = generate_sample(spec, ds.draws[i]);
        const auto& rec = ds.manifest.records[i];
        write_png(dir / rec.path, sample.image);
        if (rec.label == 1) write_png(dir / "masks" / rec.path, sample.mask);
    }
    write_manifest(dir / "manifest.csv", ds.manifest);
    for (std::int64_t t = 1; t <= kNumArtifactTypes; ++t) {
        if (std::find(spec.artifact_types.begin(), spec.artifact_types.end(), t) == spec.artifact_types.end()) continue;
        DatasetManifest sub;
        for (const auto& r : ds.manifest.records) {
            if (r.artifact_id == 0 || r.artifact_id == t) sub.records.push_back(r);
        }
        write_manifest(dir / ("manifest_artifact_" + std::to_string(t) + ".csv"), sub);
    }
    std::ofstream report(dir / "generation_report.json");
    report << generation_report(ds.manifest, spec).dump(2) << '\n';
}

PairSampler::PairSampler(const DatasetManifest& manifest, std::vector<std::int64_t> rows, const SeedState& seed,
                         bool same_identity)
    : seed_(seed), same_identity_(same_identity)
{
    identity_of_.assign(manifest.size(), -1);
    for (auto r : rows) {
        const auto& rec = manifest.records.at(static_cast<std::size_t>(r));
        identity_of_[static_cast<std::size_t>(r)] = rec.identity_id;
        if (rec.fake()) {
            fakes_.push_back(r);
        } else {
            reals_.push_back(r);
            reals_by_identity_[rec.identity_id].push_back(r);
        }
    }
    if (fakes_.empty() || reals_.empty()) throw UserError("pair sampling needs both real and fake samples");
    if (same_identity_) {
        for (auto f : fakes_) {
            if (!reals_by_identity_.count(identity_of_[static_cast<std::size_t>(f)])) {
                throw UserError("same-identity pairing: no real sample for identity " +
                                std::to_string(identity_of_[static_cast<std::size_t>(f)]));
            }
        }
    }
}

std::int64_t PairSampler::permuted(const std::vector<std::int64_t>& pool, std::uint64_t tag,
                                   std::int64_t position) const
{
    const auto n = static_cast<std::int64_t>(pool.size());
    const auto epoch = position / n;
    const auto key = std::make_pair(tag, epoch);
    auto it = perm_cache_.find(key);
    if (it == perm_cache_.end()) {
        if (perm_cache_.size() > 8) perm_cache_.clear();
        std::vector<std::int64_t> perm = pool;
        auto rng = seed_.engine(Stream::pairing, (tag << 48) | static_cast<std::uint64_t>(epoch));
        std::shuffle(perm.begin(), perm.end(), rng);
        it = perm_cache_.emplace(key, std::move(perm)).first;
    }
    return it->second[static_cast<std::size_t>(position % n)];
}

std::vector<PairIndex> PairSampler::pairs(std::int64_t step, std::int64_t pairs_per_batch) const
{
    std::vector<PairIndex> out;
    out.reserve(static_cast<std::size_t>(pairs_per_batch));
    for (std::int64_t j = 0; j < pairs_per_batch; ++j) {
        const auto pos = step * pairs_per_batch + j;
        PairIndex p;
        p.fake = permuted(fakes_, 1, pos);
        const auto coin = seed_.derive(Stream::pairing, (std::uint64_t{3} << 48) | static_cast<std::uint64_t>(pos));
        if (same_identity_) {
            const auto& pool = reals_by_identity_.at(identity_of_[static_cast<std::size_t>(p.fake)]);
            p.real = pool[static_cast<std::size_t>((coin >> 1) % pool.size())];
        } else {
            p.real = permuted(reals_, 2, pos);
        }
        p.real_first = (coin & 1) == 0;
        out.push_back(p);
    }
    return out;
}

ImagePair make_pair(const ImageStore& store, const PairIndex& idx)
{
    const auto images = store.batch({idx.real, idx.fake});
    const auto& real = store.manifest.records.at(static_cast<std::size_t>(idx.real));
    const auto& fake = store.manifest.records.at(static_cast<std::size_t>(idx.fake));
    ImagePair p;
    const ContentTag real_tag{real.identity_id, real.background_id};
    const ContentTag fake_tag{fake.identity_id, fake.background_id};
    if (idx.real_first) {
        p.img0 = images[0];
        p.img1 = images[1];
        p.y0 = 0;
        p.y1 = 1;
        p.content0 = real_tag;
        p.content1 = fake_tag;
        p.index0 = idx.real;
        p.index1 = idx.fake;
    } else {
        p.img0 = images[1];
        p.img1 = images[0];
        p.y0 = 1;
        p.y1 = 0;
        p.content0 = fake_tag;
        p.content1 = real_tag;
        p.index0 = idx.fake;
        p.index1 = idx.real;
    }
    return p;
}

std::vector<ImagePair> sample_pairs(const ImageStore& store, const PairSampler& sampler, std::int64_t step,
                                    std::int64_t batch_size)
{
    if (batch_size < 2 || batch_size % 2) throw UserError("batch size must be even and >= 2");
    std::vector<ImagePair> out;
    for (const auto& idx : sampler.pairs(step, batch_size / 2)) out.push_back(make_pair(store, idx));
    return out;
}

}  // namespace cadet
