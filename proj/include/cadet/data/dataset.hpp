#pragma once

#include "cadet/core/seed.hpp"
#include "cadet/data/manifest.hpp"
#include "cadet/data/synthetic.hpp"
#include "cadet/disentangle/pair.hpp"

#include <torch/torch.h>

#include <filesystem>
#include <map>
#include <vector>

namespace cadet {

/// Decoded images for every manifest row, held as uint8 (N,3,H,W) plus
/// artifact masks (N,1,H,W) with 1 inside the edited region.
struct ImageStore {
    DatasetManifest manifest;
    torch::Tensor images;
    torch::Tensor masks;

    std::int64_t size() const { return static_cast<std::int64_t>(manifest.size()); }
    std::int64_t image_size() const { return images.size(2); }

    /// Rows as float images in [-1,1].
    torch::Tensor batch(const std::vector<std::int64_t>& rows) const;
    torch::Tensor mask_batch(const std::vector<std::int64_t>& rows) const;
    torch::Tensor labels(const std::vector<std::int64_t>& rows) const;

    ImageStore subset(const std::vector<std::int64_t>& rows) const;
    ImageStore split(const std::string& name) const { return subset(manifest.split_indices(name)); }

    static ImageStore render(const SyntheticDataset& ds, const DataSpec& spec);

    /// Loads PNGs referenced by a manifest (paths relative to its directory).
    /// Masks are read from masks/<path> when present, zero otherwise.
    static ImageStore load(const std::filesystem::path& manifest_path);
};

/// uint8 [0,255] -> float [-1,1]
torch::Tensor normalize_images(const torch::Tensor& u8);

/// Writes images, masks, manifest.csv, one manifest per artifact type
/// (all reals + fakes of that type) and a generation report.
void write_dataset(const SyntheticDataset& ds, const DataSpec& spec, const std::filesystem::path& dir);

/// Factor/label contingency summary written alongside a generated dataset.
Json generation_report(const DatasetManifest& manifest, const DataSpec& spec);

/// Pair indices emitted by the sampler; `real_first` says which slot holds the real.
struct PairIndex {
    std::int64_t real = -1;
    std::int64_t fake = -1;
    bool real_first = true;
};

/// Draws real/fake pairs. Fakes are visited without replacement, one
/// permutation per epoch; reals likewise on their own cycle. Every draw is a
/// pure function of (seed, step), so a resumed run sees the same batches.
class PairSampler {
public:
    PairSampler(const DatasetManifest& manifest, std::vector<std::int64_t> rows, const SeedState& seed,
                bool same_identity = false);

    std::int64_t num_fakes() const { return static_cast<std::int64_t>(fakes_.size()); }
    std::int64_t num_reals() const { return static_cast<std::int64_t>(reals_.size()); }

    std::vector<PairIndex> pairs(std::int64_t step, std::int64_t pairs_per_batch) const;

private:
    std::int64_t permuted(const std::vector<std::int64_t>& pool, std::uint64_t stream_tag, std::int64_t position) const;

    SeedState seed_;
    bool same_identity_;
    std::vector<std::int64_t> reals_, fakes_;
    std::map<std::int64_t, std::vector<std::int64_t>> reals_by_identity_;
    std::vector<std::int64_t> identity_of_;
    mutable std::map<std::pair<std::uint64_t, std::int64_t>, std::vector<std::int64_t>> perm_cache_;
};

ImagePair make_pair(const ImageStore& store, const PairIndex& idx);

/// batch_size images as batch_size/2 pairs. Throws UserError on odd sizes.
std::vector<ImagePair> sample_pairs(const ImageStore& store, const PairSampler& sampler, std::int64_t step,
                                    std::int64_t batch_size);

}  // namespace cadet
