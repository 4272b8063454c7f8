#pragma once

#include "cadet/core/config.hpp"
#include "cadet/data/manifest.hpp"
#include "cadet/data/png_io.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cadet {

/// Procedural forgery families. Each one edits pixels only inside its mask.
enum ArtifactType : std::int64_t {
    kNoArtifact = 0,
    kCheckerboard = 1,  // +/- alternating pixel pattern in a patch (upsampling trace)
    kBlurBand = 2,      // blurred band along the glyph boundary (blending seam)
    kNoisePatch = 3,    // high-frequency noise in a patch
    kColorShift = 4,    // colour mismatch in a patch
};
inline constexpr std::int64_t kNumArtifactTypes = 4;

enum class BiasFactor { none, identity, background };

BiasFactor parse_bias_factor(const std::string& s);
std::string to_string(BiasFactor f);

/// Generator settings. `rho` biases the train split only: it is
/// P(factor in biased set | fake) and 1 - rho for reals. The biased set is the
/// lower half of the factor's vocabulary. Test splits are always unbiased.
struct DataSpec {
    std::int64_t image_size = 32;
    std::int64_t num_identities = 8;
    std::int64_t num_backgrounds = 8;
    std::vector<std::int64_t> artifact_types{1, 2, 3, 4};
    double artifact_strength = 0.06;  // pixel amplitude on a [0,1] scale
    double artifact_bound = 0.02;     // max mean |fake - real twin| over the image
    double sensor_noise = 0.01;
    std::int64_t train_count = 2000;
    std::int64_t test_count = 1000;
    BiasFactor bias_factor = BiasFactor::none;
    double rho = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
};

void to_json(Json& j, const DataSpec& s);
void from_json(const Json& j, DataSpec& s);

/// Everything needed to render one sample deterministically.
struct SampleDraw {
    std::int64_t identity_id = 0;
    std::int64_t background_id = 0;
    std::int64_t artifact_id = 0;
    std::uint64_t content_seed = 0;
    std::uint64_t artifact_seed = 0;
};

struct RenderedSample {
    Raster image;  // RGB
    Raster mask;   // gray, 255 where the artifact edited pixels (all 0 for reals)
};

/// Renders background texture + centred glyph, then applies the artifact.
/// Throws UserError on ids outside the vocabularies.
RenderedSample generate_sample(const DataSpec& spec, const SampleDraw& draw);

/// Manifest plus the draw behind each row.
struct SyntheticDataset {
    DatasetManifest manifest;
    std::vector<SampleDraw> draws;
};

/// Builds train and test splits. Unbiased splits are emitted as real/fake
/// twins sharing one content draw; biased splits draw each sample independently.
SyntheticDataset build_dataset(const DataSpec& spec);

/// build_dataset with the train split biased on `factor`. Throws UserError if
/// rho is outside [0,1] or the vocabulary has fewer than two values.
SyntheticDataset build_unbalanced(DataSpec spec, BiasFactor factor, double rho);

/// True if `value` of `factor` lies in the biased half of the vocabulary.
bool in_biased_set(const DataSpec& spec, BiasFactor factor, std::int64_t value);

}  // namespace cadet
