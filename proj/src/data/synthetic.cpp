#include "cadet/data/synthetic.hpp"

#include "cadet/core/seed.hpp"
#include "cadet/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace cadet {

BiasFactor parse_bias_factor(const std::string& s)
{
    if (s == "none") return BiasFactor::none;
    if (s == "identity" || s == "id") return BiasFactor::identity;
    if (s == "background" || s == "bg") return BiasFactor::background;
    throw ConfigError("unknown bias factor: " + s);
}

std::string to_string(BiasFactor f)
{
    switch (f) {
    case BiasFactor::none: return "none";
    case BiasFactor::identity: return "identity";
    case BiasFactor::background: return "background";
    }
    return "none";
}

void DataSpec::validate() const
{
    if (image_size < 16) throw ConfigError("data.image_size must be >= 16");
    if (num_identities < 1 || num_backgrounds < 1) throw ConfigError("data vocabularies must be non-empty");
    if (artifact_types.empty()) throw ConfigError("data.artifact_types must not be empty");
    for (auto t : artifact_types) {
        if (t < 1 || t > kNumArtifactTypes) throw ConfigError("unknown artifact type " + std::to_string(t));
    }
    if (artifact_strength < 0 || artifact_bound <= 0 || sensor_noise < 0) {
        throw ConfigError("data amplitudes must be non-negative");
    }
    if (train_count < 2 || test_count < 2 || train_count % 2 || test_count % 2) {
        throw ConfigError("split counts must be even and >= 2");
    }
    if (!(rho >= 0.0 && rho <= 1.0)) throw UserError("rho must lie in [0,1]");
}

void to_json(Json& j, const DataSpec& s)
{
    j = Json{{"image_size", s.image_size},
             {"num_identities", s.num_identities},
             {"num_backgrounds", s.num_backgrounds},
             {"artifact_types", s.artifact_types},
             {"artifact_strength", s.artifact_strength},
             {"artifact_bound", s.artifact_bound},
             {"sensor_noise", s.sensor_noise},
             {"train_count", s.train_count},
             {"test_count", s.test_count},
             {"bias_factor", to_string(s.bias_factor)},
             {"rho", s.rho},
             {"seed", s.seed}};
}

void from_json(const Json& j, DataSpec& s)
{
    s.image_size = j.value("image_size", s.image_size);
    s.num_identities = j.value("num_identities", s.num_identities);
    s.num_backgrounds = j.value("num_backgrounds", s.num_backgrounds);
    s.artifact_types = j.value("artifact_types", s.artifact_types);
    s.artifact_strength = j.value("artifact_strength", s.artifact_strength);
    s.artifact_bound = j.value("artifact_bound", s.artifact_bound);
    s.sensor_noise = j.value("sensor_noise", s.sensor_noise);
    s.train_count = j.value("train_count", s.train_count);
    s.test_count = j.value("test_count", s.test_count);
    s.bias_factor = parse_bias_factor(j.value("bias_factor", to_string(s.bias_factor)));
    s.rho = j.value("rho", s.rho);
    s.seed = j.value("seed", s.seed);
    s.validate();
}

namespace {

using Rgb = std::array<double, 3>;

Rgb hsv(double h, double s, double v)
{
    h = h - std::floor(h);
    const double c = v * s;
    const double hp = h * 6.0;
    const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    Rgb rgb{};
    switch (static_cast<int>(hp) % 6) {
    case 0: rgb = {c, x, 0}; break;
    case 1: rgb = {x, c, 0}; break;
    case 2: rgb = {0, c, x}; break;
    case 3: rgb = {0, x, c}; break;
    case 4: rgb = {x, 0, c}; break;
    default: rgb = {c, 0, x}; break;
    }
    const double m = v - c;
    return {rgb[0] + m, rgb[1] + m, rgb[2] + m};
}

/// Float canvas, HWC, values nominally in [0,1].
struct Canvas {
    int size;
    std::vector<double> v;
    explicit Canvas(int s) : size(s), v(static_cast<std::size_t>(s * s * 3), 0.0) {}
    double& at(int x, int y, int c) { return v[static_cast<std::size_t>((y * size + x) * 3 + c)]; }
    double at(int x, int y, int c) const { return v[static_cast<std::size_t>((y * size + x) * 3 + c)]; }
};

/// Signed distance (pixels, negative inside) to glyph `shape` of radius r.
double glyph_sdf(int shape, double dx, double dy, double r)
{
    const double ax = std::abs(dx), ay = std::abs(dy);
    switch (shape % 8) {
    case 0:  // disk
        return std::hypot(dx, dy) - r;
    case 1:  // square
        return std::max(ax, ay) - 0.8 * r;
    case 2: {  // upward triangle
        const double k = std::sqrt(3.0) / 2.0;
        return std::max({dy - 0.5 * r, k * dx - 0.5 * dy - 0.5 * r, -k * dx - 0.5 * dy - 0.5 * r});
    }
    case 3:  // diamond
        return (ax + ay) / std::sqrt(2.0) - 0.75 * r;
    case 4:  // plus
        return std::min(std::max(ax - 0.35 * r, ay - r), std::max(ax - r, ay - 0.35 * r));
    case 5:  // ring
        return std::abs(std::hypot(dx, dy) - 0.7 * r) - 0.3 * r;
    case 6: {  // hexagon
        const double k = std::sqrt(3.0) / 2.0;
        return std::max(ay, k * ax + 0.5 * ay) - 0.85 * r;
    }
    default: {  // x-cross: the plus rotated by 45 degrees
        const double u = (dx + dy) / std::sqrt(2.0), w = (dx - dy) / std::sqrt(2.0);
        return std::min(std::max(std::abs(u) - 0.3 * r, std::abs(w) - r),
                        std::max(std::abs(u) - r, std::abs(w) - 0.3 * r));
    }
    }
}

struct Layout {
    double cx, cy, r;
};

Layout render_content(const DataSpec& spec, const SampleDraw& d, Canvas& canvas, std::vector<double>& sdf)
{
    std::mt19937_64 rng(d.content_seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const int n = canvas.size;
    const double scale = static_cast<double>(n) / 32.0;

    // Background: class colour plus one of four low-frequency textures.
    const Rgb base = hsv(static_cast<double>(d.background_id) / static_cast<double>(spec.num_backgrounds) + 0.02,
                         0.5, 0.45 + 0.2 * static_cast<double>((d.background_id / 4) % 2));
    const int kind = static_cast<int>(d.background_id % 4);
    const double period = 8.0 * scale;
    const double phase = u01(rng) * period;
    const double brightness = (u01(rng) - 0.5) * 0.08;
    const double two_pi = 2.0 * std::numbers::pi;
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            double p = 0.0;
            switch (kind) {
            case 0: p = std::sin(two_pi * (y + phase) / period); break;
            case 1: p = std::sin(two_pi * (x + phase) / period); break;
            case 2: p = std::sin(two_pi * (x + y + phase) / (1.4 * period)); break;
            default: p = std::cos(two_pi * std::hypot(x - n / 2.0, y - n / 2.0) / (1.25 * period) + phase); break;
            }
            for (int c = 0; c < 3; ++c) canvas.at(x, y, c) = base[c] + 0.12 * p + brightness;
        }
    }

    // Foreground glyph: the "face". Shape and colour encode the identity.
    Layout L;
    L.cx = n / 2.0 - 0.5 + (u01(rng) - 0.5) * 3.0 * scale;
    L.cy = n / 2.0 - 0.5 + (u01(rng) - 0.5) * 3.0 * scale;
    L.r = 9.0 * scale * (1.0 + (u01(rng) - 0.5) * 0.16);
    const Rgb fg = hsv(0.07 + 0.61 * static_cast<double>(d.identity_id), 0.35 + 0.3 * ((d.identity_id / 8) % 2), 0.9);
    const int shape = static_cast<int>(d.identity_id % 8);
    sdf.assign(static_cast<std::size_t>(n * n), 0.0);
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const double s = glyph_sdf(shape, x - L.cx, y - L.cy, L.r);
            sdf[static_cast<std::size_t>(y * n + x)] = s;
            const double alpha = std::clamp(0.5 - s, 0.0, 1.0);
            const double shade = 1.0 - 0.15 * (y - L.cy) / L.r;
            for (int c = 0; c < 3; ++c) {
                canvas.at(x, y, c) = (1.0 - alpha) * canvas.at(x, y, c) + alpha * fg[c] * shade;
            }
        }
    }

    if (spec.sensor_noise > 0) {
        std::normal_distribution<double> noise(0.0, spec.sensor_noise);
        for (auto& v : canvas.v) v += noise(rng);
    }
    for (auto& v : canvas.v) v = std::clamp(v, 0.0, 1.0);
    return L;
}

void apply_artifact(const DataSpec& spec, const SampleDraw& d, const Layout& L, const std::vector<double>& sdf,
                    Canvas& canvas, std::vector<std::uint8_t>& mask)
{
    std::mt19937_64 rng(d.artifact_seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const int n = canvas.size;
    const double scale = static_cast<double>(n) / 32.0;
    const double amp = spec.artifact_strength;
    mask.assign(static_cast<std::size_t>(n * n), 0);

    if (d.artifact_id == kBlurBand) {
        const Canvas src = canvas;
        const double band = 1.5 * scale;
        for (int y = 1; y < n - 1; ++y) {
            for (int x = 1; x < n - 1; ++x) {
                if (std::abs(sdf[static_cast<std::size_t>(y * n + x)]) > band) continue;
                mask[static_cast<std::size_t>(y * n + x)] = 255;
                for (int c = 0; c < 3; ++c) {
                    double acc = 0.0;
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) acc += src.at(x + dx, y + dy, c);
                    canvas.at(x, y, c) = 0.4 * src.at(x, y, c) + 0.6 * acc / 9.0;
                }
            }
        }
        return;
    }

    // Patch artifacts sit on the glyph, jittered around its centre.
    const int side = static_cast<int>(std::round((8.0 + 4.0 * u01(rng)) * scale));
    auto place = [&](double centre) {
        const int lo = static_cast<int>(std::round(centre - side / 2.0 + (u01(rng) - 0.5) * 8.0 * scale));
        return std::clamp(lo, 1, n - side - 1);
    };
    const int x0 = place(L.cx);
    const int y0 = place(L.cy);
    const Rgb tint{1.0, -0.5, -1.0};
    for (int y = y0; y < y0 + side; ++y) {
        for (int x = x0; x < x0 + side; ++x) {
            mask[static_cast<std::size_t>(y * n + x)] = 255;
            for (int c = 0; c < 3; ++c) {
                double& v = canvas.at(x, y, c);
                switch (d.artifact_id) {
                case kCheckerboard: v += ((x + y) % 2 ? amp : -amp); break;
                case kNoisePatch: v += 1.5 * amp * (2.0 * u01(rng) - 1.0); break;
                case kColorShift: v += amp * tint[c]; break;
                default: break;
                }
            }
        }
    }
}

Raster quantize(const Canvas& canvas)
{
    Raster r(canvas.size, canvas.size, 3);
    for (std::size_t i = 0; i < canvas.v.size(); ++i) {
        r.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(canvas.v[i], 0.0, 1.0) * 255.0));
    }
    return r;
}

}  // namespace

RenderedSample generate_sample(const DataSpec& spec, const SampleDraw& d)
{
    if (d.identity_id < 0 || d.identity_id >= spec.num_identities) {
        throw UserError("unknown identity_id " + std::to_string(d.identity_id));
    }
    if (d.background_id < 0 || d.background_id >= spec.num_backgrounds) {
        throw UserError("unknown background_id " + std::to_string(d.background_id));
    }
    if (d.artifact_id < 0 || d.artifact_id > kNumArtifactTypes) {
        throw UserError("unknown artifact_id " + std::to_string(d.artifact_id));
    }
    const int n = static_cast<int>(spec.image_size);
    Canvas canvas(n);
    std::vector<double> sdf;
    const Layout layout = render_content(spec, d, canvas, sdf);

    RenderedSample out;
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(n * n), 0);
    if (d.artifact_id != kNoArtifact) apply_artifact(spec, d, layout, sdf, canvas, mask);
    out.image = quantize(canvas);
    out.mask = Raster(n, n, 1);
    out.mask.pixels = std::move(mask);
    return out;
}

bool in_biased_set(const DataSpec& spec, BiasFactor factor, std::int64_t value)
{
    const auto vocab = factor == BiasFactor::identity ? spec.num_identities : spec.num_backgrounds;
    return value < vocab / 2;
}

namespace {

std::string sample_path(const std::string& split, std::int64_t index, bool fake)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s/%06lld_%s.png", split.c_str(), static_cast<long long>(index),
                  fake ? "fake" : "real");
    return buf;
}

void emit(SyntheticDataset& ds, const std::string& split, const SampleDraw& d)
{
    SampleRecord r;
    r.label = d.artifact_id == kNoArtifact ? 0 : 1;
    r.identity_id = d.identity_id;
    r.background_id = d.background_id;
    r.artifact_id = d.artifact_id;
    r.split = split;
    r.path = sample_path(split, static_cast<std::int64_t>(ds.manifest.records.size()), r.label == 1);
    ds.manifest.records.push_back(std::move(r));
    ds.draws.push_back(d);
}

void build_split(const DataSpec& spec, const std::string& split, std::uint64_t tag, std::int64_t count,
                 BiasFactor factor, double rho, SyntheticDataset& ds)
{
    const SeedState seed(spec.seed);
    auto engine_for = [&](std::int64_t i) { return seed.engine(Stream::data, (tag << 40) | static_cast<std::uint64_t>(i)); };
    auto pick_type = [&](std::mt19937_64& rng) {
        return spec.artifact_types[std::uniform_int_distribution<std::size_t>(0, spec.artifact_types.size() - 1)(rng)];
    };

    if (factor == BiasFactor::none || rho == 0.5) {
        // Twins: one content draw rendered once clean and once forged.
        for (std::int64_t g = 0; g < count / 2; ++g) {
            auto rng = engine_for(g);
            SampleDraw d;
            d.identity_id = std::uniform_int_distribution<std::int64_t>(0, spec.num_identities - 1)(rng);
            d.background_id = std::uniform_int_distribution<std::int64_t>(0, spec.num_backgrounds - 1)(rng);
            d.content_seed = rng();
            d.artifact_seed = rng();
            emit(ds, split, d);
            d.artifact_id = pick_type(rng);
            emit(ds, split, d);
        }
        return;
    }

    const auto vocab = factor == BiasFactor::identity ? spec.num_identities : spec.num_backgrounds;
    const auto other_vocab = factor == BiasFactor::identity ? spec.num_backgrounds : spec.num_identities;
    const auto half = vocab / 2;
    const std::int64_t per_class = count / 2;
    const auto fakes_in = static_cast<std::int64_t>(std::llround(rho * static_cast<double>(per_class)));
    const auto reals_in = static_cast<std::int64_t>(std::llround((1.0 - rho) * static_cast<double>(per_class)));
    for (std::int64_t i = 0; i < count; ++i) {
        auto rng = engine_for(i);
        const bool fake = i % 2 == 1;
        const std::int64_t k = i / 2;
        const bool biased = k < (fake ? fakes_in : reals_in);
        const auto value = biased ? std::uniform_int_distribution<std::int64_t>(0, half - 1)(rng)
                                  : std::uniform_int_distribution<std::int64_t>(half, vocab - 1)(rng);
        const auto other = std::uniform_int_distribution<std::int64_t>(0, other_vocab - 1)(rng);
        SampleDraw d;
        d.identity_id = factor == BiasFactor::identity ? value : other;
        d.background_id = factor == BiasFactor::identity ? other : value;
        d.content_seed = rng();
        d.artifact_seed = rng();
        if (fake) d.artifact_id = pick_type(rng);
        emit(ds, split, d);
    }
}

}  // namespace

SyntheticDataset build_dataset(const DataSpec& spec)
{
    spec.validate();
    if (spec.bias_factor != BiasFactor::none) {
        const auto vocab = spec.bias_factor == BiasFactor::identity ? spec.num_identities : spec.num_backgrounds;
        if (vocab < 2) throw UserError("vocabulary too small to bias on " + to_string(spec.bias_factor));
    }
    SyntheticDataset ds;
    build_split(spec, "train", 1, spec.train_count, spec.bias_factor, spec.rho, ds);
    build_split(spec, "test", 2, spec.test_count, BiasFactor::none, 0.5, ds);
    return ds;
}

SyntheticDataset build_unbalanced(DataSpec spec, BiasFactor factor, double rho)
{
    if (!(rho >= 0.0 && rho <= 1.0)) throw UserError("rho must lie in [0,1]");
    if (factor == BiasFactor::none) throw UserError("build_unbalanced needs a content factor");
    spec.bias_factor = factor;
    spec.rho = rho;
    return build_dataset(spec);
}

}  // namespace cadet
