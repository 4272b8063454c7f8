#include "cadet/core/config.hpp"
#include "cadet/core/seed.hpp"
#include "cadet/core/tensor_ops.hpp"
#include "cadet/error.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <vector>

using namespace cadet;

namespace {

torch::Tensor rand_f64(std::vector<std::int64_t> shape, std::uint64_t seed)
{
    auto gen = SeedState(seed).torch_generator(Stream::data);
    return torch::randn(shape, gen, torch::kFloat64);
}

}  // namespace

TEST_CASE("elementwise_add examples")
{
    auto z = torch::zeros({2, 3});
    CHECK(torch::equal(elementwise_add(z, z), z));
    auto x = rand_f64({4, 5}, 1);
    CHECK(torch::equal(elementwise_add(x, torch::zeros_like(x)), x));
    auto a = torch::tensor({1.0, 2.0}, torch::kFloat64);
    auto b = torch::tensor({3.0, -1.0}, torch::kFloat64);
    auto s = elementwise_add(a, b);
    CHECK(s[0].item<double>() == 4.0);
    CHECK(s[1].item<double>() == 1.0);
    CHECK_THROWS_AS(elementwise_add(torch::zeros({2}), torch::zeros({3})), ShapeError);
}

TEST_CASE("elementwise_add is commutative and associative")
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto x = rand_f64({3, 4, 5}, seed);
        auto y = rand_f64({3, 4, 5}, seed + 100);
        auto z = rand_f64({3, 4, 5}, seed + 200);
        CHECK(torch::equal(elementwise_add(x, y), elementwise_add(y, x)));
        auto l = elementwise_add(elementwise_add(x, y), z);
        auto r = elementwise_add(x, elementwise_add(y, z));
        CHECK((l - r).abs().max().item<double>() <= 1e-12);
    }
}

TEST_CASE("l1_distance examples and properties")
{
    auto x = rand_f64({2, 3, 4}, 3);
    CHECK(l1_distance(x, x).item<double>() == 0.0);
    CHECK(l1_distance(torch::ones({3, 3}), torch::zeros({3, 3})).item<double>() == doctest::Approx(1.0));

    auto y = rand_f64({2, 3, 4}, 4);
    auto xa = x.accessor<double, 3>();
    auto ya = y.accessor<double, 3>();
    double sum = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 4; ++k) sum += std::abs(xa[i][j][k] - ya[i][j][k]);
    CHECK(l1_distance(x, y).item<double>() == doctest::Approx(sum / 24.0).epsilon(1e-14));
    CHECK(l1_distance(x, y).item<double>() == l1_distance(y, x).item<double>());
    CHECK(l1_distance(x, y).item<double>() > 0.0);
    CHECK_THROWS_AS(l1_distance(torch::zeros({2}), torch::zeros({2, 1})), ShapeError);
}

TEST_CASE("cosine_similarity examples")
{
    std::vector<double> u{1.0, 2.0, -3.0};
    CHECK(cosine_similarity(u, u) == doctest::Approx(1.0).epsilon(1e-15));
    std::vector<double> e0{1.0, 0.0}, e1{0.0, 1.0}, d{1.0, 1.0};
    CHECK(cosine_similarity(e0, e1) == 0.0);
    CHECK(cosine_similarity(d, e0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    std::vector<double> zero{0.0, 0.0};
    CHECK(cosine_similarity(zero, e0) == 0.0);

    auto rows = cosine_similarity_rows(torch::tensor({{1.0, 1.0}, {0.0, 0.0}}, torch::kFloat64),
                                       torch::tensor({{1.0, 0.0}, {1.0, 0.0}}, torch::kFloat64));
    CHECK(rows[0].item<double>() == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(rows[1].item<double>() == 0.0);
}

TEST_CASE("cosine_similarity stays within [-1,1]")
{
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> u(5), v(5);
        for (auto& x : u) x = n(rng) * 1e3;
        for (auto& x : v) x = n(rng) * 1e-3;
        CHECK(std::abs(cosine_similarity(u, v)) <= 1.0 + 1e-12);
    }
}

TEST_CASE("require_finite rejects NaN and Inf")
{
    CHECK_NOTHROW(require_finite(torch::ones({3}), "x"));
    CHECK_THROWS_AS(require_finite(torch::tensor({1.0, std::nan("")}), "x"), NumericError);
    CHECK_THROWS_AS(require_finite(torch::tensor({INFINITY}), "x"), NumericError);
}

TEST_CASE("seed streams are reproducible and independent")
{
    SeedState s(42);
    auto a = s.engine(Stream::augment, 3);
    auto b = s.engine(Stream::augment, 3);
    for (int i = 0; i < 100; ++i) CHECK(a() == b());

    std::set<std::uint64_t> seen;
    for (auto st : {Stream::data, Stream::init, Stream::augment, Stream::pairing, Stream::dropout, Stream::probe,
                    Stream::embedder, Stream::viz}) {
        for (std::uint64_t i = 0; i < 50; ++i) seen.insert(s.derive(st, i));
    }
    CHECK(seen.size() == 8 * 50);
    CHECK(SeedState(1).derive(Stream::data) != SeedState(2).derive(Stream::data));

    auto g1 = s.torch_generator(Stream::init);
    auto g2 = s.torch_generator(Stream::init);
    CHECK(torch::equal(torch::randn({16}, g1), torch::randn({16}, g2)));
}

TEST_CASE("config overrides")
{
    Json cfg = {{"train", {{"lr", 0.001}, {"batch_size", 32}}}};
    apply_override(cfg, "train.lr=0.5");
    apply_override(cfg, "train.variant=full");
    apply_override(cfg, "data.artifact_types=[1,2]");
    apply_override(cfg, "model.normalize_features=false");
    CHECK(cfg["train"]["lr"].get<double>() == 0.5);
    CHECK(cfg["train"]["batch_size"].get<int>() == 32);
    CHECK(cfg["train"]["variant"].get<std::string>() == "full");
    CHECK(cfg["data"]["artifact_types"].size() == 2);
    CHECK(cfg["model"]["normalize_features"].get<bool>() == false);
    CHECK_THROWS_AS(apply_override(cfg, "novalue"), ConfigError);

    Json base = {{"a", {{"x", 1}, {"y", 2}}}};
    merge_into(base, {{"a", {{"y", 3}}}, {"b", 4}});
    CHECK(base["a"]["x"] == 1);
    CHECK(base["a"]["y"] == 3);
    CHECK(base["b"] == 4);
}

TEST_CASE("config file round trip and errors")
{
    const auto dir = std::filesystem::temp_directory_path() / "cadet_test_config";
    std::filesystem::remove_all(dir);
    Json cfg = {{"data", {{"seed", 3}}}};
    write_config(cfg, dir / "sub" / "c.json");
    CHECK(load_config(dir / "sub" / "c.json") == cfg);
    CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
    std::ofstream(dir / "bad.json") << "{ not json";
    CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);
    std::filesystem::remove_all(dir);
}
