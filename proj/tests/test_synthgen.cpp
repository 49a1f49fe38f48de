#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "czsl/inference.hpp"
#include "czsl/synthgen.hpp"
#include "czsl/training.hpp"

using namespace czsl;

namespace {

std::string file_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("synthgen") {

TEST_CASE("class prior follows the zipf law and sums to one") {
    WorldSpec spec;
    spec.n_classes = 10;
    spec.zipf_exponent = 1.1;
    spec.n_scenes = 50;
    const auto world = generate(spec);
    const auto& p = world.truth.class_prior;
    double sum = 0.0;
    for (double v : p) sum += v;
    CHECK(sum == doctest::Approx(1.0));
    // p_i / p_1 = (i+1)^-s
    for (size_t i = 0; i < p.size(); ++i)
        CHECK(p[i] / p[0] ==
              doctest::Approx(std::pow(static_cast<double>(i + 1), -1.1)).epsilon(1e-9));
}

TEST_CASE("same seed gives byte-identical dataset files") {
    WorldSpec spec;
    spec.n_classes = 8;
    spec.n_scenes = 60;
    spec.seed = 123;
    const auto w1 = generate(spec);
    const auto w2 = generate(spec);
    write_scene_file("sg_test_a.jsonl", w1.dataset);
    write_scene_file("sg_test_b.jsonl", w2.dataset);
    save_embeddings("sg_test_a.txt", w1.embeddings);
    save_embeddings("sg_test_b.txt", w2.embeddings);
    CHECK(file_bytes("sg_test_a.jsonl") == file_bytes("sg_test_b.jsonl"));
    CHECK(file_bytes("sg_test_a.txt") == file_bytes("sg_test_b.txt"));
    for (const char* f : {"sg_test_a.jsonl", "sg_test_b.jsonl", "sg_test_a.txt", "sg_test_b.txt"})
        std::remove(f);
}

TEST_CASE("flat exponent gives near-uniform empirical frequencies") {
    WorldSpec spec;
    spec.n_classes = 10;
    spec.zipf_exponent = 0.0;
    spec.objects_per_scene_mean = 4.0;
    spec.n_scenes = 2600;  // ~10^4 objects
    spec.seed = 5;
    const auto world = generate(spec);
    std::vector<double> freq(10, 0.0);
    double total = 0.0;
    for (const auto& s : world.dataset.scenes)
        for (const auto& o : s.objects) {
            freq[static_cast<size_t>(o.class_idx)] += 1.0;
            total += 1.0;
        }
    CHECK(total >= 10000);
    double tv = 0.0;
    for (double f : freq) tv += std::abs(f / total - 0.1) / 2.0;
    CHECK(tv < 0.03);
}

TEST_CASE("empirical marginal tracks the zipf prior") {
    WorldSpec spec;
    spec.n_classes = 12;
    spec.zipf_exponent = 1.1;
    spec.n_scenes = 3000;
    spec.seed = 11;
    const auto world = generate(spec);
    std::vector<double> freq(12, 0.0);
    double total = 0.0;
    for (const auto& s : world.dataset.scenes)
        for (const auto& o : s.objects) {
            freq[static_cast<size_t>(o.class_idx)] += 1.0;
            total += 1.0;
        }
    double tv = 0.0;
    for (size_t c = 0; c < freq.size(); ++c)
        tv += std::abs(freq[c] / total - world.truth.class_prior[c]) / 2.0;
    CHECK(tv < 0.03);
}

TEST_CASE("scene sizes respect the minimum and the cap") {
    WorldSpec spec;
    spec.n_classes = 6;
    spec.objects_per_scene_mean = 3.0;
    spec.max_objects_per_scene = 4;
    spec.n_scenes = 300;
    const auto world = generate(spec);
    for (const auto& s : world.dataset.scenes) {
        CHECK(s.objects.size() >= 2);
        CHECK(s.objects.size() <= 4);
    }
}

TEST_CASE("noiseless world is visually separable") {
    WorldSpec spec;
    spec.n_classes = 6;
    spec.d = 8;
    spec.d_visual = 10;
    spec.visual_noise_sigma = 0.0;
    spec.embedding_noise_sigma = 0.0;
    spec.n_scenes = 600;
    spec.seed = 3;
    auto world = generate(spec);
    auto& ds = world.dataset;
    ds.vocab.source_mask.assign(ds.vocab.size(), true);
    ds.partition = split_images(ds.scenes.size(), {0.7, 0.1, 0.2}, 3);
    const PairedEmbeddings emb(world.embeddings, ds.vocab);

    ScorerBundle bundle;
    Rng init_rng(3);
    bundle.visual.emplace(spec.d_visual, spec.d);
    bundle.visual->init(init_rng);
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.seed = 3;
    train(bundle, {Component::Visual}, ds, emb, cfg);

    const auto test = make_instances(ds, Split::Test, RetrievalDomain::Source);
    std::vector<int> cands(ds.vocab.size());
    std::iota(cands.begin(), cands.end(), 0);
    const auto scored = precompute_scores(bundle, test, emb, cands);
    const double mfr =
        mfr_for(scored, cands, CalibrationWeights::of(0, 1, 0));
    CHECK(mfr < 5.0);
}

TEST_CASE("planted pairs share visual latents but not semantic ones") {
    WorldSpec spec;
    spec.n_classes = 8;
    spec.n_themes = 2;
    spec.n_scenes = 50;
    const auto world = planted_context_world(spec, {{0, 1}});
    REQUIRE(world.truth.ambiguity_pairs == std::vector<std::pair<int, int>>{{0, 1}});
    CHECK(world.truth.latent_visual[0] == world.truth.latent_visual[1]);
    CHECK(world.truth.latent_semantic[0] != world.truth.latent_semantic[1]);
    CHECK(world.truth.home_theme[0] != world.truth.home_theme[1]);
}

TEST_CASE("no planted pairs reduces to plain generation") {
    WorldSpec spec;
    spec.n_classes = 6;
    spec.n_scenes = 40;
    spec.seed = 9;
    const auto plain = generate(spec);
    const auto planted = planted_context_world(spec, {});
    write_scene_file("sg_test_p1.jsonl", plain.dataset);
    write_scene_file("sg_test_p2.jsonl", planted.dataset);
    CHECK(file_bytes("sg_test_p1.jsonl") == file_bytes("sg_test_p2.jsonl"));
    std::remove("sg_test_p1.jsonl");
    std::remove("sg_test_p2.jsonl");
}

TEST_CASE("invalid specs are rejected") {
    WorldSpec spec;
    spec.n_classes = 0;
    CHECK_THROWS_AS(spec.validate(), InputError);
    WorldSpec spec2;
    spec2.objects_per_scene_mean = 1.0;
    CHECK_THROWS_AS(spec2.validate(), InputError);
}

TEST_CASE("exact posterior normalizes and favors the planted class") {
    WorldSpec spec;
    spec.n_classes = 5;
    spec.n_themes = 2;
    spec.visual_noise_sigma = 0.05;
    spec.n_scenes = 30;
    spec.seed = 21;
    const auto world = generate(spec);
    // feature of class 2 with zero noise
    std::vector<float> f(static_cast<size_t>(spec.d_visual));
    for (int r = 0; r < spec.d_visual; ++r) {
        double v = 0.0;
        for (int c = 0; c < spec.d; ++c)
            v += world.truth.visual_map(r, c) * world.truth.latent_visual[2][static_cast<size_t>(c)];
        f[static_cast<size_t>(r)] = static_cast<float>(v);
    }
    const auto post = exact_posterior(world.truth, spec, f, {});
    double sum = 0.0;
    for (double p : post) sum += p;
    CHECK(sum == doctest::Approx(1.0));
    CHECK(std::max_element(post.begin(), post.end()) - post.begin() == 2);
}

}  // TEST_SUITE
