#include "czsl/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace czsl {

void WorldSpec::validate() const {
    if (n_classes <= 1 || d <= 0 || d_visual <= 0 || n_themes <= 0 || n_scenes <= 0)
        throw InputError("WorldSpec: all sizes must be positive (n_classes > 1)");
    if (n_themes > n_classes) throw InputError("WorldSpec: n_themes > n_classes");
    if (!(theme_concentration > 0.0 && theme_concentration <= 1.0))
        throw InputError("WorldSpec: theme_concentration must be in (0,1]");
    if (visual_noise_sigma < 0.0 || embedding_noise_sigma < 0.0 || zipf_exponent < 0.0)
        throw InputError("WorldSpec: negative noise or exponent");
    if (objects_per_scene_mean < 2.0)
        throw InputError("WorldSpec: objects_per_scene_mean must be >= 2");
}

namespace {

std::string class_label(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "c%04d", i);
    return buf;
}

int sample_discrete(const std::vector<double>& cumulative, Rng& rng) {
    const double u = rng.uniform();
    auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    return static_cast<int>(it - cumulative.begin());
}

std::vector<double> cumsum(const std::vector<double>& p) {
    std::vector<double> c(p.size());
    double acc = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        acc += p[i];
        c[i] = acc;
    }
    c.back() = 1.0;
    return c;
}

SynthWorld build_world(const WorldSpec& spec,
                       const std::vector<std::pair<int, int>>& ambiguity_pairs) {
    spec.validate();
    Rng rng(spec.seed);
    const int n = spec.n_classes;

    WorldTruth truth;
    truth.ambiguity_pairs = ambiguity_pairs;

    // Zipf prior over classes by rank.
    truth.class_prior.resize(static_cast<size_t>(n));
    double z = 0.0;
    for (int i = 0; i < n; ++i) {
        truth.class_prior[static_cast<size_t>(i)] =
            std::pow(static_cast<double>(i + 1), -spec.zipf_exponent);
        z += truth.class_prior[static_cast<size_t>(i)];
    }
    for (auto& p : truth.class_prior) p /= z;

    // Themes partition classes; the mixture below keeps the class marginal
    // exactly equal to the Zipf prior for any concentration.
    truth.home_theme.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) truth.home_theme[static_cast<size_t>(i)] = i % spec.n_themes;
    for (const auto& [a, b] : ambiguity_pairs) {
        if (a < 0 || b < 0 || a >= n || b >= n || a == b)
            throw InputError("ambiguity pair out of range");
        if (truth.home_theme[static_cast<size_t>(a)] == truth.home_theme[static_cast<size_t>(b)])
            throw InputError("ambiguity pair classes share a theme");
    }

    truth.theme_prior.assign(static_cast<size_t>(spec.n_themes), 0.0);
    for (int i = 0; i < n; ++i)
        truth.theme_prior[static_cast<size_t>(truth.home_theme[static_cast<size_t>(i)])] +=
            truth.class_prior[static_cast<size_t>(i)];

    const double kappa = spec.theme_concentration;
    truth.class_given_theme.assign(static_cast<size_t>(spec.n_themes),
                                   std::vector<double>(static_cast<size_t>(n), 0.0));
    for (int t = 0; t < spec.n_themes; ++t) {
        const double mass = truth.theme_prior[static_cast<size_t>(t)];
        for (int c = 0; c < n; ++c) {
            double p = (1.0 - kappa) * truth.class_prior[static_cast<size_t>(c)];
            if (truth.home_theme[static_cast<size_t>(c)] == t && mass > 0.0)
                p += kappa * truth.class_prior[static_cast<size_t>(c)] / mass;
            truth.class_given_theme[static_cast<size_t>(t)][static_cast<size_t>(c)] = p;
        }
    }

    // Latent vectors and the visual map. The visual latent is a pure
    // per-class offset; the semantic latent adds a per-theme centroid on top
    // of the same offset. Embeddings therefore carry the contextual
    // regularity that zero-shot transfer of the context component relies on,
    // while visual features stay linearly mappable into semantic space.
    std::vector<Vec> theme_centroid(static_cast<size_t>(spec.n_themes));
    for (auto& c : theme_centroid) {
        c.resize(static_cast<size_t>(spec.d));
        for (auto& v : c) v = rng.normal();
    }
    const double centroid_weight = 1.2;
    const double frequency_weight = 1.5;
    // Frequency direction: semantic embeddings of frequent classes share a
    // component along a fixed direction scaled by standardized log-frequency,
    // so a class's prior is recoverable from its embedding alone.
    Vec freq_dir(static_cast<size_t>(spec.d));
    for (auto& v : freq_dir) v = rng.normal();
    std::vector<double> logp(static_cast<size_t>(n));
    double lp_mean = 0.0;
    for (int i = 0; i < n; ++i) {
        logp[static_cast<size_t>(i)] = std::log(truth.class_prior[static_cast<size_t>(i)]);
        lp_mean += logp[static_cast<size_t>(i)];
    }
    lp_mean /= static_cast<double>(n);
    double lp_var = 0.0;
    for (double v : logp) lp_var += (v - lp_mean) * (v - lp_mean);
    const double lp_sd = std::sqrt(lp_var / static_cast<double>(n));
    truth.latent_visual.resize(static_cast<size_t>(n));
    truth.latent_semantic.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        Vec e(static_cast<size_t>(spec.d));
        for (auto& v : e) v = rng.normal();
        const Vec& c = theme_centroid[static_cast<size_t>(truth.home_theme[static_cast<size_t>(i)])];
        const double zfreq =
            lp_sd > 0.0 ? (logp[static_cast<size_t>(i)] - lp_mean) / lp_sd : 0.0;
        Vec u = e;
        for (size_t k = 0; k < u.size(); ++k)
            u[k] += centroid_weight * c[k] + frequency_weight * zfreq * freq_dir[k];
        truth.latent_visual[static_cast<size_t>(i)] = std::move(e);
        truth.latent_semantic[static_cast<size_t>(i)] = std::move(u);
    }
    // Planted pairs share the per-class offset entirely: member b copies a's
    // visual latent AND the offset part of its semantic latent, so the pair
    // is visually indistinguishable while its embeddings differ only by theme
    // centroid and frequency component — exactly what context can resolve.
    for (const auto& [a, b] : ambiguity_pairs) {
        truth.latent_visual[static_cast<size_t>(b)] = truth.latent_visual[static_cast<size_t>(a)];
        const Vec& ea = truth.latent_visual[static_cast<size_t>(a)];
        const Vec& cb = theme_centroid[static_cast<size_t>(truth.home_theme[static_cast<size_t>(b)])];
        const double zb =
            lp_sd > 0.0 ? (logp[static_cast<size_t>(b)] - lp_mean) / lp_sd : 0.0;
        Vec& wb = truth.latent_semantic[static_cast<size_t>(b)];
        for (size_t k = 0; k < wb.size(); ++k)
            wb[k] = ea[k] + centroid_weight * cb[k] + frequency_weight * zb * freq_dir[k];
    }

    truth.visual_map = Mat(spec.d_visual, spec.d);
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec.d));
    for (auto& v : truth.visual_map.a) v = rng.normal() * scale;

    SynthWorld world;
    auto& ds = world.dataset;
    ds.d_visual = spec.d_visual;
    for (int i = 0; i < n; ++i) {
        ds.vocab.labels.push_back(class_label(i));
        ds.vocab.counts.push_back(0);
    }
    ds.vocab.source_mask.assign(static_cast<size_t>(n), true);

    world.embeddings.dim = spec.d;
    for (int i = 0; i < n; ++i) {
        Vec w = truth.latent_semantic[static_cast<size_t>(i)];
        for (auto& v : w) v += rng.normal(0.0, spec.embedding_noise_sigma);
        world.embeddings.vectors[class_label(i)] = std::move(w);
    }

    const auto theme_cum = cumsum(truth.theme_prior);
    std::vector<std::vector<double>> class_cum;
    class_cum.reserve(static_cast<size_t>(spec.n_themes));
    for (const auto& dist : truth.class_given_theme) class_cum.push_back(cumsum(dist));

    auto make_feature = [&](int cls) {
        const Vec& u = truth.latent_visual[static_cast<size_t>(cls)];
        std::vector<float> f(static_cast<size_t>(spec.d_visual));
        for (int r = 0; r < spec.d_visual; ++r) {
            double v = 0.0;
            for (int c = 0; c < spec.d; ++c) v += truth.visual_map(r, c) * u[static_cast<size_t>(c)];
            f[static_cast<size_t>(r)] =
                static_cast<float>(v + rng.normal(0.0, spec.visual_noise_sigma));
        }
        return f;
    };

    for (int si = 0; si < spec.n_scenes; ++si) {
        Scene scene;
        scene.image_id = "img" + std::to_string(si);
        const int theme = sample_discrete(theme_cum, rng);
        int k = 2 + rng.poisson(spec.objects_per_scene_mean - 2.0);
        if (spec.max_objects_per_scene > 0) k = std::min(k, spec.max_objects_per_scene);
        for (int oi = 0; oi < k; ++oi) {
            ObjectInstance obj;
            obj.object_id = scene.image_id + "_o" + std::to_string(oi);
            obj.class_idx = sample_discrete(class_cum[static_cast<size_t>(theme)], rng);
            obj.bbox = {10.0 * oi, 10.0 * oi, 8.0 + rng.uniform() * 8.0,
                        8.0 + rng.uniform() * 8.0};
            obj.feature = make_feature(obj.class_idx);
            ++ds.vocab.counts[static_cast<size_t>(obj.class_idx)];
            scene.objects.push_back(std::move(obj));
        }
        ds.scenes.push_back(std::move(scene));
    }
    ds.partition.assign(ds.scenes.size(), -1);
    world.truth = std::move(truth);
    return world;
}

}  // namespace

SynthWorld generate(const WorldSpec& spec) { return build_world(spec, {}); }

SynthWorld planted_context_world(const WorldSpec& spec,
                                 const std::vector<std::pair<int, int>>& ambiguity_pairs) {
    return build_world(spec, ambiguity_pairs);
}

void write_world_truth(const std::string& path, const WorldTruth& truth) {
    nlohmann::ordered_json j;
    j["class_prior"] = truth.class_prior;
    j["theme_prior"] = truth.theme_prior;
    j["class_given_theme"] = truth.class_given_theme;
    j["home_theme"] = truth.home_theme;
    j["latent_semantic"] = truth.latent_semantic;
    j["latent_visual"] = truth.latent_visual;
    j["visual_map"] = {{"rows", truth.visual_map.rows},
                       {"cols", truth.visual_map.cols},
                       {"data", truth.visual_map.a}};
    nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
    for (const auto& [a, b] : truth.ambiguity_pairs) pairs.push_back({a, b});
    j["ambiguity_pairs"] = std::move(pairs);
    std::ofstream os(path);
    if (!os) throw InputError("write_world_truth: cannot open " + path);
    os << j.dump(2) << '\n';
}

std::vector<double> exact_posterior(const WorldTruth& truth, const WorldSpec& spec,
                                    const std::vector<float>& focus_feature,
                                    const std::vector<int>& context_classes) {
    const int n = static_cast<int>(truth.class_prior.size());
    const double sigma = std::max(spec.visual_noise_sigma, 1e-6);

    std::vector<double> log_post(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        // Theme-marginalized joint of (focus class, observed context classes).
        double joint = 0.0;
        for (size_t t = 0; t < truth.theme_prior.size(); ++t) {
            double term = truth.theme_prior[t] * truth.class_given_theme[t][static_cast<size_t>(i)];
            for (int c : context_classes) term *= truth.class_given_theme[t][static_cast<size_t>(c)];
            joint += term;
        }
        // Isotropic Gaussian likelihood of the focus feature around G u_vis(i).
        double sq = 0.0;
        const Vec& u = truth.latent_visual[static_cast<size_t>(i)];
        for (int r = 0; r < truth.visual_map.rows; ++r) {
            double mu = 0.0;
            for (int c = 0; c < truth.visual_map.cols; ++c)
                mu += truth.visual_map(r, c) * u[static_cast<size_t>(c)];
            const double diff = static_cast<double>(focus_feature[static_cast<size_t>(r)]) - mu;
            sq += diff * diff;
        }
        log_post[static_cast<size_t>(i)] =
            (joint > 0.0 ? std::log(joint) : -1e300) - sq / (2.0 * sigma * sigma);
    }
    // Normalize in the log domain.
    const double mx = *std::max_element(log_post.begin(), log_post.end());
    double zsum = 0.0;
    std::vector<double> post(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        post[static_cast<size_t>(i)] = std::exp(log_post[static_cast<size_t>(i)] - mx);
        zsum += post[static_cast<size_t>(i)];
    }
    for (auto& p : post) p /= zsum;
    return post;
}

}  // namespace czsl
