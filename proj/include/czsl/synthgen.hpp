#pragma once

#include "czsl/dataset.hpp"

namespace czsl {

struct WorldSpec {
    int n_classes = 50;
    double zipf_exponent = 1.1;
    int d = 16;               // embedding dimension
    int d_visual = 24;
    int n_themes = 4;
    double theme_concentration = 0.9;  // in (0,1]; share of theme-local mass
    double visual_noise_sigma = 0.1;
    double embedding_noise_sigma = 0.05;
    double objects_per_scene_mean = 4.0;  // shifted Poisson, minimum 2
    int max_objects_per_scene = 0;        // 0 = no cap
    int n_scenes = 1000;
    uint64_t seed = 1;

    void validate() const;
};

struct WorldTruth {
    std::vector<double> class_prior;                 // Zipf over classes
    std::vector<double> theme_prior;                 // mass of each theme's home classes
    std::vector<std::vector<double>> class_given_theme;
    std::vector<int> home_theme;                     // per class
    std::vector<Vec> latent_semantic;                // u_sem, drives embeddings
    std::vector<Vec> latent_visual;                  // u_vis, drives features
    Mat visual_map;                                  // G: d_visual x d
    std::vector<std::pair<int, int>> ambiguity_pairs;
};

struct SynthWorld {
    SceneDataset dataset;
    EmbeddingTable embeddings;
    WorldTruth truth;
};

// Class prior proportional to rank^-s; scenes draw a theme, then a shifted-
// Poisson number of classes from the theme distribution. Features are
// G u_vis(class) + noise, embeddings u_sem(class) + noise. The theme mixture
// is built so the class marginal is exactly the Zipf prior.
SynthWorld generate(const WorldSpec& spec);

// Same construction, but each listed class pair shares one latent visual
// vector while keeping distinct semantic vectors and distinct home themes,
// so the pair is separable only through context.
SynthWorld planted_context_world(const WorldSpec& spec,
                                 const std::vector<std::pair<int, int>>& ambiguity_pairs);

void write_world_truth(const std::string& path, const WorldTruth& truth);

// Exact posterior over classes for an observed focus feature and fully
// observed context class set, marginalizing the theme. Used by oracle tests.
std::vector<double> exact_posterior(const WorldTruth& truth, const WorldSpec& spec,
                                    const std::vector<float>& focus_feature,
                                    const std::vector<int>& context_classes);

}  // namespace czsl
