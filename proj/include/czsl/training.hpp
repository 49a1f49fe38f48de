#pragma once

#include "czsl/components.hpp"

namespace czsl {

// Empirical class distribution P* over source classes present in the train
// split, with a cumulative table for sampling.
struct EmpiricalPrior {
    std::vector<int> support;       // class indices
    std::vector<double> prob;       // aligned with support, sums to 1
    std::vector<double> cumulative;

    EmpiricalPrior() = default;
    EmpiricalPrior(const SceneDataset& ds, Split split);

    double p_of(int class_idx) const;  // 0 when outside the support
    int sample(Rng& rng) const;
};

enum class NegDist { Uniform, Empirical };

// k negatives, never equal to the positive (rejection resampling). Uniform
// mode draws uniformly over the support; empirical mode draws from P*.
std::vector<int> sample_negatives(NegDist dist, const EmpiricalPrior& prior, int positive,
                                  int k, Rng& rng);

struct TrainConfig {
    double gamma_p = 0.1, gamma_v = 0.1, gamma_c = 0.1;
    int negatives_per_positive = 5;
    double adam_step = 1e-3, adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
    double l2_weight = 0.0;
    int epochs = 10;
    int batch_size = 256;
    uint64_t seed = 1;
    bool devise_mode = false;  // uniform negatives for visual/joint, no prior
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Adam {
    double step, beta1, beta2, eps;
    int64_t t = 0;
    std::vector<std::vector<double>> m, v;

    explicit Adam(const TrainConfig& cfg)
        : step(cfg.adam_step), beta1(cfg.adam_beta1), beta2(cfg.adam_beta2), eps(cfg.adam_eps) {}

    void update(const std::vector<TensorRef>& params);
};

// Single-batch objectives; each accumulates gradients into its component only
// and returns the mean hinge over the sampled (positive, negative) pairs.

double loss_prior(PriorScorer& scorer, const PairedEmbeddings& emb,
                  const std::vector<int>& positives, const EmpiricalPrior& prior,
                  double gamma, int k, Rng& rng);

double loss_visual(VisualScorer& scorer, const PairedEmbeddings& emb,
                   const std::vector<const ZslInstance*>& positives,
                   const EmpiricalPrior& prior, double gamma, int k, Rng& rng,
                   bool devise_mode);

double loss_context(ContextScorer& scorer, const PairedEmbeddings& emb,
                    const std::vector<const ZslInstance*>& positives,
                    const EmpiricalPrior& prior, double gamma, int k, Rng& rng);

double loss_joint(JointScorer& scorer, const PairedEmbeddings& emb,
                  const std::vector<const ZslInstance*>& positives,
                  const EmpiricalPrior& prior, double gamma, int k, Rng& rng,
                  bool devise_mode);

struct LossCurvePoint {
    int epoch;
    std::string component;
    double loss;
};

enum class Component { Prior, Visual, Context, Joint };

std::string component_name(Component c);

// Trains the selected components, each on its own objective with its own
// Adam state (no shared gradients). Deterministic given config.seed.
// Non-finite loss raises NumericError after the scorers are restored to the
// last finite-state epoch boundary.
std::vector<LossCurvePoint> train(ScorerBundle& scorers, const std::vector<Component>& selected,
                                  const SceneDataset& ds, const PairedEmbeddings& emb,
                                  const TrainConfig& cfg);

void write_loss_csv(const std::string& path, const std::vector<LossCurvePoint>& curve);

}  // namespace czsl
