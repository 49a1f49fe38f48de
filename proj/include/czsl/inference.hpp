#pragma once

#include "czsl/components.hpp"
#include "czsl/metrics.hpp"

namespace czsl {

struct CalibrationWeights {
    double alpha_c = 0.0, alpha_v = 0.0, alpha_p = 0.0;
    bool use_context = false, use_visual = false, use_prior = false;

    static CalibrationWeights of(double ac, double av, double ap) {
        return {ac, av, ap, ac != 0.0, av != 0.0, ap != 0.0};
    }
};

// alpha_C*logP_context + alpha_V*logP_visual + alpha_P*logP_prior.
double combined_logscore(const ScoreTriple& t, const CalibrationWeights& a);

struct RankResult {
    std::vector<int> order;  // candidate class indices, best first
    size_t rank = 0;         // 1-based rank of the true class
};

// Descending combined score; ties broken by ascending class index.
RankResult rank(const std::vector<ScoreTriple>& scores, const std::vector<int>& candidates,
                int true_class, const CalibrationWeights& a);

// 1-based rank only (no full ordering), same contract as rank().
size_t rank_of(const std::vector<ScoreTriple>& scores, const std::vector<int>& candidates,
               int true_class, const CalibrationWeights& a);

// Precomputed validation scores for calibration and evaluation.
struct InstanceScores {
    std::vector<ScoreTriple> per_class;  // aligned with the candidate list
    size_t true_pos = 0;                 // index of the true class in candidates
};

std::vector<InstanceScores> precompute_scores(ScorerBundle& scorers,
                                              const std::vector<ZslInstance>& instances,
                                              const PairedEmbeddings& emb,
                                              const std::vector<int>& candidates);

inline const std::vector<double>& default_alpha_grid() {
    static const std::vector<double> g = {0.0, 0.25, 0.5, 1.0, 2.0, 4.0};
    return g;
}

// Exhaustive grid search minimizing validation MFR; ties resolved to the
// lexicographically smallest (alpha_c, alpha_v, alpha_p).
CalibrationWeights calibrate(const std::vector<InstanceScores>& val,
                             const std::vector<int>& candidates,
                             const std::vector<double>& grid_c,
                             const std::vector<double>& grid_v,
                             const std::vector<double>& grid_p);

double mfr_for(const std::vector<InstanceScores>& scored, const std::vector<int>& candidates,
               const CalibrationWeights& a);

// CSV rows "instance_id,label,log_visual,log_context,log_prior": one positive
// row per instance plus k rows with sampled wrong classes.
void export_component_scores(const std::string& path, ScorerBundle& scorers,
                             const std::vector<ZslInstance>& instances,
                             const PairedEmbeddings& emb, const std::vector<int>& candidates,
                             int negatives_per_instance, Rng& rng);

// Honors CZSL_THREADS (default 1) for instance-parallel evaluation.
int eval_thread_count();

}  // namespace czsl
