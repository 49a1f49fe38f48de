#include "czsl/inference.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <thread>

namespace czsl {

double combined_logscore(const ScoreTriple& t, const CalibrationWeights& a) {
    return a.alpha_c * t.log_context + a.alpha_v * t.log_visual + a.alpha_p * t.log_prior;
}

RankResult rank(const std::vector<ScoreTriple>& scores, const std::vector<int>& candidates,
                int true_class, const CalibrationWeights& a) {
    if (scores.size() != candidates.size())
        throw std::invalid_argument("rank: score/candidate size mismatch");
    std::vector<size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> combined(candidates.size());
    for (size_t i = 0; i < scores.size(); ++i) combined[i] = combined_logscore(scores[i], a);
    std::sort(order.begin(), order.end(), [&](size_t x, size_t y) {
        if (combined[x] != combined[y]) return combined[x] > combined[y];
        return candidates[x] < candidates[y];
    });
    RankResult out;
    out.order.reserve(order.size());
    for (size_t i = 0; i < order.size(); ++i) {
        out.order.push_back(candidates[order[i]]);
        if (candidates[order[i]] == true_class) out.rank = i + 1;
    }
    if (out.rank == 0) throw std::invalid_argument("rank: true class not among candidates");
    return out;
}

size_t rank_of(const std::vector<ScoreTriple>& scores, const std::vector<int>& candidates,
               int true_class, const CalibrationWeights& a) {
    size_t true_idx = candidates.size();
    for (size_t i = 0; i < candidates.size(); ++i)
        if (candidates[i] == true_class) {
            true_idx = i;
            break;
        }
    if (true_idx == candidates.size())
        throw std::invalid_argument("rank_of: true class not among candidates");
    const double s_true = combined_logscore(scores[true_idx], a);
    size_t r = 1;
    for (size_t i = 0; i < candidates.size(); ++i) {
        if (i == true_idx) continue;
        const double s = combined_logscore(scores[i], a);
        if (s > s_true || (s == s_true && candidates[i] < true_class)) ++r;
    }
    return r;
}

int eval_thread_count() {
    const char* env = std::getenv("CZSL_THREADS");
    if (!env) return 1;
    const int n = std::atoi(env);
    return n > 0 ? n : 1;
}

std::vector<InstanceScores> precompute_scores(ScorerBundle& scorers,
                                              const std::vector<ZslInstance>& instances,
                                              const PairedEmbeddings& emb,
                                              const std::vector<int>& candidates) {
    std::vector<InstanceScores> out(instances.size());
    auto score_range = [&](size_t begin, size_t end) {
        for (size_t i = begin; i < end; ++i) {
            out[i].per_class = score_all_classes(scorers, instances[i], emb, candidates);
            const int tc = instances[i].true_class();
            auto it = std::find(candidates.begin(), candidates.end(), tc);
            if (it == candidates.end())
                throw std::invalid_argument("precompute_scores: true class not in candidates");
            out[i].true_pos = static_cast<size_t>(it - candidates.begin());
        }
    };
    const int threads = std::min<int>(eval_thread_count(), static_cast<int>(instances.size()));
    if (threads <= 1) {
        score_range(0, instances.size());
        return out;
    }
    std::vector<std::thread> pool;
    const size_t chunk = (instances.size() + static_cast<size_t>(threads) - 1) / static_cast<size_t>(threads);
    for (int t = 0; t < threads; ++t) {
        const size_t b = static_cast<size_t>(t) * chunk;
        const size_t e = std::min(instances.size(), b + chunk);
        if (b < e) pool.emplace_back(score_range, b, e);
    }
    for (auto& th : pool) th.join();
    return out;
}

double mfr_for(const std::vector<InstanceScores>& scored, const std::vector<int>& candidates,
               const CalibrationWeights& a) {
    if (scored.empty()) throw std::invalid_argument("mfr_for: empty instance set");
    double sum = 0.0;
    for (const auto& is : scored) {
        const size_t r = rank_of(is.per_class, candidates, candidates[is.true_pos], a);
        sum += first_relevant(r, candidates.size());
    }
    return sum / static_cast<double>(scored.size());
}

CalibrationWeights calibrate(const std::vector<InstanceScores>& val,
                             const std::vector<int>& candidates,
                             const std::vector<double>& grid_c,
                             const std::vector<double>& grid_v,
                             const std::vector<double>& grid_p) {
    if (val.empty()) throw InputError("calibrate: empty validation set");
    auto sorted = [](std::vector<double> g) {
        std::sort(g.begin(), g.end());
        return g;
    };
    const auto gc = sorted(grid_c), gv = sorted(grid_v), gp = sorted(grid_p);
    CalibrationWeights best;
    double best_mfr = 0.0;
    bool first = true;
    for (double ac : gc)
        for (double av : gv)
            for (double ap : gp) {
                const auto a = CalibrationWeights::of(ac, av, ap);
                const double mfr = mfr_for(val, candidates, a);
                // Lexicographic order of the sorted grids breaks ties.
                if (first || mfr < best_mfr) {
                    best = a;
                    best_mfr = mfr;
                    first = false;
                }
            }
    return best;
}

void export_component_scores(const std::string& path, ScorerBundle& scorers,
                             const std::vector<ZslInstance>& instances,
                             const PairedEmbeddings& emb, const std::vector<int>& candidates,
                             int negatives_per_instance, Rng& rng) {
    std::ofstream os(path);
    if (!os) throw InputError("export_component_scores: cannot open " + path);
    os << "instance_id,label,log_visual,log_context,log_prior\n";
    os.precision(17);
    for (size_t i = 0; i < instances.size(); ++i) {
        const auto& inst = instances[i];
        const auto scores = score_all_classes(scorers, inst, emb, candidates);
        size_t true_pos = candidates.size();
        for (size_t c = 0; c < candidates.size(); ++c)
            if (candidates[c] == inst.true_class()) true_pos = c;
        if (true_pos == candidates.size())
            throw std::invalid_argument("export_component_scores: true class not in candidates");
        const std::string id = inst.scene->image_id + "#" + std::to_string(inst.focus);
        const auto& pos = scores[true_pos];
        os << id << ",pos," << pos.log_visual << ',' << pos.log_context << ',' << pos.log_prior
           << '\n';
        for (int k = 0; k < negatives_per_instance; ++k) {
            size_t j;
            do {
                j = static_cast<size_t>(rng.below(static_cast<int64_t>(candidates.size())));
            } while (j == true_pos && candidates.size() > 1);
            const auto& neg = scores[j];
            os << id << ",neg," << neg.log_visual << ',' << neg.log_context << ','
               << neg.log_prior << '\n';
        }
    }
}

}  // namespace czsl
