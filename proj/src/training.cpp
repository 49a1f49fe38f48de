#include "czsl/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace czsl {

EmpiricalPrior::EmpiricalPrior(const SceneDataset& ds, Split split) {
    std::vector<int64_t> counts(ds.vocab.size(), 0);
    for (size_t si : ds.scenes_in(split))
        for (const auto& obj : ds.scenes[si].objects)
            if (ds.vocab.source_mask[static_cast<size_t>(obj.class_idx)])
                ++counts[static_cast<size_t>(obj.class_idx)];
    int64_t total = 0;
    for (int64_t c : counts) total += c;
    if (total == 0) throw InputError("EmpiricalPrior: no source-domain objects in split");
    double acc = 0.0;
    for (size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) continue;
        support.push_back(static_cast<int>(i));
        const double p = static_cast<double>(counts[i]) / static_cast<double>(total);
        prob.push_back(p);
        acc += p;
        cumulative.push_back(acc);
    }
    cumulative.back() = 1.0;
}

double EmpiricalPrior::p_of(int class_idx) const {
    auto it = std::lower_bound(support.begin(), support.end(), class_idx);
    if (it == support.end() || *it != class_idx) return 0.0;
    return prob[static_cast<size_t>(it - support.begin())];
}

int EmpiricalPrior::sample(Rng& rng) const {
    const double u = rng.uniform();
    auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    return support[static_cast<size_t>(it - cumulative.begin())];
}

std::vector<int> sample_negatives(NegDist dist, const EmpiricalPrior& prior, int positive,
                                  int k, Rng& rng) {
    if (prior.support.size() < 2)
        throw InputError("sample_negatives: support of size 1");
    std::vector<int> out;
    out.reserve(static_cast<size_t>(k));
    while (static_cast<int>(out.size()) < k) {
        const int j = dist == NegDist::Uniform
                          ? prior.support[static_cast<size_t>(
                                rng.below(static_cast<int64_t>(prior.support.size())))]
                          : prior.sample(rng);
        if (j == positive) continue;  // resample self-negatives
        out.push_back(j);
    }
    return out;
}

void Adam::update(const std::vector<TensorRef>& params) {
    if (m.empty()) {
        for (const auto& p : params) {
            m.emplace_back(p.size, 0.0);
            v.emplace_back(p.size, 0.0);
        }
    }
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (size_t pi = 0; pi < params.size(); ++pi) {
        const auto& p = params[pi];
        for (size_t i = 0; i < p.size; ++i) {
            const double g = p.grad[i];
            m[pi][i] = beta1 * m[pi][i] + (1.0 - beta1) * g;
            v[pi][i] = beta2 * v[pi][i] + (1.0 - beta2) * g * g;
            p.data[i] -= step * (m[pi][i] / bc1) / (std::sqrt(v[pi][i] / bc2) + eps);
        }
    }
}

double loss_prior(PriorScorer& scorer, const PairedEmbeddings& emb,
                  const std::vector<int>& positives, const EmpiricalPrior& prior,
                  double gamma, int k, Rng& rng) {
    const size_t n_pairs = positives.size() * static_cast<size_t>(k);
    const double inv = 1.0 / static_cast<double>(n_pairs);
    double total = 0.0;
    for (int i : positives) {
        const Vec& wi = emb.of(i);
        const double s_pos = scorer.net.forward(wi)[0];
        for (int j : sample_negatives(NegDist::Uniform, prior, i, k, rng)) {
            const Vec& wj = emb.of(j);
            const double s_neg = scorer.net.forward(wj)[0];
            double d_pos, d_neg;
            total += hinge(gamma, s_pos, s_neg, &d_pos, &d_neg);
            if (d_pos != 0.0) scorer.net.backward(wi, {d_pos * inv});
            if (d_neg != 0.0) scorer.net.backward(wj, {d_neg * inv});
        }
    }
    return total * inv;
}

namespace {

// d cos(p, w) / d p for fixed w.
Vec cosine_grad_wrt_p(const Vec& p, const Vec& w, double cos_val) {
    const double np = norm(p), nw = norm(w);
    Vec g(p.size());
    for (size_t i = 0; i < p.size(); ++i)
        g[i] = (w[i] / nw - cos_val * p[i] / np) / np;
    return g;
}

double projected_score(const Vec& p, const Vec& w, bool normalized) {
    if (!normalized) return dot(p, w);
    const double np = norm(p), nw = norm(w);
    if (np == 0.0 || nw == 0.0) return -1.0;
    return dot(p, w) / (np * nw);
}

void add_score_grad(Vec& dp, const Vec& p, const Vec& w, double s, double coef,
                    bool normalized) {
    if (coef == 0.0) return;
    if (!normalized) {
        add_scaled(dp, w, coef);
        return;
    }
    if (norm(p) == 0.0) return;  // degenerate projection: flat score
    add_scaled(dp, cosine_grad_wrt_p(p, w, s), coef);
}

}  // namespace

double loss_visual(VisualScorer& scorer, const PairedEmbeddings& emb,
                   const std::vector<const ZslInstance*>& positives,
                   const EmpiricalPrior& prior, double gamma, int k, Rng& rng,
                   bool devise_mode) {
    const NegDist dist = devise_mode ? NegDist::Uniform : NegDist::Empirical;
    const size_t n_pairs = positives.size() * static_cast<size_t>(k);
    const double inv = 1.0 / static_cast<double>(n_pairs);
    double total = 0.0;
    for (const auto* inst : positives) {
        const Vec x = to_vec(inst->focus_object().feature);
        const Vec p = scorer.proj.forward(x);
        const int i = inst->true_class();
        const Vec& wi = emb.of(i);
        const double s_pos = projected_score(p, wi, scorer.normalized_dot);
        Vec dp(p.size(), 0.0);
        for (int j : sample_negatives(dist, prior, i, k, rng)) {
            const Vec& wj = emb.of(j);
            const double s_neg = projected_score(p, wj, scorer.normalized_dot);
            double d_pos, d_neg;
            total += hinge(gamma, s_pos, s_neg, &d_pos, &d_neg);
            add_score_grad(dp, p, wi, s_pos, d_pos * inv, scorer.normalized_dot);
            add_score_grad(dp, p, wj, s_neg, d_neg * inv, scorer.normalized_dot);
        }
        scorer.proj.backward(x, dp);
    }
    return total * inv;
}

double loss_context(ContextScorer& scorer, const PairedEmbeddings& emb,
                    const std::vector<const ZslInstance*>& positives,
                    const EmpiricalPrior& prior, double gamma, int k, Rng& rng) {
    const size_t n_pairs = positives.size() * static_cast<size_t>(k);
    const double inv = 1.0 / static_cast<double>(n_pairs);
    const size_t d = static_cast<size_t>(scorer.ctx_proj.out_dim());
    double total = 0.0;
    for (const auto* inst : positives) {
        const Vec h = scorer.context_vec(*inst, emb);
        const int i = inst->true_class();
        Vec dh(d, 0.0);
        auto scored = [&](const Vec& w, Vec& x) {
            x.assign(h.begin(), h.end());
            x.insert(x.end(), w.begin(), w.end());
            return scorer.scorer.forward(x)[0];
        };
        Vec x_pos;
        const double s_pos = scored(emb.of(i), x_pos);
        for (int j : sample_negatives(NegDist::Empirical, prior, i, k, rng)) {
            Vec x_neg;
            const double s_neg = scored(emb.of(j), x_neg);
            double d_pos, d_neg;
            total += hinge(gamma, s_pos, s_neg, &d_pos, &d_neg);
            if (d_pos != 0.0) {
                const Vec dx = scorer.scorer.backward(x_pos, {d_pos * inv});
                for (size_t t = 0; t < d; ++t) dh[t] += dx[t];
            }
            if (d_neg != 0.0) {
                const Vec dx = scorer.scorer.backward(x_neg, {d_neg * inv});
                for (size_t t = 0; t < d; ++t) dh[t] += dx[t];
            }
        }
        scorer.backward_context(*inst, dh);
    }
    return total * inv;
}

double loss_joint(JointScorer& scorer, const PairedEmbeddings& emb,
                  const std::vector<const ZslInstance*>& positives,
                  const EmpiricalPrior& prior, double gamma, int k, Rng& rng,
                  bool devise_mode) {
    const NegDist dist = devise_mode ? NegDist::Uniform : NegDist::Empirical;
    const size_t n_pairs = positives.size() * static_cast<size_t>(k);
    const double inv = 1.0 / static_cast<double>(n_pairs);
    const size_t d = static_cast<size_t>(scorer.vproj.out_dim());
    double total = 0.0;
    for (const auto* inst : positives) {
        // Forward, keeping intermediates for the backward pass.
        Vec h(d, 0.0);
        size_t count = 0;
        for (size_t c = 0; c < inst->context_size(); ++c) {
            if (inst->context_in_source(c) && (scorer.model & CtxSH)) {
                add_scaled(h, emb.of(inst->context_label(c)), 1.0);
                ++count;
            }
        }
        if (count > 0)
            for (auto& v : h) v /= static_cast<double>(count);
        const Vec feat = to_vec(inst->focus_object().feature);
        const Vec p = scorer.vproj.forward(feat);
        Vec x;
        x.reserve(2 * d);
        x.insert(x.end(), h.begin(), h.end());
        x.insert(x.end(), p.begin(), p.end());
        const Vec z = scorer.fuse.forward(x);

        const int i = inst->true_class();
        const Vec& wi = emb.of(i);
        const double s_pos = projected_score(z, wi, true);
        Vec dz(z.size(), 0.0);
        for (int j : sample_negatives(dist, prior, i, k, rng)) {
            const Vec& wj = emb.of(j);
            const double s_neg = projected_score(z, wj, true);
            double d_pos, d_neg;
            total += hinge(gamma, s_pos, s_neg, &d_pos, &d_neg);
            add_score_grad(dz, z, wi, s_pos, d_pos * inv, true);
            add_score_grad(dz, z, wj, s_neg, d_neg * inv, true);
        }
        const Vec dx = scorer.fuse.backward(x, dz);
        Vec dp(dx.begin() + static_cast<long>(d), dx.end());
        scorer.vproj.backward(feat, dp);
    }
    return total * inv;
}

std::string component_name(Component c) {
    switch (c) {
        case Component::Prior: return "prior";
        case Component::Visual: return "visual";
        case Component::Context: return "context";
        case Component::Joint: return "joint";
    }
    return "?";
}

namespace {

void zero_grads(const std::vector<TensorRef>& params) {
    for (const auto& p : params) std::fill(p.grad, p.grad + p.size, 0.0);
}

double apply_l2(const std::vector<TensorRef>& params, double l2) {
    if (l2 == 0.0) return 0.0;
    double penalty = 0.0;
    for (const auto& p : params)
        for (size_t i = 0; i < p.size; ++i) {
            penalty += l2 * p.data[i] * p.data[i];
            p.grad[i] += 2.0 * l2 * p.data[i];
        }
    return penalty;
}

std::vector<std::vector<double>> snapshot(const std::vector<TensorRef>& params) {
    std::vector<std::vector<double>> out;
    for (const auto& p : params) out.emplace_back(p.data, p.data + p.size);
    return out;
}

void restore(const std::vector<TensorRef>& params, const std::vector<std::vector<double>>& snap) {
    for (size_t i = 0; i < params.size(); ++i)
        std::copy(snap[i].begin(), snap[i].end(), params[i].data);
}

}  // namespace

std::vector<LossCurvePoint> train(ScorerBundle& scorers, const std::vector<Component>& selected,
                                  const SceneDataset& ds, const PairedEmbeddings& emb,
                                  const TrainConfig& cfg) {
    const EmpiricalPrior prior(ds, Split::Train);
    const auto instances = make_instances(ds, Split::Train, RetrievalDomain::Source);
    if (instances.empty()) throw InputError("train: no source-domain training instances");

    std::vector<LossCurvePoint> curve;
    for (Component comp : selected) {
        std::vector<TensorRef> params;
        switch (comp) {
            case Component::Prior:
                if (!scorers.prior) throw InputError("train: prior scorer not constructed");
                params = scorers.prior->tensors();
                break;
            case Component::Visual:
                if (!scorers.visual) throw InputError("train: visual scorer not constructed");
                params = scorers.visual->tensors();
                break;
            case Component::Context:
                if (!scorers.context) throw InputError("train: context scorer not constructed");
                params = scorers.context->tensors();
                break;
            case Component::Joint:
                if (!scorers.joint) throw InputError("train: joint scorer not constructed");
                params = scorers.joint->tensors();
                break;
        }
        // Per-component stream so training one component never perturbs the
        // randomness (or parameters) of another.
        Rng rng(cfg.seed * 0x9e3779b97f4a7c15ull + static_cast<uint64_t>(comp) + 1);
        Adam adam(cfg);

        std::vector<const ZslInstance*> order;
        order.reserve(instances.size());
        for (const auto& inst : instances) order.push_back(&inst);

        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            const auto snap = snapshot(params);
            rng.shuffle(order);
            double epoch_loss = 0.0;
            size_t n_batches = 0;
            for (size_t begin = 0; begin < order.size(); begin += static_cast<size_t>(cfg.batch_size)) {
                const size_t end = std::min(order.size(), begin + static_cast<size_t>(cfg.batch_size));
                std::vector<const ZslInstance*> batch(order.begin() + static_cast<long>(begin),
                                                      order.begin() + static_cast<long>(end));
                zero_grads(params);
                double loss = 0.0;
                switch (comp) {
                    case Component::Prior: {
                        std::vector<int> classes;
                        classes.reserve(batch.size());
                        for (const auto* b : batch) classes.push_back(b->true_class());
                        loss = loss_prior(*scorers.prior, emb, classes, prior, cfg.gamma_p,
                                          cfg.negatives_per_positive, rng);
                        break;
                    }
                    case Component::Visual:
                        loss = loss_visual(*scorers.visual, emb, batch, prior, cfg.gamma_v,
                                           cfg.negatives_per_positive, rng, cfg.devise_mode);
                        break;
                    case Component::Context:
                        loss = loss_context(*scorers.context, emb, batch, prior, cfg.gamma_c,
                                            cfg.negatives_per_positive, rng);
                        break;
                    case Component::Joint:
                        loss = loss_joint(*scorers.joint, emb, batch, prior, cfg.gamma_v,
                                          cfg.negatives_per_positive, rng, cfg.devise_mode);
                        break;
                }
                loss += apply_l2(params, cfg.l2_weight);
                if (!std::isfinite(loss)) {
                    restore(params, snap);
                    throw NumericError("train: non-finite loss for component " +
                                       component_name(comp) + " at epoch " +
                                       std::to_string(epoch));
                }
                adam.update(params);
                epoch_loss += loss;
                ++n_batches;
            }
            curve.push_back({epoch, component_name(comp),
                             epoch_loss / static_cast<double>(n_batches)});
        }
    }
    return curve;
}

void write_loss_csv(const std::string& path, const std::vector<LossCurvePoint>& curve) {
    std::ofstream os(path);
    if (!os) throw InputError("write_loss_csv: cannot open " + path);
    os << "epoch,component,loss\n";
    os.precision(17);
    for (const auto& p : curve) os << p.epoch << ',' << p.component << ',' << p.loss << '\n';
}

}  // namespace czsl
