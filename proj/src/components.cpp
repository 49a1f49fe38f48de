#include "czsl/components.hpp"

#include <cmath>
#include <sstream>

namespace czsl {

std::string ctx_model_name(unsigned model) {
    static const std::pair<unsigned, const char*> parts[] = {
        {CtxSH, "sh"}, {CtxSL, "sl"}, {CtxTL, "tl"}, {CtxTH, "th"}, {CtxImg, "img"}};
    std::string out;
    for (const auto& [bit, name] : parts) {
        if (model & bit) {
            if (!out.empty()) out += '+';
            out += name;
        }
    }
    return out.empty() ? "none" : out;
}

unsigned parse_ctx_model(const std::string& text) {
    unsigned model = 0;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, '+')) {
        if (part == "sh") model |= CtxSH;
        else if (part == "sl") model |= CtxSL;
        else if (part == "tl") model |= CtxTL;
        else if (part == "th") model |= CtxTH;
        else if (part == "img") model |= CtxImg;
        else throw InputError("unknown context model part '" + part + "'");
    }
    if (model == 0) throw InputError("empty context model '" + text + "'");
    if ((model & CtxImg) && model != CtxImg)
        throw InputError("context model img cannot be combined with others");
    return model;
}

double VisualScorer::logscore(const std::vector<float>& feature, const Vec& w) {
    const Vec p = proj.forward(to_vec(feature));
    const double np = norm(p);
    if (np == 0.0) {
        ++degenerate_count;
        return -1.0;
    }
    if (!normalized_dot) return dot(p, w);
    const double nw = norm(w);
    if (nw == 0.0) throw std::invalid_argument("visual_logscore: zero-norm embedding");
    return dot(p, w) / (np * nw);
}

std::vector<TensorRef> VisualScorer::tensors() {
    std::vector<TensorRef> out;
    proj.collect("visual.proj", out);
    return out;
}

ContextScorer::ContextScorer(int d_visual, int d, int hidden, unsigned model_, bool oracle_)
    : ctx_proj(d, d_visual), scorer(2 * d, hidden, 1), model(model_), oracle(oracle_) {
    if ((model & CtxTH) && !oracle)
        throw InputError("context model containing th requires the oracle flag");
    if (model & CtxImg) masked_proj.emplace(d, d_visual);
}

void ContextScorer::init(Rng& rng) {
    ctx_proj.init(rng);
    scorer.init(rng);
    if (masked_proj) masked_proj->init(rng);
}

Vec ContextScorer::aggregate(const ZslInstance& inst, const PairedEmbeddings& emb) const {
    if (model & CtxImg) throw std::logic_error("aggregate: not defined for model img");
    const int d = ctx_proj.out_dim();
    Vec sum(static_cast<size_t>(d), 0.0);
    size_t count = 0;
    for (size_t k = 0; k < inst.context_size(); ++k) {
        const bool in_source = inst.context_in_source(k);
        if (in_source && (model & CtxSH)) {
            add_scaled(sum, emb.of(inst.context_label(k)), 1.0);
            ++count;
        }
        if (in_source && (model & CtxSL)) {
            add_scaled(sum, ctx_proj.forward(to_vec(inst.context_object(k).feature)), 1.0);
            ++count;
        }
        if (!in_source && (model & CtxTL)) {
            add_scaled(sum, ctx_proj.forward(to_vec(inst.context_object(k).feature)), 1.0);
            ++count;
        }
        if (!in_source && (model & CtxTH)) {
            if (!oracle) throw std::logic_error("aggregate: th members without oracle flag");
            add_scaled(sum, emb.of(inst.context_label_oracle(k)), 1.0);
            ++count;
        }
    }
    if (count == 0) return sum;  // empty context: zero vector
    // Pooled-count denominator, shared across union members.
    for (auto& v : sum) v /= static_cast<double>(count);
    return sum;
}

Vec ContextScorer::context_vec(const ZslInstance& inst, const PairedEmbeddings& emb) const {
    if (model & CtxImg) {
        const auto& masked = inst.scene->masked_scene_feature;
        if (!masked) throw InputError("context model img requires masked_scene_feature");
        return masked_proj->forward(to_vec(*masked));
    }
    return aggregate(inst, emb);
}

double ContextScorer::logscore(const Vec& h, const Vec& w) const {
    Vec x;
    x.reserve(h.size() + w.size());
    x.insert(x.end(), h.begin(), h.end());
    x.insert(x.end(), w.begin(), w.end());
    return scorer.forward(x)[0];
}

void ContextScorer::backward_context(const ZslInstance& inst, const Vec& dh) {
    if (model & CtxImg) {
        const auto& masked = inst.scene->masked_scene_feature;
        if (!masked) throw InputError("context model img requires masked_scene_feature");
        masked_proj->backward(to_vec(*masked), dh);
        return;
    }
    // Members and the pooled count must match aggregate().
    std::vector<const std::vector<float>*> projected;
    size_t count = 0;
    for (size_t k = 0; k < inst.context_size(); ++k) {
        const bool in_source = inst.context_in_source(k);
        if (in_source && (model & CtxSH)) ++count;
        if (in_source && (model & CtxSL)) {
            projected.push_back(&inst.context_object(k).feature);
            ++count;
        }
        if (!in_source && (model & CtxTL)) {
            projected.push_back(&inst.context_object(k).feature);
            ++count;
        }
        if (!in_source && (model & CtxTH)) ++count;
    }
    if (count == 0 || projected.empty()) return;
    Vec up = dh;
    for (auto& v : up) v /= static_cast<double>(count);
    for (const auto* feat : projected) ctx_proj.backward(to_vec(*feat), up);
}

std::vector<TensorRef> ContextScorer::tensors() {
    std::vector<TensorRef> out;
    ctx_proj.collect("context.ctx_proj", out);
    scorer.collect("context.scorer", out);
    if (masked_proj) masked_proj->collect("context.masked_proj", out);
    return out;
}

std::vector<TensorRef> PriorScorer::tensors() {
    std::vector<TensorRef> out;
    net.collect("prior.net", out);
    return out;
}

Vec JointScorer::fused(const ZslInstance& inst, const PairedEmbeddings& emb) const {
    const int d = vproj.out_dim();
    // High-level context aggregate; shares the pooled-mean rule.
    Vec h(static_cast<size_t>(d), 0.0);
    size_t count = 0;
    for (size_t k = 0; k < inst.context_size(); ++k) {
        if (inst.context_in_source(k) && (model & CtxSH)) {
            add_scaled(h, emb.of(inst.context_label(k)), 1.0);
            ++count;
        }
    }
    if (count > 0)
        for (auto& v : h) v /= static_cast<double>(count);
    const Vec p = vproj.forward(to_vec(inst.focus_object().feature));
    Vec x;
    x.reserve(h.size() + p.size());
    x.insert(x.end(), h.begin(), h.end());
    x.insert(x.end(), p.begin(), p.end());
    return fuse.forward(x);
}

double JointScorer::logscore(const ZslInstance& inst, const PairedEmbeddings& emb,
                             const Vec& w) const {
    const Vec z = fused(inst, emb);
    const double nz = norm(z), nw = norm(w);
    if (nz == 0.0 || nw == 0.0) return -1.0;
    return dot(z, w) / (nz * nw);
}

std::vector<TensorRef> JointScorer::tensors() {
    std::vector<TensorRef> out;
    vproj.collect("joint.vproj", out);
    fuse.collect("joint.fuse", out);
    return out;
}

std::vector<TensorRef> ScorerBundle::tensors() {
    std::vector<TensorRef> out;
    auto append = [&out](std::vector<TensorRef> v) {
        out.insert(out.end(), v.begin(), v.end());
    };
    if (visual) append(visual->tensors());
    if (context) append(context->tensors());
    if (prior) append(prior->tensors());
    if (joint) append(joint->tensors());
    return out;
}

std::vector<ScoreTriple> score_all_classes(ScorerBundle& scorers, const ZslInstance& inst,
                                           const PairedEmbeddings& emb,
                                           const std::vector<int>& candidates) {
    if (candidates.empty()) throw std::invalid_argument("score_all_classes: empty candidate set");
    std::optional<Vec> h;
    if (scorers.context) h = scorers.context->context_vec(inst, emb);

    std::vector<ScoreTriple> out(candidates.size());
    for (size_t i = 0; i < candidates.size(); ++i) {
        const Vec& w = emb.of(candidates[i]);
        if (scorers.context) out[i].log_context = scorers.context->logscore(*h, w);
        if (scorers.joint)
            out[i].log_visual = scorers.joint->logscore(inst, emb, w);
        else if (scorers.visual)
            out[i].log_visual = scorers.visual->logscore(inst.focus_object().feature, w);
        if (scorers.prior) out[i].log_prior = scorers.prior->logscore(w);
    }
    return out;
}

}  // namespace czsl
