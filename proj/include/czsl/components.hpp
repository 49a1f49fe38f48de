#pragma once

#include <optional>

#include "czsl/dataset.hpp"
#include "czsl/diffprims.hpp"

namespace czsl {

// Context-model membership bitmask. Models containing TH read target-domain
// labels and are constructible only with the oracle flag; Img replaces the
// pooled members with a projection of the masked whole-scene feature.
enum CtxModel : unsigned {
    CtxSH = 1u << 0,   // source context labels, embedded
    CtxSL = 1u << 1,   // source context regions, projected
    CtxTL = 1u << 2,   // target context regions, projected
    CtxTH = 1u << 3,   // target context labels, embedded (oracle only)
    CtxImg = 1u << 4,  // masked whole-image feature
};

std::string ctx_model_name(unsigned model);
// Accepts "sh", "sl", "tl", "th", "img" joined with '+', e.g. "sh+tl".
unsigned parse_ctx_model(const std::string& text);

struct VisualScorer {
    Affine proj;                 // d_visual -> d
    bool normalized_dot = true;  // false = raw dot product variant
    uint64_t degenerate_count = 0;

    VisualScorer() = default;
    VisualScorer(int d_visual, int d) : proj(d, d_visual) {}

    void init(Rng& rng) { proj.init(rng); }
    // cos(proj(feature), w); returns -1 and counts the event when the
    // projection has zero norm.
    double logscore(const std::vector<float>& feature, const Vec& w);
    std::vector<TensorRef> tensors();
};

struct ContextScorer {
    Affine ctx_proj;  // d_visual -> d, shared by SL and TL members
    Mlp2 scorer;      // 2d -> hidden -> 1
    std::optional<Affine> masked_proj;  // d_visual -> d, model Img only
    unsigned model = CtxSH;
    bool oracle = false;

    ContextScorer() = default;
    ContextScorer(int d_visual, int d, int hidden, unsigned model_, bool oracle_ = false);

    void init(Rng& rng);

    // Mean of member vectors under the selected model; empty member set
    // yields the zero vector. Not defined for model Img.
    Vec aggregate(const ZslInstance& inst, const PairedEmbeddings& emb) const;
    // Full context vector h, including the Img path.
    Vec context_vec(const ZslInstance& inst, const PairedEmbeddings& emb) const;

    double logscore(const Vec& h, const Vec& w) const;
    double logscore(const ZslInstance& inst, const PairedEmbeddings& emb, const Vec& w) const {
        return logscore(context_vec(inst, emb), w);
    }

    // Backpropagates d(loss)/dh into ctx_proj / masked_proj for the members
    // of this instance (embedding members carry no parameters).
    void backward_context(const ZslInstance& inst, const Vec& dh);

    std::vector<TensorRef> tensors();
};

struct PriorScorer {
    Mlp2 net;  // d -> hidden -> 1

    PriorScorer() = default;
    PriorScorer(int d, int hidden) : net(d, hidden, 1) {}

    void init(Rng& rng) { net.init(rng); }
    double logscore(const Vec& w) const { return net.forward(w)[0]; }
    std::vector<TensorRef> tensors();
};

// Baseline scorer for joint context+visual modeling: concatenates the
// (high-level) context aggregate with the projected region feature, fuses
// through an MLP into semantic space, then scores by cosine against w.
struct JointScorer {
    Affine vproj;    // d_visual -> d
    Mlp2 fuse;       // 2d -> hidden -> d
    unsigned model = CtxSH;  // high-level members only (no projection params)

    JointScorer() = default;
    JointScorer(int d_visual, int d, int hidden)
        : vproj(d, d_visual), fuse(2 * d, hidden, d) {}

    void init(Rng& rng) {
        vproj.init(rng);
        fuse.init(rng);
    }
    Vec fused(const ZslInstance& inst, const PairedEmbeddings& emb) const;
    double logscore(const ZslInstance& inst, const PairedEmbeddings& emb, const Vec& w) const;
    std::vector<TensorRef> tensors();
};

struct ScorerBundle {
    std::optional<VisualScorer> visual;
    std::optional<ContextScorer> context;
    std::optional<PriorScorer> prior;
    std::optional<JointScorer> joint;

    std::vector<TensorRef> tensors();
};

struct ScoreTriple {
    double log_context = 0.0;
    double log_visual = 0.0;
    double log_prior = 0.0;
};

// Dense per-candidate component scores; the context aggregate is computed
// once per instance and reused. Components absent from the bundle score 0.
// When a JointScorer is present it supplies the visual column.
std::vector<ScoreTriple> score_all_classes(ScorerBundle& scorers, const ZslInstance& inst,
                                           const PairedEmbeddings& emb,
                                           const std::vector<int>& candidates);

}  // namespace czsl
