#pragma once

#include <map>

#include "czsl/components.hpp"

namespace czsl {

// Symmetric presence-based co-occurrence counts over M units (images or text
// windows). Immutable after build.
struct CooccurrenceTable {
    uint64_t units = 0;                       // M
    std::vector<uint64_t> marginal;           // #i per class
    std::map<std::pair<uint32_t, uint32_t>, uint64_t> pairs;  // key (min,max)

    uint64_t pair_count(int c, int i) const;
    void add_pair(int c, int i, uint64_t n = 1);
};

// Presence-based image co-occurrence over the full dataset; reads target
// labels, so the oracle flag must be set.
CooccurrenceTable build_image_cooc(const SceneDataset& ds, bool oracle_flag);

// Lift ratio #(c,i)M / (#c #i); may exceed 1. Throws on zero marginals.
double p_cooc(const CooccurrenceTable& table, int c, int i);

// log((#i+eps)/(M+eps*n_classes)).
double true_prior_logscore(const CooccurrenceTable& table, int i, double eps = 1e-9);

// Sliding windows of `window` tokens, step 1; a pair is counted once per
// window; #i counts windows containing token i. Tokens outside the vocab are
// kept as window filler but contribute no counts.
CooccurrenceTable build_text_cooc(const std::string& token_stream_path, int window,
                                  const ClassVocab& vocab);

// sum_c log(P_cooc(c|i)+eps) + alpha_v*visual + alpha_p*log P*(i).
// Context labels are read through the evaluation-only accessor. With eps=0 a
// zero co-occurrence yields -inf, which ranks last.
double visual_bayes_logscore(const CooccurrenceTable& table, const ZslInstance& inst,
                             int class_idx, VisualScorer* visual, const PairedEmbeddings& emb,
                             double alpha_v, double alpha_p, double eps = 1e-9);

// Serialization, magic "CZCT1": u32 class count, u64 unit count, dense u64
// marginals, u32 pair triple count, sparse (u32, u32, u64) triples.
void save_cooc(const std::string& path, const CooccurrenceTable& table);
CooccurrenceTable load_cooc(const std::string& path);

}  // namespace czsl
