#pragma once

#include <string>
#include <unordered_map>

#include "czsl/linalg.hpp"

namespace czsl {

// Semantic representations of class labels. Immutable after load.
struct EmbeddingTable {
    int dim = 0;
    std::unordered_map<std::string, Vec> vectors;

    bool has(const std::string& label) const { return vectors.count(label) != 0; }
    const Vec& get(const std::string& label) const;
};

// Text format: header line "N d", then N lines "token v1 ... vd".
EmbeddingTable load_embeddings(const std::string& path);
// Writer emits 9 significant digits.
void save_embeddings(const std::string& path, const EmbeddingTable& table);

// a.b / (|a||b|); throws on zero-norm input.
double cosine(const Vec& a, const Vec& b);

}  // namespace czsl
