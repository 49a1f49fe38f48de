#pragma once

#include <array>
#include <atomic>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "czsl/checkpoint.hpp"
#include "czsl/embeddings.hpp"
#include "czsl/linalg.hpp"

namespace czsl {

struct BBox {
    double x = 0, y = 0, w = 0, h = 0;
};

struct ObjectInstance {
    std::string object_id;
    int class_idx = -1;
    BBox bbox;
    std::vector<float> feature;  // precomputed region descriptor
};

struct Scene {
    std::string image_id;
    std::vector<ObjectInstance> objects;
    std::optional<std::vector<float>> masked_scene_feature;
};

struct ClassVocab {
    std::vector<std::string> labels;
    std::vector<int64_t> counts;      // instance counts in the full dataset
    std::vector<bool> source_mask;    // true = source domain

    size_t size() const { return labels.size(); }
    int index_of(const std::string& label) const;  // -1 when absent
    std::vector<int> source_classes() const;
    std::vector<int> target_classes() const;
};

enum class Split { Train = 0, Val = 1, Test = 2 };

struct SceneDataset {
    std::vector<Scene> scenes;
    std::vector<int> partition;  // per scene, 0/1/2; -1 before split_images
    ClassVocab vocab;
    int d_visual = 0;
    double p_sup = 0.0;

    std::vector<size_t> scenes_in(Split s) const;
};

// Embeddings aligned with a vocab; construction fails on any missing label.
struct PairedEmbeddings {
    int dim = 0;
    std::vector<Vec> by_class;

    PairedEmbeddings() = default;
    PairedEmbeddings(const EmbeddingTable& table, const ClassVocab& vocab);
    const Vec& of(int class_idx) const { return by_class.at(static_cast<size_t>(class_idx)); }
};

// Counts evaluation-only label reads; non-oracle code paths must leave it at
// zero (asserted in tests with poisoned accessors).
extern std::atomic<uint64_t> oracle_label_reads;

// One object to classify plus its in-scene context. Target-domain context
// labels are reachable only through the oracle accessor.
struct ZslInstance {
    const Scene* scene = nullptr;
    int focus = -1;

    int true_class() const { return scene->objects[static_cast<size_t>(focus)].class_idx; }
    const ObjectInstance& focus_object() const { return scene->objects[static_cast<size_t>(focus)]; }

    size_t context_size() const { return context_.size(); }
    const ObjectInstance& context_object(size_t k) const { return scene->objects[context_[k]]; }
    bool context_in_source(size_t k) const { return in_source_[k]; }

    // Model-facing: class index of a source-domain context object.
    int context_label(size_t k) const;
    // Evaluation-only: label of any context object; bumps oracle_label_reads.
    int context_label_oracle(size_t k) const;

    void add_context(size_t object_pos, bool in_source) {
        context_.push_back(object_pos);
        in_source_.push_back(in_source);
    }

  private:
    std::vector<size_t> context_;   // positions within scene->objects
    std::vector<char> in_source_;
};

enum class RetrievalDomain { Target, Source, Generalized };

struct IngestResult {
    SceneDataset dataset;                 // vocab filled, partition/domains not yet
    int64_t dropped_classes = 0;
    int64_t dropped_instances = 0;
    int64_t dropped_scenes = 0;
};

// Scene file: UTF-8 JSON lines; features inline or resolved through the bank.
// Classes under min_count or absent from `embeddings` (when given) are dropped
// with their instances; scenes left empty are dropped.
IngestResult ingest_scenes(const std::string& scene_file,
                           const std::optional<std::string>& feature_bank,
                           int64_t min_count,
                           const EmbeddingTable* embeddings = nullptr);

// Deterministic source/target split: |S| = round(p_sup * |O|), half up.
// forced_source labels always land in S.
void split_domains(ClassVocab& vocab, double p_sup, uint64_t seed,
                   const std::vector<std::string>& forced_source = {});

// Deterministic train/val/test partition, counts within +-1 of exact
// fractions (largest-remainder rule).
std::vector<int> split_images(size_t n_scenes, const std::array<double, 3>& ratios,
                              uint64_t seed);

std::vector<ZslInstance> make_instances(const SceneDataset& ds, Split part,
                                        RetrievalDomain mode);

// On-disk round trips -------------------------------------------------------

// feature_refs=true emits "feature_ref": object_id per object instead of the
// inline float list; pair with write_feature_bank on the same dataset.
void write_scene_file(const std::string& path, const SceneDataset& ds,
                      bool feature_refs = false);

// Feature bank: magic "CZFB1", u32 row count, u32 dim, f32 rows; sidecar
// index file (path + ".idx") maps object_id -> row, one "id<TAB>row" per line.
void write_feature_bank(const std::string& path, const SceneDataset& ds);

void write_split_file(const std::string& path, const SceneDataset& ds);
void read_split_file(const std::string& path, SceneDataset& ds);

}  // namespace czsl
