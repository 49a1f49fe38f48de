#include "czsl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

namespace czsl {

using nlohmann::json;

std::atomic<uint64_t> oracle_label_reads{0};

int ClassVocab::index_of(const std::string& label) const {
    auto it = std::find(labels.begin(), labels.end(), label);
    return it == labels.end() ? -1 : static_cast<int>(it - labels.begin());
}

std::vector<int> ClassVocab::source_classes() const {
    std::vector<int> out;
    for (size_t i = 0; i < labels.size(); ++i)
        if (source_mask[i]) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<int> ClassVocab::target_classes() const {
    std::vector<int> out;
    for (size_t i = 0; i < labels.size(); ++i)
        if (!source_mask[i]) out.push_back(static_cast<int>(i));
    return out;
}

std::vector<size_t> SceneDataset::scenes_in(Split s) const {
    std::vector<size_t> out;
    for (size_t i = 0; i < scenes.size(); ++i)
        if (partition[i] == static_cast<int>(s)) out.push_back(i);
    return out;
}

PairedEmbeddings::PairedEmbeddings(const EmbeddingTable& table, const ClassVocab& vocab) {
    dim = table.dim;
    by_class.reserve(vocab.size());
    for (const auto& label : vocab.labels) by_class.push_back(table.get(label));
}

int ZslInstance::context_label(size_t k) const {
    if (!in_source_[k])
        throw std::logic_error("ZslInstance: target-domain context label requested "
                               "through the model-facing accessor");
    return scene->objects[context_[k]].class_idx;
}

int ZslInstance::context_label_oracle(size_t k) const {
    oracle_label_reads.fetch_add(1, std::memory_order_relaxed);
    return scene->objects[context_[k]].class_idx;
}

namespace {

struct FeatureBank {
    uint32_t dim = 0;
    std::vector<float> rows;  // flattened
    std::unordered_map<std::string, uint32_t> index;

    std::vector<float> row(const std::string& id) const {
        auto it = index.find(id);
        if (it == index.end())
            throw InputError("feature bank: dangling reference '" + id + "'");
        const float* p = rows.data() + static_cast<size_t>(it->second) * dim;
        return std::vector<float>(p, p + dim);
    }
};

FeatureBank read_feature_bank(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("feature bank: cannot open " + path);
    char magic[5];
    is.read(magic, 5);
    if (!is || std::memcmp(magic, "CZFB1", 5) != 0)
        throw InputError("feature bank: bad magic in " + path);
    uint32_t count = 0, dim = 0;
    is.read(reinterpret_cast<char*>(&count), 4);
    is.read(reinterpret_cast<char*>(&dim), 4);
    FeatureBank bank;
    bank.dim = dim;
    bank.rows.resize(static_cast<size_t>(count) * dim);
    is.read(reinterpret_cast<char*>(bank.rows.data()),
            static_cast<std::streamsize>(bank.rows.size() * sizeof(float)));
    if (!is) throw InputError("feature bank: truncated payload in " + path);

    std::ifstream idx(path + ".idx");
    if (!idx) throw InputError("feature bank: missing index " + path + ".idx");
    std::string line;
    while (std::getline(idx, line)) {
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw InputError("feature bank index: malformed line '" + line + "'");
        const uint32_t row = static_cast<uint32_t>(std::stoul(line.substr(tab + 1)));
        if (row >= count) throw InputError("feature bank index: row out of range");
        bank.index[line.substr(0, tab)] = row;
    }
    return bank;
}

std::vector<float> parse_feature(const json& arr) {
    std::vector<float> out;
    out.reserve(arr.size());
    for (const auto& v : arr) out.push_back(v.get<float>());
    return out;
}

}  // namespace

IngestResult ingest_scenes(const std::string& scene_file,
                           const std::optional<std::string>& feature_bank,
                           int64_t min_count, const EmbeddingTable* embeddings) {
    std::ifstream is(scene_file);
    if (!is) throw InputError("ingest: cannot open " + scene_file);

    std::optional<FeatureBank> bank;
    if (feature_bank) bank = read_feature_bank(*feature_bank);

    struct RawObject {
        std::string object_id;
        std::string label;
        BBox bbox;
        std::vector<float> feature;
    };
    struct RawScene {
        std::string image_id;
        std::vector<RawObject> objects;
        std::optional<std::vector<float>> masked;
    };

    std::vector<RawScene> raw;
    std::unordered_map<std::string, int64_t> label_counts;
    int d_visual = -1;
    std::string line;
    int64_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw InputError("ingest: malformed record at line " + std::to_string(lineno) +
                             ": " + e.what());
        }
        try {
            RawScene scene;
            scene.image_id = rec.at("image_id").get<std::string>();
            for (const auto& jo : rec.at("objects")) {
                RawObject obj;
                obj.object_id = jo.at("object_id").get<std::string>();
                obj.label = jo.at("class").get<std::string>();
                const auto& bb = jo.at("bbox");
                obj.bbox = {bb.at(0).get<double>(), bb.at(1).get<double>(),
                            bb.at(2).get<double>(), bb.at(3).get<double>()};
                if (obj.bbox.w <= 0 || obj.bbox.h <= 0)
                    throw InputError("ingest: degenerate bbox at line " + std::to_string(lineno));
                if (jo.contains("feature")) {
                    obj.feature = parse_feature(jo.at("feature"));
                } else if (jo.contains("feature_ref")) {
                    if (!bank)
                        throw InputError("ingest: feature_ref without a feature bank at line " +
                                         std::to_string(lineno));
                    obj.feature = bank->row(jo.at("feature_ref").get<std::string>());
                } else {
                    throw InputError("ingest: object without feature at line " +
                                     std::to_string(lineno));
                }
                if (d_visual < 0) d_visual = static_cast<int>(obj.feature.size());
                if (static_cast<int>(obj.feature.size()) != d_visual)
                    throw InputError("ingest: feature dimension mismatch at line " +
                                     std::to_string(lineno) + " (expected " +
                                     std::to_string(d_visual) + ")");
                ++label_counts[obj.label];
                scene.objects.push_back(std::move(obj));
            }
            if (scene.objects.empty())
                throw InputError("ingest: scene with no objects at line " + std::to_string(lineno));
            std::set<std::string> ids;
            for (const auto& o : scene.objects)
                if (!ids.insert(o.object_id).second)
                    throw InputError("ingest: duplicate object_id '" + o.object_id +
                                     "' at line " + std::to_string(lineno));
            if (rec.contains("masked_scene_feature") && !rec["masked_scene_feature"].is_null()) {
                scene.masked = parse_feature(rec["masked_scene_feature"]);
                if (static_cast<int>(scene.masked->size()) != d_visual)
                    throw InputError("ingest: masked feature dimension mismatch at line " +
                                     std::to_string(lineno));
            }
            raw.push_back(std::move(scene));
        } catch (const json::exception& e) {
            throw InputError("ingest: malformed record at line " + std::to_string(lineno) +
                             ": " + e.what());
        }
    }

    // Retained classes: frequent enough and covered by the embedding table.
    std::vector<std::string> kept;
    IngestResult res;
    for (const auto& [label, count] : label_counts) {
        const bool frequent = count >= min_count;
        const bool covered = embeddings == nullptr || embeddings->has(label);
        if (frequent && covered)
            kept.push_back(label);
        else
            ++res.dropped_classes;
    }
    std::sort(kept.begin(), kept.end());

    ClassVocab vocab;
    std::unordered_map<std::string, int> idx;
    for (const auto& label : kept) {
        idx[label] = static_cast<int>(vocab.labels.size());
        vocab.labels.push_back(label);
        vocab.counts.push_back(0);
    }
    vocab.source_mask.assign(vocab.labels.size(), true);

    SceneDataset& ds = res.dataset;
    for (auto& rs : raw) {
        Scene scene;
        scene.image_id = rs.image_id;
        scene.masked_scene_feature = std::move(rs.masked);
        for (auto& ro : rs.objects) {
            auto it = idx.find(ro.label);
            if (it == idx.end()) {
                ++res.dropped_instances;
                continue;
            }
            ObjectInstance obj;
            obj.object_id = std::move(ro.object_id);
            obj.class_idx = it->second;
            obj.bbox = ro.bbox;
            obj.feature = std::move(ro.feature);
            ++vocab.counts[static_cast<size_t>(it->second)];
            scene.objects.push_back(std::move(obj));
        }
        if (scene.objects.empty()) {
            ++res.dropped_scenes;
            continue;
        }
        ds.scenes.push_back(std::move(scene));
    }
    ds.vocab = std::move(vocab);
    ds.d_visual = std::max(d_visual, 0);
    ds.partition.assign(ds.scenes.size(), -1);
    return res;
}

void split_domains(ClassVocab& vocab, double p_sup, uint64_t seed,
                   const std::vector<std::string>& forced_source) {
    if (!(p_sup > 0.0 && p_sup <= 1.0))
        throw InputError("split_domains: p_sup must be in (0,1]");
    const size_t n = vocab.size();
    const size_t n_source =
        static_cast<size_t>(std::floor(p_sup * static_cast<double>(n) + 0.5));

    std::vector<char> forced(n, 0);
    size_t n_forced = 0;
    for (const auto& label : forced_source) {
        const int i = vocab.index_of(label);
        if (i < 0) throw InputError("split_domains: forced-source label not in vocab: " + label);
        if (!forced[static_cast<size_t>(i)]) {
            forced[static_cast<size_t>(i)] = 1;
            ++n_forced;
        }
    }
    if (n_forced > n_source)
        throw InputError("split_domains: forced-source classes exceed |S| budget");

    std::vector<int> free_idx;
    for (size_t i = 0; i < n; ++i)
        if (!forced[i]) free_idx.push_back(static_cast<int>(i));
    Rng rng(seed);
    rng.shuffle(free_idx);

    vocab.source_mask.assign(n, false);
    for (size_t i = 0; i < n; ++i)
        if (forced[i]) vocab.source_mask[i] = true;
    for (size_t k = 0; k < n_source - n_forced; ++k)
        vocab.source_mask[static_cast<size_t>(free_idx[k])] = true;
}

std::vector<int> split_images(size_t n_scenes, const std::array<double, 3>& ratios,
                              uint64_t seed) {
    if (n_scenes == 0) throw InputError("split_images: empty dataset");
    double total = 0.0;
    for (double r : ratios) {
        if (r < 0.0) throw InputError("split_images: negative ratio");
        total += r;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InputError("split_images: ratios must sum to 1");

    // Largest-remainder apportionment.
    std::array<size_t, 3> counts{};
    std::array<double, 3> rem{};
    size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double exact = ratios[static_cast<size_t>(i)] * static_cast<double>(n_scenes);
        counts[static_cast<size_t>(i)] = static_cast<size_t>(std::floor(exact));
        rem[static_cast<size_t>(i)] = exact - std::floor(exact);
        assigned += counts[static_cast<size_t>(i)];
    }
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return rem[static_cast<size_t>(a)] > rem[static_cast<size_t>(b)]; });
    for (size_t k = 0; assigned < n_scenes; ++k, ++assigned)
        ++counts[static_cast<size_t>(order[k % 3])];

    std::vector<size_t> perm(n_scenes);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    rng.shuffle(perm);

    std::vector<int> part(n_scenes, 0);
    size_t pos = 0;
    for (int s = 0; s < 3; ++s)
        for (size_t k = 0; k < counts[static_cast<size_t>(s)]; ++k) part[perm[pos++]] = s;
    return part;
}

std::vector<ZslInstance> make_instances(const SceneDataset& ds, Split part,
                                        RetrievalDomain mode) {
    std::vector<ZslInstance> out;
    for (size_t si : ds.scenes_in(part)) {
        const Scene& scene = ds.scenes[si];
        for (size_t fi = 0; fi < scene.objects.size(); ++fi) {
            const int cls = scene.objects[fi].class_idx;
            const bool in_source = ds.vocab.source_mask[static_cast<size_t>(cls)];
            if (mode == RetrievalDomain::Target && in_source) continue;
            if (mode == RetrievalDomain::Source && !in_source) continue;
            ZslInstance inst;
            inst.scene = &scene;
            inst.focus = static_cast<int>(fi);
            for (size_t k = 0; k < scene.objects.size(); ++k) {
                if (k == fi) continue;
                const int c = scene.objects[k].class_idx;
                inst.add_context(k, ds.vocab.source_mask[static_cast<size_t>(c)]);
            }
            out.push_back(std::move(inst));
        }
    }
    return out;
}

// --- serialization ----------------------------------------------------------

namespace {

json feature_json(const std::vector<float>& f) {
    json arr = json::array();
    for (float v : f) arr.push_back(v);
    return arr;
}

}  // namespace

void write_scene_file(const std::string& path, const SceneDataset& ds, bool feature_refs) {
    std::ofstream os(path);
    if (!os) throw InputError("write_scene_file: cannot open " + path);
    for (const auto& scene : ds.scenes) {
        json rec;
        rec["image_id"] = scene.image_id;
        json objs = json::array();
        for (const auto& o : scene.objects) {
            json jo;
            jo["object_id"] = o.object_id;
            jo["class"] = ds.vocab.labels[static_cast<size_t>(o.class_idx)];
            jo["bbox"] = {o.bbox.x, o.bbox.y, o.bbox.w, o.bbox.h};
            if (feature_refs)
                jo["feature_ref"] = o.object_id;
            else
                jo["feature"] = feature_json(o.feature);
            objs.push_back(std::move(jo));
        }
        rec["objects"] = std::move(objs);
        if (scene.masked_scene_feature)
            rec["masked_scene_feature"] = feature_json(*scene.masked_scene_feature);
        os << rec.dump() << '\n';
    }
}

void write_feature_bank(const std::string& path, const SceneDataset& ds) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("write_feature_bank: cannot open " + path);
    uint32_t count = 0;
    for (const auto& s : ds.scenes) count += static_cast<uint32_t>(s.objects.size());
    const uint32_t dim = static_cast<uint32_t>(ds.d_visual);
    os.write("CZFB1", 5);
    os.write(reinterpret_cast<const char*>(&count), 4);
    os.write(reinterpret_cast<const char*>(&dim), 4);

    std::ofstream idx(path + ".idx");
    if (!idx) throw InputError("write_feature_bank: cannot open " + path + ".idx");
    uint32_t row = 0;
    for (const auto& s : ds.scenes) {
        for (const auto& o : s.objects) {
            os.write(reinterpret_cast<const char*>(o.feature.data()),
                     static_cast<std::streamsize>(o.feature.size() * sizeof(float)));
            idx << o.object_id << '\t' << row++ << '\n';
        }
    }
}

void write_split_file(const std::string& path, const SceneDataset& ds) {
    std::ofstream os(path);
    if (!os) throw InputError("write_split_file: cannot open " + path);
    os << "source:\n";
    for (size_t i = 0; i < ds.vocab.size(); ++i)
        if (ds.vocab.source_mask[i]) os << ds.vocab.labels[i] << '\n';
    os << "target:\n";
    for (size_t i = 0; i < ds.vocab.size(); ++i)
        if (!ds.vocab.source_mask[i]) os << ds.vocab.labels[i] << '\n';
    static const char* kSection[3] = {"train:", "val:", "test:"};
    for (int s = 0; s < 3; ++s) {
        os << kSection[s] << '\n';
        for (size_t i = 0; i < ds.scenes.size(); ++i)
            if (ds.partition[i] == s) os << ds.scenes[i].image_id << '\n';
    }
}

void read_split_file(const std::string& path, SceneDataset& ds) {
    std::ifstream is(path);
    if (!is) throw InputError("read_split_file: cannot open " + path);
    std::unordered_map<std::string, size_t> scene_idx;
    for (size_t i = 0; i < ds.scenes.size(); ++i) scene_idx[ds.scenes[i].image_id] = i;

    ds.partition.assign(ds.scenes.size(), -1);
    ds.vocab.source_mask.assign(ds.vocab.size(), false);

    std::string line, section;
    size_t n_source = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line.back() == ':') {
            section = line;
            continue;
        }
        if (section == "source:" || section == "target:") {
            const int i = ds.vocab.index_of(line);
            if (i < 0) throw InputError("split file: unknown class '" + line + "'");
            ds.vocab.source_mask[static_cast<size_t>(i)] = (section == "source:");
            n_source += (section == "source:") ? 1 : 0;
        } else if (section == "train:" || section == "val:" || section == "test:") {
            auto it = scene_idx.find(line);
            if (it == scene_idx.end()) throw InputError("split file: unknown image '" + line + "'");
            ds.partition[it->second] = section == "train:" ? 0 : (section == "val:" ? 1 : 2);
        } else {
            throw InputError("split file: line outside any section: '" + line + "'");
        }
    }
    for (int p : ds.partition)
        if (p < 0) throw InputError("split file: some scenes unassigned");
    ds.p_sup = ds.vocab.size() ? static_cast<double>(n_source) / static_cast<double>(ds.vocab.size()) : 0.0;
}

}  // namespace czsl
