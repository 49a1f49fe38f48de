#include "czsl/oracles.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace czsl {

uint64_t CooccurrenceTable::pair_count(int c, int i) const {
    const auto a = static_cast<uint32_t>(std::min(c, i));
    const auto b = static_cast<uint32_t>(std::max(c, i));
    auto it = pairs.find({a, b});
    return it == pairs.end() ? 0 : it->second;
}

void CooccurrenceTable::add_pair(int c, int i, uint64_t n) {
    const auto a = static_cast<uint32_t>(std::min(c, i));
    const auto b = static_cast<uint32_t>(std::max(c, i));
    pairs[{a, b}] += n;
}

CooccurrenceTable build_image_cooc(const SceneDataset& ds, bool oracle_flag) {
    if (!oracle_flag)
        throw InputError("build_image_cooc: oracle flag required (reads target labels)");
    CooccurrenceTable table;
    table.marginal.assign(ds.vocab.size(), 0);
    table.units = ds.scenes.size();
    for (const auto& scene : ds.scenes) {
        std::set<int> present;
        for (const auto& obj : scene.objects) present.insert(obj.class_idx);
        for (auto it = present.begin(); it != present.end(); ++it) {
            ++table.marginal[static_cast<size_t>(*it)];
            for (auto jt = std::next(it); jt != present.end(); ++jt)
                table.add_pair(*it, *jt);
        }
    }
    return table;
}

double p_cooc(const CooccurrenceTable& table, int c, int i) {
    const uint64_t mc = table.marginal.at(static_cast<size_t>(c));
    const uint64_t mi = table.marginal.at(static_cast<size_t>(i));
    if (mc == 0 || mi == 0) throw InputError("p_cooc: zero marginal count");
    return static_cast<double>(table.pair_count(c, i)) * static_cast<double>(table.units) /
           (static_cast<double>(mc) * static_cast<double>(mi));
}

double true_prior_logscore(const CooccurrenceTable& table, int i, double eps) {
    const double num = static_cast<double>(table.marginal.at(static_cast<size_t>(i))) + eps;
    const double den = static_cast<double>(table.units) +
                       eps * static_cast<double>(table.marginal.size());
    return std::log(num / den);
}

CooccurrenceTable build_text_cooc(const std::string& token_stream_path, int window,
                                  const ClassVocab& vocab) {
    std::ifstream is(token_stream_path);
    if (!is) throw InputError("build_text_cooc: cannot open " + token_stream_path);
    std::unordered_map<std::string, int> idx;
    for (size_t i = 0; i < vocab.size(); ++i) idx[vocab.labels[i]] = static_cast<int>(i);

    // Token ids; -1 for out-of-vocab tokens (window filler only).
    std::vector<int> stream;
    std::string tok;
    while (is >> tok) {
        auto it = idx.find(tok);
        stream.push_back(it == idx.end() ? -1 : it->second);
    }

    CooccurrenceTable table;
    table.marginal.assign(vocab.size(), 0);
    if (stream.empty()) return table;

    const size_t w = static_cast<size_t>(std::max(window, 1));
    const size_t n_windows = stream.size() <= w ? 1 : stream.size() - w + 1;
    table.units = n_windows;
    for (size_t start = 0; start < n_windows; ++start) {
        const size_t end = std::min(stream.size(), start + w);
        std::set<int> present;
        for (size_t k = start; k < end; ++k)
            if (stream[k] >= 0) present.insert(stream[k]);
        for (auto it = present.begin(); it != present.end(); ++it) {
            ++table.marginal[static_cast<size_t>(*it)];
            for (auto jt = std::next(it); jt != present.end(); ++jt)
                table.add_pair(*it, *jt);
        }
    }
    return table;
}

double visual_bayes_logscore(const CooccurrenceTable& table, const ZslInstance& inst,
                             int class_idx, VisualScorer* visual, const PairedEmbeddings& emb,
                             double alpha_v, double alpha_p, double eps) {
    if (table.marginal.at(static_cast<size_t>(class_idx)) == 0)
        throw InputError("visual_bayes_logscore: class unseen in co-occurrence table");
    double score = 0.0;
    for (size_t k = 0; k < inst.context_size(); ++k) {
        const int c = inst.context_label_oracle(k);
        score += std::log(p_cooc(table, c, class_idx) + eps);
    }
    if (visual && alpha_v != 0.0)
        score += alpha_v *
                 visual->logscore(inst.focus_object().feature, emb.of(class_idx));
    if (alpha_p != 0.0) {
        const double p_star = static_cast<double>(table.marginal[static_cast<size_t>(class_idx)]) /
                              static_cast<double>(table.units);
        score += alpha_p * std::log(p_star);
    }
    return score;
}

namespace {

template <class T>
void write_pod(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw InputError("cooc table: truncated file");
    return v;
}

}  // namespace

void save_cooc(const std::string& path, const CooccurrenceTable& table) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("save_cooc: cannot open " + path);
    os.write("CZCT1", 5);
    write_pod<uint32_t>(os, static_cast<uint32_t>(table.marginal.size()));
    write_pod<uint64_t>(os, table.units);
    for (uint64_t m : table.marginal) write_pod<uint64_t>(os, m);
    write_pod<uint32_t>(os, static_cast<uint32_t>(table.pairs.size()));
    for (const auto& [key, n] : table.pairs) {
        write_pod<uint32_t>(os, key.first);
        write_pod<uint32_t>(os, key.second);
        write_pod<uint64_t>(os, n);
    }
}

CooccurrenceTable load_cooc(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("load_cooc: cannot open " + path);
    char magic[5];
    is.read(magic, 5);
    if (!is || std::memcmp(magic, "CZCT1", 5) != 0)
        throw InputError("load_cooc: bad magic in " + path);
    CooccurrenceTable table;
    const uint32_t n = read_pod<uint32_t>(is);
    table.units = read_pod<uint64_t>(is);
    table.marginal.resize(n);
    for (uint32_t i = 0; i < n; ++i) table.marginal[i] = read_pod<uint64_t>(is);
    const uint32_t np = read_pod<uint32_t>(is);
    for (uint32_t k = 0; k < np; ++k) {
        const uint32_t a = read_pod<uint32_t>(is);
        const uint32_t b = read_pod<uint32_t>(is);
        const uint64_t cnt = read_pod<uint64_t>(is);
        table.pairs[{a, b}] = cnt;
    }
    return table;
}

}  // namespace czsl
