#include "czsl/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "czsl/checkpoint.hpp"

namespace czsl {

const Vec& EmbeddingTable::get(const std::string& label) const {
    auto it = vectors.find(label);
    if (it == vectors.end()) throw InputError("embedding: no vector for label '" + label + "'");
    return it->second;
}

EmbeddingTable load_embeddings(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InputError("embeddings: cannot open " + path);
    std::string line;
    if (!std::getline(is, line)) throw InputError("embeddings: empty file " + path);
    std::istringstream header(line);
    long long n = -1, d = -1;
    if (!(header >> n >> d) || n < 0 || d <= 0)
        throw InputError("embeddings: bad header '" + line + "' in " + path);

    EmbeddingTable table;
    table.dim = static_cast<int>(d);
    long long lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string token;
        ls >> token;
        Vec v;
        v.reserve(static_cast<size_t>(d));
        double x;
        while (ls >> x) v.push_back(x);
        if (static_cast<long long>(v.size()) != d)
            throw InputError("embeddings: line " + std::to_string(lineno) + ": expected " +
                             std::to_string(d) + " floats, got " + std::to_string(v.size()));
        if (!table.vectors.emplace(token, std::move(v)).second)
            throw InputError("embeddings: duplicate token '" + token + "' at line " +
                             std::to_string(lineno));
    }
    if (static_cast<long long>(table.vectors.size()) != n)
        throw InputError("embeddings: header declares " + std::to_string(n) + " entries, file has " +
                         std::to_string(table.vectors.size()));
    return table;
}

void save_embeddings(const std::string& path, const EmbeddingTable& table) {
    std::ofstream os(path);
    if (!os) throw InputError("embeddings: cannot open for write " + path);
    os << table.vectors.size() << ' ' << table.dim << '\n';
    os << std::setprecision(9);
    std::vector<std::string> tokens;
    tokens.reserve(table.vectors.size());
    for (const auto& kv : table.vectors) tokens.push_back(kv.first);
    std::sort(tokens.begin(), tokens.end());
    for (const auto& token : tokens) {
        os << token;
        for (double x : table.vectors.at(token)) os << ' ' << x;
        os << '\n';
    }
}

double cosine(const Vec& a, const Vec& b) {
    const double na = norm(a), nb = norm(b);
    if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine: zero-norm input");
    return dot(a, b) / (na * nb);
}

}  // namespace czsl
