#include "czsl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "czsl/checkpoint.hpp"

namespace czsl {

double first_relevant(size_t r, size_t n) {
    if (n < 2) throw std::invalid_argument("first_relevant: need at least 2 candidates");
    if (r < 1 || r > n) throw std::invalid_argument("first_relevant: rank out of range");
    return 100.0 * 2.0 * static_cast<double>(r - 1) / static_cast<double>(n - 1);
}

RankingReport aggregate(const std::vector<size_t>& ranks, size_t n,
                        const std::vector<int>& ks) {
    if (ranks.empty()) throw std::invalid_argument("aggregate: empty input");
    RankingReport rep;
    rep.n = n;
    rep.fr.reserve(ranks.size());
    double sum_fr = 0.0, sum_rr = 0.0;
    for (size_t r : ranks) {
        const double fr = first_relevant(r, n);
        rep.fr.push_back(fr);
        sum_fr += fr;
        sum_rr += 1.0 / static_cast<double>(r);
    }
    rep.mfr = sum_fr / static_cast<double>(ranks.size());
    rep.mrr = sum_rr / static_cast<double>(ranks.size());
    for (int k : ks) {
        size_t hits = 0;
        for (size_t r : ranks)
            if (r <= static_cast<size_t>(k)) ++hits;
        rep.recall_at[k] = static_cast<double>(hits) / static_cast<double>(ranks.size());
    }
    return rep;
}

namespace {

// Linear-interpolation quantile on a sorted sample.
double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.size() == 1) return sorted[0];
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - std::floor(pos);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

std::vector<double> fractional_ranks(const std::vector<double>& x) {
    const size_t n = x.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

std::map<std::string, ClassFrSummary> per_class_fr(const std::vector<std::string>& labels,
                                                   const std::vector<size_t>& ranks, size_t n) {
    if (labels.size() != ranks.size())
        throw std::invalid_argument("per_class_fr: size mismatch");
    std::map<std::string, std::vector<double>> grouped;
    for (size_t i = 0; i < labels.size(); ++i)
        grouped[labels[i]].push_back(first_relevant(ranks[i], n));
    std::map<std::string, ClassFrSummary> out;
    for (auto& [label, frs] : grouped) {
        std::sort(frs.begin(), frs.end());
        ClassFrSummary s;
        s.count = frs.size();
        s.min = frs.front();
        s.max = frs.back();
        s.q1 = quantile(frs, 0.25);
        s.median = quantile(frs, 0.5);
        s.q3 = quantile(frs, 0.75);
        out[label] = s;
    }
    return out;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("spearman: need equal lengths >= 2");
    const auto rx = fractional_ranks(x);
    const auto ry = fractional_ranks(y);
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        throw std::invalid_argument("spearman: zero variance in ranks");
    return sxy / std::sqrt(sxx * syy);
}

std::string report_to_json(const RankingReport& rep) {
    nlohmann::ordered_json j;
    j["schema"] = "czr-1";
    j["mode"] = rep.mode;
    j["n"] = rep.n;
    j["count"] = rep.fr.size();
    // MFR reported in percent, 2 decimals.
    j["mfr"] = std::round(rep.mfr * 100.0) / 100.0;
    nlohmann::ordered_json rec;
    for (const auto& [k, v] : rep.recall_at) rec[std::to_string(k)] = v;
    j["recall"] = std::move(rec);
    j["mrr"] = rep.mrr;
    j["calibration"] = {{"alpha_c", rep.alpha_c}, {"alpha_v", rep.alpha_v}, {"alpha_p", rep.alpha_p}};
    j["oracle"] = rep.oracle;
    j["quartile_rule"] = "linear-interpolation";
    nlohmann::ordered_json pc;
    // Classes sorted by median FR.
    std::vector<std::pair<std::string, ClassFrSummary>> sorted(rep.per_class.begin(),
                                                               rep.per_class.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        return a.second.median < b.second.median;
    });
    for (const auto& [label, s] : sorted) {
        pc[label] = {{"min", s.min}, {"q1", s.q1},   {"median", s.median},
                     {"q3", s.q3},   {"max", s.max}, {"count", s.count}};
    }
    j["per_class"] = std::move(pc);
    return j.dump(2);
}

void write_report(const std::string& path, const RankingReport& rep) {
    std::ofstream os(path);
    if (!os) throw InputError("write_report: cannot open " + path);
    os << report_to_json(rep) << '\n';
}

}  // namespace czsl
