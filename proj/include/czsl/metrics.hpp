#pragma once

#include <map>
#include <string>
#include <vector>

namespace czsl {

struct ClassFrSummary {
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
    size_t count = 0;
};

struct RankingReport {
    std::string mode;  // target | source | generalized
    size_t n = 0;      // candidate-set size
    std::vector<double> fr;
    double mfr = 0.0;  // percent
    std::map<int, double> recall_at;
    double mrr = 0.0;
    std::map<std::string, ClassFrSummary> per_class;
    double alpha_c = 0.0, alpha_v = 0.0, alpha_p = 0.0;
    bool oracle = false;
};

// FR = 100 * 2(r-1)/(n-1), in percent. Random ranker averages 100, perfect 0.
double first_relevant(size_t r, size_t n);

RankingReport aggregate(const std::vector<size_t>& ranks, size_t n,
                        const std::vector<int>& ks);

// Five-number summary of FR per true class, linear-interpolation quartiles.
std::map<std::string, ClassFrSummary> per_class_fr(const std::vector<std::string>& labels,
                                                   const std::vector<size_t>& ranks, size_t n);

// Rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

// Report document, schema "czr-1".
std::string report_to_json(const RankingReport& rep);
void write_report(const std::string& path, const RankingReport& rep);

}  // namespace czsl
