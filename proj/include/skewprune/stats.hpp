#pragma once

#include <span>
#include <string>
#include <vector>

namespace skewprune {

// Fisher-Pearson moment coefficient g1 = m3 / m2^(3/2) with population
// (biased) central moments. Returns 0 when m2 < 1e-12 (zero-variance
// convention: a flat map carries no information).
double skewness(std::span<const float> values);

// Exact middle order statistic; mean of the two middle values for even n.
double median(std::span<const double> values);

// Per-site skewness accumulator: s[u][n] is the skewness of unit u's
// flattened map on validation sample n, in dataset order.
struct SkewnessReport {
    std::string site;
    int unit_count = 0;
    std::vector<std::vector<double>> per_sample;  // [unit][sample]
    std::vector<double> medians;                  // [unit]

    void finalize();  // recompute medians from per_sample
};

void save_skewness_reports(const std::vector<SkewnessReport>& reports, const std::string& path);
std::vector<SkewnessReport> load_skewness_reports(const std::string& path);

}  // namespace skewprune
