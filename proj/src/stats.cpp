#include "skewprune/stats.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace skewprune {

double skewness(std::span<const float> values) {
    if (values.empty()) throw std::invalid_argument("skewness: empty input");
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (float v : values) mean += v;
    mean /= n;
    double m2 = 0.0, m3 = 0.0;
    for (float v : values) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if (m2 < 1e-12) return 0.0;
    return m3 / std::pow(m2, 1.5);
}

double median(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty input");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void SkewnessReport::finalize() {
    unit_count = static_cast<int>(per_sample.size());
    medians.resize(per_sample.size());
    for (size_t u = 0; u < per_sample.size(); ++u) medians[u] = median(per_sample[u]);
}

static constexpr int kSkewSchemaVersion = 1;

void save_skewness_reports(const std::vector<SkewnessReport>& reports, const std::string& path) {
    nlohmann::json j;
    j["schema_version"] = kSkewSchemaVersion;
    j["kind"] = "skewness_report";
    auto& sites = j["sites"];
    sites = nlohmann::json::array();
    for (const auto& r : reports) {
        nlohmann::json js;
        js["site"] = r.site;
        js["unit_count"] = r.unit_count;
        js["medians"] = r.medians;
        js["per_sample"] = r.per_sample;
        sites.push_back(std::move(js));
    }
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << j.dump(1) << "\n";
}

std::vector<SkewnessReport> load_skewness_reports(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path);
    nlohmann::json j = nlohmann::json::parse(is);
    if (j.value("schema_version", -1) != kSkewSchemaVersion)
        throw std::runtime_error(path + ": unsupported skewness report schema version");
    std::vector<SkewnessReport> out;
    for (const auto& js : j.at("sites")) {
        SkewnessReport r;
        r.site = js.at("site").get<std::string>();
        r.unit_count = js.at("unit_count").get<int>();
        r.medians = js.at("medians").get<std::vector<double>>();
        if (js.contains("per_sample"))
            r.per_sample = js.at("per_sample").get<std::vector<std::vector<double>>>();
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace skewprune
