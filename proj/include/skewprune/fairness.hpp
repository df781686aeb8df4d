#pragma once

#include <array>
#include <string>
#include <vector>

namespace skewprune {

struct EvalRecord {
    int true_class = 0;
    int pred_class = 0;
    int group = 0;  // 0 = light (Fitzpatrick 1-3), 1 = dark (4-6)
};

struct GroupCounts {
    long tp = 0, fp = 0, tn = 0, fn = 0;
};

struct GroupRates {
    double tnr = 0.0, tpr = 0.0, fpr = 0.0;
};

struct FairnessReport {
    int num_classes = 0;
    // counts[k][s], rates[k][s]
    std::vector<std::array<GroupCounts, 2>> counts;
    std::vector<std::array<GroupRates, 2>> rates;
    double eopp0 = 0.0, eopp1 = 0.0, eodd = 0.0;
};

struct PerformanceReport {
    double accuracy = 0.0;  // micro
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
};

constexpr double kRateEps = 1e-9;

// One-vs-rest confusion cells for every (class, group) pair.
std::vector<std::array<GroupCounts, 2>> confusion_by_group(const std::vector<EvalRecord>& records,
                                                           int num_classes);
GroupRates rates(const GroupCounts& c);

// EOpp0 / EOpp1 / EOdd over both groups; throws if a group is absent.
FairnessReport fairness(const std::vector<EvalRecord>& records, int num_classes);
PerformanceReport performance(const std::vector<EvalRecord>& records, int num_classes);

std::string fairness_to_text(const FairnessReport& f, const PerformanceReport& p);

}  // namespace skewprune
