#include "skewprune/fairness.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace skewprune {

std::vector<std::array<GroupCounts, 2>> confusion_by_group(const std::vector<EvalRecord>& records,
                                                           int num_classes) {
    if (records.empty()) throw std::invalid_argument("confusion_by_group: no records");
    std::vector<std::array<GroupCounts, 2>> counts(static_cast<size_t>(num_classes));
    for (const EvalRecord& r : records) {
        if (r.true_class < 0 || r.true_class >= num_classes || r.pred_class < 0 ||
            r.pred_class >= num_classes)
            throw std::out_of_range("confusion_by_group: class out of range");
        if (r.group != 0 && r.group != 1)
            throw std::out_of_range("confusion_by_group: group must be 0 or 1");
        for (int k = 0; k < num_classes; ++k) {
            GroupCounts& c = counts[static_cast<size_t>(k)][static_cast<size_t>(r.group)];
            const bool pos = r.true_class == k;
            const bool pred_pos = r.pred_class == k;
            if (pos && pred_pos) ++c.tp;
            else if (pos && !pred_pos) ++c.fn;
            else if (!pos && pred_pos) ++c.fp;
            else ++c.tn;
        }
    }
    return counts;
}

GroupRates rates(const GroupCounts& c) {
    GroupRates r;
    r.tnr = static_cast<double>(c.tn) / (static_cast<double>(c.tn) + static_cast<double>(c.fp) + kRateEps);
    r.tpr = static_cast<double>(c.tp) / (static_cast<double>(c.tp) + static_cast<double>(c.fn) + kRateEps);
    r.fpr = static_cast<double>(c.fp) / (static_cast<double>(c.fp) + static_cast<double>(c.tn) + kRateEps);
    return r;
}

FairnessReport fairness(const std::vector<EvalRecord>& records, int num_classes) {
    bool has[2] = {false, false};
    for (const EvalRecord& r : records)
        if (r.group == 0 || r.group == 1) has[r.group] = true;
    if (!has[0] || !has[1])
        throw std::invalid_argument("fairness: both groups must be present");

    FairnessReport rep;
    rep.num_classes = num_classes;
    rep.counts = confusion_by_group(records, num_classes);
    rep.rates.resize(static_cast<size_t>(num_classes));
    for (int k = 0; k < num_classes; ++k) {
        const auto& ck = rep.counts[static_cast<size_t>(k)];
        rep.rates[static_cast<size_t>(k)] = {rates(ck[0]), rates(ck[1])};
        const GroupRates& r0 = rep.rates[static_cast<size_t>(k)][0];
        const GroupRates& r1 = rep.rates[static_cast<size_t>(k)][1];
        rep.eopp0 += std::abs(r0.tnr - r1.tnr);
        rep.eopp1 += std::abs(r0.tpr - r1.tpr);
        rep.eodd += std::abs(r0.tpr - r1.tpr) + std::abs(r0.fpr - r1.fpr);
    }
    rep.eopp0 /= num_classes;
    rep.eopp1 /= num_classes;
    rep.eodd /= num_classes;
    return rep;
}

PerformanceReport performance(const std::vector<EvalRecord>& records, int num_classes) {
    if (records.empty()) throw std::invalid_argument("performance: no records");
    std::vector<long> tp(static_cast<size_t>(num_classes)), fp(static_cast<size_t>(num_classes)),
        fn(static_cast<size_t>(num_classes));
    long correct = 0;
    for (const EvalRecord& r : records) {
        if (r.true_class == r.pred_class) {
            ++correct;
            ++tp[static_cast<size_t>(r.true_class)];
        } else {
            ++fn[static_cast<size_t>(r.true_class)];
            ++fp[static_cast<size_t>(r.pred_class)];
        }
    }
    PerformanceReport rep;
    rep.accuracy = static_cast<double>(correct) / static_cast<double>(records.size());
    for (int k = 0; k < num_classes; ++k) {
        const double p = static_cast<double>(tp[static_cast<size_t>(k)]) /
                         (static_cast<double>(tp[static_cast<size_t>(k)] + fp[static_cast<size_t>(k)]) + kRateEps);
        const double r = static_cast<double>(tp[static_cast<size_t>(k)]) /
                         (static_cast<double>(tp[static_cast<size_t>(k)] + fn[static_cast<size_t>(k)]) + kRateEps);
        rep.macro_precision += p;
        rep.macro_recall += r;
        rep.macro_f1 += 2.0 * p * r / (p + r + kRateEps);
    }
    rep.macro_precision /= num_classes;
    rep.macro_recall /= num_classes;
    rep.macro_f1 /= num_classes;
    return rep;
}

std::string fairness_to_text(const FairnessReport& f, const PerformanceReport& p) {
    std::ostringstream os;
    os << "accuracy\t" << p.accuracy << "\n"
       << "macro_precision\t" << p.macro_precision << "\n"
       << "macro_recall\t" << p.macro_recall << "\n"
       << "macro_f1\t" << p.macro_f1 << "\n"
       << "eopp0\t" << f.eopp0 << "\n"
       << "eopp1\t" << f.eopp1 << "\n"
       << "eodd\t" << f.eodd << "\n";
    for (int k = 0; k < f.num_classes; ++k)
        for (int s = 0; s < 2; ++s) {
            const GroupCounts& c = f.counts[static_cast<size_t>(k)][static_cast<size_t>(s)];
            const GroupRates& r = f.rates[static_cast<size_t>(k)][static_cast<size_t>(s)];
            os << "class" << k << ".group" << s << "\ttp=" << c.tp << " fp=" << c.fp
               << " tn=" << c.tn << " fn=" << c.fn << " tnr=" << r.tnr << " tpr=" << r.tpr
               << " fpr=" << r.fpr << "\n";
        }
    return os.str();
}

}  // namespace skewprune
