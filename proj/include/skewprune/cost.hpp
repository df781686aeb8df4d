#pragma once

#include "skewprune/model.hpp"

#include <cstdint>
#include <string>

namespace skewprune {

// Conventions calibrated against reference profiles: 1 MAC counted as
// 1 FLOP (many tools report 2x this) and memory = parameter bytes only.
struct CostReport {
    int64_t params = 0;
    int64_t flops = 0;     // MACs per forward pass at the stated input shape
    double memory_mib = 0; // params * 4 / 2^20
    int best_epoch = -1;   // optional, filled from a training log
};

int64_t count_params(const ModelSpec& model);
int64_t count_flops(const ModelSpec& model, int image_size = 0);  // 0 = model's own size
double memory_footprint_mib(const ModelSpec& model);
CostReport cost_report(const ModelSpec& model, int image_size = 0);

std::string cost_to_text(const CostReport& c);

}  // namespace skewprune
