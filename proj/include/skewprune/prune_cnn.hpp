#pragma once

#include "skewprune/model.hpp"
#include "skewprune/stats.hpp"

#include <map>
#include <string>
#include <vector>

namespace skewprune {

// Sorted, deduplicated retained indices for one prunable site.
struct KeepIndexSet {
    std::string site;
    std::vector<int> indices;  // strictly increasing, non-empty
};

// Median-positive keep rule; falls back to the single best unit when no
// median is positive so the layer never goes dead.
KeepIndexSet select_keep_channels(const SkewnessReport& report);

enum class PruneMode { Strict, Block };

// Physical filter removal. Strict mode prunes only the conv feeding each
// pool (exactly masking-equivalent); block mode additionally drops the same
// filter indices from every conv in the block, which requires equal widths.
// Downstream in-channel slices and the classifier are rebuilt either way.
ModelSpec prune_filters(const ModelSpec& model,
                        const std::map<std::string, KeepIndexSet>& keep,
                        PruneMode mode);

}  // namespace skewprune
