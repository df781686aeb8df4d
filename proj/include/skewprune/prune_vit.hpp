#pragma once

#include "skewprune/model.hpp"
#include "skewprune/prune_cnn.hpp"

#include <vector>

namespace skewprune {

struct HeadKeepSet {
    int block = 0;
    std::vector<int> heads;  // strictly increasing, non-empty
};

enum class FineTune { None, Full, PartialFreezePatchEmbed };

// One row of the six-pattern experiment grid.
struct PruningPattern {
    int id = 1;
    bool patch_prune_site1 = false;  // patch-embedding channels
    bool patch_prune_site2 = false;  // first encoder block internal channels
    bool head_prune = false;
    FineTune fine_tune = FineTune::None;

    static PruningPattern from_id(int id);
};

// Embedding-channel pruning at the patch-embed conv. Slices the conv
// filters, class token, position embedding and the first block's q/k/v in
// and out channels to K; the attention skip restores dim d via the keep-set
// pad. Heads are re-partitioned to floor(|K|/n_h) widths, remainder to the
// last head.
ModelSpec prune_patch_embedding(const ModelSpec& model, const KeepIndexSet& keep);

// Same surgery applied to one block's internal (pre-W^O) channel space.
ModelSpec prune_block_channels(const ModelSpec& model, int block, const KeepIndexSet& keep);

// Median-positive rule per block over attention-map skewness reports
// (sites "blk{b}.heads"); singleton fallback per block.
std::vector<HeadKeepSet> select_keep_heads(const std::vector<SkewnessReport>& reports);

// Removes pruned heads' q/k/v rows and W^O columns; block output dim is
// preserved by the W^O output side.
ModelSpec prune_heads(const ModelSpec& model, const std::vector<HeadKeepSet>& keeps);

struct PatternResult {
    ModelSpec model;
    nlohmann::json provenance;  // also embedded in model.metadata
};

PatternResult apply_pattern(const ModelSpec& model, const PruningPattern& pattern,
                            const std::vector<Tensor>& images);

// Parameter names the Partial fine-tune stage freezes.
std::vector<std::string> patch_embed_param_names();

}  // namespace skewprune
