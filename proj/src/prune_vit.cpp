#include "skewprune/prune_vit.hpp"

#include "skewprune/slicing.hpp"

#include <algorithm>

namespace skewprune {

PruningPattern PruningPattern::from_id(int id) {
    switch (id) {
        case 1: return {1, false, false, false, FineTune::None};
        case 2: return {2, true, false, false, FineTune::Full};
        case 3: return {3, true, true, false, FineTune::Full};
        case 4: return {4, false, false, true, FineTune::Full};
        case 5: return {5, true, false, true, FineTune::Full};
        case 6: return {6, true, false, true, FineTune::PartialFreezePatchEmbed};
        default: throw std::invalid_argument("pattern id must be 1..6, got " + std::to_string(id));
    }
}

std::vector<std::string> patch_embed_param_names() {
    return {"patch.weight", "patch.bias", "patch.cls", "patch.pos"};
}

namespace {

size_t find_node(const ModelSpec& m, LayerKind kind, int ordinal = 0) {
    int seen = 0;
    for (size_t i = 0; i < m.nodes.size(); ++i)
        if (m.nodes[i].kind == kind && seen++ == ordinal) return i;
    throw std::runtime_error("model has no " + layer_kind_name(kind) + " node #" + std::to_string(ordinal));
}

std::vector<int> floor_partition(int total, int heads) {
    if (total < heads)
        throw std::invalid_argument("pruned width " + std::to_string(total) +
                                    " is smaller than head count " + std::to_string(heads));
    std::vector<int> dims(static_cast<size_t>(heads), total / heads);
    dims.back() += total % heads;  // remainder channels go to the last head
    return dims;
}

// Slice the q/k/v output rows and W^O input columns of one block to `cols`
// (indices into the current concatenated head space) and re-partition heads.
void slice_attention_space(ModelSpec& m, size_t node_idx, const std::vector<int>& cols,
                           bool repartition) {
    LayerNode& blk = m.nodes[node_idx];
    auto w = [&](int i) -> Tensor& { return m.weights.at(blk.params.at(static_cast<size_t>(i))); };
    for (int i : {2, 4, 6}) {  // wq, wk, wv
        w(i) = take_axis0(w(i), cols);
        w(i + 1) = take_axis0(w(i + 1), cols);
    }
    w(8) = take_axis1(w(8), cols);  // wo
    if (repartition)
        blk.head_dims = floor_partition(static_cast<int>(cols.size()),
                                        static_cast<int>(blk.head_dims.size()));
}

}  // namespace

ModelSpec prune_patch_embedding(const ModelSpec& model, const KeepIndexSet& keep) {
    ModelSpec out = model;
    const size_t pe_idx = find_node(out, LayerKind::PatchEmbed);
    const size_t blk_idx = find_node(out, LayerKind::EncoderBlock);
    LayerNode& pe = out.nodes[pe_idx];
    LayerNode& blk = out.nodes[blk_idx];

    const int d = out.weights.at(pe.params[0]).dim(0);
    check_keep(keep.indices, d, "prune_patch_embedding");
    const std::vector<int>& K = keep.indices;

    out.weights.at(pe.params[0]) = take_axis0(out.weights.at(pe.params[0]), K);  // conv filters
    out.weights.at(pe.params[1]) = take_axis0(out.weights.at(pe.params[1]), K);
    out.weights.at(pe.params[2]) = take_axis0(out.weights.at(pe.params[2]), K);  // cls token
    out.weights.at(pe.params[3]) = take_axis1(out.weights.at(pe.params[3]), K);  // pos embed

    auto w = [&](int i) -> Tensor& { return out.weights.at(blk.params.at(static_cast<size_t>(i))); };
    w(0) = take_axis0(w(0), K);  // ln1 gamma
    w(1) = take_axis0(w(1), K);  // ln1 beta
    for (int i : {2, 4, 6}) w(i) = take_axis1(w(i), K);  // q/k/v input slices
    slice_attention_space(out, blk_idx, K, /*repartition=*/true);
    blk.residual_keep = K;  // skip path zero-pads |K| back to d

    out.metadata["keep_sets"]["patch_embed"] = K;
    return out;
}

ModelSpec prune_block_channels(const ModelSpec& model, int block, const KeepIndexSet& keep) {
    ModelSpec out = model;
    const size_t blk_idx = find_node(out, LayerKind::EncoderBlock, block);
    const LayerNode& blk = out.nodes[blk_idx];
    int cat = 0;
    for (int hd : blk.head_dims) cat += hd;
    check_keep(keep.indices, cat, "prune_block_channels");
    slice_attention_space(out, blk_idx, keep.indices, /*repartition=*/true);
    out.metadata["keep_sets"]["blk" + std::to_string(block) + ".inner"] = keep.indices;
    validate(out);
    return out;
}

std::vector<HeadKeepSet> select_keep_heads(const std::vector<SkewnessReport>& reports) {
    std::vector<HeadKeepSet> out;
    for (const SkewnessReport& r : reports) {
        const size_t pos = r.site.find("blk");
        const size_t dot = r.site.find('.');
        if (pos != 0 || dot == std::string::npos)
            throw std::invalid_argument("select_keep_heads: unexpected site id " + r.site);
        HeadKeepSet k;
        k.block = std::stoi(r.site.substr(3, dot - 3));
        for (int u = 0; u < r.unit_count; ++u)
            if (r.medians[static_cast<size_t>(u)] > 0.0) k.heads.push_back(u);
        if (k.heads.empty()) {
            int best = 0;
            for (int u = 1; u < r.unit_count; ++u)
                if (r.medians[static_cast<size_t>(u)] > r.medians[static_cast<size_t>(best)]) best = u;
            k.heads.push_back(best);
        }
        out.push_back(std::move(k));
    }
    return out;
}

ModelSpec prune_heads(const ModelSpec& model, const std::vector<HeadKeepSet>& keeps) {
    ModelSpec out = model;
    for (const HeadKeepSet& hk : keeps) {
        const size_t blk_idx = find_node(out, LayerKind::EncoderBlock, hk.block);
        LayerNode& blk = out.nodes[blk_idx];
        check_keep(hk.heads, static_cast<int>(blk.head_dims.size()), "prune_heads");
        std::vector<int> offsets(blk.head_dims.size() + 1, 0);
        for (size_t i = 0; i < blk.head_dims.size(); ++i)
            offsets[i + 1] = offsets[i] + blk.head_dims[i];
        std::vector<int> cols, new_dims;
        for (int h : hk.heads) {
            for (int c = offsets[static_cast<size_t>(h)]; c < offsets[static_cast<size_t>(h) + 1]; ++c)
                cols.push_back(c);
            new_dims.push_back(blk.head_dims[static_cast<size_t>(h)]);
        }
        slice_attention_space(out, blk_idx, cols, /*repartition=*/false);
        blk.head_dims = new_dims;
        out.metadata["keep_sets"]["blk" + std::to_string(hk.block) + ".heads"] = hk.heads;
    }
    validate(out);
    return out;
}

namespace {

// Keep rule with a width floor: when fewer than min_size medians are
// positive, extend with the best remaining medians so the floor-partition
// of heads stays well formed.
KeepIndexSet select_with_floor(const SkewnessReport& report, int min_size) {
    KeepIndexSet keep = select_keep_channels(report);
    if (static_cast<int>(keep.indices.size()) < min_size) {
        std::vector<int> order(static_cast<size_t>(report.unit_count));
        for (int u = 0; u < report.unit_count; ++u) order[static_cast<size_t>(u)] = u;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return report.medians[static_cast<size_t>(a)] > report.medians[static_cast<size_t>(b)];
        });
        std::set<int> chosen(keep.indices.begin(), keep.indices.end());
        for (int u : order) {
            if (static_cast<int>(chosen.size()) >= min_size) break;
            chosen.insert(u);
        }
        keep.indices.assign(chosen.begin(), chosen.end());
    }
    return keep;
}

}  // namespace

PatternResult apply_pattern(const ModelSpec& model, const PruningPattern& pattern,
                            const std::vector<Tensor>& images) {
    const bool needs_data = pattern.patch_prune_site1 || pattern.patch_prune_site2 || pattern.head_prune;
    if (needs_data && images.empty())
        throw std::invalid_argument("apply_pattern: pattern " + std::to_string(pattern.id) +
                                    " requires a validation set");
    const int n_heads = model.metadata.at("heads").get<int>();

    ModelSpec cur = model;
    nlohmann::json prov;
    prov["pattern"] = pattern.id;
    prov["name"] = pattern.id == 1 ? "vanilla" : "skew-prune";
    prov["sites"] = nlohmann::json::array();

    if (pattern.patch_prune_site1) {
        auto reports = collect_skewness(cur, images, SiteKind::PatchEmbed);
        KeepIndexSet keep = select_with_floor(reports.at(0), n_heads);
        cur = prune_patch_embedding(cur, keep);
        prov["sites"].push_back({{"site", "patch_embed"},
                                 {"kept", keep.indices},
                                 {"units", reports.at(0).unit_count}});
    }
    if (pattern.patch_prune_site2) {
        auto reports = collect_skewness(cur, images, SiteKind::BlockInner);
        const SkewnessReport& r0 = reports.at(0);  // block 0
        KeepIndexSet keep = select_with_floor(r0, n_heads);
        cur = prune_block_channels(cur, 0, keep);
        prov["sites"].push_back({{"site", r0.site}, {"kept", keep.indices}, {"units", r0.unit_count}});
    }
    if (pattern.head_prune) {
        auto reports = collect_skewness(cur, images, SiteKind::Head);
        auto keeps = select_keep_heads(reports);
        cur = prune_heads(cur, keeps);
        for (size_t i = 0; i < keeps.size(); ++i)
            prov["sites"].push_back({{"site", "blk" + std::to_string(keeps[i].block) + ".heads"},
                                     {"kept", keeps[i].heads},
                                     {"units", reports[i].unit_count}});
    }

    prov["fine_tune"] = pattern.fine_tune == FineTune::None ? "none"
                        : pattern.fine_tune == FineTune::Full ? "full"
                                                              : "partial";
    prov["freeze"] = pattern.fine_tune == FineTune::PartialFreezePatchEmbed
                         ? patch_embed_param_names()
                         : std::vector<std::string>{};
    cur.metadata["provenance"] = prov;
    validate(cur);
    return {std::move(cur), std::move(prov)};
}

}  // namespace skewprune
