#include "skewprune/prune_cnn.hpp"

#include "skewprune/slicing.hpp"

#include <algorithm>

namespace skewprune {

void check_keep(const std::vector<int>& keep, int axis_size, const char* what) {
    if (keep.empty()) throw std::invalid_argument(std::string(what) + ": empty keep set");
    for (size_t i = 0; i < keep.size(); ++i) {
        if (keep[i] < 0 || keep[i] >= axis_size)
            throw std::out_of_range(std::string(what) + ": keep index " + std::to_string(keep[i]) +
                                    " out of range for size " + std::to_string(axis_size));
        if (i > 0 && keep[i] <= keep[i - 1])
            throw std::invalid_argument(std::string(what) + ": keep indices must be strictly increasing");
    }
}

Tensor take_axis0(const Tensor& t, const std::vector<int>& keep) {
    check_keep(keep, t.dim(0), "take_axis0");
    const int64_t inner = t.numel() / t.dim(0);
    std::vector<int> shape = t.shape;
    shape[0] = static_cast<int>(keep.size());
    Tensor out(shape);
    for (size_t i = 0; i < keep.size(); ++i)
        std::copy(t.data.begin() + keep[i] * inner, t.data.begin() + (keep[i] + 1) * inner,
                  out.data.begin() + static_cast<int64_t>(i) * inner);
    return out;
}

Tensor take_axis1(const Tensor& t, const std::vector<int>& keep) {
    if (t.ndim() < 2) throw std::invalid_argument("take_axis1: tensor rank must be >= 2");
    check_keep(keep, t.dim(1), "take_axis1");
    int64_t inner = 1;
    for (int i = 2; i < t.ndim(); ++i) inner *= t.dim(i);
    std::vector<int> shape = t.shape;
    shape[1] = static_cast<int>(keep.size());
    Tensor out(shape);
    const int A = t.dim(0), B = t.dim(1);
    for (int a = 0; a < A; ++a)
        for (size_t i = 0; i < keep.size(); ++i)
            std::copy(t.data.begin() + (static_cast<int64_t>(a) * B + keep[i]) * inner,
                      t.data.begin() + (static_cast<int64_t>(a) * B + keep[i] + 1) * inner,
                      out.data.begin() + (static_cast<int64_t>(a) * keep.size() + i) * inner);
    return out;
}

Tensor take_cols_grouped(const Tensor& w, const std::vector<int>& keep_channels, int group) {
    if (w.ndim() != 2) throw std::invalid_argument("take_cols_grouped: weight must be 2D");
    if (w.dim(1) % group != 0) throw std::invalid_argument("take_cols_grouped: group size mismatch");
    check_keep(keep_channels, w.dim(1) / group, "take_cols_grouped");
    std::vector<int> cols;
    cols.reserve(keep_channels.size() * static_cast<size_t>(group));
    for (int c : keep_channels)
        for (int g = 0; g < group; ++g) cols.push_back(c * group + g);
    Tensor out({w.dim(0), static_cast<int>(cols.size())});
    for (int o = 0; o < w.dim(0); ++o)
        for (size_t i = 0; i < cols.size(); ++i)
            out.data[static_cast<size_t>(o) * cols.size() + i] =
                w.data[static_cast<size_t>(o) * w.dim(1) + cols[i]];
    return out;
}

KeepIndexSet select_keep_channels(const SkewnessReport& report) {
    KeepIndexSet keep;
    keep.site = report.site;
    for (int u = 0; u < report.unit_count; ++u)
        if (report.medians[static_cast<size_t>(u)] > 0.0) keep.indices.push_back(u);
    if (keep.indices.empty()) {
        int best = 0;
        for (int u = 1; u < report.unit_count; ++u)
            if (report.medians[static_cast<size_t>(u)] > report.medians[static_cast<size_t>(best)])
                best = u;
        keep.indices.push_back(best);
    }
    return keep;
}

namespace {

struct ConvBlock {
    std::vector<size_t> conv_nodes;  // node indices, in order
    size_t pool_node = 0;
    int pool_index = 0;
};

std::vector<ConvBlock> find_blocks(const ModelSpec& m) {
    std::vector<ConvBlock> blocks;
    ConvBlock cur;
    int pool_idx = 0;
    for (size_t i = 0; i < m.nodes.size(); ++i) {
        if (m.nodes[i].kind == LayerKind::Conv) cur.conv_nodes.push_back(i);
        if (m.nodes[i].kind == LayerKind::MaxPool) {
            if (cur.conv_nodes.empty())
                throw std::runtime_error("prune_filters: pool without a preceding conv");
            cur.pool_node = i;
            cur.pool_index = pool_idx++;
            blocks.push_back(cur);
            cur = ConvBlock{};
        }
    }
    return blocks;
}

}  // namespace

ModelSpec prune_filters(const ModelSpec& model,
                        const std::map<std::string, KeepIndexSet>& keep,
                        PruneMode mode) {
    ModelSpec out = model;
    const std::vector<ConvBlock> blocks = find_blocks(out);
    const std::vector<std::vector<int>> shapes = infer_shapes(model);

    auto out_channels = [&](size_t conv_node) {
        return out.weights.at(out.nodes[conv_node].params[0]).dim(0);
    };

    for (const ConvBlock& blk : blocks) {
        const std::string site = "pool" + std::to_string(blk.pool_index);
        auto it = keep.find(site);
        if (it == keep.end()) continue;
        const std::vector<int>& K = it->second.indices;
        const size_t last_conv = blk.conv_nodes.back();
        check_keep(K, out_channels(last_conv), site.c_str());

        std::vector<size_t> pruned_convs;
        if (mode == PruneMode::Block) {
            const int width = out_channels(last_conv);
            for (size_t c : blk.conv_nodes)
                if (out_channels(c) != width)
                    throw std::invalid_argument(
                        "prune_filters: block mode requires matching conv widths at " + site);
            pruned_convs = blk.conv_nodes;
        } else {
            pruned_convs = {last_conv};
        }

        for (size_t i = 0; i < pruned_convs.size(); ++i) {
            LayerNode& node = out.nodes[pruned_convs[i]];
            Tensor& w = out.weights.at(node.params[0]);
            Tensor& b = out.weights.at(node.params[1]);
            w = take_axis0(w, K);
            b = take_axis0(b, K);
            // successor conv inside the block consumes the pruned output
            if (i + 1 < pruned_convs.size()) {
                LayerNode& next = out.nodes[pruned_convs[i + 1]];
                Tensor& wn = out.weights.at(next.params[0]);
                wn = take_axis1(wn, K);
            }
        }

        // Consumer after the pool: the next conv, or the classifier head.
        bool rewired = false;
        for (size_t i = blk.pool_node + 1; i < out.nodes.size() && !rewired; ++i) {
            LayerNode& node = out.nodes[i];
            if (node.kind == LayerKind::Conv) {
                Tensor& wn = out.weights.at(node.params[0]);
                wn = take_axis1(wn, K);
                rewired = true;
            } else if (node.kind == LayerKind::Linear) {
                // in_features = |K| * H * W with surviving channel columns copied
                const std::vector<int>& pool_shape = shapes[blk.pool_node];
                const int hw = pool_shape[2] * pool_shape[3];
                Tensor& wn = out.weights.at(node.params[0]);
                wn = take_cols_grouped(wn, K, hw);
                rewired = true;
            }
        }
        if (!rewired) throw std::runtime_error("prune_filters: no consumer found after " + site);

        out.metadata["keep_sets"][site] = K;
        nlohmann::json ev;
        ev["site"] = site;
        ev["kept"] = static_cast<int>(K.size());
        ev["removed"] = model.weights.at(model.nodes[last_conv].params[0]).dim(0) -
                        static_cast<int>(K.size());
        ev["mode"] = mode == PruneMode::Block ? "block" : "strict";
        out.metadata["provenance"]["cnn_prune"].push_back(ev);
    }

    validate(out);
    return out;
}

}  // namespace skewprune
