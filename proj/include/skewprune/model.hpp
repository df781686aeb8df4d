#pragma once

#include "skewprune/stats.hpp"
#include "skewprune/tape.hpp"
#include "skewprune/tensor.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace skewprune {

enum class LayerKind { Conv, Relu, Gelu, MaxPool, Flatten, Linear, LayerNorm, PatchEmbed, EncoderBlock, ClsSelect };

std::string layer_kind_name(LayerKind k);
LayerKind layer_kind_from_name(const std::string& name);

struct LayerNode {
    LayerKind kind;
    std::map<std::string, int> attrs;  // conv: stride/padding; maxpool: k/stride; patch-embed: patch
    std::vector<int> head_dims;        // encoder block: per-head projection width
    std::vector<int> residual_keep;    // encoder block: Alg-style pad map for the attention skip (empty = plain add)
    std::vector<std::string> params;   // names into ModelSpec::weights, serialization order
};

struct ModelSpec {
    std::vector<LayerNode> nodes;
    std::map<std::string, Tensor> weights;
    nlohmann::json metadata;  // arch, input geometry, keep sets, pattern provenance

    int input_channels() const { return metadata.at("in_channels").get<int>(); }
    int input_size() const { return metadata.at("image_size").get<int>(); }
    int num_classes() const { return metadata.at("num_classes").get<int>(); }
};

struct VggConfig {
    std::vector<std::vector<int>> blocks;  // conv out-channels, per conv, per block
    std::vector<int> classifier;           // hidden widths before the class head
    int in_channels = 3;
    int image_size = 224;
    int num_classes = 8;
};

struct VitConfig {
    int image_size = 224;
    int patch = 16;
    int embed_dim = 768;
    int blocks = 12;
    int heads = 12;
    int mlp_ratio = 4;
    int in_channels = 3;
    int num_classes = 8;

    int tokens() const { return (image_size / patch) * (image_size / patch); }
    int head_dim() const { return embed_dim / heads; }
    void validate() const;
};

VggConfig standard_vgg11(int num_classes = 8);
VggConfig tiny_vgg(int num_classes = 3);  // blocks [16,32,64] on 64x64
VitConfig standard_vit_b16(int num_classes = 8);
VitConfig tiny_vit(int num_classes = 3);  // d=64, L=2, n_h=4, P=8 on 32x32

ModelSpec build_vgg(const VggConfig& cfg, uint32_t seed);
ModelSpec build_vit(const VitConfig& cfg, uint32_t seed);

// Shape walk over the node list; throws on any incompatibility.
// Returns the output shape after every node for a batch of n images.
std::vector<std::vector<int>> infer_shapes(const ModelSpec& model, int batch = 1);
void validate(const ModelSpec& model);

// --- forward ---------------------------------------------------------------

struct ParamVars {
    std::map<std::string, Var> vars;
    Var at(const std::string& name) const;
};

// Leaves for every weight tensor; names in `freeze` get requires_grad=false.
ParamVars make_params(GradTape& tape, const ModelSpec& model, bool requires_grad,
                      const std::set<std::string>& freeze = {});

struct TapRequest {
    bool pools = false;        // post-maxpool feature maps, site "pool{j}"
    bool heads = false;        // post-softmax attention maps, site "blk{b}.head{h}"
    bool patch_embed = false;  // patch-embed conv output channels, site "patch_embed"
    bool block_inner = false;  // pre-W^O concatenated head outputs, site "blk{b}.inner"
};

struct TapRecord {
    std::string site;
    Tensor batch;  // leading dim = batch, sample order preserved
};

Var forward(GradTape& tape, const ModelSpec& model, Var input, const ParamVars& params,
            const TapRequest* taps = nullptr, std::vector<TapRecord>* records = nullptr);

// Convenience: inference on a batch tensor, no gradients.
Tensor forward_logits(const ModelSpec& model, const Tensor& batch);

// Alg-1-style accumulation: per site, per unit, skewness of the unit's
// flattened map on each sample, then medians. Sample order = `images` order.
enum class SiteKind { Pool, Head, PatchEmbed, BlockInner };
std::vector<SkewnessReport> collect_skewness(const ModelSpec& model,
                                             const std::vector<Tensor>& images,
                                             SiteKind kind, int batch_size = 16);

// Write pruned-model weights back from tape leaves (after training).
void copy_params_from_tape(const GradTape& tape, const ParamVars& params, ModelSpec& model);

}  // namespace skewprune
