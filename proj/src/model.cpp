#include "skewprune/model.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

namespace skewprune {

std::string layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Conv: return "conv";
        case LayerKind::Relu: return "relu";
        case LayerKind::Gelu: return "gelu";
        case LayerKind::MaxPool: return "maxpool";
        case LayerKind::Flatten: return "flatten";
        case LayerKind::Linear: return "linear";
        case LayerKind::LayerNorm: return "layernorm";
        case LayerKind::PatchEmbed: return "patch-embed";
        case LayerKind::EncoderBlock: return "encoder-block";
        case LayerKind::ClsSelect: return "cls-select";
    }
    throw std::logic_error("unknown layer kind");
}

LayerKind layer_kind_from_name(const std::string& name) {
    static const std::map<std::string, LayerKind> m = {
        {"conv", LayerKind::Conv},           {"relu", LayerKind::Relu},
        {"gelu", LayerKind::Gelu},           {"maxpool", LayerKind::MaxPool},
        {"flatten", LayerKind::Flatten},     {"linear", LayerKind::Linear},
        {"layernorm", LayerKind::LayerNorm}, {"patch-embed", LayerKind::PatchEmbed},
        {"encoder-block", LayerKind::EncoderBlock}, {"cls-select", LayerKind::ClsSelect},
    };
    auto it = m.find(name);
    if (it == m.end()) throw std::runtime_error("unknown layer kind: " + name);
    return it->second;
}

void VitConfig::validate() const {
    if (image_size % patch != 0)
        throw std::invalid_argument("VitConfig: patch size must divide image size");
    if (embed_dim % heads != 0)
        throw std::invalid_argument("VitConfig: head count must divide embed dim");
    if (blocks < 1 || heads < 1 || mlp_ratio < 1)
        throw std::invalid_argument("VitConfig: invalid block/head/mlp configuration");
}

VggConfig standard_vgg11(int num_classes) {
    VggConfig cfg;
    cfg.blocks = {{64}, {128}, {256, 256}, {512, 512}, {512, 512}};
    cfg.classifier = {4096, 4096};
    cfg.image_size = 224;
    cfg.num_classes = num_classes;
    return cfg;
}

VggConfig tiny_vgg(int num_classes) {
    VggConfig cfg;
    cfg.blocks = {{16}, {32}, {64}};
    cfg.classifier = {64};
    cfg.image_size = 64;
    cfg.num_classes = num_classes;
    return cfg;
}

VitConfig standard_vit_b16(int num_classes) {
    VitConfig cfg;
    cfg.num_classes = num_classes;
    return cfg;
}

VitConfig tiny_vit(int num_classes) {
    VitConfig cfg;
    cfg.image_size = 32;
    cfg.patch = 8;
    cfg.embed_dim = 64;
    cfg.blocks = 2;
    cfg.heads = 4;
    cfg.mlp_ratio = 2;
    cfg.num_classes = num_classes;
    return cfg;
}

ModelSpec build_vgg(const VggConfig& cfg, uint32_t seed) {
    if (cfg.blocks.empty()) throw std::invalid_argument("build_vgg: no conv blocks");
    for (const auto& blk : cfg.blocks) {
        if (blk.empty()) throw std::invalid_argument("build_vgg: empty conv block");
        for (int c : blk)
            if (c < 1) throw std::invalid_argument("build_vgg: invalid channel count");
    }
    std::mt19937 rng(seed);
    ModelSpec m;
    m.metadata["arch"] = "vgg";
    m.metadata["image_size"] = cfg.image_size;
    m.metadata["in_channels"] = cfg.in_channels;
    m.metadata["num_classes"] = cfg.num_classes;
    m.metadata["schema_version"] = 1;

    int in_ch = cfg.in_channels;
    int conv_idx = 0;
    int spatial = cfg.image_size;
    for (const auto& blk : cfg.blocks) {
        for (int out_ch : blk) {
            LayerNode conv{LayerKind::Conv, {{"stride", 1}, {"padding", 1}}, {}, {}, {}};
            const std::string base = "conv" + std::to_string(conv_idx++);
            conv.params = {base + ".weight", base + ".bias"};
            const float std_w = std::sqrt(2.0f / static_cast<float>(in_ch * 9));
            m.weights[conv.params[0]] = random_normal({out_ch, in_ch, 3, 3}, rng, std_w);
            m.weights[conv.params[1]] = Tensor({out_ch});
            m.nodes.push_back(std::move(conv));
            m.nodes.push_back({LayerKind::Relu, {}, {}, {}, {}});
            in_ch = out_ch;
        }
        m.nodes.push_back({LayerKind::MaxPool, {{"k", 2}, {"stride", 2}}, {}, {}, {}});
        spatial /= 2;
    }
    m.nodes.push_back({LayerKind::Flatten, {}, {}, {}, {}});
    int features = in_ch * spatial * spatial;
    int fc_idx = 0;
    auto add_linear = [&](int out_f) {
        LayerNode fc{LayerKind::Linear, {}, {}, {}, {}};
        const std::string base = "fc" + std::to_string(fc_idx++);
        fc.params = {base + ".weight", base + ".bias"};
        const float std_w = std::sqrt(2.0f / static_cast<float>(features));
        m.weights[fc.params[0]] = random_normal({out_f, features}, rng, std_w);
        m.weights[fc.params[1]] = Tensor({out_f});
        m.nodes.push_back(std::move(fc));
        features = out_f;
    };
    for (int width : cfg.classifier) {
        add_linear(width);
        m.nodes.push_back({LayerKind::Relu, {}, {}, {}, {}});
    }
    add_linear(cfg.num_classes);
    validate(m);
    return m;
}

ModelSpec build_vit(const VitConfig& cfg, uint32_t seed) {
    cfg.validate();
    std::mt19937 rng(seed);
    ModelSpec m;
    m.metadata["arch"] = "vit";
    m.metadata["image_size"] = cfg.image_size;
    m.metadata["in_channels"] = cfg.in_channels;
    m.metadata["num_classes"] = cfg.num_classes;
    m.metadata["patch"] = cfg.patch;
    m.metadata["embed_dim"] = cfg.embed_dim;
    m.metadata["heads"] = cfg.heads;
    m.metadata["blocks"] = cfg.blocks;
    m.metadata["mlp_ratio"] = cfg.mlp_ratio;
    m.metadata["schema_version"] = 1;

    const int d = cfg.embed_dim;
    const int tokens = cfg.tokens();

    LayerNode pe{LayerKind::PatchEmbed, {{"patch", cfg.patch}}, {}, {}, {}};
    pe.params = {"patch.weight", "patch.bias", "patch.cls", "patch.pos"};
    m.weights["patch.weight"] =
        random_normal({d, cfg.in_channels, cfg.patch, cfg.patch}, rng,
                      std::sqrt(2.0f / static_cast<float>(cfg.in_channels * cfg.patch * cfg.patch)));
    m.weights["patch.bias"] = Tensor({d});
    m.weights["patch.cls"] = random_normal({d}, rng, 0.02f);
    m.weights["patch.pos"] = random_normal({tokens + 1, d}, rng, 0.02f);
    m.nodes.push_back(std::move(pe));

    const int hidden = d * cfg.mlp_ratio;
    for (int b = 0; b < cfg.blocks; ++b) {
        LayerNode blk{LayerKind::EncoderBlock, {}, std::vector<int>(static_cast<size_t>(cfg.heads), cfg.head_dim()), {}, {}};
        const std::string p = "blk" + std::to_string(b) + ".";
        blk.params = {p + "ln1.gamma", p + "ln1.beta", p + "wq", p + "bq", p + "wk", p + "bk",
                      p + "wv", p + "bv", p + "wo", p + "bo", p + "ln2.gamma", p + "ln2.beta",
                      p + "mlp1.weight", p + "mlp1.bias", p + "mlp2.weight", p + "mlp2.bias"};
        m.weights[p + "ln1.gamma"] = Tensor({d}, 1.0f);
        m.weights[p + "ln1.beta"] = Tensor({d});
        m.weights[p + "wq"] = random_normal({d, d}, rng, 0.02f);
        m.weights[p + "bq"] = Tensor({d});
        m.weights[p + "wk"] = random_normal({d, d}, rng, 0.02f);
        m.weights[p + "bk"] = Tensor({d});
        m.weights[p + "wv"] = random_normal({d, d}, rng, 0.02f);
        m.weights[p + "bv"] = Tensor({d});
        m.weights[p + "wo"] = random_normal({d, d}, rng, 0.02f);
        m.weights[p + "bo"] = Tensor({d});
        m.weights[p + "ln2.gamma"] = Tensor({d}, 1.0f);
        m.weights[p + "ln2.beta"] = Tensor({d});
        m.weights[p + "mlp1.weight"] = random_normal({hidden, d}, rng, std::sqrt(2.0f / static_cast<float>(d)));
        m.weights[p + "mlp1.bias"] = Tensor({hidden});
        m.weights[p + "mlp2.weight"] = random_normal({d, hidden}, rng, std::sqrt(2.0f / static_cast<float>(hidden)));
        m.weights[p + "mlp2.bias"] = Tensor({d});
        m.nodes.push_back(std::move(blk));
    }

    LayerNode ln{LayerKind::LayerNorm, {}, {}, {}, {"norm.gamma", "norm.beta"}};
    m.weights["norm.gamma"] = Tensor({d}, 1.0f);
    m.weights["norm.beta"] = Tensor({d});
    m.nodes.push_back(std::move(ln));
    m.nodes.push_back({LayerKind::ClsSelect, {}, {}, {}, {}});

    LayerNode head{LayerKind::Linear, {}, {}, {}, {"head.weight", "head.bias"}};
    m.weights["head.weight"] = random_normal({cfg.num_classes, d}, rng, 0.02f);
    m.weights["head.bias"] = Tensor({cfg.num_classes});
    m.nodes.push_back(std::move(head));
    validate(m);
    return m;
}

namespace {

const Tensor& weight_of(const ModelSpec& m, const std::string& name) {
    auto it = m.weights.find(name);
    if (it == m.weights.end()) throw std::runtime_error("missing parameter tensor: " + name);
    return it->second;
}

int head_sum(const std::vector<int>& dims) {
    int s = 0;
    for (int d : dims) s += d;
    return s;
}

}  // namespace

std::vector<std::vector<int>> infer_shapes(const ModelSpec& model, int batch) {
    std::vector<int> shape = {batch, model.input_channels(), model.input_size(), model.input_size()};
    std::vector<std::vector<int>> out;
    for (size_t i = 0; i < model.nodes.size(); ++i) {
        const LayerNode& node = model.nodes[i];
        const std::string where = "node " + std::to_string(i) + " (" + layer_kind_name(node.kind) + ")";
        switch (node.kind) {
            case LayerKind::Conv: {
                const Tensor& w = weight_of(model, node.params.at(0));
                if (shape.size() != 4 || shape[1] != w.dim(1))
                    throw std::runtime_error(where + ": input channel mismatch");
                const int s = node.attrs.at("stride"), p = node.attrs.at("padding");
                shape = {shape[0], w.dim(0), (shape[2] + 2 * p - w.dim(2)) / s + 1,
                         (shape[3] + 2 * p - w.dim(3)) / s + 1};
                break;
            }
            case LayerKind::Relu:
            case LayerKind::Gelu:
                break;
            case LayerKind::MaxPool: {
                const int k = node.attrs.at("k"), s = node.attrs.at("stride");
                if (shape.size() != 4 || k > shape[2] || k > shape[3])
                    throw std::runtime_error(where + ": window larger than input");
                shape = {shape[0], shape[1], (shape[2] - k) / s + 1, (shape[3] - k) / s + 1};
                break;
            }
            case LayerKind::Flatten: {
                int64_t f = 1;
                for (size_t j = 1; j < shape.size(); ++j) f *= shape[j];
                shape = {shape[0], static_cast<int>(f)};
                break;
            }
            case LayerKind::Linear: {
                const Tensor& w = weight_of(model, node.params.at(0));
                if (shape.back() != w.dim(1))
                    throw std::runtime_error(where + ": in_features mismatch, got " +
                                             std::to_string(shape.back()) + " expected " +
                                             std::to_string(w.dim(1)));
                shape.back() = w.dim(0);
                break;
            }
            case LayerKind::LayerNorm: {
                const Tensor& g = weight_of(model, node.params.at(0));
                if (g.numel() != shape.back())
                    throw std::runtime_error(where + ": normalized dim mismatch");
                break;
            }
            case LayerKind::PatchEmbed: {
                const Tensor& w = weight_of(model, node.params.at(0));
                const int P = node.attrs.at("patch");
                if (shape.size() != 4 || shape[1] != w.dim(1) || shape[2] % P != 0)
                    throw std::runtime_error(where + ": invalid patch geometry");
                const int n_tok = (shape[2] / P) * (shape[3] / P);
                const Tensor& pos = weight_of(model, node.params.at(3));
                if (pos.dim(0) != n_tok + 1 || pos.dim(1) != w.dim(0))
                    throw std::runtime_error(where + ": position embedding shape mismatch");
                shape = {shape[0], n_tok + 1, w.dim(0)};
                break;
            }
            case LayerKind::EncoderBlock: {
                if (shape.size() != 3) throw std::runtime_error(where + ": expects token input");
                const int d_in = shape[2];
                const int cat = head_sum(node.head_dims);
                const Tensor& wq = weight_of(model, node.params.at(2));
                const Tensor& wo = weight_of(model, node.params.at(8));
                if (weight_of(model, node.params.at(0)).numel() != d_in)
                    throw std::runtime_error(where + ": ln1 dim mismatch");
                if (wq.dim(1) != d_in || wq.dim(0) != cat)
                    throw std::runtime_error(where + ": q/k/v projection shape mismatch");
                if (wo.dim(1) != cat) throw std::runtime_error(where + ": W^O input dim mismatch");
                const int d_out = wo.dim(0);
                if (!node.residual_keep.empty()) {
                    if (static_cast<int>(node.residual_keep.size()) != d_in ||
                        node.residual_keep.back() >= d_out)
                        throw std::runtime_error(where + ": residual keep set invalid");
                } else if (d_in != d_out) {
                    throw std::runtime_error(where + ": dim change requires a residual keep set");
                }
                if (weight_of(model, node.params.at(10)).numel() != d_out ||
                    weight_of(model, node.params.at(12)).dim(1) != d_out ||
                    weight_of(model, node.params.at(14)).dim(0) != d_out)
                    throw std::runtime_error(where + ": mlp shape mismatch");
                shape = {shape[0], shape[1], d_out};
                break;
            }
            case LayerKind::ClsSelect: {
                if (shape.size() != 3) throw std::runtime_error(where + ": expects token input");
                shape = {shape[0], shape[2]};
                break;
            }
        }
        out.push_back(shape);
    }
    return out;
}

void validate(const ModelSpec& model) { infer_shapes(model, 1); }

Var ParamVars::at(const std::string& name) const {
    auto it = vars.find(name);
    if (it == vars.end()) throw std::runtime_error("missing parameter var: " + name);
    return it->second;
}

ParamVars make_params(GradTape& tape, const ModelSpec& model, bool requires_grad,
                      const std::set<std::string>& freeze) {
    for (const std::string& f : freeze)
        if (!model.weights.count(f)) throw std::invalid_argument("freeze name does not resolve: " + f);
    ParamVars pv;
    for (const auto& [name, tensor] : model.weights)
        pv.vars[name] = tape.leaf(tensor, requires_grad && !freeze.count(name));
    return pv;
}

namespace {

Var encoder_block_forward(GradTape& tape, const ModelSpec& model, const LayerNode& node,
                          Var x, const ParamVars& pv, int block_idx,
                          const TapRequest* taps, std::vector<TapRecord>* records) {
    auto P = [&](int i) { return pv.at(node.params.at(static_cast<size_t>(i))); };
    Var h = tape.layernorm(x, P(0), P(1));
    Var q = tape.linear3d(h, P(2), P(3));
    Var k = tape.linear3d(h, P(4), P(5));
    Var v = tape.linear3d(h, P(6), P(7));
    std::vector<Var> head_outs;
    int offset = 0;
    for (size_t hi = 0; hi < node.head_dims.size(); ++hi) {
        const int dh = node.head_dims[hi];
        if (dh <= 0) throw std::runtime_error("encoder block: head with non-positive width");
        Var qh = tape.slice_last(q, offset, dh);
        Var kh = tape.slice_last(k, offset, dh);
        Var vh = tape.slice_last(v, offset, dh);
        Var scores = tape.scale(tape.bmm(qh, kh, /*transpose_b=*/true),
                                1.0f / std::sqrt(static_cast<float>(dh)));
        Var attn_map = tape.softmax_last(scores);
        if (taps && taps->heads && records)
            records->push_back({"blk" + std::to_string(block_idx) + ".head" + std::to_string(hi),
                                tape.value(attn_map)});
        head_outs.push_back(tape.bmm(attn_map, vh, false));
        offset += dh;
    }
    Var cat = head_outs.size() == 1 ? head_outs[0] : tape.concat_last(head_outs);
    if (taps && taps->block_inner && records)
        records->push_back({"blk" + std::to_string(block_idx) + ".inner", tape.value(cat)});
    Var attn = tape.linear3d(cat, P(8), P(9));
    Var x1 = node.residual_keep.empty() ? tape.add(attn, x)
                                        : tape.residual_add_pruned(x, attn, node.residual_keep);
    Var m = tape.layernorm(x1, P(10), P(11));
    m = tape.linear3d(m, P(12), P(13));
    m = tape.gelu(m);
    m = tape.linear3d(m, P(14), P(15));
    return tape.add(x1, m);
}

}  // namespace

Var forward(GradTape& tape, const ModelSpec& model, Var input, const ParamVars& params,
            const TapRequest* taps, std::vector<TapRecord>* records) {
    Var x = input;
    int pool_idx = 0, block_idx = 0;
    for (const LayerNode& node : model.nodes) {
        switch (node.kind) {
            case LayerKind::Conv:
                x = tape.conv2d(x, params.at(node.params.at(0)), params.at(node.params.at(1)),
                                node.attrs.at("stride"), node.attrs.at("padding"));
                break;
            case LayerKind::Relu:
                x = tape.relu(x);
                break;
            case LayerKind::Gelu:
                x = tape.gelu(x);
                break;
            case LayerKind::MaxPool:
                x = tape.maxpool2d(x, node.attrs.at("k"), node.attrs.at("stride"));
                if (taps && taps->pools && records)
                    records->push_back({"pool" + std::to_string(pool_idx), tape.value(x)});
                ++pool_idx;
                break;
            case LayerKind::Flatten: {
                const Tensor& t = tape.value(x);
                x = tape.reshape(x, {t.dim(0), static_cast<int>(t.numel() / t.dim(0))});
                break;
            }
            case LayerKind::Linear:
                x = tape.value(x).ndim() == 3
                        ? tape.linear3d(x, params.at(node.params.at(0)), params.at(node.params.at(1)))
                        : tape.linear(x, params.at(node.params.at(0)), params.at(node.params.at(1)));
                break;
            case LayerKind::LayerNorm:
                x = tape.layernorm(x, params.at(node.params.at(0)), params.at(node.params.at(1)));
                break;
            case LayerKind::PatchEmbed: {
                const int P = node.attrs.at("patch");
                Var fmap = tape.conv2d(x, params.at(node.params.at(0)), params.at(node.params.at(1)),
                                       P, 0);
                if (taps && taps->patch_embed && records)
                    records->push_back({"patch_embed", tape.value(fmap)});
                const Tensor& f = tape.value(fmap);
                const int d = f.dim(1), n_tok = f.dim(2) * f.dim(3);
                Var tok = tape.transpose_12(tape.reshape(fmap, {f.dim(0), d, n_tok}));
                tok = tape.prepend_token(tok, params.at(node.params.at(2)));
                x = tape.add_broadcast(tok, params.at(node.params.at(3)));
                break;
            }
            case LayerKind::EncoderBlock:
                x = encoder_block_forward(tape, model, node, x, params, block_idx, taps, records);
                ++block_idx;
                break;
            case LayerKind::ClsSelect: {
                const Tensor& t = tape.value(x);
                Var td = tape.transpose_12(x);               // [b,d,t]
                Var first = tape.slice_last(td, 0, 1);       // [b,d,1]
                x = tape.reshape(first, {t.dim(0), t.dim(2)});
                break;
            }
        }
    }
    return x;
}

Tensor forward_logits(const ModelSpec& model, const Tensor& batch) {
    GradTape tape(false);
    ParamVars pv = make_params(tape, model, false);
    Var in = tape.leaf(batch);
    return tape.value(forward(tape, model, in, pv));
}

std::vector<SkewnessReport> collect_skewness(const ModelSpec& model,
                                             const std::vector<Tensor>& images,
                                             SiteKind kind, int batch_size) {
    if (images.empty()) throw std::invalid_argument("collect_skewness: empty dataset");
    TapRequest req;
    req.pools = kind == SiteKind::Pool;
    req.heads = kind == SiteKind::Head;
    req.patch_embed = kind == SiteKind::PatchEmbed;
    req.block_inner = kind == SiteKind::BlockInner;

    // site -> (unit -> per-sample skew values), site order fixed by first batch
    std::vector<SkewnessReport> reports;
    std::map<std::string, size_t> site_index;
    const int total = static_cast<int>(images.size());

    for (int start = 0; start < total; start += batch_size) {
        const int bs = std::min(batch_size, total - start);
        Tensor batch({bs, model.input_channels(), model.input_size(), model.input_size()});
        const int64_t px = batch.numel() / bs;
        for (int i = 0; i < bs; ++i) {
            const Tensor& img = images[static_cast<size_t>(start + i)];
            if (img.numel() != px)
                throw std::invalid_argument("collect_skewness: sample shape mismatch");
            std::copy(img.data.begin(), img.data.end(), batch.data.begin() + i * px);
        }
        GradTape tape(false);
        ParamVars pv = make_params(tape, model, false);
        std::vector<TapRecord> recs;
        forward(tape, model, tape.leaf(std::move(batch)), pv, &req, &recs);
        if (recs.empty()) throw std::runtime_error("collect_skewness: model has no requested sites");

        // Head taps arrive one record per head; fold them into one report per block.
        for (const TapRecord& rec : recs) {
            std::string site = rec.site;
            int unit_in_site = -1;  // -1: units are channels of the record
            if (kind == SiteKind::Head) {
                const size_t dot = site.find(".head");
                unit_in_site = std::stoi(site.substr(dot + 5));
                site = site.substr(0, dot) + ".heads";
            }
            if (!site_index.count(site)) {
                site_index[site] = reports.size();
                reports.push_back({site, 0, {}, {}});
            }
            SkewnessReport& rep = reports[site_index[site]];

            if (kind == SiteKind::Head) {
                // rec.batch: [bs, t, t]; one unit per record
                if (static_cast<int>(rep.per_sample.size()) <= unit_in_site)
                    rep.per_sample.resize(static_cast<size_t>(unit_in_site) + 1);
                auto& samples = rep.per_sample[static_cast<size_t>(unit_in_site)];
                const size_t base = samples.size();
                samples.resize(base + static_cast<size_t>(bs));
                const int64_t map_sz = rec.batch.numel() / bs;
#pragma omp parallel for num_threads(kernels::thread_count())
                for (int i = 0; i < bs; ++i)
                    samples[base + static_cast<size_t>(i)] = skewness(
                        std::span<const float>(rec.batch.data.data() + i * map_sz,
                                               static_cast<size_t>(map_sz)));
            } else if (kind == SiteKind::BlockInner) {
                // rec.batch: [bs, t, C]; unit u = channel u across tokens
                const int t = rec.batch.dim(1), C = rec.batch.dim(2);
                if (rep.per_sample.empty()) rep.per_sample.resize(static_cast<size_t>(C));
                for (int u = 0; u < C; ++u) {
                    auto& samples = rep.per_sample[static_cast<size_t>(u)];
                    const size_t base = samples.size();
                    samples.resize(base + static_cast<size_t>(bs));
                }
#pragma omp parallel for num_threads(kernels::thread_count())
                for (int u = 0; u < C; ++u) {
                    std::vector<float> vals(static_cast<size_t>(t));
                    auto& samples = rep.per_sample[static_cast<size_t>(u)];
                    const size_t base = samples.size() - static_cast<size_t>(bs);
                    for (int i = 0; i < bs; ++i) {
                        for (int j = 0; j < t; ++j)
                            vals[static_cast<size_t>(j)] =
                                rec.batch.data[static_cast<size_t>((static_cast<int64_t>(i) * t + j) * C + u)];
                        samples[base + static_cast<size_t>(i)] = skewness(vals);
                    }
                }
            } else {
                // rec.batch: [bs, C, H, W]; unit u = channel plane
                const int C = rec.batch.dim(1);
                const int64_t plane = static_cast<int64_t>(rec.batch.dim(2)) * rec.batch.dim(3);
                if (rep.per_sample.empty()) rep.per_sample.resize(static_cast<size_t>(C));
                for (int u = 0; u < C; ++u)
                    rep.per_sample[static_cast<size_t>(u)].resize(
                        rep.per_sample[static_cast<size_t>(u)].size() + static_cast<size_t>(bs));
#pragma omp parallel for num_threads(kernels::thread_count())
                for (int u = 0; u < C; ++u) {
                    auto& samples = rep.per_sample[static_cast<size_t>(u)];
                    const size_t base = samples.size() - static_cast<size_t>(bs);
                    for (int i = 0; i < bs; ++i)
                        samples[base + static_cast<size_t>(i)] = skewness(std::span<const float>(
                            rec.batch.data.data() + (static_cast<int64_t>(i) * C + u) * plane,
                            static_cast<size_t>(plane)));
                }
            }
        }
    }
    for (auto& rep : reports) rep.finalize();
    return reports;
}

void copy_params_from_tape(const GradTape& tape, const ParamVars& params, ModelSpec& model) {
    for (const auto& [name, var] : params.vars) model.weights[name] = tape.value(var);
}

}  // namespace skewprune
