#include "skewprune/cost.hpp"

#include <sstream>

namespace skewprune {

int64_t count_params(const ModelSpec& model) {
    int64_t n = 0;
    for (const auto& [name, t] : model.weights) n += t.numel();
    return n;
}

int64_t count_flops(const ModelSpec& model, int image_size) {
    if (image_size != 0 && image_size != model.input_size())
        throw std::invalid_argument(
            "count_flops: model was built for input size " + std::to_string(model.input_size()));
    const std::vector<std::vector<int>> shapes = infer_shapes(model, 1);

    int64_t macs = 0;
    std::vector<int> in_shape = {1, model.input_channels(), model.input_size(), model.input_size()};
    for (size_t i = 0; i < model.nodes.size(); ++i) {
        const LayerNode& node = model.nodes[i];
        const std::vector<int>& out_shape = shapes[i];
        switch (node.kind) {
            case LayerKind::Conv:
            case LayerKind::PatchEmbed: {
                const Tensor& w = model.weights.at(node.params[0]);
                const int64_t per_out = static_cast<int64_t>(w.dim(1)) * w.dim(2) * w.dim(3);
                int64_t outputs;
                if (node.kind == LayerKind::Conv) {
                    outputs = static_cast<int64_t>(out_shape[1]) * out_shape[2] * out_shape[3];
                } else {
                    // token grid before the class token is prepended
                    outputs = static_cast<int64_t>(out_shape[2]) * (out_shape[1] - 1);
                }
                macs += outputs * per_out;
                break;
            }
            case LayerKind::Linear: {
                const Tensor& w = model.weights.at(node.params[0]);
                const int64_t rows = out_shape.size() == 3 ? out_shape[1] : 1;
                macs += rows * static_cast<int64_t>(w.dim(0)) * w.dim(1);
                break;
            }
            case LayerKind::EncoderBlock: {
                const Tensor& wq = model.weights.at(node.params[2]);
                const Tensor& wo = model.weights.at(node.params[8]);
                const Tensor& w1 = model.weights.at(node.params[12]);
                const Tensor& w2 = model.weights.at(node.params[14]);
                const int64_t t = in_shape[1];
                macs += 3 * t * static_cast<int64_t>(wq.dim(0)) * wq.dim(1);  // q,k,v projections
                for (int dh : node.head_dims) macs += 2 * t * t * static_cast<int64_t>(dh);  // QK^T + AV
                macs += t * static_cast<int64_t>(wo.dim(0)) * wo.dim(1);
                macs += t * static_cast<int64_t>(w1.dim(0)) * w1.dim(1);
                macs += t * static_cast<int64_t>(w2.dim(0)) * w2.dim(1);
                break;
            }
            default:
                break;  // elementwise and structural ops excluded
        }
        in_shape = out_shape;
    }
    return macs;
}

double memory_footprint_mib(const ModelSpec& model) {
    return static_cast<double>(count_params(model)) * 4.0 / (1024.0 * 1024.0);
}

CostReport cost_report(const ModelSpec& model, int image_size) {
    CostReport c;
    c.params = count_params(model);
    c.flops = count_flops(model, image_size);
    c.memory_mib = memory_footprint_mib(model);
    return c;
}

std::string cost_to_text(const CostReport& c) {
    std::ostringstream os;
    os << "params\t" << c.params << "\n"
       << "flops\t" << c.flops << "\n"
       << "memory_mib\t" << c.memory_mib << "\n";
    if (c.best_epoch >= 0) os << "best_epoch\t" << c.best_epoch << "\n";
    return os.str();
}

}  // namespace skewprune
