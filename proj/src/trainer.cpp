#include "skewprune/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace skewprune {

void TrainConfig::validate() const {
    if (lr <= 0.0f) throw std::invalid_argument("TrainConfig: lr must be positive");
    if (plateau_patience < 1) throw std::invalid_argument("TrainConfig: patience must be >= 1");
    if (max_epochs < 1 || batch_size < 1)
        throw std::invalid_argument("TrainConfig: epochs and batch size must be >= 1");
}

namespace {

Tensor make_batch(const ModelSpec& model, const std::vector<Sample>& samples,
                  const std::vector<size_t>& order, size_t start, size_t count,
                  std::vector<int>* labels) {
    Tensor batch({static_cast<int>(count), model.input_channels(), model.input_size(),
                  model.input_size()});
    const int64_t px = batch.numel() / static_cast<int64_t>(count);
    if (labels) labels->clear();
    for (size_t i = 0; i < count; ++i) {
        const Sample& s = samples[order[start + i]];
        if (s.image.numel() != px)
            throw std::invalid_argument("train: sample image shape does not match the model input");
        std::copy(s.image.data.begin(), s.image.data.end(),
                  batch.data.begin() + static_cast<int64_t>(i) * px);
        if (labels) labels->push_back(s.label);
    }
    return batch;
}

struct OptimState {
    std::map<std::string, Tensor> momentum;  // SGD buffer / Adam first moment
    std::map<std::string, Tensor> second;    // Adam second moment
    int64_t step = 0;
};

void apply_update(ModelSpec& model, const GradTape& tape, const ParamVars& params,
                  const TrainConfig& cfg, OptimState& state, float lr) {
    ++state.step;
    for (auto& [name, var] : params.vars) {
        if (!tape.requires_grad(var)) continue;  // frozen
        Tensor g = tape.grad(var);
        Tensor& w = model.weights.at(name);
        if (cfg.optimizer == Optimizer::SgdMomentum) {
            Tensor& buf = state.momentum.try_emplace(name, Tensor(w.shape)).first->second;
            for (size_t i = 0; i < w.data.size(); ++i) {
                buf.data[i] = cfg.momentum * buf.data[i] + g.data[i];
                w.data[i] -= lr * buf.data[i];
            }
        } else {
            constexpr float b1 = 0.9f, b2 = 0.999f, eps = 1e-8f;
            Tensor& m = state.momentum.try_emplace(name, Tensor(w.shape)).first->second;
            Tensor& v = state.second.try_emplace(name, Tensor(w.shape)).first->second;
            const float bc1 = 1.0f - std::pow(b1, static_cast<float>(state.step));
            const float bc2 = 1.0f - std::pow(b2, static_cast<float>(state.step));
            for (size_t i = 0; i < w.data.size(); ++i) {
                m.data[i] = b1 * m.data[i] + (1.0f - b1) * g.data[i];
                v.data[i] = b2 * v.data[i] + (1.0f - b2) * g.data[i] * g.data[i];
                const float mh = m.data[i] / bc1;
                const float vh = v.data[i] / bc2;
                w.data[i] -= lr * (mh / (std::sqrt(vh) + eps) + cfg.weight_decay * w.data[i]);
            }
        }
    }
}

std::set<std::string> freeze_set(const ModelSpec& model, const TrainConfig& cfg,
                                 bool honor_provenance) {
    std::set<std::string> freeze(cfg.freeze.begin(), cfg.freeze.end());
    if (honor_provenance && model.metadata.contains("provenance")) {
        for (const auto& name :
             model.metadata["provenance"].value("freeze", std::vector<std::string>{}))
            freeze.insert(name);
    }
    return freeze;
}

std::pair<ModelSpec, TrainLog> run_training(const ModelSpec& start, const std::vector<Sample>& train_set,
                                            const std::vector<Sample>& val_set, const TrainConfig& cfg,
                                            bool honor_provenance) {
    cfg.validate();
    if (train_set.empty() || val_set.empty())
        throw std::invalid_argument("train: train and validation splits must be non-empty");
    const std::set<std::string> freeze = freeze_set(start, cfg, honor_provenance);

    ModelSpec model = start;
    ModelSpec best = start;
    TrainLog log;
    OptimState state;
    std::mt19937 rng(cfg.seed);
    std::vector<size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), size_t{0});

    float lr = cfg.lr;
    double best_f1 = -1.0;
    int epochs_since_improvement = 0;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        if (cfg.scheduler == Scheduler::CosineWarmup) {
            if (epoch < cfg.warmup_epochs) {
                lr = cfg.lr * static_cast<float>(epoch + 1) / static_cast<float>(cfg.warmup_epochs);
            } else {
                const float t = static_cast<float>(epoch - cfg.warmup_epochs) /
                                static_cast<float>(std::max(1, cfg.max_epochs - cfg.warmup_epochs));
                lr = cfg.lr * 0.5f * (1.0f + std::cos(3.14159265f * t));
            }
        }

        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        int batches = 0;
        for (size_t b = 0; b < order.size(); b += static_cast<size_t>(cfg.batch_size)) {
            const size_t count = std::min(static_cast<size_t>(cfg.batch_size), order.size() - b);
            std::vector<int> labels;
            Tensor batch = make_batch(model, train_set, order, b, count, &labels);
            GradTape tape(true);
            ParamVars pv = make_params(tape, model, true, freeze);
            Var logits = forward(tape, model, tape.leaf(std::move(batch)), pv);
            Var loss = tape.cross_entropy(logits, labels);
            const float loss_val = tape.value(loss).data[0];
            if (!std::isfinite(loss_val))
                throw std::runtime_error("train: loss diverged (non-finite) at epoch " +
                                         std::to_string(epoch));
            tape.backward(loss);
            apply_update(model, tape, pv, cfg, state, lr);
            loss_sum += loss_val;
            ++batches;
        }

        std::vector<EvalRecord> val_records = evaluate(model, val_set, cfg.batch_size);
        const PerformanceReport perf = performance(val_records, model.num_classes());

        EpochStat stat;
        stat.epoch = epoch;
        stat.train_loss = loss_sum / std::max(1, batches);
        stat.val_accuracy = perf.accuracy;
        stat.val_f1 = perf.macro_f1;
        stat.lr = lr;
        log.epochs.push_back(stat);

        if (perf.macro_f1 > best_f1) {
            best_f1 = perf.macro_f1;
            log.best_epoch = epoch;
            best = model;
            epochs_since_improvement = 0;
        } else {
            ++epochs_since_improvement;
            if (cfg.scheduler == Scheduler::Plateau &&
                epochs_since_improvement >= cfg.plateau_patience) {
                lr *= cfg.plateau_factor;
                epochs_since_improvement = 0;
            }
        }
    }
    return {std::move(best), std::move(log)};
}

}  // namespace

std::pair<ModelSpec, TrainLog> train(const ModelSpec& model, const std::vector<Sample>& train_set,
                                     const std::vector<Sample>& val_set, const TrainConfig& config) {
    return run_training(model, train_set, val_set, config, /*honor_provenance=*/false);
}

std::pair<ModelSpec, TrainLog> finetune(const ModelSpec& model, const std::vector<Sample>& train_set,
                                        const std::vector<Sample>& val_set, const TrainConfig& config) {
    return run_training(model, train_set, val_set, config, /*honor_provenance=*/true);
}

std::vector<EvalRecord> evaluate(const ModelSpec& model, const std::vector<Sample>& samples,
                                 int batch_size) {
    std::vector<EvalRecord> out;
    out.reserve(samples.size());
    std::vector<size_t> order(samples.size());
    std::iota(order.begin(), order.end(), size_t{0});
    for (size_t b = 0; b < samples.size(); b += static_cast<size_t>(batch_size)) {
        const size_t count = std::min(static_cast<size_t>(batch_size), samples.size() - b);
        Tensor batch = make_batch(model, samples, order, b, count, nullptr);
        const Tensor logits = forward_logits(model, batch);
        const std::vector<int> preds = argmax_rows(logits);
        for (size_t i = 0; i < count; ++i) {
            const Sample& s = samples[b + i];
            out.push_back({s.label, preds[i], s.group});
        }
    }
    return out;
}

std::string train_log_to_text(const TrainLog& log) {
    std::ostringstream os;
    os << "epoch\ttrain_loss\tval_accuracy\tval_f1\tlr\n";
    for (const EpochStat& e : log.epochs)
        os << e.epoch << "\t" << e.train_loss << "\t" << e.val_accuracy << "\t" << e.val_f1 << "\t"
           << e.lr << "\n";
    os << "best_epoch\t" << log.best_epoch << "\n";
    return os.str();
}

}  // namespace skewprune
