#pragma once

#include "skewprune/dataio.hpp"
#include "skewprune/model.hpp"

#include <string>
#include <utility>
#include <vector>

namespace skewprune {

enum class Optimizer { SgdMomentum, AdamW };
enum class Scheduler { Plateau, CosineWarmup };

struct TrainConfig {
    Optimizer optimizer = Optimizer::SgdMomentum;
    float lr = 1e-2f;
    float momentum = 0.9f;
    float weight_decay = 0.0f;  // decoupled, AdamW-style
    Scheduler scheduler = Scheduler::Plateau;
    float plateau_factor = 0.5f;
    int plateau_patience = 10;
    int warmup_epochs = 5;
    int max_epochs = 30;
    int batch_size = 32;
    uint32_t seed = 0;
    std::vector<std::string> freeze;

    void validate() const;
};

struct EpochStat {
    int epoch = 0;
    double train_loss = 0.0;
    double val_accuracy = 0.0;
    double val_f1 = 0.0;
    float lr = 0.0f;
};

struct TrainLog {
    std::vector<EpochStat> epochs;
    int best_epoch = -1;  // earliest epoch attaining max val F1
};

std::pair<ModelSpec, TrainLog> train(const ModelSpec& model, const std::vector<Sample>& train_set,
                                     const std::vector<Sample>& val_set, const TrainConfig& config);

// Same loop; additionally honors the freeze list carried in the model's
// pattern provenance (Partial fine-tuning).
std::pair<ModelSpec, TrainLog> finetune(const ModelSpec& model, const std::vector<Sample>& train_set,
                                        const std::vector<Sample>& val_set, const TrainConfig& config);

// Predictions of a model over a sample list, in order.
std::vector<EvalRecord> evaluate(const ModelSpec& model, const std::vector<Sample>& samples,
                                 int batch_size = 32);

std::string train_log_to_text(const TrainLog& log);

}  // namespace skewprune
