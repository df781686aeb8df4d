#pragma once

#include "skewprune/fairness.hpp"
#include "skewprune/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace skewprune {

struct Sample {
    Tensor image;  // (C,H,W), values in [0,1]
    int label = 0;
    int fitzpatrick = 0;  // 1..6, 0 = unknown
    int group = 0;        // 0 = light (types 1-3), 1 = dark (4-6)
    std::string name;
};

// Synthetic biased-dataset knobs: a uniform background at a group-dependent
// tone plus a small elliptical lesion whose texture encodes the class.
// rho is the probability a sample's class is resampled conditioned on its
// group (0 = independent, 1 = fully determined by group).
struct SynthConfig {
    int image_size = 64;
    int num_classes = 3;
    float light_tone_lo = 0.55f, light_tone_hi = 0.85f;
    float dark_tone_lo = 0.25f, dark_tone_hi = 0.60f;
    float lesion_area_frac = 0.08f;  // must stay <= 0.15
    float rho = 0.0f;
    int train = 200, val = 80, test = 120;
    uint32_t seed = 1;
};

void generate_synthetic(const SynthConfig& cfg, const std::string& dir);

// split: "train" | "val" | "test" | "" (all), in manifest order.
std::vector<Sample> load_dataset(const std::string& dir, const std::string& split = "");

std::vector<Tensor> sample_images(const std::vector<Sample>& samples);
std::vector<int> sample_labels(const std::vector<Sample>& samples);

int group_from_fitzpatrick(int fitzpatrick);

// Model file format: <path> JSON manifest + sibling .bin blob of
// little-endian float32 values concatenated in manifest tensor order.
void save_model(const ModelSpec& model, const std::string& path);
ModelSpec load_model(const std::string& path);

void write_predictions(const std::vector<EvalRecord>& records, const std::string& path);
std::vector<EvalRecord> read_predictions(const std::string& path);

// 8-bit binary PPM (P6).
void write_ppm(const Tensor& image, const std::string& path);
Tensor read_ppm(const std::string& path);

}  // namespace skewprune
