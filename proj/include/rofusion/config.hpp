#pragma once

#include <cstdint>
#include <string>

#include "rofusion/fusion_net.hpp"
#include "rofusion/local_codec.hpp"
#include "rofusion/sim.hpp"

namespace rofusion {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainConfig {
    int epochs = 40;
    int batch_frames = 8;
    double lr = 1e-4;
    double alpha = 10.0;  // Smooth-L1 weight in the combined loss
    AdamConfig adam;
    std::uint64_t seed = 1;
    int n_train = 512;
    int n_val = 64;
    int n_test = 64;
    // Frame i of a split draws sim seed = seed + offset + i.
    std::uint64_t split_offset_train = 0;
    std::uint64_t split_offset_val = 1000000;
    std::uint64_t split_offset_test = 2000000;
    bool augment_nontrivial = true;  // feed range-only/azimuth-only points
    bool use_image_features = true;  // false: image branch sees zeros

    void validate() const;
};

enum class BoxSource { Oracle, Jittered };
enum class OriginMode { Gt, HLc };

std::string to_string(BoxSource s);
BoxSource box_source_from_string(const std::string& s);
std::string to_string(OriginMode m);
OriginMode origin_mode_from_string(const std::string& s);

struct EvalConfig {
    double iou_thr = 0.5;
    double template_length = 4.0;  // meters
    double template_width = 1.8;
    BoxSource box_source = BoxSource::Oracle;
    OriginMode origin_mode = OriginMode::Gt;
    double obj_length_prior = 4.0;  // hLC range prior

    void validate() const;
};

struct ExperimentConfig {
    sim::SimConfig sim;
    codec::CodecConfig codec;
    codec::GlobalGridConfig grid;  // used when codec.mode == global
    net::ArchConfig arch;
    TrainConfig train;
    EvalConfig eval;

    // Cross-field consistency (head widths vs codec/grid bins, feature
    // channels vs arch inputs). Throws ConfigError naming the field.
    void validate() const;
};

// Parsing is strict: every field must be present and no unknown fields are
// accepted, so `config --default` output is the schema of record.
ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);
void save_config(const std::string& path, const ExperimentConfig& cfg);

}  // namespace rofusion
