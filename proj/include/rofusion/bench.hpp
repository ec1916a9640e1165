#pragma once

#include <map>
#include <string>
#include <vector>

#include "rofusion/config.hpp"
#include "rofusion/evaluation.hpp"

namespace rofusion::bench {

// Experiment variants shared by the ablation command and the benchmark.
ExperimentConfig make_radar_only(ExperimentConfig cfg);  // image branch sees zeros
ExperimentConfig make_global_mode(ExperimentConfig cfg); // absolute RA grid ("w/o LC")

struct AblationRow {
    std::string variant;  // "w/o LC", "radar-only", "full"
    eval::EvalReport report;
};

struct AblationResult {
    std::vector<AblationRow> rows;  // ordered: w/o LC, radar-only, full
    std::uint64_t frames_hash = 0;  // hash of the shared frame files
};

// Trains and evaluates the three variants on identical data (materialized to
// frame files under work_dir and hash-checked between runs).
AblationResult run_ablation(const ExperimentConfig& cfg, const std::string& work_dir,
                            const std::function<void(const std::string&)>& log = nullptr);

std::string ablation_csv(const AblationResult& res);
std::string ablation_table(const AblationResult& res);

enum class PresetKind { TrainEval, Overfit, Ablation, NoiseSweep };

PresetKind preset_kind_from_string(const std::string& s);
std::string to_string(PresetKind k);

struct MetricRange {
    double lo = 0.0;
    double hi = 0.0;
};

struct Preset {
    std::string name;
    PresetKind kind = PresetKind::TrainEval;
    ExperimentConfig cfg;
    std::map<std::string, MetricRange> expected;
    std::vector<double> sweep_sigmas;  // NoiseSweep only
};

struct Manifest {
    std::map<std::string, Preset> presets;
};

Manifest load_manifest(const std::string& path);
Manifest manifest_from_json_text(const std::string& text);
std::string manifest_to_json_text(const Manifest& manifest);

struct BenchResult {
    bool pass = true;
    std::map<std::string, double> metrics;
    std::vector<std::string> failures;  // "metric=value outside [lo,hi]"
};

// Runs the preset's simulate/train/eval/ablate sequence, compares every
// measured metric against the manifest range, and writes the report bundle
// (CSVs + summary.txt) into out_dir.
BenchResult run_benchmark(const Preset& preset, const std::string& out_dir,
                          const std::function<void(const std::string&)>& log = nullptr);

// The four shipped presets with their pinned seeds (expected ranges empty;
// the committed manifest carries the measured ones).
Manifest default_manifest();

}  // namespace rofusion::bench
