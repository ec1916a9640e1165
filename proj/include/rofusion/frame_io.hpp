#pragma once

#include <string>
#include <vector>

#include "rofusion/sim.hpp"
#include "rofusion/types.hpp"

namespace rofusion::io {

// Frame files are line-delimited JSON, schema "rofusion-frame/1", numbers at
// full round-trip precision. Feature fields are not serialized: the stored
// seed regenerates them via synth_features.
std::string frame_to_json_line(const Frame& frame);
Frame frame_from_json_line(const std::string& line);

// Atomic (temp + rename) whole-file write.
void write_frames(const std::string& path, const std::vector<Frame>& frames);

// Loads frames and regenerates their feature fields from cfg + stored seeds.
std::vector<Frame> read_frames(const std::string& path, const sim::SimConfig& cfg);

void write_text_atomic(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

std::uint64_t hash_file(const std::string& path);

}  // namespace rofusion::io
