#pragma once

#include <string>
#include <vector>

namespace vlalab::sim {

// Fixed instruction vocabulary (< 64 tokens). Template 0 is the training
// phrasing; templates 1..5 are held-out paraphrases realizing the same
// (color, shape, region) triple.
struct InstructionTriple {
    int color = 0;
    int shape = 0;
    int region = 0;
};

constexpr int kInstructionLength = 8;
constexpr int kNumTemplates = 6;
constexpr int kNumRegions = 5;

const std::vector<std::string>& vocabulary();

std::vector<int> encode_instruction(int template_id, const InstructionTriple& triple);

// Rejects sequences that do not name exactly one color, shape and region.
InstructionTriple decode_instruction(const std::vector<int>& tokens);

std::string instruction_text(const std::vector<int>& tokens);

// Region anchor in world coordinates (y grows downward, matching pixel rows).
struct Vec2;
std::pair<float, float> region_anchor(int region_id);
const std::vector<std::string>& region_names();

}  // namespace vlalab::sim
