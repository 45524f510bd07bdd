#include "vlalab/sim/instruction.hpp"

#include <array>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace vlalab::sim {

namespace {

constexpr int kColorBase = 20;   // red green blue yellow magenta cyan
constexpr int kShapeBase = 26;   // disc square triangle
constexpr int kRegionBase = 29;  // left right top bottom center

const std::vector<std::string> kVocab = {
    "<pad>", "pick", "the",  "into",   "region", "move",    "put",  "to",       "area",   "place", "in",
    "zone",  "bring", "toward", "side", "at",     "grab",    "lift", "carry",    "drop",   "red",   "green",
    "blue",  "yellow", "magenta", "cyan", "disc",  "square", "triangle", "left", "right",  "top",   "bottom",
    "center"};

// Placeholder ids in templates: -1 color, -2 shape, -3 region.
const std::array<std::array<int, kInstructionLength>, kNumTemplates> kTemplates = {{
    {1, 2, -1, -2, 3, 2, -3, 4},    // pick the C S into the R region
    {5, 2, -1, -2, 7, 2, -3, 8},    // move the C S to the R area
    {6, 2, -1, -2, 10, 2, -3, 11},  // put the C S in the R zone
    {12, 2, -1, -2, 13, 2, -3, 14}, // bring the C S toward the R side
    {9, 2, -1, -2, 15, 2, -3, 4},   // place the C S at the R region
    {18, 2, -1, -2, 7, 2, -3, 11},  // carry the C S to the R zone
}};

const std::vector<std::string> kRegionNames = {"left", "right", "top", "bottom", "center"};

}  // namespace

const std::vector<std::string>& vocabulary() { return kVocab; }

std::vector<int> encode_instruction(int template_id, const InstructionTriple& triple) {
    if (template_id < 0 || template_id >= kNumTemplates)
        throw std::invalid_argument("encode_instruction: unknown template " + std::to_string(template_id));
    if (triple.color < 0 || triple.color >= 6 || triple.shape < 0 || triple.shape >= 3 || triple.region < 0 ||
        triple.region >= kNumRegions)
        throw std::invalid_argument("encode_instruction: triple out of range");
    std::vector<int> out;
    out.reserve(kInstructionLength);
    for (int t : kTemplates[static_cast<size_t>(template_id)]) {
        if (t == -1)
            out.push_back(kColorBase + triple.color);
        else if (t == -2)
            out.push_back(kShapeBase + triple.shape);
        else if (t == -3)
            out.push_back(kRegionBase + triple.region);
        else
            out.push_back(t);
    }
    return out;
}

InstructionTriple decode_instruction(const std::vector<int>& tokens) {
    int color = -1, shape = -1, region = -1;
    for (int t : tokens) {
        if (t >= kColorBase && t < kColorBase + 6) {
            if (color >= 0) throw std::invalid_argument("decode_instruction: more than one color token");
            color = t - kColorBase;
        } else if (t >= kShapeBase && t < kShapeBase + 3) {
            if (shape >= 0) throw std::invalid_argument("decode_instruction: more than one shape token");
            shape = t - kShapeBase;
        } else if (t >= kRegionBase && t < kRegionBase + kNumRegions) {
            if (region >= 0) throw std::invalid_argument("decode_instruction: more than one region token");
            region = t - kRegionBase;
        } else if (t < 0 || t >= static_cast<int>(kVocab.size())) {
            throw std::invalid_argument("decode_instruction: token " + std::to_string(t) + " outside vocabulary");
        }
    }
    if (color < 0 || shape < 0 || region < 0)
        throw std::invalid_argument("decode_instruction: sequence does not name a full (color, shape, region) triple");
    return {color, shape, region};
}

std::string instruction_text(const std::vector<int>& tokens) {
    std::ostringstream os;
    bool first = true;
    for (int t : tokens) {
        if (t == 0) continue;
        os << (first ? "" : " ") << kVocab[static_cast<size_t>(t)];
        first = false;
    }
    return os.str();
}

std::pair<float, float> region_anchor(int region_id) {
    switch (region_id) {
        case 0: return {0.15f, 0.5f};   // left
        case 1: return {0.85f, 0.5f};   // right
        case 2: return {0.5f, 0.15f};   // top
        case 3: return {0.5f, 0.85f};   // bottom
        case 4: return {0.5f, 0.5f};    // center
        default: throw std::invalid_argument("region_anchor: unknown region " + std::to_string(region_id));
    }
}

const std::vector<std::string>& region_names() { return kRegionNames; }

}  // namespace vlalab::sim
