#pragma once

#include <filesystem>

#include "bioqa/encoder.hpp"
#include "bioqa/heads.hpp"

namespace bioqa {

struct ModelParams {
  EncoderParams encoder;
  HeadParams heads;
};

// JSON checkpoint: {"format": "bioqa-checkpoint-v1",
//                   "encoder_config": {hidden, layers, heads, ffn, vocab, max_positions},
//                   "params": {"<name>": {"rows": r, "cols": c, "data": [row-major...]}}}
// Doubles round-trip exactly through the JSON writer.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& model);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace bioqa
