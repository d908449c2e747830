#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "bioqa/bioasq.hpp"
#include "bioqa/checkpoint.hpp"
#include "bioqa/tokenizer.hpp"

namespace bioqa {

struct TrainConfig {
  int epochs = 50;  // per stage
  int batch_size = 8;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  QType qtype = QType::factoid;
};

struct LossPoint {
  int stage = 0;
  int epoch = 0;
  double mean_loss = 0.0;
};

struct TrainResult {
  std::vector<LossPoint> trace;
};

// Mini-batch gradient descent with a constant learning rate. Stages run in
// order, carrying parameters between them; one RNG seeded once drives every
// per-epoch shuffle, so two stages over the same data equal one stage with
// doubled epochs. Throws TrainError on empty stages, feature/qtype
// mismatches, or a non-finite loss.
TrainResult train(ModelParams& model, const std::vector<std::vector<Feature>>& stages,
                  const TrainConfig& cfg);

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossPoint>& trace);

}  // namespace bioqa
