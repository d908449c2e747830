#include "bioqa/trainer.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "bioqa/errors.hpp"
#include "bioqa/heads.hpp"

namespace bioqa {

namespace {

void check_features(const std::vector<Feature>& features, QType qtype, int stage) {
  if (features.empty())
    throw TrainError("train: stage " + std::to_string(stage) + " has no features");
  for (const auto& f : features) {
    if (qtype == QType::yesno) {
      if (!f.yes_label)
        throw TrainError("train: feature " + f.pair_id + " lacks a yes/no label");
    } else if (!f.start_position || !f.end_position) {
      throw TrainError("train: feature " + f.pair_id + " lacks span supervision");
    }
  }
}

}  // namespace

TrainResult train(ModelParams& model, const std::vector<std::vector<Feature>>& stages,
                  const TrainConfig& cfg) {
  if (stages.empty()) throw TrainError("train: no stages");
  if (cfg.batch_size < 1) throw TrainError("train: batch_size must be >= 1");

  std::mt19937_64 rng(cfg.seed);
  TrainResult result;

  EncoderParams enc_grads = EncoderParams::zeros_like(model.encoder);
  HeadParams head_grads = HeadParams::zeros_like(model.heads);
  auto enc_values = model.encoder.named_params();
  auto enc_grad_refs = enc_grads.named_params();
  auto head_values = model.heads.named_params();
  auto head_grad_refs = head_grads.named_params();

  auto zero_grads = [&]() {
    for (auto& [name, g] : enc_grad_refs) g->setZero();
    for (auto& [name, g] : head_grad_refs) g->setZero();
  };
  auto apply_update = [&]() {
    for (std::size_t i = 0; i < enc_values.size(); ++i)
      *enc_values[i].second -= cfg.learning_rate * *enc_grad_refs[i].second;
    for (std::size_t i = 0; i < head_values.size(); ++i)
      *head_values[i].second -= cfg.learning_rate * *head_grad_refs[i].second;
  };

  for (int stage = 0; stage < static_cast<int>(stages.size()); ++stage) {
    const std::vector<Feature>& features = stages[stage];
    check_features(features, cfg.qtype, stage);

    std::vector<std::size_t> order(features.size());

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      // shuffle from identity so the epoch order is a function of the RNG
      // state alone, independent of stage boundaries
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      for (std::size_t i = order.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(order[i - 1], order[pick(rng)]);
      }

      double epoch_loss = 0.0;
      std::size_t seen = 0;
      for (std::size_t batch_start = 0; batch_start < order.size();
           batch_start += cfg.batch_size) {
        const std::size_t batch_end =
            std::min(order.size(), batch_start + cfg.batch_size);
        const int n = static_cast<int>(batch_end - batch_start);
        zero_grads();

        for (std::size_t bi = batch_start; bi < batch_end; ++bi) {
          const Feature& f = features[order[bi]];
          EncoderActivations acts;
          EncoderOutput out = encoder_forward(model.encoder, f, &acts);

          Eigen::MatrixXd d_token_reps;
          double item_loss = 0.0;
          if (cfg.qtype == QType::yesno) {
            YesNoGradients g = yesno_loss_backward(out, model.heads, *f.yes_label, n);
            head_grads.w += g.d_w;
            d_token_reps = std::move(g.d_token_reps);
            item_loss = g.loss;
          } else {
            SpanGradients g = span_loss_backward(out, model.heads, f.passage_mask(),
                                                 *f.start_position, *f.end_position, n);
            head_grads.s += g.d_s;
            head_grads.e += g.d_e;
            d_token_reps = std::move(g.d_token_reps);
            item_loss = g.loss;
          }
          if (!std::isfinite(item_loss))
            throw TrainError("train: non-finite loss at stage " + std::to_string(stage) +
                             " epoch " + std::to_string(epoch) + " feature " + f.pair_id);
          encoder_backward(model.encoder, acts, d_token_reps, enc_grads);
          epoch_loss += item_loss;
          ++seen;
        }
        apply_update();
      }
      result.trace.push_back({stage, epoch, epoch_loss / static_cast<double>(seen)});
    }
  }
  return result;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossPoint>& trace) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "epoch,stage,mean_loss\n";
  out.precision(17);
  for (const auto& p : trace) out << p.epoch << "," << p.stage << "," << p.mean_loss << "\n";
}

}  // namespace bioqa
