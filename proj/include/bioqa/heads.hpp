#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bioqa/encoder.hpp"

namespace bioqa {

// Trainable task vectors: S scores span starts, E span ends, W drives the
// [CLS] sigmoid for yes/no.
struct HeadParams {
  Eigen::MatrixXd s;  // 1 x H
  Eigen::MatrixXd e;  // 1 x H
  Eigen::MatrixXd w;  // 1 x H

  static HeadParams init(int hidden, std::uint64_t seed);
  static HeadParams zeros_like(const HeadParams& other);
  std::vector<std::pair<std::string, Eigen::MatrixXd*>> named_params();
  std::vector<std::pair<std::string, const Eigen::MatrixXd*>> named_params() const;
};

struct SpanDistributions {
  std::vector<double> p_start;
  std::vector<double> p_end;
};

// Stable softmax over the valid positions only; invalid positions get
// probability zero. Throws when no position is valid.
std::vector<double> masked_softmax(const std::vector<double>& logits,
                                   const std::vector<bool>& valid);

// P_i = softmax over valid i of S.T_i (and E.T_j for ends). The softmax is
// restricted to passage tokens so spans cannot start on [CLS], question or
// padding positions.
SpanDistributions span_distributions(const EncoderOutput& out, const HeadParams& hp,
                                     const std::vector<bool>& valid_mask);

// P_yes = sigmoid(C . W) with C the [CLS] representation.
double yes_probability(const EncoderOutput& out, const HeadParams& hp);

// (Loss_start + Loss_end) / 2 with each term the mean negative
// log-likelihood of the gold position over the mini-batch.
double span_loss(const std::vector<SpanDistributions>& batch,
                 const std::vector<std::pair<int, int>>& gold);

// Binary cross-entropy; p is clamped to [1e-12, 1 - 1e-12] before the logs.
double yesno_loss(double p, int y);

// Single-item gradients, scaled for a mini-batch of size batch_size.
struct SpanGradients {
  Eigen::MatrixXd d_s, d_e;        // 1 x H
  Eigen::MatrixXd d_token_reps;    // L x H
  double loss = 0.0;               // this item's (unscaled) loss contribution
};

SpanGradients span_loss_backward(const EncoderOutput& out, const HeadParams& hp,
                                 const std::vector<bool>& valid_mask, int gold_start,
                                 int gold_end, int batch_size);

struct YesNoGradients {
  Eigen::MatrixXd d_w;             // 1 x H
  Eigen::MatrixXd d_token_reps;    // L x H (only the [CLS] row is nonzero)
  double loss = 0.0;
  double probability = 0.0;
};

YesNoGradients yesno_loss_backward(const EncoderOutput& out, const HeadParams& hp, int y,
                                   int batch_size);

}  // namespace bioqa
