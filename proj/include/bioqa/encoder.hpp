#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bioqa/tokenizer.hpp"

namespace bioqa {

struct EncoderConfig {
  int hidden = 64;
  int layers = 2;
  int heads = 2;
  int ffn = 256;
  int vocab = 0;
  int max_positions = 512;
};

// All tensors are MatrixXd; vectors are stored 1 x N so one visitor covers
// every parameter (checkpointing, SGD, finite-difference probes).
struct EncoderLayerParams {
  Eigen::MatrixXd wq, wk, wv, wo;  // H x H
  Eigen::MatrixXd bq, bk, bv, bo;  // 1 x H
  Eigen::MatrixXd ln1_gamma, ln1_beta;
  Eigen::MatrixXd w1, b1;  // H x F, 1 x F
  Eigen::MatrixXd w2, b2;  // F x H, 1 x H
  Eigen::MatrixXd ln2_gamma, ln2_beta;
};

struct EncoderParams {
  EncoderConfig cfg;
  Eigen::MatrixXd tok_emb;  // vocab x H
  Eigen::MatrixXd seg_emb;  // 2 x H
  Eigen::MatrixXd pos_emb;  // max_positions x H
  Eigen::MatrixXd emb_ln_gamma, emb_ln_beta;  // 1 x H
  std::vector<EncoderLayerParams> layers;

  // Truncated-normal(0, 0.02) weights clipped at two sigma, zero biases,
  // unit layer-norm gains; deterministic under seed.
  static EncoderParams init(const EncoderConfig& cfg, std::uint64_t seed);
  static EncoderParams zeros_like(const EncoderParams& other);

  std::vector<std::pair<std::string, Eigen::MatrixXd*>> named_params();
  std::vector<std::pair<std::string, const Eigen::MatrixXd*>> named_params() const;
};

struct EncoderOutput {
  Eigen::MatrixXd token_reps;  // L x H
  Eigen::RowVectorXd cls_rep() const { return token_reps.row(0); }
};

struct LayerNormCache {
  Eigen::MatrixXd input;    // pre-normalization activations
  Eigen::MatrixXd x_hat;    // normalized, before gain/shift
  Eigen::VectorXd inv_std;  // per row
};

struct EncoderLayerCache {
  Eigen::MatrixXd x_in;
  Eigen::MatrixXd q, k, v;
  std::vector<Eigen::MatrixXd> attn;  // per head, L x L row-softmax
  Eigen::MatrixXd ctx;
  LayerNormCache ln1;
  Eigen::MatrixXd ln1_out;
  Eigen::MatrixXd ffn_pre;  // L x F, before activation
  Eigen::MatrixXd ffn_act;
  LayerNormCache ln2;
  Eigen::MatrixXd out;
};

// Everything the backward pass needs from one forward call.
struct EncoderActivations {
  std::vector<int> input_ids, segment_ids;
  int valid_len = 0;
  LayerNormCache emb_ln;
  std::vector<EncoderLayerCache> layers;
};

// Deterministic forward pass; positions at and beyond feature.valid_len are
// masked out of attention so padding cannot influence valid rows.
EncoderOutput encoder_forward(const EncoderParams& params, const Feature& feature,
                              EncoderActivations* acts = nullptr);

// Accumulates parameter gradients for one feature into grads (shaped via
// zeros_like). d_token_reps is dLoss/d token_reps.
void encoder_backward(const EncoderParams& params, const EncoderActivations& acts,
                      const Eigen::MatrixXd& d_token_reps, EncoderParams& grads);

double gelu(double x);
double gelu_grad(double x);

}  // namespace bioqa
