#include "bioqa/heads.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "bioqa/errors.hpp"

namespace bioqa {

namespace {

constexpr double kProbClamp = 1e-12;

double clamp_prob(double p) {
  return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

}  // namespace

HeadParams HeadParams::init(int hidden, std::uint64_t seed) {
  HeadParams hp;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 0.02);
  auto fill = [&](Eigen::MatrixXd& m) {
    m.resize(1, hidden);
    for (int j = 0; j < hidden; ++j) {
      double v;
      do {
        v = dist(rng);
      } while (std::abs(v) > 0.04);
      m(0, j) = v;
    }
  };
  fill(hp.s);
  fill(hp.e);
  fill(hp.w);
  return hp;
}

HeadParams HeadParams::zeros_like(const HeadParams& other) {
  HeadParams hp;
  hp.s = Eigen::MatrixXd::Zero(1, other.s.cols());
  hp.e = Eigen::MatrixXd::Zero(1, other.e.cols());
  hp.w = Eigen::MatrixXd::Zero(1, other.w.cols());
  return hp;
}

std::vector<std::pair<std::string, Eigen::MatrixXd*>> HeadParams::named_params() {
  return {{"head.s", &s}, {"head.e", &e}, {"head.w", &w}};
}

std::vector<std::pair<std::string, const Eigen::MatrixXd*>> HeadParams::named_params() const {
  return {{"head.s", &s}, {"head.e", &e}, {"head.w", &w}};
}

std::vector<double> masked_softmax(const std::vector<double>& logits,
                                   const std::vector<bool>& valid) {
  if (logits.size() != valid.size())
    throw Error("masked_softmax: logits and mask length mismatch");
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (valid[i]) max_logit = std::max(max_logit, logits[i]);
  if (!std::isfinite(max_logit)) throw Error("masked_softmax: no valid positions");

  std::vector<double> p(logits.size(), 0.0);
  double denom = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!valid[i]) continue;
    p[i] = std::exp(logits[i] - max_logit);
    denom += p[i];
  }
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (valid[i]) p[i] /= denom;
  return p;
}

SpanDistributions span_distributions(const EncoderOutput& out, const HeadParams& hp,
                                     const std::vector<bool>& valid_mask) {
  const Eigen::Index L = out.token_reps.rows();
  if (static_cast<std::size_t>(L) != valid_mask.size())
    throw Error("span_distributions: mask length mismatch");
  Eigen::VectorXd start_logits = out.token_reps * hp.s.row(0).transpose();
  Eigen::VectorXd end_logits = out.token_reps * hp.e.row(0).transpose();
  SpanDistributions d;
  d.p_start = masked_softmax(std::vector<double>(start_logits.data(), start_logits.data() + L),
                             valid_mask);
  d.p_end = masked_softmax(std::vector<double>(end_logits.data(), end_logits.data() + L),
                           valid_mask);
  return d;
}

double yes_probability(const EncoderOutput& out, const HeadParams& hp) {
  const double z = out.cls_rep().dot(hp.w.row(0));
  return 1.0 / (1.0 + std::exp(-z));
}

double span_loss(const std::vector<SpanDistributions>& batch,
                 const std::vector<std::pair<int, int>>& gold) {
  if (batch.empty() || batch.size() != gold.size())
    throw Error("span_loss: batch and gold size mismatch");
  const double n = static_cast<double>(batch.size());
  double loss_start = 0.0, loss_end = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto [ys, ye] = gold[i];
    const auto& d = batch[i];
    if (ys < 0 || ye < 0 || ys >= static_cast<int>(d.p_start.size()) ||
        ye >= static_cast<int>(d.p_end.size()))
      throw Error("span_loss: gold position out of range");
    if (d.p_start[ys] <= 0.0 || d.p_end[ye] <= 0.0)
      throw Error("span_loss: gold position has zero probability (masked out)");
    loss_start -= std::log(d.p_start[ys]);
    loss_end -= std::log(d.p_end[ye]);
  }
  return (loss_start / n + loss_end / n) / 2.0;
}

double yesno_loss(double p, int y) {
  const double pc = clamp_prob(p);
  return -(y * std::log(pc) + (1 - y) * std::log(1.0 - pc));
}

SpanGradients span_loss_backward(const EncoderOutput& out, const HeadParams& hp,
                                 const std::vector<bool>& valid_mask, int gold_start,
                                 int gold_end, int batch_size) {
  const Eigen::Index L = out.token_reps.rows();
  SpanDistributions d = span_distributions(out, hp, valid_mask);
  if (!valid_mask[gold_start] || !valid_mask[gold_end])
    throw Error("span_loss_backward: gold position masked out");

  SpanGradients g;
  g.loss = (-std::log(d.p_start[gold_start]) - std::log(d.p_end[gold_end])) / 2.0;

  // dLoss/dlogit = (p - onehot) / (2 N) for each of the two softmaxes
  const double scale = 1.0 / (2.0 * batch_size);
  Eigen::VectorXd d_start = Eigen::VectorXd::Zero(L);
  Eigen::VectorXd d_end = Eigen::VectorXd::Zero(L);
  for (Eigen::Index i = 0; i < L; ++i) {
    if (!valid_mask[i]) continue;
    d_start(i) = d.p_start[i] * scale;
    d_end(i) = d.p_end[i] * scale;
  }
  d_start(gold_start) -= scale;
  d_end(gold_end) -= scale;

  g.d_s = d_start.transpose() * out.token_reps;  // 1 x H
  g.d_e = d_end.transpose() * out.token_reps;
  g.d_token_reps = d_start * hp.s.row(0) + d_end * hp.e.row(0);  // L x H
  return g;
}

YesNoGradients yesno_loss_backward(const EncoderOutput& out, const HeadParams& hp, int y,
                                   int batch_size) {
  YesNoGradients g;
  g.probability = yes_probability(out, hp);
  g.loss = yesno_loss(g.probability, y);
  const double dz = (g.probability - y) / batch_size;
  g.d_w = dz * out.cls_rep();
  g.d_token_reps = Eigen::MatrixXd::Zero(out.token_reps.rows(), out.token_reps.cols());
  g.d_token_reps.row(0) = dz * hp.w.row(0);
  return g;
}

}  // namespace bioqa
