#include "bioqa/encoder.hpp"

#include <cmath>
#include <random>

#include "bioqa/errors.hpp"

namespace bioqa {

namespace {

constexpr double kLnEps = 1e-12;
constexpr double kMaskValue = -1e30;

Eigen::MatrixXd layer_norm(const Eigen::MatrixXd& x, const Eigen::MatrixXd& gamma,
                           const Eigen::MatrixXd& beta, LayerNormCache* cache) {
  const Eigen::Index rows = x.rows(), cols = x.cols();
  Eigen::MatrixXd x_hat(rows, cols);
  Eigen::VectorXd inv_std(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double mean = x.row(i).mean();
    const double var = (x.row(i).array() - mean).square().mean();
    const double is = 1.0 / std::sqrt(var + kLnEps);
    inv_std(i) = is;
    x_hat.row(i) = (x.row(i).array() - mean) * is;
  }
  Eigen::MatrixXd y = x_hat;
  const Eigen::RowVectorXd g = gamma.row(0);
  const Eigen::RowVectorXd b = beta.row(0);
  y.array().rowwise() *= g.array();
  y.rowwise() += b;
  if (cache) {
    cache->input = x;
    cache->x_hat = x_hat;
    cache->inv_std = inv_std;
  }
  return y;
}

// Returns d_input; accumulates gamma/beta gradients.
Eigen::MatrixXd layer_norm_backward(const LayerNormCache& cache, const Eigen::MatrixXd& gamma,
                                    const Eigen::MatrixXd& dy, Eigen::MatrixXd& dgamma,
                                    Eigen::MatrixXd& dbeta) {
  const Eigen::Index rows = dy.rows(), cols = dy.cols();
  dgamma.row(0) += (dy.array() * cache.x_hat.array()).colwise().sum().matrix();
  dbeta.row(0) += dy.colwise().sum();
  Eigen::MatrixXd dx(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Eigen::RowVectorXd dxhat = dy.row(i).cwiseProduct(gamma.row(0));
    const Eigen::RowVectorXd xhat = cache.x_hat.row(i);
    const double m1 = dxhat.mean();
    const double m2 = dxhat.cwiseProduct(xhat).mean();
    dx.row(i) = cache.inv_std(i) * (dxhat.array() - m1 - xhat.array() * m2).matrix();
  }
  return dx;
}

Eigen::MatrixXd row_softmax(const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd out(scores.rows(), scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const double m = scores.row(i).maxCoeff();
    Eigen::ArrayXd e = (scores.row(i).array() - m).exp();
    out.row(i) = (e / e.sum()).matrix();
  }
  return out;
}

void trunc_normal_fill(Eigen::MatrixXd& m, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, sigma);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      double v;
      do {
        v = dist(rng);
      } while (std::abs(v) > 2.0 * sigma);
      m(i, j) = v;
    }
}

}  // namespace

double gelu(double x) {
  return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
}

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return cdf + x * pdf;
}

EncoderParams EncoderParams::init(const EncoderConfig& cfg, std::uint64_t seed) {
  if (cfg.vocab <= 0) throw Error("encoder: vocab size must be set before init");
  if (cfg.hidden % cfg.heads != 0) throw Error("encoder: hidden size not divisible by heads");
  EncoderParams p;
  p.cfg = cfg;
  const int h = cfg.hidden, f = cfg.ffn;
  std::mt19937_64 rng(seed);
  auto weight = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    trunc_normal_fill(m, 0.02, rng);
    return m;
  };
  p.tok_emb = weight(cfg.vocab, h);
  p.seg_emb = weight(2, h);
  p.pos_emb = weight(cfg.max_positions, h);
  p.emb_ln_gamma = Eigen::MatrixXd::Ones(1, h);
  p.emb_ln_beta = Eigen::MatrixXd::Zero(1, h);
  p.layers.resize(cfg.layers);
  for (auto& l : p.layers) {
    l.wq = weight(h, h);
    l.wk = weight(h, h);
    l.wv = weight(h, h);
    l.wo = weight(h, h);
    l.bq = Eigen::MatrixXd::Zero(1, h);
    l.bk = Eigen::MatrixXd::Zero(1, h);
    l.bv = Eigen::MatrixXd::Zero(1, h);
    l.bo = Eigen::MatrixXd::Zero(1, h);
    l.ln1_gamma = Eigen::MatrixXd::Ones(1, h);
    l.ln1_beta = Eigen::MatrixXd::Zero(1, h);
    l.w1 = weight(h, f);
    l.b1 = Eigen::MatrixXd::Zero(1, f);
    l.w2 = weight(f, h);
    l.b2 = Eigen::MatrixXd::Zero(1, h);
    l.ln2_gamma = Eigen::MatrixXd::Ones(1, h);
    l.ln2_beta = Eigen::MatrixXd::Zero(1, h);
  }
  return p;
}

EncoderParams EncoderParams::zeros_like(const EncoderParams& other) {
  EncoderParams p;
  p.cfg = other.cfg;
  auto z = [](const Eigen::MatrixXd& m) { return Eigen::MatrixXd::Zero(m.rows(), m.cols()); };
  p.tok_emb = z(other.tok_emb);
  p.seg_emb = z(other.seg_emb);
  p.pos_emb = z(other.pos_emb);
  p.emb_ln_gamma = z(other.emb_ln_gamma);
  p.emb_ln_beta = z(other.emb_ln_beta);
  p.layers.resize(other.layers.size());
  for (std::size_t i = 0; i < other.layers.size(); ++i) {
    const auto& o = other.layers[i];
    auto& l = p.layers[i];
    l.wq = z(o.wq);
    l.wk = z(o.wk);
    l.wv = z(o.wv);
    l.wo = z(o.wo);
    l.bq = z(o.bq);
    l.bk = z(o.bk);
    l.bv = z(o.bv);
    l.bo = z(o.bo);
    l.ln1_gamma = z(o.ln1_gamma);
    l.ln1_beta = z(o.ln1_beta);
    l.w1 = z(o.w1);
    l.b1 = z(o.b1);
    l.w2 = z(o.w2);
    l.b2 = z(o.b2);
    l.ln2_gamma = z(o.ln2_gamma);
    l.ln2_beta = z(o.ln2_beta);
  }
  return p;
}

namespace {

template <typename Params, typename Mat>
std::vector<std::pair<std::string, Mat*>> collect_params(Params& p) {
  std::vector<std::pair<std::string, Mat*>> out;
  out.emplace_back("tok_emb", &p.tok_emb);
  out.emplace_back("seg_emb", &p.seg_emb);
  out.emplace_back("pos_emb", &p.pos_emb);
  out.emplace_back("emb_ln_gamma", &p.emb_ln_gamma);
  out.emplace_back("emb_ln_beta", &p.emb_ln_beta);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    auto& l = p.layers[i];
    const std::string prefix = "layers." + std::to_string(i) + ".";
    out.emplace_back(prefix + "wq", &l.wq);
    out.emplace_back(prefix + "wk", &l.wk);
    out.emplace_back(prefix + "wv", &l.wv);
    out.emplace_back(prefix + "wo", &l.wo);
    out.emplace_back(prefix + "bq", &l.bq);
    out.emplace_back(prefix + "bk", &l.bk);
    out.emplace_back(prefix + "bv", &l.bv);
    out.emplace_back(prefix + "bo", &l.bo);
    out.emplace_back(prefix + "ln1_gamma", &l.ln1_gamma);
    out.emplace_back(prefix + "ln1_beta", &l.ln1_beta);
    out.emplace_back(prefix + "w1", &l.w1);
    out.emplace_back(prefix + "b1", &l.b1);
    out.emplace_back(prefix + "w2", &l.w2);
    out.emplace_back(prefix + "b2", &l.b2);
    out.emplace_back(prefix + "ln2_gamma", &l.ln2_gamma);
    out.emplace_back(prefix + "ln2_beta", &l.ln2_beta);
  }
  return out;
}

}  // namespace

std::vector<std::pair<std::string, Eigen::MatrixXd*>> EncoderParams::named_params() {
  return collect_params<EncoderParams, Eigen::MatrixXd>(*this);
}

std::vector<std::pair<std::string, const Eigen::MatrixXd*>> EncoderParams::named_params() const {
  return collect_params<const EncoderParams, const Eigen::MatrixXd>(*this);
}

EncoderOutput encoder_forward(const EncoderParams& params, const Feature& feature,
                              EncoderActivations* acts) {
  const EncoderConfig& cfg = params.cfg;
  const int L = static_cast<int>(feature.input_ids.size());
  const int H = cfg.hidden;
  const int heads = cfg.heads;
  const int dh = H / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const int valid = feature.valid_len;

  if (L > cfg.max_positions)
    throw Error("encoder: sequence length " + std::to_string(L) + " exceeds max_positions " +
                std::to_string(cfg.max_positions));

  Eigen::MatrixXd x(L, H);
  for (int i = 0; i < L; ++i) {
    const int id = feature.input_ids[i];
    const int seg = feature.segment_ids[i];
    if (id < 0 || id >= cfg.vocab)
      throw Error("encoder: token id " + std::to_string(id) + " out of range at position " +
                  std::to_string(i));
    if (seg < 0 || seg > 1)
      throw Error("encoder: segment id out of range at position " + std::to_string(i));
    x.row(i) = params.tok_emb.row(id) + params.seg_emb.row(seg) + params.pos_emb.row(i);
  }

  if (acts) {
    acts->input_ids = feature.input_ids;
    acts->segment_ids = feature.segment_ids;
    acts->valid_len = valid;
    acts->layers.clear();
    acts->layers.resize(params.layers.size());
  }

  x = layer_norm(x, params.emb_ln_gamma, params.emb_ln_beta, acts ? &acts->emb_ln : nullptr);

  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    const auto& l = params.layers[li];
    EncoderLayerCache* c = acts ? &acts->layers[li] : nullptr;
    if (c) c->x_in = x;

    Eigen::MatrixXd q = (x * l.wq).rowwise() + l.bq.row(0);
    Eigen::MatrixXd k = (x * l.wk).rowwise() + l.bk.row(0);
    Eigen::MatrixXd v = (x * l.wv).rowwise() + l.bv.row(0);
    if (c) {
      c->q = q;
      c->k = k;
      c->v = v;
      c->attn.resize(heads);
    }

    Eigen::MatrixXd ctx(L, H);
    for (int h = 0; h < heads; ++h) {
      const auto qh = q.middleCols(h * dh, dh);
      const auto kh = k.middleCols(h * dh, dh);
      const auto vh = v.middleCols(h * dh, dh);
      Eigen::MatrixXd scores = qh * kh.transpose() * scale;
      for (int j = valid; j < L; ++j) scores.col(j).setConstant(kMaskValue);
      Eigen::MatrixXd a = row_softmax(scores);
      ctx.middleCols(h * dh, dh) = a * vh;
      if (c) c->attn[h] = std::move(a);
    }
    if (c) c->ctx = ctx;

    Eigen::MatrixXd attn_out = (ctx * l.wo).rowwise() + l.bo.row(0);
    Eigen::MatrixXd ln1_out =
        layer_norm(x + attn_out, l.ln1_gamma, l.ln1_beta, c ? &c->ln1 : nullptr);
    if (c) c->ln1_out = ln1_out;

    Eigen::MatrixXd ffn_pre = (ln1_out * l.w1).rowwise() + l.b1.row(0);
    Eigen::MatrixXd ffn_act = ffn_pre.unaryExpr([](double t) { return gelu(t); });
    if (c) {
      c->ffn_pre = ffn_pre;
      c->ffn_act = ffn_act;
    }
    Eigen::MatrixXd ffn_out = (ffn_act * l.w2).rowwise() + l.b2.row(0);

    x = layer_norm(ln1_out + ffn_out, l.ln2_gamma, l.ln2_beta, c ? &c->ln2 : nullptr);
    if (c) c->out = x;
  }

  if (!x.allFinite()) throw Error("encoder: non-finite activations");
  return EncoderOutput{std::move(x)};
}

void encoder_backward(const EncoderParams& params, const EncoderActivations& acts,
                      const Eigen::MatrixXd& d_token_reps, EncoderParams& grads) {
  const EncoderConfig& cfg = params.cfg;
  const int L = static_cast<int>(acts.input_ids.size());
  const int H = cfg.hidden;
  const int heads = cfg.heads;
  const int dh = H / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Eigen::MatrixXd d_out = d_token_reps;

  for (int li = static_cast<int>(params.layers.size()) - 1; li >= 0; --li) {
    const auto& l = params.layers[li];
    auto& g = grads.layers[li];
    const auto& c = acts.layers[li];

    Eigen::MatrixXd d_res2 = layer_norm_backward(c.ln2, l.ln2_gamma, d_out, g.ln2_gamma,
                                                 g.ln2_beta);
    Eigen::MatrixXd d_ln1_out = d_res2;  // residual branch
    const Eigen::MatrixXd& d_ffn_out = d_res2;

    g.w2 += c.ffn_act.transpose() * d_ffn_out;
    g.b2.row(0) += d_ffn_out.colwise().sum();
    Eigen::MatrixXd d_ffn_act = d_ffn_out * l.w2.transpose();
    Eigen::MatrixXd d_ffn_pre =
        d_ffn_act.cwiseProduct(c.ffn_pre.unaryExpr([](double t) { return gelu_grad(t); }));
    g.w1 += c.ln1_out.transpose() * d_ffn_pre;
    g.b1.row(0) += d_ffn_pre.colwise().sum();
    d_ln1_out += d_ffn_pre * l.w1.transpose();

    Eigen::MatrixXd d_res1 = layer_norm_backward(c.ln1, l.ln1_gamma, d_ln1_out, g.ln1_gamma,
                                                 g.ln1_beta);
    Eigen::MatrixXd d_x = d_res1;  // residual branch
    const Eigen::MatrixXd& d_attn_out = d_res1;

    g.wo += c.ctx.transpose() * d_attn_out;
    g.bo.row(0) += d_attn_out.colwise().sum();
    Eigen::MatrixXd d_ctx = d_attn_out * l.wo.transpose();

    Eigen::MatrixXd d_q(L, H), d_k(L, H), d_v(L, H);
    for (int h = 0; h < heads; ++h) {
      const auto qh = c.q.middleCols(h * dh, dh);
      const auto kh = c.k.middleCols(h * dh, dh);
      const auto vh = c.v.middleCols(h * dh, dh);
      const Eigen::MatrixXd& a = c.attn[h];
      const auto d_ctx_h = d_ctx.middleCols(h * dh, dh);

      Eigen::MatrixXd d_a = d_ctx_h * vh.transpose();
      d_v.middleCols(h * dh, dh) = a.transpose() * d_ctx_h;

      Eigen::MatrixXd d_scores(L, L);
      for (int i = 0; i < L; ++i) {
        const double dot = d_a.row(i).dot(a.row(i));
        d_scores.row(i) = a.row(i).cwiseProduct((d_a.row(i).array() - dot).matrix());
      }
      d_q.middleCols(h * dh, dh) = d_scores * kh * scale;
      d_k.middleCols(h * dh, dh) = d_scores.transpose() * qh * scale;
    }

    g.wq += c.x_in.transpose() * d_q;
    g.bq.row(0) += d_q.colwise().sum();
    g.wk += c.x_in.transpose() * d_k;
    g.bk.row(0) += d_k.colwise().sum();
    g.wv += c.x_in.transpose() * d_v;
    g.bv.row(0) += d_v.colwise().sum();
    d_x += d_q * l.wq.transpose() + d_k * l.wk.transpose() + d_v * l.wv.transpose();

    d_out = std::move(d_x);
  }

  Eigen::MatrixXd d_emb = layer_norm_backward(acts.emb_ln, params.emb_ln_gamma, d_out,
                                              grads.emb_ln_gamma, grads.emb_ln_beta);
  for (int i = 0; i < L; ++i) {
    grads.tok_emb.row(acts.input_ids[i]) += d_emb.row(i);
    grads.seg_emb.row(acts.segment_ids[i]) += d_emb.row(i);
    grads.pos_emb.row(i) += d_emb.row(i);
  }
}

}  // namespace bioqa
