#include "battlab/model.hpp"

#include <algorithm>
#include <cmath>

namespace battlab::model {

namespace {

constexpr double kLayerNormEps = 1e-5;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return cdf + x * pdf;
}

Mat colsum(const Mat& m) {
  Mat out(1, m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(0, c) += m(r, c);
  return out;
}

/// y = scale (.) xhat + offset per row; xhat and 1/std cached for backward.
Mat layernorm_fwd(const Mat& x, const Mat& scale, const Mat& offset, Mat& xhat,
                  std::vector<double>& rstd) {
  const std::size_t rows = x.rows(), d = x.cols();
  Mat out(rows, d);
  xhat = Mat(rows, d);
  rstd.assign(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.row(r);
    double mean = 0.0;
    for (std::size_t c = 0; c < d; ++c) mean += xr[c];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double t = xr[c] - mean;
      var += t * t;
    }
    var /= static_cast<double>(d);
    const double r_std = 1.0 / std::sqrt(var + kLayerNormEps);
    rstd[r] = r_std;
    for (std::size_t c = 0; c < d; ++c) {
      const double xh = (xr[c] - mean) * r_std;
      xhat(r, c) = xh;
      out(r, c) = scale(0, c) * xh + offset(0, c);
    }
  }
  return out;
}

Mat layernorm_bwd(const Mat& dout, const Mat& xhat, const std::vector<double>& rstd,
                  const Mat& scale, Mat& dscale, Mat& doffset) {
  const std::size_t rows = dout.rows(), d = dout.cols();
  Mat dx(rows, d);
  for (std::size_t r = 0; r < rows; ++r) {
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double dxh = dout(r, c) * scale(0, c);
      m1 += dxh;
      m2 += dxh * xhat(r, c);
      dscale(0, c) += dout(r, c) * xhat(r, c);
      doffset(0, c) += dout(r, c);
    }
    m1 /= static_cast<double>(d);
    m2 /= static_cast<double>(d);
    for (std::size_t c = 0; c < d; ++c) {
      const double dxh = dout(r, c) * scale(0, c);
      dx(r, c) = (dxh - m1 - xhat(r, c) * m2) * rstd[r];
    }
  }
  return dx;
}

struct LayerCache {
  Mat ln1_xhat, ln2_xhat;
  std::vector<double> ln1_rstd, ln2_rstd;
  Mat ln1_out, ln2_out;
  Mat q, k, v;
  std::vector<Mat> attn; // per head, L x L
  Mat heads;             // concatenated head outputs before the output proj
  Mat ffn_pre, ffn_act;
  Mat mask_attn, mask_ffn; // dropout masks; empty when not training
};

struct SeqCache {
  Mat x0;
  std::vector<LayerCache> layers;
  Mat final_xhat;
  std::vector<double> final_rstd;
  std::vector<double> summary_out; // final-LN row 0
};

Mat dropout_mask(std::size_t rows, std::size_t cols, double p, Rng& rng) {
  Mat mask(rows, cols);
  const double keep = 1.0 / (1.0 - p);
  for (double& m : mask.raw()) m = rng.uniform01() < p ? 0.0 : keep;
  return mask;
}

void apply_mask(Mat& m, const Mat& mask) {
  for (std::size_t i = 0; i < m.raw().size(); ++i) m.raw()[i] *= mask.raw()[i];
}

void check_sequence(const ModelConfig& cfg, const Sequence& seq) {
  if (seq.empty()) throw ShapeError("empty sequence");
  if (seq.size() > static_cast<std::size_t>(cfg.max_seq_len))
    throw ShapeError("sequence length " + std::to_string(seq.size()) + " exceeds max_seq_len " +
                     std::to_string(cfg.max_seq_len));
  for (const auto& step : seq)
    if (step.size() != static_cast<std::size_t>(cfg.input_dim))
      throw ShapeError("feature width " + std::to_string(step.size()) + " != input_dim " +
                       std::to_string(cfg.input_dim));
}

/// Forward one sequence. Fills the cache when given; records row-stochastic
/// attention when maps is non-null. Returns the scalar prediction.
double forward_seq(const TransformerRegressor& model, const Sequence& seq, SeqCache* cache,
                   AttentionMaps* maps, Rng* dropout_rng) {
  const ModelConfig& cfg = model.config();
  const auto& params = model.parameters();
  const ParamLayout& ids = model.layout();
  const std::size_t d = static_cast<std::size_t>(cfg.d_model);
  const std::size_t n_heads = static_cast<std::size_t>(cfg.n_heads);
  const std::size_t dh = d / n_heads;
  const std::size_t L = seq.size() + 1;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  const bool drop = dropout_rng != nullptr && cfg.dropout_p > 0.0;

  const Mat& we = params[ids.embed_w].value;
  const Mat& be = params[ids.embed_b].value;
  const Mat& summary = params[ids.summary].value;
  const Mat& pe = model.positional_encoding();

  Mat x(L, d);
  for (std::size_t c = 0; c < d; ++c) x(0, c) = summary(0, c) + pe(0, c);
  for (std::size_t t = 1; t < L; ++t) {
    const auto& in = seq[t - 1];
    for (std::size_t c = 0; c < d; ++c) {
      double s = be(0, c);
      for (std::size_t i = 0; i < in.size(); ++i) s += in[i] * we(i, c);
      x(t, c) = s + pe(t, c);
    }
  }
  if (cache) {
    cache->x0 = x;
    cache->layers.resize(static_cast<std::size_t>(cfg.n_layers));
  }
  if (maps) maps->by_layer.assign(static_cast<std::size_t>(cfg.n_layers), {});

  for (int layer = 0; layer < cfg.n_layers; ++layer) {
    const LayerParamIds& lp = ids.layers[static_cast<std::size_t>(layer)];
    LayerCache local;
    LayerCache& lc = cache ? cache->layers[static_cast<std::size_t>(layer)] : local;

    lc.ln1_out = layernorm_fwd(x, params[lp.ln1_scale].value, params[lp.ln1_offset].value,
                               lc.ln1_xhat, lc.ln1_rstd);

    lc.q = matmul(lc.ln1_out, params[lp.wq].value);
    lc.k = matmul(lc.ln1_out, params[lp.wk].value);
    lc.v = matmul(lc.ln1_out, params[lp.wv].value);
    for (std::size_t r = 0; r < L; ++r)
      for (std::size_t c = 0; c < d; ++c) {
        lc.q(r, c) += params[lp.bq].value(0, c);
        lc.k(r, c) += params[lp.bk].value(0, c);
        lc.v(r, c) += params[lp.bv].value(0, c);
      }

    lc.attn.assign(n_heads, Mat());
    lc.heads = Mat(L, d);
    for (std::size_t h = 0; h < n_heads; ++h) {
      const std::size_t off = h * dh;
      Mat p(L, L);
      for (std::size_t i = 0; i < L; ++i) {
        double row_max = -1e308;
        for (std::size_t j = 0; j < L; ++j) {
          double s = 0.0;
          for (std::size_t c = 0; c < dh; ++c) s += lc.q(i, off + c) * lc.k(j, off + c);
          s *= inv_sqrt_dh;
          p(i, j) = s;
          row_max = std::max(row_max, s);
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < L; ++j) {
          p(i, j) = std::exp(p(i, j) - row_max);
          denom += p(i, j);
        }
        for (std::size_t j = 0; j < L; ++j) p(i, j) /= denom;
      }
      for (std::size_t i = 0; i < L; ++i)
        for (std::size_t j = 0; j < L; ++j) {
          const double pij = p(i, j);
          for (std::size_t c = 0; c < dh; ++c) lc.heads(i, off + c) += pij * lc.v(j, off + c);
        }
      if (maps) maps->by_layer[static_cast<std::size_t>(layer)].push_back(p);
      lc.attn[h] = std::move(p);
    }

    Mat attn_out = matmul(lc.heads, params[lp.wo].value);
    for (std::size_t r = 0; r < L; ++r)
      for (std::size_t c = 0; c < d; ++c) attn_out(r, c) += params[lp.bo].value(0, c);
    if (drop) {
      lc.mask_attn = dropout_mask(L, d, cfg.dropout_p, *dropout_rng);
      apply_mask(attn_out, lc.mask_attn);
    }
    add_inplace(x, attn_out);

    lc.ln2_out = layernorm_fwd(x, params[lp.ln2_scale].value, params[lp.ln2_offset].value,
                               lc.ln2_xhat, lc.ln2_rstd);
    lc.ffn_pre = matmul(lc.ln2_out, params[lp.w1].value);
    for (std::size_t r = 0; r < L; ++r)
      for (std::size_t c = 0; c < lc.ffn_pre.cols(); ++c)
        lc.ffn_pre(r, c) += params[lp.b1].value(0, c);
    lc.ffn_act = lc.ffn_pre;
    for (double& a : lc.ffn_act.raw()) a = gelu(a);
    Mat ffn_out = matmul(lc.ffn_act, params[lp.w2].value);
    for (std::size_t r = 0; r < L; ++r)
      for (std::size_t c = 0; c < d; ++c) ffn_out(r, c) += params[lp.b2].value(0, c);
    if (drop) {
      lc.mask_ffn = dropout_mask(L, d, cfg.dropout_p, *dropout_rng);
      apply_mask(ffn_out, lc.mask_ffn);
    }
    add_inplace(x, ffn_out);
  }

  Mat final_xhat;
  std::vector<double> final_rstd;
  const Mat final_out = layernorm_fwd(x, params[ids.final_scale].value,
                                      params[ids.final_offset].value, final_xhat, final_rstd);
  const Mat& wh = params[ids.head_w].value;
  double pred = params[ids.head_b].value(0, 0);
  for (std::size_t c = 0; c < d; ++c) pred += final_out(0, c) * wh(c, 0);

  if (cache) {
    cache->final_xhat = std::move(final_xhat);
    cache->final_rstd = std::move(final_rstd);
    cache->summary_out.assign(final_out.row(0), final_out.row(0) + d);
  }
  return pred;
}

/// Backprop one sequence; accumulates into grads.by_param.
void backward_seq(const TransformerRegressor& model, const Sequence& seq,
                  const SeqCache& cache, double dpred, Gradients& grads) {
  const ModelConfig& cfg = model.config();
  const auto& params = model.parameters();
  const ParamLayout& ids = model.layout();
  const std::size_t d = static_cast<std::size_t>(cfg.d_model);
  const std::size_t n_heads = static_cast<std::size_t>(cfg.n_heads);
  const std::size_t dh = d / n_heads;
  const std::size_t L = seq.size() + 1;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  auto& g = grads.by_param;

  // head
  Mat dfinal(L, d);
  const Mat& wh = params[ids.head_w].value;
  for (std::size_t c = 0; c < d; ++c) {
    dfinal(0, c) = dpred * wh(c, 0);
    g[ids.head_w](c, 0) += dpred * cache.summary_out[c];
  }
  g[ids.head_b](0, 0) += dpred;

  // final layer norm
  Mat dx = layernorm_bwd(dfinal, cache.final_xhat, cache.final_rstd,
                         params[ids.final_scale].value, g[ids.final_scale],
                         g[ids.final_offset]);

  for (int layer = cfg.n_layers - 1; layer >= 0; --layer) {
    const LayerParamIds& lp = ids.layers[static_cast<std::size_t>(layer)];
    const LayerCache& lc = cache.layers[static_cast<std::size_t>(layer)];

    // FFN sublayer: x_out = x_mid + mask_ffn (.) (gelu(ln2(x_mid) W1 + b1) W2 + b2)
    Mat dffn_out = dx;
    if (lc.mask_ffn.size() > 0) apply_mask(dffn_out, lc.mask_ffn);
    add_inplace(g[lp.b2], colsum(dffn_out));
    add_inplace(g[lp.w2], matmul_tn(lc.ffn_act, dffn_out));
    Mat dact = matmul_nt(dffn_out, params[lp.w2].value);
    for (std::size_t i = 0; i < dact.raw().size(); ++i)
      dact.raw()[i] *= gelu_grad(lc.ffn_pre.raw()[i]);
    add_inplace(g[lp.b1], colsum(dact));
    add_inplace(g[lp.w1], matmul_tn(lc.ln2_out, dact));
    Mat dln2_out = matmul_nt(dact, params[lp.w1].value);
    Mat dmid = layernorm_bwd(dln2_out, lc.ln2_xhat, lc.ln2_rstd, params[lp.ln2_scale].value,
                             g[lp.ln2_scale], g[lp.ln2_offset]);
    add_inplace(dmid, dx); // residual branch

    // attention sublayer: x_mid = x_in + mask_attn (.) (heads Wo + bo)
    Mat dattn_out = dmid;
    if (lc.mask_attn.size() > 0) apply_mask(dattn_out, lc.mask_attn);
    add_inplace(g[lp.bo], colsum(dattn_out));
    add_inplace(g[lp.wo], matmul_tn(lc.heads, dattn_out));
    Mat dheads = matmul_nt(dattn_out, params[lp.wo].value);

    Mat dq(L, d), dk(L, d), dv(L, d);
    for (std::size_t h = 0; h < n_heads; ++h) {
      const std::size_t off = h * dh;
      const Mat& p = lc.attn[h];
      Mat dp(L, L);
      for (std::size_t i = 0; i < L; ++i)
        for (std::size_t j = 0; j < L; ++j) {
          double s = 0.0;
          for (std::size_t c = 0; c < dh; ++c) s += dheads(i, off + c) * lc.v(j, off + c);
          dp(i, j) = s;
        }
      for (std::size_t j = 0; j < L; ++j)
        for (std::size_t c = 0; c < dh; ++c) {
          double s = 0.0;
          for (std::size_t i = 0; i < L; ++i) s += p(i, j) * dheads(i, off + c);
          dv(j, off + c) += s;
        }
      // softmax rows
      Mat ds(L, L);
      for (std::size_t i = 0; i < L; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < L; ++j) dot += dp(i, j) * p(i, j);
        for (std::size_t j = 0; j < L; ++j) ds(i, j) = p(i, j) * (dp(i, j) - dot);
      }
      for (std::size_t i = 0; i < L; ++i)
        for (std::size_t j = 0; j < L; ++j) {
          const double dsij = ds(i, j) * inv_sqrt_dh;
          if (dsij == 0.0) continue;
          for (std::size_t c = 0; c < dh; ++c) {
            dq(i, off + c) += dsij * lc.k(j, off + c);
            dk(j, off + c) += dsij * lc.q(i, off + c);
          }
        }
    }

    add_inplace(g[lp.bq], colsum(dq));
    add_inplace(g[lp.bk], colsum(dk));
    add_inplace(g[lp.bv], colsum(dv));
    add_inplace(g[lp.wq], matmul_tn(lc.ln1_out, dq));
    add_inplace(g[lp.wk], matmul_tn(lc.ln1_out, dk));
    add_inplace(g[lp.wv], matmul_tn(lc.ln1_out, dv));
    Mat dln1_out = matmul_nt(dq, params[lp.wq].value);
    add_inplace(dln1_out, matmul_nt(dk, params[lp.wk].value));
    add_inplace(dln1_out, matmul_nt(dv, params[lp.wv].value));
    Mat din = layernorm_bwd(dln1_out, lc.ln1_xhat, lc.ln1_rstd, params[lp.ln1_scale].value,
                            g[lp.ln1_scale], g[lp.ln1_offset]);
    add_inplace(din, dmid);
    dx = std::move(din);
  }

  // embedding and summary token
  for (std::size_t c = 0; c < d; ++c) g[ids.summary](0, c) += dx(0, c);
  for (std::size_t t = 1; t < L; ++t) {
    const auto& in = seq[t - 1];
    for (std::size_t c = 0; c < d; ++c) {
      const double dxc = dx(t, c);
      g[ids.embed_b](0, c) += dxc;
      for (std::size_t i = 0; i < in.size(); ++i) g[ids.embed_w](i, c) += in[i] * dxc;
    }
  }
}

} // namespace

void validate_config(const ModelConfig& cfg) {
  if (cfg.d_model < 1) throw ConfigError("d_model must be positive");
  if (cfg.n_heads < 1) throw ConfigError("n_heads must be positive");
  if (cfg.d_model % cfg.n_heads != 0) throw ConfigError("n_heads must divide d_model");
  if (cfg.n_layers < 1) throw ConfigError("n_layers must be positive");
  if (cfg.d_ff < 1) throw ConfigError("d_ff must be positive");
  if (cfg.max_seq_len < 1) throw ConfigError("max_seq_len must be positive");
  if (cfg.input_dim < 1) throw ConfigError("input_dim must be positive");
  if (!(cfg.dropout_p >= 0.0 && cfg.dropout_p < 1.0))
    throw ConfigError("dropout_p must lie in [0, 1)");
}

std::size_t count_parameters(const ModelConfig& cfg) {
  validate_config(cfg);
  const std::size_t d = static_cast<std::size_t>(cfg.d_model);
  const std::size_t f = static_cast<std::size_t>(cfg.d_ff);
  const std::size_t in = static_cast<std::size_t>(cfg.input_dim);
  const std::size_t embed = in * d + d;
  const std::size_t summary = d;
  const std::size_t per_layer = 2 * d            // ln1
                                + 4 * (d * d + d) // q,k,v,o projections
                                + 2 * d           // ln2
                                + d * f + f       // ffn in
                                + f * d + d;      // ffn out
  const std::size_t final_ln = 2 * d;
  const std::size_t head = d + 1;
  return embed + summary + static_cast<std::size_t>(cfg.n_layers) * per_layer + final_ln + head;
}

std::size_t TransformerRegressor::register_param(std::string name, std::size_t rows,
                                                 std::size_t cols, Init init, Rng& rng) {
  Mat m(rows, cols);
  switch (init) {
  case Init::zeros:
    break;
  case Init::ones:
    for (double& v : m.raw()) v = 1.0;
    break;
  case Init::xavier: {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (double& v : m.raw()) v = rng.uniform(-limit, limit);
    break;
  }
  }
  params_.push_back({std::move(name), std::move(m)});
  return params_.size() - 1;
}

TransformerRegressor::TransformerRegressor(const ModelConfig& config, std::uint64_t seed)
    : cfg_(config), seed_(seed) {
  validate_config(cfg_);
  Rng rng(seed);
  const std::size_t d = static_cast<std::size_t>(cfg_.d_model);
  const std::size_t f = static_cast<std::size_t>(cfg_.d_ff);
  const std::size_t in = static_cast<std::size_t>(cfg_.input_dim);

  layout_.embed_w = register_param("embed.weight", in, d, Init::xavier, rng);
  layout_.embed_b = register_param("embed.bias", 1, d, Init::zeros, rng);
  layout_.summary = register_param("summary_token", 1, d, Init::xavier, rng);
  for (int l = 0; l < cfg_.n_layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    LayerParamIds ids{};
    ids.ln1_scale = register_param(p + "ln1.scale", 1, d, Init::ones, rng);
    ids.ln1_offset = register_param(p + "ln1.offset", 1, d, Init::zeros, rng);
    ids.wq = register_param(p + "attn.wq", d, d, Init::xavier, rng);
    ids.bq = register_param(p + "attn.bq", 1, d, Init::zeros, rng);
    ids.wk = register_param(p + "attn.wk", d, d, Init::xavier, rng);
    ids.bk = register_param(p + "attn.bk", 1, d, Init::zeros, rng);
    ids.wv = register_param(p + "attn.wv", d, d, Init::xavier, rng);
    ids.bv = register_param(p + "attn.bv", 1, d, Init::zeros, rng);
    ids.wo = register_param(p + "attn.wo", d, d, Init::xavier, rng);
    ids.bo = register_param(p + "attn.bo", 1, d, Init::zeros, rng);
    ids.ln2_scale = register_param(p + "ln2.scale", 1, d, Init::ones, rng);
    ids.ln2_offset = register_param(p + "ln2.offset", 1, d, Init::zeros, rng);
    ids.w1 = register_param(p + "ffn.w1", d, f, Init::xavier, rng);
    ids.b1 = register_param(p + "ffn.b1", 1, f, Init::zeros, rng);
    ids.w2 = register_param(p + "ffn.w2", f, d, Init::xavier, rng);
    ids.b2 = register_param(p + "ffn.b2", 1, d, Init::zeros, rng);
    layout_.layers.push_back(ids);
  }
  layout_.final_scale = register_param("final_ln.scale", 1, d, Init::ones, rng);
  layout_.final_offset = register_param("final_ln.offset", 1, d, Init::zeros, rng);
  layout_.head_w = register_param("head.weight", d, 1, Init::xavier, rng);
  layout_.head_b = register_param("head.bias", 1, 1, Init::zeros, rng);

  // sinusoidal table; row 0 feeds the summary slot
  pos_enc_ = Mat(static_cast<std::size_t>(cfg_.max_seq_len) + 1, d);
  for (std::size_t pos = 0; pos < pos_enc_.rows(); ++pos)
    for (std::size_t i = 0; 2 * i < d; ++i) {
      const double freq = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(d));
      const double angle = static_cast<double>(pos) * freq;
      pos_enc_(pos, 2 * i) = std::sin(angle);
      if (2 * i + 1 < d) pos_enc_(pos, 2 * i + 1) = std::cos(angle);
    }
}

std::size_t TransformerRegressor::parameter_scalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

Mat& TransformerRegressor::param(std::string_view name) {
  for (auto& p : params_)
    if (p.name == name) return p.value;
  throw ConfigError("unknown parameter '" + std::string(name) + "'");
}

const Mat& TransformerRegressor::param(std::string_view name) const {
  return const_cast<TransformerRegressor*>(this)->param(name);
}

ForwardResult forward(const TransformerRegressor& model, const Batch& batch,
                      bool want_attention) {
  ForwardResult result;
  result.predictions.reserve(batch.size());
  if (want_attention) result.attention.resize(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    check_sequence(model.config(), batch[i]);
    AttentionMaps* maps = want_attention ? &result.attention[i] : nullptr;
    result.predictions.push_back(forward_seq(model, batch[i], nullptr, maps, nullptr));
  }
  return result;
}

std::vector<double> predict(const TransformerRegressor& model, const Batch& batch) {
  return forward(model, batch, /*want_attention=*/false).predictions;
}

double loss_mse(const std::vector<double>& predictions, const std::vector<double>& labels) {
  if (predictions.size() != labels.size()) throw ArgumentError("prediction/label mismatch");
  if (predictions.empty()) throw ArgumentError("loss over empty batch");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - labels[i];
    s += d * d;
  }
  return s / static_cast<double>(predictions.size());
}

std::pair<double, Gradients> loss_and_gradients(const TransformerRegressor& model,
                                                const Batch& batch,
                                                const std::vector<double>& labels,
                                                Rng* dropout_rng) {
  if (batch.size() != labels.size()) throw ArgumentError("batch/label mismatch");
  if (batch.empty()) throw ArgumentError("empty batch");

  Gradients grads;
  grads.by_param.reserve(model.parameters().size());
  for (const auto& p : model.parameters())
    grads.by_param.emplace_back(p.value.rows(), p.value.cols());

  const double n = static_cast<double>(batch.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    check_sequence(model.config(), batch[i]);
    SeqCache cache;
    const double pred = forward_seq(model, batch[i], &cache, nullptr, dropout_rng);
    const double resid = pred - labels[i];
    loss += resid * resid / n;
    backward_seq(model, batch[i], cache, 2.0 * resid / n, grads);
  }
  return {loss, std::move(grads)};
}

Gradients backward(const TransformerRegressor& model, const Batch& batch,
                   const std::vector<double>& labels) {
  return loss_and_gradients(model, batch, labels).second;
}

} // namespace battlab::model
