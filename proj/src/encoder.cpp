#include "g4d/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace g4d {

ConvGeom EncoderConfig::geom1() const {
  ConvGeom g;
  g.ndim = dims;
  g.in_ch = 1;
  g.out_ch = ch1;
  g.in_dims.assign(dims, g_s);
  g.kernel = kernel;
  g.stride = stride;
  g.pad = pad;
  return g;
}

ConvGeom EncoderConfig::geom2() const {
  ConvGeom g;
  g.ndim = dims;
  g.in_ch = ch1;
  g.out_ch = ch2;
  g.in_dims = geom1().out_dims();
  g.kernel = kernel;
  g.stride = stride;
  g.pad = pad;
  return g;
}

size_t EncoderConfig::patch_feat_len() const {
  size_t n = ch2;
  for (int d : geom2().out_dims()) n *= d;
  return n;
}

size_t EncoderConfig::input_len() const {
  size_t n = G;
  for (int a = 0; a < dims; ++a) n *= g_s;
  return n;
}

EncoderParams::EncoderParams(const EncoderConfig& c) : cfg(c) {
  const ConvGeom g1 = c.geom1(), g2 = c.geom2();
  c1w = Tensor({static_cast<int>(g1.weight_numel())});
  c1b = Tensor({c.ch1});
  c2w = Tensor({static_cast<int>(g2.weight_numel())});
  c2b = Tensor({c.ch2});
  fcw = Tensor({c.code_dim, static_cast<int>(c.feat_len())});
  fcb = Tensor({c.code_dim});
  dfcw = Tensor({static_cast<int>(c.feat_len()), c.code_dim});
  dfcb = Tensor({static_cast<int>(c.feat_len())});
  d2w = Tensor({static_cast<int>(g2.weight_numel())});
  d2b = Tensor({c.ch1});
  d1w = Tensor({static_cast<int>(g1.weight_numel())});
  d1b = Tensor({1});
  code_mu = Tensor({c.code_dim});
  code_sigma = Tensor({c.code_dim});
  for (int d = 0; d < c.code_dim; ++d) code_sigma[d] = 1.0;
}

void EncoderParams::init(Rng& rng) {
  size_t kvol = 1;
  for (int a = 0; a < cfg.dims; ++a) kvol *= cfg.kernel;
  init_uniform_fan_in(c1w, static_cast<int>(kvol), rng);
  init_uniform_fan_in(c2w, static_cast<int>(kvol) * cfg.ch1, rng);
  init_uniform_fan_in(fcw, static_cast<int>(cfg.feat_len()), rng);
  init_uniform_fan_in(dfcw, cfg.code_dim, rng);
  init_uniform_fan_in(d2w, static_cast<int>(kvol) * cfg.ch2, rng);
  init_uniform_fan_in(d1w, static_cast<int>(kvol) * cfg.ch1, rng);
}

std::vector<Tensor*> EncoderParams::all() {
  return {&c1w, &c1b, &c2w, &c2b, &fcw, &fcb, &dfcw, &dfcb, &d2w, &d2b, &d1w, &d1b};
}
std::vector<const Tensor*> EncoderParams::all() const {
  return {&c1w, &c1b, &c2w, &c2b, &fcw, &fcb, &dfcw, &dfcb, &d2w, &d2b, &d1w, &d1b};
}
std::vector<std::string> EncoderParams::names() const {
  return {"enc.c1w", "enc.c1b", "enc.c2w", "enc.c2b", "enc.fcw", "enc.fcb",
          "enc.dfcw", "enc.dfcb", "enc.d2w", "enc.d2b", "enc.d1w", "enc.d1b"};
}
std::vector<Tensor*> EncoderParams::encoder_side() {
  return {&c1w, &c1b, &c2w, &c2b, &fcw, &fcb};
}

namespace {

void tanh_inplace(std::vector<double>& v) {
  for (double& x : v) x = std::tanh(x);
}

// Deconvolution with the geometry of a mirrored conv: maps the conv's output
// shape back to its input shape.
std::vector<double> deconv_forward(const ConvGeom& g, const std::vector<double>& x_small,
                                   const Tensor& W, const Tensor& b) {
  std::vector<double> y = conv_grad_input(g, x_small, W);
  size_t plane = 1;
  for (int d : g.in_dims) plane *= d;
  for (int ic = 0; ic < g.in_ch; ++ic)
    for (size_t j = 0; j < plane; ++j) y[ic * plane + j] += b[ic];
  return y;
}

std::vector<double> deconv_backward(const ConvGeom& g, const std::vector<double>& x_small,
                                    const std::vector<double>& dy_big, const Tensor& W,
                                    Tensor& dW, Tensor& db) {
  size_t plane = 1;
  for (int d : g.in_dims) plane *= d;
  for (int ic = 0; ic < g.in_ch; ++ic)
    for (size_t j = 0; j < plane; ++j) db[ic] += dy_big[ic * plane + j];
  Tensor dummy({g.out_ch});
  conv_grad_params(g, dy_big, x_small, dW, dummy);
  Tensor zero_b({g.out_ch});
  return conv_forward(g, dy_big, W, zero_b);
}

}  // namespace

std::vector<double> encode_cached(const GlimpsePyramid& pyr, const EncoderParams& p,
                                  EncodeCache& cache) {
  const EncoderConfig& c = p.cfg;
  if (pyr.values.size() != c.input_len())
    throw std::invalid_argument("encode: pyramid length mismatch");
  const ConvGeom g1 = c.geom1(), g2 = c.geom2();
  const size_t plen = c.input_len() / c.G;

  cache.input = pyr.values;
  cache.h1.resize(c.G);
  cache.h2.resize(c.G);
  cache.feat.assign(c.feat_len(), 0.0);
  for (int q = 0; q < c.G; ++q) {
    std::vector<double> patch(pyr.values.begin() + q * plen,
                              pyr.values.begin() + (q + 1) * plen);
    auto h1 = conv_forward(g1, patch, p.c1w, p.c1b);
    tanh_inplace(h1);
    auto h2 = conv_forward(g2, h1, p.c2w, p.c2b);
    tanh_inplace(h2);
    std::copy(h2.begin(), h2.end(), cache.feat.begin() + q * c.patch_feat_len());
    cache.h1[q] = std::move(h1);
    cache.h2[q] = std::move(h2);
  }
  auto code = linear_forward(cache.feat, p.fcw, p.fcb);
  for (int d = 0; d < c.code_dim; ++d)
    code[d] = (code[d] - p.code_mu[d]) / p.code_sigma[d];
  return code;
}

std::vector<double> encode(const GlimpsePyramid& pyr, const EncoderParams& p) {
  EncodeCache cache;
  return encode_cached(pyr, p, cache);
}

std::vector<double> encode_backward(const EncodeCache& cache, const EncoderParams& p,
                                    const std::vector<double>& dcode,
                                    EncoderParams& grads) {
  const EncoderConfig& c = p.cfg;
  const ConvGeom g1 = c.geom1(), g2 = c.geom2();
  const size_t plen = c.input_len() / c.G;
  std::vector<double> draw(dcode.size());
  for (int d = 0; d < c.code_dim; ++d) draw[d] = dcode[d] / p.code_sigma[d];
  std::vector<double> dfeat =
      linear_backward(cache.feat, p.fcw, draw, grads.fcw, grads.fcb);
  std::vector<double> dinput(c.input_len(), 0.0);
  for (int q = 0; q < c.G; ++q) {
    std::vector<double> dh2(dfeat.begin() + q * c.patch_feat_len(),
                            dfeat.begin() + (q + 1) * c.patch_feat_len());
    for (size_t j = 0; j < dh2.size(); ++j)
      dh2[j] *= 1.0 - cache.h2[q][j] * cache.h2[q][j];
    std::vector<double> dh1 = conv_grad_input(g2, dh2, p.c2w);
    conv_grad_params(g2, cache.h1[q], dh2, grads.c2w, grads.c2b);
    for (size_t j = 0; j < dh1.size(); ++j)
      dh1[j] *= 1.0 - cache.h1[q][j] * cache.h1[q][j];
    std::vector<double> patch(cache.input.begin() + q * plen,
                              cache.input.begin() + (q + 1) * plen);
    conv_grad_params(g1, patch, dh1, grads.c1w, grads.c1b);
    std::vector<double> dpatch = conv_grad_input(g1, dh1, p.c1w);
    std::copy(dpatch.begin(), dpatch.end(), dinput.begin() + q * plen);
  }
  return dinput;
}

namespace {

struct DecodeCache {
  std::vector<double> code, dfeat_post;        // post-tanh decoder features
  std::vector<std::vector<double>> u2;         // per patch, post-tanh deconv2 out
};

std::vector<double> decode_cached(const std::vector<double>& code,
                                  const EncoderParams& p, DecodeCache& cache) {
  const EncoderConfig& c = p.cfg;
  const ConvGeom g1 = c.geom1(), g2 = c.geom2();
  const size_t plen = c.input_len() / c.G;
  cache.code.resize(code.size());
  for (int d = 0; d < c.code_dim; ++d)
    cache.code[d] = code[d] * p.code_sigma[d] + p.code_mu[d];
  auto feat = linear_forward(cache.code, p.dfcw, p.dfcb);
  tanh_inplace(feat);
  cache.dfeat_post = feat;
  cache.u2.resize(c.G);
  std::vector<double> recon(c.input_len(), 0.0);
  for (int q = 0; q < c.G; ++q) {
    std::vector<double> f(feat.begin() + q * c.patch_feat_len(),
                          feat.begin() + (q + 1) * c.patch_feat_len());
    auto u2 = deconv_forward(g2, f, p.d2w, p.d2b);
    tanh_inplace(u2);
    auto out = deconv_forward(g1, u2, p.d1w, p.d1b);
    std::copy(out.begin(), out.end(), recon.begin() + q * plen);
    cache.u2[q] = std::move(u2);
  }
  return recon;
}

void decode_backward(const DecodeCache& cache, const EncoderParams& p,
                     const std::vector<double>& drecon, EncoderParams& grads,
                     std::vector<double>& dcode) {
  const EncoderConfig& c = p.cfg;
  const ConvGeom g1 = c.geom1(), g2 = c.geom2();
  const size_t plen = c.input_len() / c.G;
  std::vector<double> dfeat(c.feat_len(), 0.0);
  for (int q = 0; q < c.G; ++q) {
    std::vector<double> dout(drecon.begin() + q * plen, drecon.begin() + (q + 1) * plen);
    std::vector<double> du2 = deconv_backward(g1, cache.u2[q], dout, p.d1w, grads.d1w,
                                              grads.d1b);
    for (size_t j = 0; j < du2.size(); ++j)
      du2[j] *= 1.0 - cache.u2[q][j] * cache.u2[q][j];
    std::vector<double> f(cache.dfeat_post.begin() + q * c.patch_feat_len(),
                          cache.dfeat_post.begin() + (q + 1) * c.patch_feat_len());
    std::vector<double> df = deconv_backward(g2, f, du2, p.d2w, grads.d2w, grads.d2b);
    std::copy(df.begin(), df.end(), dfeat.begin() + q * c.patch_feat_len());
  }
  for (size_t j = 0; j < dfeat.size(); ++j)
    dfeat[j] *= 1.0 - cache.dfeat_post[j] * cache.dfeat_post[j];
  dcode = linear_backward(cache.code, p.dfcw, dfeat, grads.dfcw, grads.dfcb);
  for (int d = 0; d < c.code_dim; ++d) dcode[d] *= p.code_sigma[d];
}

}  // namespace

std::vector<double> decode(const std::vector<double>& code, const EncoderParams& p) {
  DecodeCache cache;
  return decode_cached(code, p, cache);
}

double recon_mse(const GlimpsePyramid& pyr, const EncoderParams& p) {
  const auto recon = decode(encode(pyr, p), p);
  double se = 0.0;
  for (size_t j = 0; j < recon.size(); ++j) {
    const double d = recon[j] - pyr.values[j];
    se += d * d;
  }
  return se / recon.size();
}

double recon_mse_backward(const GlimpsePyramid& pyr, const EncoderParams& p,
                          EncoderGrads& grads) {
  EncodeCache ec;
  DecodeCache dc;
  const auto code = encode_cached(pyr, p, ec);
  const auto recon = decode_cached(code, p, dc);
  double se = 0.0;
  std::vector<double> drecon(recon.size());
  const double s = 2.0 / recon.size();
  for (size_t k = 0; k < recon.size(); ++k) {
    const double d = recon[k] - pyr.values[k];
    se += d * d;
    drecon[k] = s * d;
  }
  std::vector<double> dcode;
  decode_backward(dc, p, drecon, grads.g, dcode);
  encode_backward(ec, p, dcode, grads.g);
  return se / recon.size();
}

PretrainResult pretrain(const std::vector<GlimpsePyramid>& corpus,
                        const PretrainConfig& cfg, EncoderParams& params) {
  if (corpus.empty()) throw std::invalid_argument("pretrain: empty corpus");
  Rng rng(cfg.seed);
  for (int d = 0; d < params.cfg.code_dim; ++d) {
    params.code_mu[d] = 0.0;
    params.code_sigma[d] = 1.0;
  }

  std::vector<size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng.engine());
  const size_t holdout_n =
      std::max<size_t>(1, static_cast<size_t>(corpus.size() * cfg.holdout_frac));
  std::vector<size_t> holdout(order.begin(), order.begin() + holdout_n);
  std::vector<size_t> train(order.begin() + holdout_n, order.end());
  if (train.empty()) train = holdout;

  auto holdout_mse = [&]() {
    double m = 0.0;
    for (size_t j : holdout) m += recon_mse(corpus[j], params);
    return m / holdout.size();
  };

  OptimState sgd;
  sgd.lr = cfg.lr;
  sgd.momentum = cfg.momentum;
  sgd.weight_decay = cfg.weight_decay;
  AdamState adam;
  adam.lr = cfg.lr;
  adam.weight_decay = cfg.weight_decay;
  const bool use_adam = cfg.optimizer == "adam";
  if (!use_adam && cfg.optimizer != "sgd")
    throw std::invalid_argument("pretrain: unknown optimizer " + cfg.optimizer);

  PretrainResult res;
  res.holdout_mse.push_back(holdout_mse());

  const double inv_len = 1.0 / params.cfg.input_len();
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng.engine());
    for (size_t b0 = 0; b0 < train.size(); b0 += cfg.batch) {
      const size_t b1 = std::min(train.size(), b0 + cfg.batch);
      EncoderGrads grads(params.cfg);
      for (size_t j = b0; j < b1; ++j) {
        const GlimpsePyramid& x = corpus[train[j]];
        EncodeCache ec;
        DecodeCache dc;
        auto code = encode_cached(x, params, ec);
        auto recon = decode_cached(code, params, dc);
        std::vector<double> drecon(recon.size());
        const double s = 2.0 * inv_len / (b1 - b0);
        for (size_t k = 0; k < recon.size(); ++k)
          drecon[k] = s * (recon[k] - x.values[k]);
        std::vector<double> dcode;
        decode_backward(dc, params, drecon, grads.g, dcode);
        encode_backward(ec, params, dcode, grads.g);
      }
      const auto gs = const_cast<const EncoderParams&>(grads.g).all();
      if (use_adam)
        adam.step(params.all(), gs);
      else
        sgd.step(params.all(), gs);
    }
    const double m = holdout_mse();
    if (!std::isfinite(m))
      throw std::runtime_error("pretrain: loss diverged at epoch " +
                               std::to_string(epoch));
    res.holdout_mse.push_back(m);
  }
  if (cfg.normalize_codes) {
    const int D = params.cfg.code_dim;
    std::vector<double> mu(D, 0.0), m2(D, 0.0);
    for (const auto& x : corpus) {
      const auto code = encode(x, params);
      for (int d = 0; d < D; ++d) {
        mu[d] += code[d];
        m2[d] += code[d] * code[d];
      }
    }
    for (int d = 0; d < D; ++d) {
      mu[d] /= corpus.size();
      const double var = m2[d] / corpus.size() - mu[d] * mu[d];
      if (var > 1e-24) {
        params.code_mu[d] = mu[d];
        params.code_sigma[d] = std::sqrt(var);
      }
    }
  }
  return res;
}

}  // namespace g4d
