#include "g4d/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace g4d {

std::vector<double> linear_forward(const std::vector<double>& x, const Tensor& W,
                                   const Tensor& b) {
  if (W.shape.size() != 2 || static_cast<size_t>(W.shape[1]) != x.size() ||
      b.numel() != static_cast<size_t>(W.shape[0]))
    throw std::invalid_argument("linear_forward: shape mismatch");
  std::vector<double> y = matvec(W, x);
  for (int r = 0; r < W.shape[0]; ++r) y[r] += b[r];
  return y;
}

std::vector<double> linear_backward(const std::vector<double>& x, const Tensor& W,
                                    const std::vector<double>& dy, Tensor& dW,
                                    Tensor& db) {
  const int rows = W.shape[0], cols = W.shape[1];
  if (dy.size() != static_cast<size_t>(rows) || x.size() != static_cast<size_t>(cols))
    throw std::invalid_argument("linear_backward: shape mismatch");
  std::vector<double> dx(cols, 0.0);
  for (int r = 0; r < rows; ++r) {
    const double g = dy[r];
    db[r] += g;
    double* dwrow = &dW.data[static_cast<size_t>(r) * cols];
    const double* wrow = &W.data[static_cast<size_t>(r) * cols];
    for (int c = 0; c < cols; ++c) {
      dwrow[c] += g * x[c];
      dx[c] += wrow[c] * g;
    }
  }
  return dx;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  std::vector<double> p(logits.size());
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

std::vector<double> log_softmax(const std::vector<double>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - m);
  const double lz = std::log(z) + m;
  std::vector<double> out(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lz;
  return out;
}

// ---------------------------------------------------------------------------

LstmParams::LstmParams(int din, int dh) : d_in(din), d_h(dh) {
  auto mat_in = std::vector<int>{dh, din};
  auto mat_h = std::vector<int>{dh, dh};
  auto vec = std::vector<int>{dh};
  Wi = Tensor(mat_in); Ui = Tensor(mat_h); bi = Tensor(vec);
  Wf = Tensor(mat_in); Uf = Tensor(mat_h); bf = Tensor(vec);
  Wo = Tensor(mat_in); Uo = Tensor(mat_h); bo = Tensor(vec);
  Wg = Tensor(mat_in); Ug = Tensor(mat_h); bg = Tensor(vec);
}

std::vector<Tensor*> LstmParams::all() {
  return {&Wi, &Ui, &bi, &Wf, &Uf, &bf, &Wo, &Uo, &bo, &Wg, &Ug, &bg};
}
std::vector<const Tensor*> LstmParams::all() const {
  return {&Wi, &Ui, &bi, &Wf, &Uf, &bf, &Wo, &Uo, &bo, &Wg, &Ug, &bg};
}
std::vector<std::string> LstmParams::names() const {
  return {"lstm.Wi", "lstm.Ui", "lstm.bi", "lstm.Wf", "lstm.Uf", "lstm.bf",
          "lstm.Wo", "lstm.Uo", "lstm.bo", "lstm.Wg", "lstm.Ug", "lstm.bg"};
}

void init_uniform_fan_in(Tensor& W, int fan_in, Rng& rng) {
  const double r = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : W.data) v = rng.uniform(-r, r);
}

void LstmParams::init(Rng& rng) {
  for (Tensor* t : {&Wi, &Wf, &Wo, &Wg}) init_uniform_fan_in(*t, d_in, rng);
  for (Tensor* t : {&Ui, &Uf, &Uo, &Ug}) init_uniform_fan_in(*t, d_h, rng);
  bf.fill(1.0);  // forget-gate bias +1
}

void lstm_step(const LstmParams& p, const std::vector<double>& x,
               const std::vector<double>& h_prev, const std::vector<double>& c_prev,
               std::vector<double>& h, std::vector<double>& c, LstmCache* cache) {
  if (x.size() != static_cast<size_t>(p.d_in) ||
      h_prev.size() != static_cast<size_t>(p.d_h) ||
      c_prev.size() != static_cast<size_t>(p.d_h))
    throw std::invalid_argument("lstm_step: shape mismatch");
  const int dh = p.d_h;
  std::vector<double> i(dh), f(dh), o(dh), g(dh), tc(dh);
  // h/c may alias h_prev/c_prev, so compute into locals and write at the end
  std::vector<double> hn(dh), cn(dh);
  auto ai = matvec(p.Wi, x), af = matvec(p.Wf, x), ao = matvec(p.Wo, x),
       ag = matvec(p.Wg, x);
  auto ri = matvec(p.Ui, h_prev), rf = matvec(p.Uf, h_prev), ro = matvec(p.Uo, h_prev),
       rg = matvec(p.Ug, h_prev);
  for (int k = 0; k < dh; ++k) {
    i[k] = sigmoid(ai[k] + ri[k] + p.bi[k]);
    f[k] = sigmoid(af[k] + rf[k] + p.bf[k]);
    o[k] = sigmoid(ao[k] + ro[k] + p.bo[k]);
    g[k] = std::tanh(ag[k] + rg[k] + p.bg[k]);
    cn[k] = f[k] * c_prev[k] + i[k] * g[k];
    tc[k] = std::tanh(cn[k]);
    hn[k] = o[k] * tc[k];
  }
  if (cache) {
    cache->x = x;
    cache->h_prev = h_prev;
    cache->c_prev = c_prev;
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->o = std::move(o);
    cache->g = std::move(g);
    cache->c = cn;
    cache->tanh_c = std::move(tc);
  }
  h = std::move(hn);
  c = std::move(cn);
}

void lstm_step_backward(const LstmParams& p, const LstmCache& cc,
                        const std::vector<double>& dh, const std::vector<double>& dc_in,
                        std::vector<double>& dx, std::vector<double>& dh_prev,
                        std::vector<double>& dc_prev, LstmParams& grads) {
  const int dhn = p.d_h;
  std::vector<double> dai(dhn), daf(dhn), dao(dhn), dag(dhn);
  dc_prev.assign(dhn, 0.0);
  for (int k = 0; k < dhn; ++k) {
    const double do_ = dh[k] * cc.tanh_c[k];
    const double dc = dc_in[k] + dh[k] * cc.o[k] * (1.0 - cc.tanh_c[k] * cc.tanh_c[k]);
    const double di = dc * cc.g[k];
    const double df = dc * cc.c_prev[k];
    const double dg = dc * cc.i[k];
    dc_prev[k] = dc * cc.f[k];
    dai[k] = di * cc.i[k] * (1.0 - cc.i[k]);
    daf[k] = df * cc.f[k] * (1.0 - cc.f[k]);
    dao[k] = do_ * cc.o[k] * (1.0 - cc.o[k]);
    dag[k] = dg * (1.0 - cc.g[k] * cc.g[k]);
  }
  dx.assign(p.d_in, 0.0);
  dh_prev.assign(dhn, 0.0);
  auto accum = [&](const Tensor& W, const Tensor& U, Tensor& dW, Tensor& dU, Tensor& db,
                   const std::vector<double>& da) {
    for (int r = 0; r < dhn; ++r) {
      const double g = da[r];
      db[r] += g;
      const double* wrow = &W.data[static_cast<size_t>(r) * p.d_in];
      double* dwrow = &dW.data[static_cast<size_t>(r) * p.d_in];
      for (int c = 0; c < p.d_in; ++c) {
        dwrow[c] += g * cc.x[c];
        dx[c] += wrow[c] * g;
      }
      const double* urow = &U.data[static_cast<size_t>(r) * dhn];
      double* durow = &dU.data[static_cast<size_t>(r) * dhn];
      for (int c = 0; c < dhn; ++c) {
        durow[c] += g * cc.h_prev[c];
        dh_prev[c] += urow[c] * g;
      }
    }
  };
  accum(p.Wi, p.Ui, grads.Wi, grads.Ui, grads.bi, dai);
  accum(p.Wf, p.Uf, grads.Wf, grads.Uf, grads.bf, daf);
  accum(p.Wo, p.Uo, grads.Wo, grads.Uo, grads.bo, dao);
  accum(p.Wg, p.Ug, grads.Wg, grads.Ug, grads.bg, dag);
}

// ---------------------------------------------------------------------------

std::vector<int> ConvGeom::out_dims() const {
  std::vector<int> od(ndim);
  for (int a = 0; a < ndim; ++a)
    od[a] = (in_dims[a] + 2 * pad - kernel) / stride + 1;
  return od;
}
size_t ConvGeom::in_numel() const {
  size_t n = in_ch;
  for (int d : in_dims) n *= d;
  return n;
}
size_t ConvGeom::out_numel() const {
  size_t n = out_ch;
  for (int d : out_dims()) n *= d;
  return n;
}
size_t ConvGeom::weight_numel() const {
  size_t k = 1;
  for (int a = 0; a < ndim; ++a) k *= kernel;
  return static_cast<size_t>(out_ch) * in_ch * k;
}
void ConvGeom::validate() const {
  if (ndim < 1 || ndim > 4) throw std::invalid_argument("conv: ndim must be 1..4");
  if (static_cast<int>(in_dims.size()) != ndim)
    throw std::invalid_argument("conv: in_dims size mismatch");
  for (int a = 0; a < ndim; ++a)
    if (in_dims[a] + 2 * pad - kernel < 0 ||
        (in_dims[a] + 2 * pad - kernel) / stride + 1 < 1)
      throw std::invalid_argument("conv: degenerate output size");
}

namespace {

struct ConvIndexer {
  int ndim;
  std::vector<int> in_dims, out_dims;
  std::vector<size_t> in_strides, out_strides;
  int kernel, stride, pad;
  size_t in_plane, out_plane, kvol;

  explicit ConvIndexer(const ConvGeom& g)
      : ndim(g.ndim), in_dims(g.in_dims), out_dims(g.out_dims()),
        kernel(g.kernel), stride(g.stride), pad(g.pad) {
    in_strides.assign(ndim, 1);
    out_strides.assign(ndim, 1);
    for (int a = ndim - 2; a >= 0; --a) {
      in_strides[a] = in_strides[a + 1] * in_dims[a + 1];
      out_strides[a] = out_strides[a + 1] * out_dims[a + 1];
    }
    in_plane = in_strides[0] * in_dims[0];
    out_plane = out_strides[0] * out_dims[0];
    kvol = 1;
    for (int a = 0; a < ndim; ++a) kvol *= kernel;
  }
};

// Visits every (out position, kernel offset) pair whose input cell is in
// bounds; fn(out_flat, in_flat, k_flat).
template <typename Fn>
void conv_visit(const ConvIndexer& ix, Fn&& fn) {
  std::vector<int> op(ix.ndim, 0);
  for (size_t oflat = 0;; ++oflat) {
    std::vector<int> base(ix.ndim);
    for (int a = 0; a < ix.ndim; ++a) base[a] = op[a] * ix.stride - ix.pad;
    std::vector<int> kp(ix.ndim, 0);
    for (size_t kflat = 0;; ++kflat) {
      bool ok = true;
      size_t iflat = 0;
      for (int a = 0; a < ix.ndim; ++a) {
        const int c = base[a] + kp[a];
        if (c < 0 || c >= ix.in_dims[a]) { ok = false; break; }
        iflat += static_cast<size_t>(c) * ix.in_strides[a];
      }
      if (ok) fn(oflat, iflat, kflat);
      int a = ix.ndim - 1;
      for (; a >= 0; --a) {
        if (++kp[a] < ix.kernel) break;
        kp[a] = 0;
      }
      if (a < 0) break;
    }
    int a = ix.ndim - 1;
    for (; a >= 0; --a) {
      if (++op[a] < ix.out_dims[a]) break;
      op[a] = 0;
    }
    if (a < 0) break;
  }
}

}  // namespace

std::vector<double> conv_forward(const ConvGeom& g, const std::vector<double>& x,
                                 const Tensor& W, const Tensor& b) {
  g.validate();
  if (x.size() != g.in_numel() || W.numel() != g.weight_numel() ||
      b.numel() != static_cast<size_t>(g.out_ch))
    throw std::invalid_argument("conv_forward: shape mismatch");
  ConvIndexer ix(g);
  std::vector<double> y(g.out_numel());
  for (int oc = 0; oc < g.out_ch; ++oc)
    std::fill(y.begin() + oc * ix.out_plane, y.begin() + (oc + 1) * ix.out_plane, b[oc]);
  conv_visit(ix, [&](size_t oflat, size_t iflat, size_t kflat) {
    for (int oc = 0; oc < g.out_ch; ++oc) {
      double acc = 0.0;
      for (int ic = 0; ic < g.in_ch; ++ic)
        acc += W[(static_cast<size_t>(oc) * g.in_ch + ic) * ix.kvol + kflat] *
               x[ic * ix.in_plane + iflat];
      y[oc * ix.out_plane + oflat] += acc;
    }
  });
  return y;
}

std::vector<double> conv_grad_input(const ConvGeom& g, const std::vector<double>& dy,
                                    const Tensor& W) {
  g.validate();
  ConvIndexer ix(g);
  if (dy.size() != g.out_numel() || W.numel() != g.weight_numel())
    throw std::invalid_argument("conv_grad_input: shape mismatch");
  std::vector<double> dx(g.in_numel(), 0.0);
  conv_visit(ix, [&](size_t oflat, size_t iflat, size_t kflat) {
    for (int oc = 0; oc < g.out_ch; ++oc) {
      const double gdy = dy[oc * ix.out_plane + oflat];
      for (int ic = 0; ic < g.in_ch; ++ic)
        dx[ic * ix.in_plane + iflat] +=
            W[(static_cast<size_t>(oc) * g.in_ch + ic) * ix.kvol + kflat] * gdy;
    }
  });
  return dx;
}

void conv_grad_params(const ConvGeom& g, const std::vector<double>& x,
                      const std::vector<double>& dy, Tensor& dW, Tensor& db) {
  g.validate();
  ConvIndexer ix(g);
  if (x.size() != g.in_numel() || dy.size() != g.out_numel())
    throw std::invalid_argument("conv_grad_params: shape mismatch");
  for (int oc = 0; oc < g.out_ch; ++oc)
    for (size_t o = 0; o < ix.out_plane; ++o) db[oc] += dy[oc * ix.out_plane + o];
  conv_visit(ix, [&](size_t oflat, size_t iflat, size_t kflat) {
    for (int oc = 0; oc < g.out_ch; ++oc) {
      const double gdy = dy[oc * ix.out_plane + oflat];
      for (int ic = 0; ic < g.in_ch; ++ic)
        dW[(static_cast<size_t>(oc) * g.in_ch + ic) * ix.kvol + kflat] +=
            gdy * x[ic * ix.in_plane + iflat];
    }
  });
}

// ---------------------------------------------------------------------------

std::vector<double> dropout(const std::vector<double>& x, double p, Mode mode, Rng& rng,
                            std::vector<double>* mask_out) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: p must be in [0,1)");
  std::vector<double> y(x.size());
  std::vector<double> mask(x.size(), 1.0);
  if (mode == Mode::kTrain && p > 0.0) {
    const double keep = 1.0 - p;
    for (size_t k = 0; k < x.size(); ++k)
      mask[k] = rng.bernoulli(p) ? 0.0 : 1.0 / keep;
  }
  for (size_t k = 0; k < x.size(); ++k) y[k] = x[k] * mask[k];
  if (mask_out) *mask_out = std::move(mask);
  return y;
}

void OptimState::step(const std::vector<Tensor*>& params,
                      const std::vector<const Tensor*>& grads) {
  if (params.size() != grads.size())
    throw std::invalid_argument("sgd_step: param/grad count mismatch");
  if (velocity.size() != params.size()) {
    velocity.clear();
    for (const Tensor* p : params) velocity.emplace_back(p->shape);
  }
  for (size_t j = 0; j < params.size(); ++j) {
    Tensor& th = *params[j];
    const Tensor& gr = *grads[j];
    Tensor& v = velocity[j];
    if (gr.numel() != th.numel() || v.numel() != th.numel())
      throw std::invalid_argument("sgd_step: shape mismatch");
    for (size_t k = 0; k < th.numel(); ++k) {
      v[k] = momentum * v[k] - lr * (gr[k] + weight_decay * th[k]);
      th[k] += v[k];
    }
  }
}

void AdamState::step(const std::vector<Tensor*>& params,
                     const std::vector<const Tensor*>& grads) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam_step: param/grad count mismatch");
  if (m.size() != params.size()) {
    m.clear();
    v.clear();
    for (const Tensor* p : params) {
      m.emplace_back(p->shape);
      v.emplace_back(p->shape);
    }
  }
  ++t;
  const double bc1 = 1.0 - std::pow(beta1, t);
  const double bc2 = 1.0 - std::pow(beta2, t);
  for (size_t j = 0; j < params.size(); ++j) {
    Tensor& th = *params[j];
    const Tensor& gr = *grads[j];
    if (gr.numel() != th.numel() || m[j].numel() != th.numel())
      throw std::invalid_argument("adam_step: shape mismatch");
    for (size_t k = 0; k < th.numel(); ++k) {
      const double g = gr[k] + weight_decay * th[k];
      m[j][k] = beta1 * m[j][k] + (1.0 - beta1) * g;
      v[j][k] = beta2 * v[j][k] + (1.0 - beta2) * g * g;
      const double mh = m[j][k] / bc1;
      const double vh = v[j][k] / bc2;
      th[k] -= lr * mh / (std::sqrt(vh) + eps);
    }
  }
}

double grad_check(const std::function<double()>& f, const std::vector<Tensor*>& params,
                  const std::vector<const Tensor*>& analytic, double eps) {
  double max_rel = 0.0;
  for (size_t j = 0; j < params.size(); ++j) {
    Tensor& th = *params[j];
    for (size_t k = 0; k < th.numel(); ++k) {
      const double orig = th[k];
      th[k] = orig + eps;
      const double fp = f();
      th[k] = orig - eps;
      const double fm = f();
      th[k] = orig;
      const double num = (fp - fm) / (2.0 * eps);
      const double ana = (*analytic[j])[k];
      const double denom = std::max(1e-5, std::abs(num) + std::abs(ana));
      max_rel = std::max(max_rel, std::abs(num - ana) / denom);
    }
  }
  return max_rel;
}

}  // namespace g4d
