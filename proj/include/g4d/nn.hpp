#ifndef G4D_NN_HPP_
#define G4D_NN_HPP_

#include <functional>
#include <string>
#include <vector>

#include "g4d/rng.hpp"
#include "g4d/tensor.hpp"

namespace g4d {

// ---------------------------------------------------------------------------
// Linear layer: y = Wx + b, W shape {out, in}.
std::vector<double> linear_forward(const std::vector<double>& x, const Tensor& W,
                                   const Tensor& b);
// Given dL/dy, accumulates dW, db and returns dL/dx.
std::vector<double> linear_backward(const std::vector<double>& x, const Tensor& W,
                                    const std::vector<double>& dy, Tensor& dW,
                                    Tensor& db);

std::vector<double> softmax(const std::vector<double>& logits);
std::vector<double> log_softmax(const std::vector<double>& logits);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ---------------------------------------------------------------------------
// LSTM cell. Per-gate input/recurrent weights and biases.
struct LstmParams {
  int d_in = 0, d_h = 0;
  Tensor Wi, Ui, bi;  // input gate
  Tensor Wf, Uf, bf;  // forget gate
  Tensor Wo, Uo, bo;  // output gate
  Tensor Wg, Ug, bg;  // candidate

  LstmParams() = default;
  LstmParams(int din, int dh);
  std::vector<Tensor*> all();
  std::vector<const Tensor*> all() const;
  std::vector<std::string> names() const;
  void init(Rng& rng);  // uniform +-1/sqrt(fan_in), forget bias +1
};

struct LstmCache {
  std::vector<double> x, h_prev, c_prev;
  std::vector<double> i, f, o, g, c, tanh_c;
};

// h_t, c_t written into h/c; cache (optional) enables backward.
void lstm_step(const LstmParams& p, const std::vector<double>& x,
               const std::vector<double>& h_prev, const std::vector<double>& c_prev,
               std::vector<double>& h, std::vector<double>& c,
               LstmCache* cache = nullptr);

struct LstmGrads {
  LstmParams g;  // same shapes, used as gradient accumulators
  explicit LstmGrads(const LstmParams& p) : g(p.d_in, p.d_h) {}
};

// Backward through one step. dh/dc are dL/dh_t, dL/dc_t (dc may include the
// carry from step t+1). Returns via out-params dx, dh_prev, dc_prev and
// accumulates parameter grads.
void lstm_step_backward(const LstmParams& p, const LstmCache& cache,
                        const std::vector<double>& dh, const std::vector<double>& dc,
                        std::vector<double>& dx, std::vector<double>& dh_prev,
                        std::vector<double>& dc_prev, LstmParams& grads);

// ---------------------------------------------------------------------------
// N-dimensional convolution (cross-correlation), N in {1..4}.
// Input layout [in_ch, *in_dims], filters [out_ch, in_ch, kernel^N], zero pad.
struct ConvGeom {
  int ndim = 0;
  int in_ch = 1, out_ch = 1;
  std::vector<int> in_dims;
  int kernel = 3, stride = 1, pad = 0;

  std::vector<int> out_dims() const;
  size_t in_numel() const;
  size_t out_numel() const;
  size_t weight_numel() const;
  void validate() const;  // throws on degenerate output size
};

std::vector<double> conv_forward(const ConvGeom& g, const std::vector<double>& x,
                                 const Tensor& W, const Tensor& b);
std::vector<double> conv_grad_input(const ConvGeom& g, const std::vector<double>& dy,
                                    const Tensor& W);
void conv_grad_params(const ConvGeom& g, const std::vector<double>& x,
                      const std::vector<double>& dy, Tensor& dW, Tensor& db);

// ---------------------------------------------------------------------------
// Inverted dropout.
enum class Mode { kTrain, kEval };

// Fills mask with 0 or 1/(1-p); in eval mode mask is all ones.
std::vector<double> dropout(const std::vector<double>& x, double p, Mode mode,
                            Rng& rng, std::vector<double>* mask_out = nullptr);

// ---------------------------------------------------------------------------
// SGD with momentum and weight decay: v <- mu*v - lr*(g + wd*theta); theta += v.
struct OptimState {
  double lr = 1e-4;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::vector<Tensor> velocity;  // lazily sized to match params

  void step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads);
};

// Adam with bias correction; decoupled weight decay applied like the SGD rule.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  long t = 0;
  std::vector<Tensor> m;  // lazily sized to match params
  std::vector<Tensor> v;

  void step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads);
};

// ---------------------------------------------------------------------------
// Central finite-difference gradient checker. f evaluates the scalar loss at
// the current parameter values; analytic is dL/dtheta flattened over params.
// Returns the max relative error across all elements.
double grad_check(const std::function<double()>& f, const std::vector<Tensor*>& params,
                  const std::vector<const Tensor*>& analytic, double eps = 1e-5);

void init_uniform_fan_in(Tensor& W, int fan_in, Rng& rng);

}  // namespace g4d

#endif
