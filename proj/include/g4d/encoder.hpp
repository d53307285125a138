#ifndef G4D_ENCODER_HPP_
#define G4D_ENCODER_HPP_

#include <string>
#include <utility>
#include <vector>

#include "g4d/glimpse.hpp"
#include "g4d/nn.hpp"

namespace g4d {

// Two shared conv layers per patch (channels 1 -> ch1 -> ch2, kernel^dims,
// stride 2) plus a linear layer to the code; decoder mirrors the stack.
struct EncoderConfig {
  int g_s = 8, G = 5, dims = 4;
  int ch1 = 8, ch2 = 16;
  int code_dim = 128;
  int kernel = 3, stride = 2, pad = 1;

  ConvGeom geom1() const;
  ConvGeom geom2() const;
  size_t patch_feat_len() const;               // ch2 * prod(geom2 out dims)
  size_t feat_len() const { return patch_feat_len() * G; }
  size_t input_len() const;                    // G * g_s^dims
};

struct EncoderParams {
  EncoderConfig cfg;
  Tensor c1w, c1b, c2w, c2b, fcw, fcb;
  Tensor dfcw, dfcb, d2w, d2b, d1w, d1b;
  // per-dimension code standardization fitted after pretraining; encode emits
  // (code - mu) / sigma and decode inverts it, so the autoencoder is unchanged
  Tensor code_mu, code_sigma;

  EncoderParams() = default;
  explicit EncoderParams(const EncoderConfig& c);
  void init(Rng& rng);
  std::vector<Tensor*> all();
  std::vector<const Tensor*> all() const;
  std::vector<std::string> names() const;
  std::vector<Tensor*> encoder_side();  // params the RAM freeze applies to
};

std::vector<double> encode(const GlimpsePyramid& pyr, const EncoderParams& p);

struct EncodeCache {
  std::vector<double> input;
  std::vector<std::vector<double>> h1, h2;  // per patch, post-tanh
  std::vector<double> feat;                 // concatenated
};

std::vector<double> encode_cached(const GlimpsePyramid& pyr, const EncoderParams& p,
                                  EncodeCache& cache);

struct EncoderGrads {
  EncoderParams g;
  explicit EncoderGrads(const EncoderConfig& c) : g(c) {}
};

// Backprop dL/dcode into encoder-side parameter grads; returns dL/dinput.
std::vector<double> encode_backward(const EncodeCache& cache, const EncoderParams& p,
                                    const std::vector<double>& dcode,
                                    EncoderParams& grads);

std::vector<double> decode(const std::vector<double>& code, const EncoderParams& p);

// Mean squared reconstruction error of decode(encode(x)) against x.
double recon_mse(const GlimpsePyramid& pyr, const EncoderParams& p);

// Same loss, accumulating d(mse)/d(params); returns the loss value.
double recon_mse_backward(const GlimpsePyramid& pyr, const EncoderParams& p,
                          EncoderGrads& grads);

struct PretrainConfig {
  int epochs = 10;
  std::string optimizer = "adam";  // "adam" or "sgd"
  double lr = 1e-3;
  double momentum = 0.9;     // sgd only
  double weight_decay = 0.0;
  int batch = 16;
  double holdout_frac = 0.2;
  bool normalize_codes = true;  // fit code_mu/code_sigma on the corpus at the end
  uint64_t seed = 0;
};

struct PretrainResult {
  std::vector<double> holdout_mse;  // index 0 = before any update
};

// Trains the autoencoder by SGD on the corpus; throws naming the epoch if the
// loss diverges to a non-finite value.
PretrainResult pretrain(const std::vector<GlimpsePyramid>& corpus,
                        const PretrainConfig& cfg, EncoderParams& params);

}  // namespace g4d

#endif
