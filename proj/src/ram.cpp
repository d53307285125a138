#include "g4d/ram.hpp"

#include <cmath>
#include <stdexcept>

namespace g4d {

RamParams::RamParams(const RamConfig& c, const EncoderParams& encoder)
    : cfg(c), enc(encoder), lstm(encoder.cfg.code_dim, c.hidden) {
  cfg.glimpse.dims = c.dims;
  cfg.glimpse.g_s = encoder.cfg.g_s;
  cfg.glimpse.G = encoder.cfg.G;
  if (encoder.cfg.dims != c.dims)
    throw std::invalid_argument("RamParams: encoder dims != ram dims");
  loc_w = Tensor({c.dims, c.hidden});
  loc_b = Tensor({c.dims});
  act_w = Tensor({c.num_classes, c.hidden});
  act_b = Tensor({c.num_classes});
}

void RamParams::init(Rng& rng) {
  lstm.init(rng);
  init_uniform_fan_in(loc_w, cfg.hidden, rng);
  init_uniform_fan_in(act_w, cfg.hidden, rng);
}

std::vector<Tensor*> RamParams::ram_side() {
  auto v = lstm.all();
  v.push_back(&loc_w);
  v.push_back(&loc_b);
  v.push_back(&act_w);
  v.push_back(&act_b);
  return v;
}
std::vector<const Tensor*> RamParams::ram_side() const {
  auto v = lstm.all();
  std::vector<const Tensor*> out(v.begin(), v.end());
  out.push_back(&loc_w);
  out.push_back(&loc_b);
  out.push_back(&act_w);
  out.push_back(&act_b);
  return out;
}
std::vector<std::string> RamParams::ram_side_names() const {
  auto v = lstm.names();
  v.insert(v.end(), {"loc_w", "loc_b", "act_w", "act_b"});
  return v;
}

std::array<double, 4> location_head(const std::vector<double>& h, const Tensor& W,
                                    const Tensor& b, int dims) {
  const auto a = linear_forward(h, W, b);
  std::array<double, 4> mu = {0, 0, 0, 0};
  for (int k = 0; k < dims; ++k) mu[k] = std::tanh(a[k]);
  return mu;
}

double gaussian_log_density(const std::array<double, 4>& phi,
                            const std::array<double, 4>& mu, double sigma, int dims) {
  constexpr double kLogSqrt2Pi = 0.9189385332046727;  // ln sqrt(2*pi)
  double lp = 0.0;
  for (int k = 0; k < dims; ++k) {
    const double z = (phi[k] - mu[k]) / sigma;
    lp += -0.5 * z * z - std::log(sigma) - kLogSqrt2Pi;
  }
  return lp;
}

std::pair<std::array<double, 4>, double> sample_location(
    const std::array<double, 4>& mu, double sigma, int dims, Rng& rng) {
  if (sigma <= 0) throw std::invalid_argument("sample_location: sigma must be > 0");
  std::array<double, 4> phi = {0, 0, 0, 0};
  for (int k = 0; k < dims; ++k) phi[k] = mu[k] + sigma * rng.normal();
  return {phi, gaussian_log_density(phi, mu, sigma, dims)};
}

std::pair<std::vector<double>, int> action_head(const std::vector<double>& h,
                                                const Tensor& W, const Tensor& b) {
  const auto probs = softmax(linear_forward(h, W, b));
  int best = 0;
  for (size_t k = 1; k < probs.size(); ++k)
    if (probs[k] > probs[best]) best = static_cast<int>(k);
  return {probs, best + 1};
}

EpisodeTrace rollout(const VoxelTensor4D& tensor, int label, const RamParams& params,
                     Rng& rng, Mode mode, RolloutCache* cache,
                     const std::vector<std::array<double, 4>>* forced_locs) {
  const RamConfig& cfg = params.cfg;
  EpisodeTrace trace;
  trace.label = label;
  if (cache) cache->steps.resize(cfg.T);

  std::array<double, 4> loc = {0, 0, 0, 0};
  if (cfg.random_init_loc && mode == Mode::kTrain && !forced_locs)
    for (int k = 0; k < cfg.dims; ++k) loc[k] = rng.uniform(-0.5, 0.5);
  if (forced_locs) loc = (*forced_locs)[0];

  std::vector<double> h(cfg.hidden, 0.0), c(cfg.hidden, 0.0);
  for (int t = 0; t < cfg.T; ++t) {
    GlimpseLocation gl = GlimpseLocation::from(loc).clamped();
    const GlimpsePyramid pyr = extract(tensor, gl, cfg.glimpse);

    RolloutCache::Step* cs = cache ? &cache->steps[t] : nullptr;
    EncodeCache local_enc;
    EncodeCache& ec = cs ? cs->enc : local_enc;
    std::vector<double> code = encode_cached(pyr, params.enc, ec);

    std::vector<double> code_mask;
    std::vector<double> code_in = dropout(code, cfg.dropout_p, mode, rng, &code_mask);

    std::vector<double> h_new, c_new;
    LstmCache local_lc;
    lstm_step(params.lstm, code_in, h, c, h_new, c_new, cs ? &cs->lstm : &local_lc);
    h = std::move(h_new);
    c = std::move(c_new);

    std::vector<double> h_mask;
    std::vector<double> h_use = dropout(h, cfg.dropout_p, mode, rng, &h_mask);

    StepTrace st;
    st.center = denormalize(gl, tensor.dims, tensor.frames);
    st.mu = location_head(h_use, params.loc_w, params.loc_b, cfg.dims);
    if (mode == Mode::kTrain && !forced_locs) {
      auto [phi, logp] = sample_location(st.mu, cfg.sigma, cfg.dims, rng);
      st.phi = phi;
      st.logp = logp;
    } else if (forced_locs && t + 1 < static_cast<int>(forced_locs->size())) {
      st.phi = (*forced_locs)[t + 1];
      st.logp = gaussian_log_density(st.phi, st.mu, cfg.sigma, cfg.dims);
    } else {
      st.phi = st.mu;
      st.logp = gaussian_log_density(st.phi, st.mu, cfg.sigma, cfg.dims);
    }
    auto [probs, pred] = action_head(h_use, params.act_w, params.act_b);
    st.probs = probs;
    st.pred = pred;

    if (cs) {
      cs->code = std::move(code);
      cs->code_drop = std::move(code_in);
      cs->code_mask = std::move(code_mask);
      cs->h = h;
      cs->h_drop = h_use;
      cs->h_mask = std::move(h_mask);
      cs->mu.assign(st.mu.begin(), st.mu.begin() + cfg.dims);
      cs->probs = probs;
    }

    for (int k = 0; k < 4; ++k) loc[k] = st.phi[k];
    trace.steps.push_back(std::move(st));
  }
  trace.reward = (trace.steps.back().pred == label) ? 1.0 : 0.0;
  return trace;
}

}  // namespace g4d
