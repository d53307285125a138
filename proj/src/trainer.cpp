#include "g4d/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "g4d/checkpoint.hpp"

namespace g4d {

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.momentum = j.value("momentum", c.momentum);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.dropout = j.value("dropout", c.dropout);
  c.mc_episodes = j.value("mc_episodes", c.mc_episodes);
  c.epochs = j.value("epochs", c.epochs);
  c.seed = j.value("seed", c.seed);
  c.baseline = j.value("baseline", c.baseline);
  c.ema_decay = j.value("ema_decay", c.ema_decay);
  c.T = j.value("T", c.T);
  c.sigma = j.value("sigma", c.sigma);
  c.hidden = j.value("hidden", c.hidden);
  c.dims = j.value("dims", c.dims);
  c.random_init_loc = j.value("random_init_loc", c.random_init_loc);
  c.per_step_loss = j.value("per_step_loss", c.per_step_loss);
  c.finetune_encoder = j.value("finetune_encoder", c.finetune_encoder);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.augment_enabled = j.value("augment_enabled", c.augment_enabled);
  if (j.contains("augment")) {
    const auto& a = j["augment"];
    c.augment.jitter_sigma_m = a.value("jitter_sigma_m", c.augment.jitter_sigma_m);
    c.augment.shift_range_m = a.value("shift_range_m", c.augment.shift_range_m);
    c.augment.scale_lo = a.value("scale_lo", c.augment.scale_lo);
    c.augment.scale_hi = a.value("scale_hi", c.augment.scale_hi);
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    if (g.contains("dims"))
      for (int a = 0; a < 3; ++a) c.grid.dims[a] = g["dims"][a];
    if (g.contains("cell_m"))
      for (int a = 0; a < 3; ++a) c.grid.cell_m[a] = g["cell_m"][a];
    c.grid.center_origin = g.value("center_origin", c.grid.center_origin);
    if (g.contains("origin")) {
      c.grid.origin.x = g["origin"][0];
      c.grid.origin.y = g["origin"][1];
      c.grid.origin.z = g["origin"][2];
    }
  }
  if (c.batch_size < 1 || c.mc_episodes < 1)
    throw std::invalid_argument("train config: batch_size and mc_episodes must be >= 1");
  if (c.baseline != "ema" && c.baseline != "none")
    throw std::invalid_argument("train config: baseline must be 'ema' or 'none'");
  return c;
}

nlohmann::json train_config_to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"momentum", c.momentum},
          {"weight_decay", c.weight_decay},
          {"dropout", c.dropout},
          {"mc_episodes", c.mc_episodes},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"baseline", c.baseline},
          {"ema_decay", c.ema_decay},
          {"T", c.T},
          {"sigma", c.sigma},
          {"hidden", c.hidden},
          {"dims", c.dims},
          {"random_init_loc", c.random_init_loc},
          {"per_step_loss", c.per_step_loss},
          {"finetune_encoder", c.finetune_encoder},
          {"checkpoint_every", c.checkpoint_every},
          {"augment_enabled", c.augment_enabled},
          {"augment",
           {{"jitter_sigma_m", c.augment.jitter_sigma_m},
            {"shift_range_m", c.augment.shift_range_m},
            {"scale_lo", c.augment.scale_lo},
            {"scale_hi", c.augment.scale_hi}}},
          {"grid",
           {{"dims", c.grid.dims},
            {"cell_m", c.grid.cell_m},
            {"center_origin", c.grid.center_origin},
            {"origin", {c.grid.origin.x, c.grid.origin.y, c.grid.origin.z}}}}};
}

void write_train_log_csv(const std::string& path, const std::vector<TrainLogRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "epoch,mean_reward,ce_loss,train_top1,val_top1,seconds\n";
  for (const auto& r : rows)
    out << r.epoch << ',' << r.mean_reward << ',' << r.ce_loss << ',' << r.train_top1
        << ',' << r.val_top1 << ',' << r.seconds << '\n';
}

std::vector<std::vector<std::array<double, 4>>> reinforce_grad(
    const std::vector<EpisodeTrace>& traces, double baseline, double sigma, int dims) {
  const double inv_m = 1.0 / traces.size();
  const double inv_s2 = 1.0 / (sigma * sigma);
  std::vector<std::vector<std::array<double, 4>>> out(traces.size());
  for (size_t i = 0; i < traces.size(); ++i) {
    const double adv = traces[i].reward - baseline;
    out[i].resize(traces[i].steps.size());
    for (size_t t = 0; t < traces[i].steps.size(); ++t) {
      const auto& st = traces[i].steps[t];
      std::array<double, 4> g = {0, 0, 0, 0};
      for (int k = 0; k < dims; ++k)
        g[k] = inv_m * adv * (st.phi[k] - st.mu[k]) * inv_s2;
      out[i][t] = g;
    }
  }
  return out;
}

RamGrads::RamGrads(const RamParams& p) : g(p) { zero(); }

void RamGrads::zero() {
  for (Tensor* t : g.ram_side()) t->fill(0.0);
  for (Tensor* t : g.enc.all()) t->fill(0.0);
}

void episode_backward(const RamParams& params, const RolloutCache& cache,
                      const EpisodeTrace& trace, const std::vector<double>& ce_weights,
                      const std::vector<std::array<double, 4>>& dmu_loss,
                      bool with_encoder, RamGrads& grads) {
  const RamConfig& cfg = params.cfg;
  const int T = cfg.T;
  const int dh = cfg.hidden;
  std::vector<double> dh_carry(dh, 0.0), dc_carry(dh, 0.0);

  for (int t = T - 1; t >= 0; --t) {
    const auto& cs = cache.steps[t];
    std::vector<double> dh_used(dh, 0.0);

    if (ce_weights[t] != 0.0) {
      std::vector<double> dlogits(cs.probs);
      for (double& v : dlogits) v *= ce_weights[t];
      dlogits[trace.label - 1] -= ce_weights[t];
      auto d = linear_backward(cs.h_drop, params.act_w, dlogits, grads.g.act_w,
                               grads.g.act_b);
      for (int k = 0; k < dh; ++k) dh_used[k] += d[k];
    }

    bool any_mu = false;
    for (int k = 0; k < cfg.dims; ++k)
      if (dmu_loss[t][k] != 0.0) any_mu = true;
    if (any_mu) {
      std::vector<double> da(cfg.dims);
      for (int k = 0; k < cfg.dims; ++k)
        da[k] = dmu_loss[t][k] * (1.0 - cs.mu[k] * cs.mu[k]);
      auto d = linear_backward(cs.h_drop, params.loc_w, da, grads.g.loc_w,
                               grads.g.loc_b);
      for (int k = 0; k < dh; ++k) dh_used[k] += d[k];
    }

    std::vector<double> dh_total(dh);
    for (int k = 0; k < dh; ++k)
      dh_total[k] = dh_used[k] * cs.h_mask[k] + dh_carry[k];

    std::vector<double> dx, dh_prev, dc_prev;
    lstm_step_backward(params.lstm, cs.lstm, dh_total, dc_carry, dx, dh_prev, dc_prev,
                       grads.g.lstm);
    dh_carry = std::move(dh_prev);
    dc_carry = std::move(dc_prev);

    if (with_encoder) {
      std::vector<double> dcode(dx.size());
      for (size_t k = 0; k < dx.size(); ++k) dcode[k] = dx[k] * cs.code_mask[k];
      encode_backward(cs.enc, params.enc, dcode, grads.g.enc);
    }
  }
}

namespace {

std::vector<Tensor*> trainable(RamParams& p, bool finetune) {
  auto v = p.ram_side();
  if (finetune) {
    auto e = p.enc.encoder_side();
    v.insert(v.end(), e.begin(), e.end());
  }
  return v;
}
std::vector<const Tensor*> trainable_grads(RamGrads& g, bool finetune) {
  auto v = g.g.ram_side();
  std::vector<const Tensor*> out(v.begin(), v.end());
  if (finetune)
    for (Tensor* t : g.g.enc.encoder_side()) out.push_back(t);
  return out;
}

void check_finite(const RamGrads& grads, const RamParams& p) {
  auto names = p.ram_side_names();
  auto tensors = const_cast<RamGrads&>(grads).g.ram_side();
  for (size_t j = 0; j < tensors.size(); ++j)
    if (!tensors[j]->all_finite())
      throw std::runtime_error("hybrid_step: non-finite gradient in layer " + names[j]);
}

}  // namespace

BatchStats hybrid_step(const std::vector<const VoxelTensor4D*>& tensors,
                       const std::vector<int>& labels, RamParams& params,
                       const TrainConfig& cfg, TrainerState& state,
                       uint64_t episode_stream) {
  const int B = static_cast<int>(tensors.size());
  const int M = cfg.mc_episodes;
  const int T = params.cfg.T;
  RamGrads grads(params);
  BatchStats stats;

  const double b = cfg.baseline == "ema" ? state.ema_baseline : 0.0;
  double reward_sum = 0.0;

  for (int e = 0; e < B; ++e) {
    std::vector<EpisodeTrace> traces(M);
    std::vector<RolloutCache> caches(M);
    for (int i = 0; i < M; ++i) {
      Rng rng(derive_seed(episode_stream, e, i));
      traces[i] = rollout(*tensors[e], labels[e], params, rng, Mode::kTrain, &caches[i]);
    }
    const auto coef = reinforce_grad(traces, b, params.cfg.sigma, params.cfg.dims);

    for (int i = 0; i < M; ++i) {
      reward_sum += traces[i].reward;
      stats.ce_loss +=
          -std::log(std::max(1e-300, traces[i].steps[T - 1].probs[labels[e] - 1]));

      std::vector<double> ce_w(T, 0.0);
      if (cfg.per_step_loss)
        for (int t = 0; t < T; ++t) ce_w[t] = 1.0 / (static_cast<double>(M) * B * T);
      else
        ce_w[T - 1] = 1.0 / (static_cast<double>(M) * B);

      std::vector<std::array<double, 4>> dmu(T);
      for (int t = 0; t < T; ++t)
        for (int k = 0; k < 4; ++k) dmu[t][k] = -coef[i][t][k] / B;  // descent

      episode_backward(params, caches[i], traces[i], ce_w, dmu, cfg.finetune_encoder,
                       grads);
    }
  }

  check_finite(grads, params);
  state.opt.step(trainable(params, cfg.finetune_encoder),
                 trainable_grads(grads, cfg.finetune_encoder));

  const double mean_r = reward_sum / (static_cast<double>(B) * M);
  if (cfg.baseline == "ema") {
    if (!state.ema_initialized) {
      state.ema_baseline = mean_r;
      state.ema_initialized = true;
    } else {
      state.ema_baseline = cfg.ema_decay * state.ema_baseline +
                           (1.0 - cfg.ema_decay) * mean_r;
    }
  }
  stats.mean_reward = mean_r;
  stats.ce_loss /= static_cast<double>(B) * M;
  return stats;
}

VoxelTensor4D build_tensor(const std::vector<PointCloud>& frames,
                           const VoxelGridConfig& grid, int dims) {
  VoxelTensor4D t = voxelize(frames, grid).tensor;
  if (dims == 2) t = project_z(t);
  return t;
}

namespace {

double eval_top1(const std::vector<TrainExample>& set, const RamParams& params,
                 const VoxelGridConfig& grid) {
  if (set.empty()) return 0.0;
  int correct = 0;
  Rng rng(0);  // unused in eval mode
  for (const auto& ex : set) {
    const VoxelTensor4D t = build_tensor(ex.frames, grid, params.cfg.dims);
    const EpisodeTrace tr = rollout(t, ex.label, params, rng, Mode::kEval);
    if (tr.steps.back().pred == ex.label) ++correct;
  }
  return 100.0 * correct / set.size();
}

nlohmann::json encoder_hyper(const EncoderConfig& c) {
  return {{"g_s", c.g_s},     {"G", c.G},           {"dims", c.dims},
          {"ch1", c.ch1},     {"ch2", c.ch2},       {"code_dim", c.code_dim},
          {"kernel", c.kernel}, {"stride", c.stride}, {"pad", c.pad}};
}

EncoderConfig encoder_config_from_hyper(const nlohmann::json& h) {
  EncoderConfig c;
  c.g_s = h.value("g_s", c.g_s);
  c.G = h.value("G", c.G);
  c.dims = h.value("dims", c.dims);
  c.ch1 = h.value("ch1", c.ch1);
  c.ch2 = h.value("ch2", c.ch2);
  c.code_dim = h.value("code_dim", c.code_dim);
  c.kernel = h.value("kernel", c.kernel);
  c.stride = h.value("stride", c.stride);
  c.pad = h.value("pad", c.pad);
  return c;
}

}  // namespace

FitResult fit(const std::vector<TrainExample>& train,
              const std::vector<TrainExample>& val, const TrainConfig& cfg,
              const EncoderParams& encoder, const std::string& out_dir) {
  if (train.empty()) throw std::runtime_error("fit: empty training split");
  int num_classes = 0;
  for (const auto& e : train) num_classes = std::max(num_classes, e.label);
  for (const auto& e : val) num_classes = std::max(num_classes, e.label);
  num_classes = std::max(num_classes, 2);

  RamConfig rc;
  rc.T = cfg.T;
  rc.sigma = cfg.sigma;
  rc.dims = cfg.dims;
  rc.num_classes = num_classes;
  rc.hidden = cfg.hidden;
  rc.dropout_p = cfg.dropout;
  rc.random_init_loc = cfg.random_init_loc;

  FitResult res;
  res.params = RamParams(rc, encoder);
  Rng init_rng(derive_seed(cfg.seed, 0xa11));
  res.params.init(init_rng);
  res.best = res.params;

  const nlohmann::json grid_hyper = {
      {"grid_dims", cfg.grid.dims},
      {"cell_m", cfg.grid.cell_m},
      {"center_origin", cfg.grid.center_origin},
      {"origin", {cfg.grid.origin.x, cfg.grid.origin.y, cfg.grid.origin.z}}};
  auto maybe_save = [&](const std::string& name, const RamParams& p) {
    if (!out_dir.empty()) save_ram_checkpoint(out_dir + "/" + name, p, grid_hyper);
  };
  maybe_save("ckpt_epoch0.g4d", res.params);

  TrainerState state;
  state.opt.lr = cfg.learning_rate;
  state.opt.momentum = cfg.momentum;
  state.opt.weight_decay = cfg.weight_decay;

  double best_val = -1.0;
  std::vector<size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng shuffle_rng(derive_seed(cfg.seed, 0x5f, epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());

    double rew = 0, ce = 0;
    int batches = 0;
    for (size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
      const size_t b1 = std::min(order.size(), b0 + cfg.batch_size);
      std::vector<VoxelTensor4D> tensors;
      std::vector<const VoxelTensor4D*> ptrs;
      std::vector<int> labels;
      tensors.reserve(b1 - b0);
      for (size_t j = b0; j < b1; ++j) {
        const TrainExample& ex = train[order[j]];
        std::vector<PointCloud> frames = ex.frames;
        if (cfg.augment_enabled) {
          Rng arng(derive_seed(cfg.seed, 0xa09, epoch * 1000003ull + order[j]));
          frames = augment(frames, cfg.augment, arng);
        }
        tensors.push_back(build_tensor(frames, cfg.grid, cfg.dims));
        labels.push_back(ex.label);
      }
      for (const auto& t : tensors) ptrs.push_back(&t);
      const uint64_t stream = derive_seed(cfg.seed, 0xe9, epoch, b0);
      const BatchStats st = hybrid_step(ptrs, labels, res.params, cfg, state, stream);
      rew += st.mean_reward;
      ce += st.ce_loss;
      ++batches;
    }

    TrainLogRow row;
    row.epoch = epoch;
    row.mean_reward = rew / batches;
    row.ce_loss = ce / batches;
    row.train_top1 = eval_top1(train, res.params, cfg.grid);
    row.val_top1 = eval_top1(val, res.params, cfg.grid);
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                      .count();
    res.log.push_back(row);

    if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0)
      maybe_save("ckpt_epoch" + std::to_string(epoch) + ".g4d", res.params);
    if (row.val_top1 > best_val) {
      best_val = row.val_top1;
      res.best = res.params;
      maybe_save("best.g4d", res.params);
    }
  }
  if (cfg.epochs > 0)
    maybe_save("ckpt_epoch" + std::to_string(cfg.epochs) + ".g4d", res.params);
  if (best_val < 0) {
    res.best = res.params;
    maybe_save("best.g4d", res.params);
  }
  return res;
}

// ---------------------------------------------------------------------------

void save_encoder_checkpoint(const std::string& path, const EncoderParams& params,
                             const nlohmann::json& extra_hyper) {
  std::vector<std::pair<std::string, const Tensor*>> layers;
  auto names = params.names();
  auto tensors = params.all();
  for (size_t j = 0; j < names.size(); ++j) layers.emplace_back(names[j], tensors[j]);
  layers.emplace_back("enc.code_mu", &params.code_mu);
  layers.emplace_back("enc.code_sigma", &params.code_sigma);
  nlohmann::json hyper = encoder_hyper(params.cfg);
  hyper["kind"] = "encoder";
  for (auto& [k, v] : extra_hyper.items()) hyper[k] = v;
  save_checkpoint(path, layers, hyper);
}

EncoderParams load_encoder_checkpoint(const std::string& path) {
  const LoadedCheckpoint lc = load_checkpoint(path);
  EncoderParams p(encoder_config_from_hyper(lc.hyper));
  auto names = p.names();
  auto tensors = p.all();
  for (size_t j = 0; j < names.size(); ++j) {
    const Tensor& t = lc.get(names[j]);
    if (t.numel() != tensors[j]->numel())
      throw std::runtime_error("encoder checkpoint: shape mismatch for " + names[j]);
    tensors[j]->data = t.data;
  }
  p.code_mu.data = lc.get("enc.code_mu").data;
  p.code_sigma.data = lc.get("enc.code_sigma").data;
  return p;
}

void save_ram_checkpoint(const std::string& path, const RamParams& params,
                         const nlohmann::json& extra_hyper) {
  std::vector<std::pair<std::string, const Tensor*>> layers;
  auto enames = params.enc.names();
  auto etensors = params.enc.all();
  for (size_t j = 0; j < enames.size(); ++j) layers.emplace_back(enames[j], etensors[j]);
  layers.emplace_back("enc.code_mu", &params.enc.code_mu);
  layers.emplace_back("enc.code_sigma", &params.enc.code_sigma);
  auto rnames = params.ram_side_names();
  auto rtens = params.ram_side();
  for (size_t j = 0; j < rnames.size(); ++j) layers.emplace_back(rnames[j], rtens[j]);

  nlohmann::json hyper = encoder_hyper(params.enc.cfg);
  hyper["kind"] = "ram";
  hyper["T"] = params.cfg.T;
  hyper["sigma"] = params.cfg.sigma;
  hyper["model_dims"] = params.cfg.dims;
  hyper["num_classes"] = params.cfg.num_classes;
  hyper["hidden"] = params.cfg.hidden;
  hyper["dropout"] = params.cfg.dropout_p;
  hyper["random_init_loc"] = params.cfg.random_init_loc;
  for (auto& [k, v] : extra_hyper.items()) hyper[k] = v;
  save_checkpoint(path, layers, hyper);
}

RamParams load_ram_checkpoint(const std::string& path) {
  const LoadedCheckpoint lc = load_checkpoint(path);
  EncoderParams enc(encoder_config_from_hyper(lc.hyper));
  {
    auto names = enc.names();
    auto tensors = enc.all();
    for (size_t j = 0; j < names.size(); ++j) tensors[j]->data = lc.get(names[j]).data;
    enc.code_mu.data = lc.get("enc.code_mu").data;
    enc.code_sigma.data = lc.get("enc.code_sigma").data;
  }
  RamConfig rc;
  rc.T = lc.hyper.value("T", rc.T);
  rc.sigma = lc.hyper.value("sigma", rc.sigma);
  rc.dims = lc.hyper.value("model_dims", rc.dims);
  rc.num_classes = lc.hyper.value("num_classes", rc.num_classes);
  rc.hidden = lc.hyper.value("hidden", rc.hidden);
  rc.dropout_p = lc.hyper.value("dropout", rc.dropout_p);
  rc.random_init_loc = lc.hyper.value("random_init_loc", rc.random_init_loc);
  RamParams p(rc, enc);
  auto names = p.ram_side_names();
  auto tensors = p.ram_side();
  for (size_t j = 0; j < names.size(); ++j) {
    const Tensor& t = lc.get(names[j]);
    if (t.numel() != tensors[j]->numel())
      throw std::runtime_error("ram checkpoint: shape mismatch for " + names[j]);
    tensors[j]->data = t.data;
  }
  return p;
}

}  // namespace g4d
