#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "g4d/checkpoint.hpp"
#include "g4d/dataset.hpp"
#include "g4d/encoder.hpp"
#include "g4d/eval.hpp"
#include "g4d/synth.hpp"
#include "g4d/trainer.hpp"
#include "g4d/visualize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace g4d;

namespace {

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  return json::parse(in);
}

VoxelGridConfig grid_from_hyper(const json& h) {
  VoxelGridConfig g;
  if (h.contains("grid_dims"))
    for (int a = 0; a < 3; ++a) g.dims[a] = h["grid_dims"][a];
  if (h.contains("cell_m"))
    for (int a = 0; a < 3; ++a) g.cell_m[a] = h["cell_m"][a];
  g.center_origin = h.value("center_origin", g.center_origin);
  if (h.contains("origin")) {
    g.origin.x = h["origin"][0];
    g.origin.y = h["origin"][1];
    g.origin.z = h["origin"][2];
  }
  return g;
}

std::vector<TrainExample> examples_for(const Dataset& ds, const std::string& split,
                                       int dims, int stride) {
  return dims >= 4 ? ds.split_examples(split, stride)
                   : ds.split_frame_examples(split, stride);
}

std::vector<LabeledSequence> labeled_tensors(const Dataset& ds,
                                             const std::string& split,
                                             const VoxelGridConfig& grid, int dims) {
  std::vector<LabeledSequence> out;
  for (const auto& s : ds.sequences) {
    if (s.split != split) continue;
    LabeledSequence ls;
    ls.sequence_id = s.sequence_id;
    ls.label = ds.label_of(s.person_id);
    ls.tensor = build_tensor(s.frames, grid, dims);
    out.push_back(std::move(ls));
  }
  return out;
}

int cmd_synth(const std::string& config_path, const std::string& out_dir) {
  const SynthConfig cfg = synth_config_from_json(load_json(config_path));
  const EmitResult r = emit_dataset(cfg, out_dir);
  std::printf("wrote %d frames across %d sequences; manifest: %s\n", r.file_count,
              r.sequence_count, r.manifest_path.c_str());
  return 0;
}

int cmd_pretrain(const std::string& manifest, const std::string& out_path, int dims,
                 int epochs, int samples, int stride, uint64_t seed) {
  const Dataset ds = load_dataset(manifest);
  const auto train = examples_for(ds, "train", dims, stride);
  if (train.empty()) throw std::runtime_error("no training sequences in manifest");

  VoxelGridConfig grid;
  GlimpseConfig gc;
  gc.dims = dims;
  Rng rng(derive_seed(seed, 0xec));
  std::vector<GlimpsePyramid> corpus;
  const int per = std::max(1, (samples + static_cast<int>(train.size()) - 1) /
                                  static_cast<int>(train.size()));
  for (const auto& ex : train) {
    const VoxelTensor4D t = build_tensor(ex.frames, grid, dims);
    for (int s = 0; s < per && static_cast<int>(corpus.size()) < samples; ++s) {
      GlimpseLocation loc;
      loc.x = rng.uniform(-1, 1);
      loc.y = rng.uniform(-1, 1);
      if (dims >= 3) loc.z = rng.uniform(-1, 1);
      if (dims >= 4) loc.tau = rng.uniform(-1, 1);
      corpus.push_back(extract(t, loc, gc));
    }
  }

  EncoderConfig ec;
  ec.dims = dims;
  EncoderParams params(ec);
  Rng init(derive_seed(seed, 0xe0));
  params.init(init);
  PretrainConfig pc;
  pc.epochs = epochs;
  pc.seed = seed;
  const PretrainResult res = pretrain(corpus, pc, params);
  for (size_t e = 0; e < res.holdout_mse.size(); ++e)
    std::printf("epoch %zu holdout_mse %.6f\n", e, res.holdout_mse[e]);
  save_encoder_checkpoint(out_path, params);
  std::printf("saved encoder: %s\n", out_path.c_str());
  return 0;
}

int cmd_train(const std::string& manifest, const std::string& encoder_path,
              const std::string& config_path, const std::string& out_dir, int dims,
              int epochs, int64_t seed, int stride) {
  TrainConfig cfg =
      config_path.empty() ? TrainConfig{} : train_config_from_json(load_json(config_path));
  if (dims > 0) cfg.dims = dims;
  if (epochs > 0) cfg.epochs = epochs;
  if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");

  const EncoderParams enc = load_encoder_checkpoint(encoder_path);
  if (enc.cfg.dims != cfg.dims)
    throw std::invalid_argument("train: encoder dims " + std::to_string(enc.cfg.dims) +
                                " != requested dims " + std::to_string(cfg.dims));

  const Dataset ds = load_dataset(manifest);
  const auto train = examples_for(ds, "train", cfg.dims, stride);
  const auto val = examples_for(ds, "test", cfg.dims, stride);
  fs::create_directories(out_dir);
  std::ofstream(fs::path(out_dir) / "train_config.json")
      << train_config_to_json(cfg).dump(2) << '\n';

  const FitResult res = fit(train, val, cfg, enc, out_dir);
  write_train_log_csv((fs::path(out_dir) / "train_log.csv").string(), res.log);
  for (const auto& row : res.log)
    std::printf("epoch %d reward %.3f ce %.4f train %.1f%% val %.1f%% (%.1fs)\n",
                row.epoch, row.mean_reward, row.ce_loss, row.train_top1, row.val_top1,
                row.seconds);
  return 0;
}

int cmd_eval(const std::string& manifest, const std::string& model,
             const std::string& out_dir, const std::string& mode,
             const std::string& split, int stride) {
  const RamParams params = load_ram_checkpoint(model);
  const VoxelGridConfig grid = grid_from_hyper(load_checkpoint(model).hyper);
  const Dataset ds = load_dataset(manifest);
  if (ds.num_classes != params.cfg.num_classes) {
    std::fprintf(stderr,
                 "label-space mismatch: manifest has %d classes, model has %d\n",
                 ds.num_classes, params.cfg.num_classes);
    return 2;
  }

  ScoreMatrix sm;
  sm.num_classes = params.cfg.num_classes;
  Rng rng(0);
  for (const auto& s : ds.sequences) {
    if (s.split != split) continue;
    std::vector<double> row;
    if (mode == "multi") {
      std::vector<std::vector<double>> frame_probs;
      for (size_t t = 0; t < s.frames.size(); t += stride) {
        const VoxelTensor4D ft =
            build_tensor({s.frames[t]}, grid, params.cfg.dims);
        const EpisodeTrace tr = rollout(ft, 1, params, rng, Mode::kEval);
        frame_probs.push_back(tr.steps.back().probs);
      }
      row = multishot(frame_probs, MultishotScheme::kMeanLogProb).scores;
    } else {
      const VoxelTensor4D t = build_tensor(s.frames, grid, params.cfg.dims);
      const EpisodeTrace tr = rollout(t, 1, params, rng, Mode::kEval);
      row = tr.steps.back().probs;
    }
    sm.scores.push_back(std::move(row));
    sm.labels.push_back(ds.label_of(s.person_id));
  }
  if (sm.scores.empty()) throw std::runtime_error("eval: split '" + split + "' is empty");

  const EvalReport rep = cmc(sm);
  fs::create_directories(out_dir);
  std::ofstream(fs::path(out_dir) / "report.json") << report_to_json(rep).dump(2) << '\n';
  write_cmc_csv((fs::path(out_dir) / "cmc.csv").string(), rep);
  std::printf("top1 %.2f%% nAUC %.2f (%zu items, %d classes)\n", rep.top1, rep.nauc,
              sm.scores.size(), sm.num_classes);
  return 0;
}

int cmd_visualize(const std::string& manifest, const std::string& model,
                  const std::string& out_dir, const std::string& split, int limit) {
  const RamParams params = load_ram_checkpoint(model);
  const VoxelGridConfig grid = grid_from_hyper(load_checkpoint(model).hyper);
  const Dataset ds = load_dataset(manifest);
  auto seqs = labeled_tensors(ds, split, grid, params.cfg.dims);
  if (seqs.empty()) throw std::runtime_error("visualize: split '" + split + "' is empty");
  if (limit > 0 && static_cast<int>(seqs.size()) > limit) seqs.resize(limit);
  const VisualizeResult r = visualize(seqs, params, out_dir);
  std::printf("wrote %s, %s, %s; backward time jumps: %d\n", r.path_json.c_str(),
              r.heatmap_pgm.c_str(), r.tau_csv.c_str(), r.backward_time_jumps);
  if (r.backward_time_jumps == 0)
    std::printf("note: no backward time jumps observed in these rollouts\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"depth-video person identification via recurrent glimpses"};
  app.require_subcommand(1);

  std::string config, out, manifest, encoder, model;
  std::string mode = "single", split = "test";
  int dims = 0, epochs = 0, samples = 1000, stride = 1, limit = 0;
  int64_t seed = -1;

  auto* synth = app.add_subcommand("synth", "generate a synthetic depth dataset");
  synth->add_option("--config", config, "synth config JSON")->required();
  synth->add_option("--out", out, "output directory")->required();

  auto* pre = app.add_subcommand("pretrain-encoder", "autoencoder pretraining");
  pre->add_option("--manifest", manifest)->required();
  pre->add_option("--out", out, "encoder checkpoint path")->required();
  pre->add_option("--dims", dims)->default_val(4);
  pre->add_option("--epochs", epochs)->default_val(10);
  pre->add_option("--samples", samples, "glimpse corpus size");
  pre->add_option("--frame-stride", stride);
  pre->add_option("--seed", seed)->default_val(0);

  auto* train = app.add_subcommand("train", "train the recurrent attention model");
  train->add_option("--manifest", manifest)->required();
  train->add_option("--encoder", encoder, "pretrained encoder checkpoint")->required();
  train->add_option("--out", out, "output directory")->required();
  train->add_option("--config", config, "train config JSON");
  train->add_option("--dims", dims, "model variant: 4, 3 or 2");
  train->add_option("--epochs", epochs);
  train->add_option("--seed", seed);
  train->add_option("--frame-stride", stride);

  auto* ev = app.add_subcommand("eval", "evaluate a trained model");
  ev->add_option("--manifest", manifest)->required();
  ev->add_option("--model", model, "RAM checkpoint")->required();
  ev->add_option("--out", out, "output directory")->required();
  ev->add_option("--mode", mode)->check(CLI::IsMember({"single", "multi"}));
  ev->add_option("--split", split);
  ev->add_option("--frame-stride", stride);

  auto* vis = app.add_subcommand("visualize", "dump glimpse paths and heatmap");
  vis->add_option("--manifest", manifest)->required();
  vis->add_option("--model", model, "RAM checkpoint")->required();
  vis->add_option("--out", out, "output directory")->required();
  vis->add_option("--split", split);
  vis->add_option("--limit", limit, "max sequences to roll out");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;  // usage errors exit 1
  }

  try {
    if (synth->parsed()) return cmd_synth(config, out);
    if (pre->parsed())
      return cmd_pretrain(manifest, out, dims, epochs, samples, stride,
                          static_cast<uint64_t>(seed < 0 ? 0 : seed));
    if (train->parsed())
      return cmd_train(manifest, encoder, config, out, dims, epochs, seed, stride);
    if (ev->parsed()) return cmd_eval(manifest, model, out, mode, split, stride);
    if (vis->parsed()) return cmd_visualize(manifest, model, out, split, limit);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;  // config/usage problems
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;  // runtime failures
  }
  return 1;
}
