#include "g4d/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "g4d/pgm.hpp"

namespace g4d {

namespace fs = std::filesystem;

namespace {

bool glob_match(const std::string& pat, const std::string& name) {
  // '*' only; good enough for manifest frame globs
  size_t p = 0, n = 0, star = std::string::npos, mark = 0;
  while (n < name.size()) {
    if (p < pat.size() && (pat[p] == name[n])) {
      ++p;
      ++n;
    } else if (p < pat.size() && pat[p] == '*') {
      star = p++;
      mark = n;
    } else if (star != std::string::npos) {
      p = star + 1;
      n = ++mark;
    } else {
      return false;
    }
  }
  while (p < pat.size() && pat[p] == '*') ++p;
  return p == pat.size();
}

std::vector<fs::path> expand_glob(const fs::path& base, const std::string& glob) {
  const fs::path full = base / glob;
  const fs::path dir = full.parent_path();
  const std::string leaf = full.filename().string();
  if (dir.string().find('*') != std::string::npos)
    throw std::runtime_error("load_dataset: wildcards in directories unsupported: " +
                             glob);
  if (!fs::is_directory(dir))
    throw std::runtime_error("load_dataset: no such directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && glob_match(leaf, e.path().filename().string()))
      out.push_back(e.path());
  std::sort(out.begin(), out.end());
  if (out.empty())
    throw std::runtime_error("load_dataset: glob matched no files: " + glob);
  return out;
}

PointCloud remap_up(const PointCloud& cam, const std::string& pose) {
  PointCloud out;
  out.reserve(cam.size());
  for (const auto& p : cam) {
    // grid x = walking direction (longest extent), y = lateral, z = up
    if (pose == "topdown")
      out.push_back({p.y, p.x, -p.z});
    else if (pose == "frontal")
      out.push_back({p.z, p.x, -p.y});
    else
      throw std::runtime_error("load_dataset: unknown camera_pose: " + pose);
  }
  return out;
}

}  // namespace

int Dataset::label_of(const std::string& person_id) const {
  const auto it = std::lower_bound(classes.begin(), classes.end(), person_id);
  if (it == classes.end() || *it != person_id)
    throw std::runtime_error("label_of: unknown person_id: " + person_id);
  return static_cast<int>(it - classes.begin()) + 1;
}

std::vector<TrainExample> Dataset::split_examples(const std::string& split,
                                                  int frame_stride) const {
  if (frame_stride < 1) throw std::invalid_argument("split_examples: bad stride");
  std::vector<TrainExample> out;
  for (const auto& s : sequences) {
    if (s.split != split) continue;
    TrainExample ex;
    ex.id = s.sequence_id;
    ex.label = label_of(s.person_id);
    for (size_t t = 0; t < s.frames.size(); t += frame_stride)
      ex.frames.push_back(s.frames[t]);
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<TrainExample> Dataset::split_frame_examples(const std::string& split,
                                                        int frame_stride) const {
  if (frame_stride < 1) throw std::invalid_argument("split_frame_examples: bad stride");
  std::vector<TrainExample> out;
  for (const auto& s : sequences) {
    if (s.split != split) continue;
    for (size_t t = 0; t < s.frames.size(); t += frame_stride) {
      TrainExample ex;
      ex.id = s.sequence_id + "#" + std::to_string(t);
      ex.label = label_of(s.person_id);
      ex.frames.push_back(s.frames[t]);
      out.push_back(std::move(ex));
    }
  }
  return out;
}

Dataset load_dataset(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + manifest_path);
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.is_object() && j.contains("sequences")) j = j["sequences"];
  if (!j.is_array() || j.empty())
    throw std::runtime_error("load_dataset: manifest has no sequences");

  const fs::path base = fs::path(manifest_path).parent_path();
  Dataset ds;
  std::set<std::string> ids;
  for (const auto& e : j) {
    DatasetSequence seq;
    seq.sequence_id = e.at("sequence_id");
    seq.person_id = e.at("person_id");
    seq.split = e.at("split");
    const std::string pose = e.at("camera_pose");
    CameraIntrinsics intr;
    intr.fx = e.at("intrinsics").at("fx");
    intr.fy = e.at("intrinsics").at("fy");
    intr.cx = e.at("intrinsics").at("cx");
    intr.cy = e.at("intrinsics").at("cy");

    int tau = 0;
    for (const auto& path : expand_glob(base, e.at("frame_glob"))) {
      DepthFrame f = read_pgm16(path.string());
      f.tau = tau++;
      seq.frames.push_back(remap_up(backproject(f, intr), pose));
    }
    ids.insert(seq.person_id);
    ds.sequences.push_back(std::move(seq));
  }
  ds.classes.assign(ids.begin(), ids.end());
  ds.num_classes = static_cast<int>(ds.classes.size());
  return ds;
}

}  // namespace g4d
