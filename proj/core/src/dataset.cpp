#include "vqtoken/dataset.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "vqtoken/attention.hpp"
#include "vqtoken/errors.hpp"

namespace vqtoken {

ProxyDataset::ProxyDataset(DatasetConfig config, std::vector<SynthClip> clips,
                           std::vector<std::size_t> train, std::vector<std::size_t> test)
    : config_(config), clips_(std::move(clips)), train_(std::move(train)),
      test_(std::move(test)) {
  std::uint64_t content = 0xCBF29CE484222325ULL;
  for (const SynthClip& clip : clips_) {
    content ^= hash_matrix(clip.grid.embeddings) + 0x9E3779B97F4A7C15ULL +
               static_cast<std::uint64_t>(clip.label.class_id);
    content *= 0x100000001B3ULL;
  }
  std::ostringstream ss;
  ss << "proxy-" << config_.num_clips << "x" << config_.dims.frames << "x"
     << config_.dims.height << "x" << config_.dims.width << "x" << config_.dim << "-s"
     << config_.seed << "-h" << std::hex << content;
  id_ = ss.str();
}

const SynthClip& ProxyDataset::clip(std::size_t i) const {
  if (i >= clips_.size()) throw ContractError("dataset: clip index out of range");
  {
    std::lock_guard<std::mutex> lock(*log_mutex_);
    access_log_.push_back(i);
  }
  return clips_[i];
}

std::vector<std::size_t> ProxyDataset::access_log() const {
  std::lock_guard<std::mutex> lock(*log_mutex_);
  return access_log_;
}

void ProxyDataset::clear_access_log() const {
  std::lock_guard<std::mutex> lock(*log_mutex_);
  access_log_.clear();
}

ProxyDataset assemble_dataset(const DatasetConfig& cfg, std::vector<SynthClip> clips) {
  if (cfg.num_classes == 0 || cfg.num_classes > 4) {
    throw ContractError("dataset: num_classes must be in [1,4]");
  }
  if (clips.size() < cfg.num_classes) {
    throw ContractError("dataset: need at least one clip per class");
  }

  // Stratified 80/20 split, shuffled per class.
  std::vector<std::size_t> train, test;
  Rng split_rng = Rng(cfg.seed).fork(0x5EED);
  for (std::size_t c = 0; c < cfg.num_classes; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < clips.size(); ++i) {
      if (clips[i].label.class_id == static_cast<int>(c)) members.push_back(i);
    }
    for (std::size_t i = members.size(); i > 1; --i)
      std::swap(members[i - 1], members[split_rng.next_below(i)]);
    const std::size_t train_count = (members.size() * 8 + 5) / 10;
    for (std::size_t i = 0; i < members.size(); ++i) {
      (i < train_count ? train : test).push_back(members[i]);
    }
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());

  DatasetConfig stamped = cfg;
  stamped.num_clips = clips.size();
  return ProxyDataset(stamped, std::move(clips), std::move(train), std::move(test));
}

ProxyDataset build_dataset(const DatasetConfig& cfg) {
  if (cfg.num_classes == 0 || cfg.num_classes > 4) {
    throw ContractError("dataset: num_classes must be in [1,4]");
  }
  if (cfg.num_clips < cfg.num_classes) {
    throw ContractError("dataset: need at least one clip per class");
  }
  if (cfg.objects_min == 0 || cfg.objects_min > cfg.objects_max) {
    throw ContractError("dataset: bad object count range");
  }

  Rng rng(cfg.seed);
  const std::uint64_t signature_seed = rng.fork(0xDA7A).next_u64() | 1;

  std::vector<SynthClip> clips;
  clips.reserve(cfg.num_clips);
  for (std::size_t i = 0; i < cfg.num_clips; ++i) {
    SynthConfig sc;
    sc.dims = cfg.dims;
    sc.dim = cfg.dim;
    sc.num_objects =
        cfg.objects_min + rng.next_below(cfg.objects_max - cfg.objects_min + 1);
    sc.motion = static_cast<MotionClass>(i % cfg.num_classes);  // exact balance +/-1
    sc.noise_std = cfg.noise_std;
    sc.seed = rng.fork(i + 1).next_u64();
    sc.signature_seed = signature_seed;
    SynthClip clip = synthesize_clip(sc);
    std::ostringstream name;
    name << "clip_" << std::setw(4) << std::setfill('0') << i;
    clip.label.clip_id = name.str();
    clips.push_back(std::move(clip));
  }
  return assemble_dataset(cfg, std::move(clips));
}

}  // namespace vqtoken
