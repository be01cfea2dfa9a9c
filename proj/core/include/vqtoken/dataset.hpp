#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "vqtoken/synthesis.hpp"

namespace vqtoken {

struct DatasetConfig {
  std::size_t num_clips = 200;
  GridDims dims{8, 6, 6};
  std::uint32_t dim = 32;
  std::size_t num_classes = 4;  // motion classes used (cycled from Left)
  double noise_std = 0.15;
  std::size_t objects_min = 1;
  std::size_t objects_max = 3;
  std::uint64_t seed = 0;
};

/// Balanced, seeded proxy dataset with a stratified 80/20 train/test split.
/// All clips share one signature pool (objects look the same across clips);
/// placement and noise are per-clip. Clip reads go through clip() so tests
/// can assert that training never touched the test split.
class ProxyDataset {
 public:
  ProxyDataset(DatasetConfig config, std::vector<SynthClip> clips,
               std::vector<std::size_t> train, std::vector<std::size_t> test);

  const DatasetConfig& config() const { return config_; }
  std::size_t size() const { return clips_.size(); }
  const std::vector<std::size_t>& train_indices() const { return train_; }
  const std::vector<std::size_t>& test_indices() const { return test_; }

  /// Recorded access to a clip (thread-safe logging).
  const SynthClip& clip(std::size_t i) const;

  std::vector<std::size_t> access_log() const;
  void clear_access_log() const;

  /// Stable id derived from the generation config.
  const std::string& id() const { return id_; }

 private:
  DatasetConfig config_;
  std::vector<SynthClip> clips_;
  std::vector<std::size_t> train_;
  std::vector<std::size_t> test_;
  std::string id_;
  std::unique_ptr<std::mutex> log_mutex_ = std::make_unique<std::mutex>();
  mutable std::vector<std::size_t> access_log_;
};

ProxyDataset build_dataset(const DatasetConfig& cfg);

/// Wraps pre-built clips (e.g. loaded from disk) with the same stratified
/// 80/20 split rule that build_dataset uses. cfg.seed drives the split.
ProxyDataset assemble_dataset(const DatasetConfig& cfg, std::vector<SynthClip> clips);

}  // namespace vqtoken
