#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "segzero/grpo.hpp"
#include "segzero/rewards.hpp"
#include "segzero/segmenter.hpp"

namespace segzero::config {

struct ConfigError : Error {
  using Error::Error;
};

/// Everything a run depends on. Serialized as `key = value` lines; `#` starts a comment.
struct RunConfig {
  grpo::TrainConfig train;
  rewards::RewardConfig reward;

  int hidden = 64;
  int embed = 16;
  int max_len = 96;
  std::uint64_t init_seed = 1;

  // An empty path selects a generated synthetic set of the given size and seed.
  std::string train_data;
  std::string eval_data;
  std::size_t train_samples = 200;
  std::size_t eval_samples = 200;
  std::uint64_t data_seed = 7;
  std::uint64_t eval_data_seed = 99;
  int min_objects = 3;
  int max_objects = 5;

  std::string out_dir = "run";
  long checkpoint_every = 0;  // 0: final checkpoint only

  segmenter::SegBackend backend;
  double eval_temperature = 0.0;  // 0: greedy decoding
  std::uint64_t eval_seed = 1;

  /// Throws ConfigError on an unknown key or a value that does not parse.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  std::map<std::string, std::string> to_map() const;
  void validate() const;
};

/// Applies every assignment in the stream on top of `base`.
RunConfig parse_config(std::istream& in, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
void write_config(std::ostream& out, const RunConfig& cfg);
void save_config(const std::filesystem::path& path, const RunConfig& cfg);

}  // namespace segzero::config
