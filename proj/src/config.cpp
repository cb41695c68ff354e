#include "segzero/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>

namespace segzero::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string show(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <typename T>
std::string show_int(T v) {
  return std::to_string(v);
}

double read_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ConfigError(key + ": not a number: '" + s + "'");
  }
  return v;
}

template <typename T>
T read_int(const std::string& key, const std::string& s) {
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ConfigError(key + ": not an integer in range: '" + s + "'");
  }
  return v;
}

template <typename T, typename Parse>
T read_enum(const std::string& key, const std::string& s, Parse parse) {
  const auto v = parse(s);
  if (!v) throw ConfigError(key + ": unrecognized value '" + s + "'");
  return *v;
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

#define SEGZERO_DOUBLE(name, member)                                                      \
  {name,                                                                                  \
   {[](const RunConfig& c) { return show(c.member); },                                    \
    [](RunConfig& c, const std::string& k, const std::string& v) { c.member = read_double(k, v); }}}
#define SEGZERO_INT(name, member)                                                         \
  {name,                                                                                  \
   {[](const RunConfig& c) { return show_int(c.member); },                                \
    [](RunConfig& c, const std::string& k, const std::string& v) {                        \
      c.member = read_int<decltype(c.member)>(k, v);                                      \
    }}}
#define SEGZERO_STRING(name, member)                                                      \
  {name,                                                                                  \
   {[](const RunConfig& c) { return c.member; },                                          \
    [](RunConfig& c, const std::string&, const std::string& v) { c.member = v; }}}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      SEGZERO_INT("group_size", train.group_size),
      SEGZERO_INT("batch_rollouts", train.batch_rollouts),
      SEGZERO_DOUBLE("learning_rate", train.learning_rate),
      SEGZERO_DOUBLE("weight_decay", train.weight_decay),
      SEGZERO_DOUBLE("clip_eps", train.clip_eps),
      SEGZERO_DOUBLE("kl_beta", train.kl_beta),
      SEGZERO_DOUBLE("std_eps", train.std_eps),
      SEGZERO_DOUBLE("temperature", train.temperature),
      SEGZERO_DOUBLE("max_grad_norm", train.max_grad_norm),
      SEGZERO_INT("max_steps", train.max_steps),
      SEGZERO_INT("eval_every", train.eval_every),
      SEGZERO_INT("ref_refresh", train.ref_refresh),
      SEGZERO_INT("seed", train.seed),
      {"ratio",
       {[](const RunConfig& c) { return std::string(grpo::to_string(c.train.ratio)); },
        [](RunConfig& c, const std::string& k, const std::string& v) {
          c.train.ratio = read_enum<grpo::RatioLevel>(k, v, grpo::parse_ratio_level);
        }}},
      {"format_mode",
       {[](const RunConfig& c) { return std::string(parser::to_string(c.reward.format_mode)); },
        [](RunConfig& c, const std::string& k, const std::string& v) {
          c.reward.format_mode = read_enum<parser::FormatMode>(k, v, parser::parse_format_mode);
        }}},
      {"accuracy_mode",
       {[](const RunConfig& c) { return std::string(rewards::to_string(c.reward.accuracy_mode)); },
        [](RunConfig& c, const std::string& k, const std::string& v) {
          c.reward.accuracy_mode =
              read_enum<rewards::AccuracyMode>(k, v, rewards::parse_accuracy_mode);
        }}},
      {"point_gate",
       {[](const RunConfig& c) { return std::string(rewards::to_string(c.reward.point_gate)); },
        [](RunConfig& c, const std::string& k, const std::string& v) {
          c.reward.point_gate = read_enum<rewards::PointGate>(k, v, rewards::parse_point_gate);
        }}},
      SEGZERO_DOUBLE("iou_threshold", reward.iou_threshold),
      SEGZERO_DOUBLE("bbox_l1_threshold", reward.bbox_l1_threshold),
      SEGZERO_DOUBLE("point_l1_threshold", reward.point_l1_threshold),
      SEGZERO_INT("hidden", hidden),
      SEGZERO_INT("embed", embed),
      SEGZERO_INT("max_len", max_len),
      SEGZERO_INT("init_seed", init_seed),
      SEGZERO_STRING("train_data", train_data),
      SEGZERO_STRING("eval_data", eval_data),
      SEGZERO_INT("train_samples", train_samples),
      SEGZERO_INT("eval_samples", eval_samples),
      SEGZERO_INT("data_seed", data_seed),
      SEGZERO_INT("eval_data_seed", eval_data_seed),
      SEGZERO_INT("min_objects", min_objects),
      SEGZERO_INT("max_objects", max_objects),
      SEGZERO_STRING("out_dir", out_dir),
      SEGZERO_INT("checkpoint_every", checkpoint_every),
      {"backend",
       {[](const RunConfig& c) { return std::string(segmenter::to_string(c.backend.kind)); },
        [](RunConfig& c, const std::string& k, const std::string& v) {
          c.backend.kind = read_enum<segmenter::BackendKind>(k, v, segmenter::parse_backend_kind);
        }}},
      {"endpoint",
       {[](const RunConfig& c) { return c.backend.endpoint.value_or(""); },
        [](RunConfig& c, const std::string&, const std::string& v) {
          if (v.empty()) {
            c.backend.endpoint.reset();
          } else {
            c.backend.endpoint = v;
          }
        }}},
      {"timeout_ms",
       {[](const RunConfig& c) { return show_int(c.backend.timeout.count()); },
        [](RunConfig& c, const std::string& k, const std::string& v) {
          c.backend.timeout = std::chrono::milliseconds(read_int<long long>(k, v));
        }}},
      SEGZERO_DOUBLE("eval_temperature", eval_temperature),
      SEGZERO_INT("eval_seed", eval_seed),
  };
  return table;
}

#undef SEGZERO_DOUBLE
#undef SEGZERO_INT
#undef SEGZERO_STRING

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(*this, key, value);
}

std::string RunConfig::get(const std::string& key) const {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second.get(*this);
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> out = [] {
    std::vector<std::string> k;
    for (const auto& [name, f] : fields()) k.push_back(name);
    return k;
  }();
  return out;
}

std::map<std::string, std::string> RunConfig::to_map() const {
  std::map<std::string, std::string> m;
  for (const auto& [name, f] : fields()) m[name] = f.get(*this);
  return m;
}

void RunConfig::validate() const {
  try {
    train.validate();
    reward.validate();
    backend.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (hidden < 1 || embed < 1 || max_len < 1) {
    throw ConfigError("hidden, embed and max_len must be positive");
  }
  if (min_objects < synth::kMinObjects || max_objects > synth::kMaxObjects ||
      min_objects > max_objects) {
    throw ConfigError("object counts must satisfy " + std::to_string(synth::kMinObjects) +
                      " <= min_objects <= max_objects <= " + std::to_string(synth::kMaxObjects));
  }
  if (!(eval_temperature >= 0.0)) throw ConfigError("eval_temperature must be non-negative");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be non-negative");
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
}

RunConfig parse_config(std::istream& in, RunConfig base) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      base.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_config(in, std::move(base));
}

void write_config(std::ostream& out, const RunConfig& cfg) {
  for (const auto& [key, value] : cfg.to_map()) out << key << " = " << value << '\n';
}

void save_config(const std::filesystem::path& path, const RunConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_config(out, cfg);
}

}  // namespace segzero::config
