#include "segzero/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "segzero/config.hpp"
#include "segzero/dataprep.hpp"
#include "segzero/eval.hpp"
#include "segzero/grpo.hpp"
#include "segzero/image.hpp"
#include "segzero/log.hpp"
#include "segzero/parser.hpp"
#include "segzero/policy.hpp"
#include "segzero/rewards.hpp"
#include "segzero/run.hpp"

namespace segzero::cli {

namespace fs = std::filesystem;

namespace {

struct UsageError : Error {
  using Error::Error;
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

// Flags shared by train and eval: a config file, generic overrides, then dedicated flags.
struct ConfigFlags {
  std::string path;
  std::vector<std::string> sets;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--config", path, "Run config file (key = value lines)");
    cmd.add_option("--set", sets, "Override one config key, as key=value (repeatable)");
  }

  config::RunConfig resolve() const {
    config::RunConfig cfg;
    if (!path.empty()) cfg = config::load_config(path);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
  }
};

template <typename T>
void apply(config::RunConfig& cfg, const char* key, const std::optional<T>& v) {
  if (!v) return;
  if constexpr (std::is_same_v<T, std::string>) {
    cfg.set(key, *v);
  } else {
    std::ostringstream s;
    s.precision(17);
    s << *v;
    cfg.set(key, s.str());
  }
}

// ---- prepare-data -------------------------------------------------------------------------

struct PrepareFlags {
  std::string out;
  std::size_t n = 100;
  std::uint64_t seed = 1;
  std::string import_path;
  int min_objects = 3;
  int max_objects = 5;
  std::string png_dir;
};

int cmd_prepare(const PrepareFlags& f, std::ostream& out) {
  std::vector<dataprep::GroundTruthRecord> records;
  if (!f.import_path.empty()) {
    records = dataprep::import_annotations(fs::path(f.import_path));
  } else {
    if (f.min_objects < synth::kMinObjects || f.max_objects > synth::kMaxObjects ||
        f.min_objects > f.max_objects) {
      throw UsageError("object counts must satisfy " + std::to_string(synth::kMinObjects) +
                       " <= min <= max <= " + std::to_string(synth::kMaxObjects));
    }
    records = dataprep::make_synth_dataset(f.n, f.seed, f.min_objects, f.max_objects);
  }
  const fs::path out_path(f.out);
  if (out_path.has_parent_path()) make_dir(out_path.parent_path());
  dataprep::write_dataset(out_path, records);

  if (!f.png_dir.empty()) {
    make_dir(f.png_dir);
    for (const auto& r : records) {
      if (!r.scene) continue;
      const auto png = image::encode_png(image::render_rgb(dataprep::render(*r.scene)));
      auto file = open_out(fs::path(f.png_dir) / (r.id + ".png"));
      file.write(png.data(), static_cast<std::streamsize>(png.size()));
      if (!file) throw IoError("cannot write " + r.id + ".png");
    }
  }

  double area = 0.0;
  for (const auto& r : records) area += static_cast<double>(r.gt_mask.count());
  const double mean = records.empty() ? 0.0 : area / static_cast<double>(records.size());
  out << "count=" << records.size() << " mean_mask_area=" << fixed(mean, 2) << '\n';
  return kOk;
}

// ---- train --------------------------------------------------------------------------------

struct TrainFlags {
  ConfigFlags config;
  std::optional<long> steps;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr;
  std::optional<std::string> format_mode;
  std::optional<std::string> out_dir;
  std::optional<std::string> train_data;
  std::optional<std::string> eval_data;
};

void save_ckpt(const fs::path& path, const policy::Checkpoint& c) {
  policy::save_checkpoint(path, c);
  log::debug("wrote " + path.string());
}

int cmd_train(const TrainFlags& f, std::ostream& out) {
  auto cfg = f.config.resolve();
  apply(cfg, "max_steps", f.steps);
  apply(cfg, "seed", f.seed);
  apply(cfg, "learning_rate", f.lr);
  apply(cfg, "format_mode", f.format_mode);
  apply(cfg, "out_dir", f.out_dir);
  apply(cfg, "train_data", f.train_data);
  apply(cfg, "eval_data", f.eval_data);
  cfg.validate();

  const fs::path dir(cfg.out_dir);
  make_dir(dir);
  config::save_config(dir / "run.cfg", cfg);

  const auto records = run::train_records(cfg);
  auto log_file = open_out(dir / "train_log.csv");
  grpo::write_log_header(log_file);

  if (cfg.train.max_steps == 0) {
    save_ckpt(dir / "checkpoint.json", run::initial_checkpoint(cfg));
    out << "steps=0 checkpoint=" << (dir / "checkpoint.json").string() << '\n';
    return kOk;
  }

  const auto net = run::make_net(cfg);
  std::vector<dataprep::GroundTruthRecord> eval_set;
  std::optional<std::ofstream> eval_log;
  if (cfg.train.eval_every > 0) {
    eval_set = run::eval_records(cfg);
    eval_log = open_out(dir / "eval_log.csv");
    *eval_log << "step,giou,ciou\n";
  }

  auto snapshot = [&](const grpo::TrainState& s) {
    return policy::Checkpoint{net.shape(), s.params, cfg.init_seed, cfg.train.seed, s.step};
  };

  run::TrainHooks hooks;
  hooks.on_step = [&](const grpo::LogRow& row, const grpo::TrainState& s) {
    grpo::write_log_row(log_file, row);
    log_file.flush();
    if (!log_file) throw IoError("cannot write train_log.csv");
    if (row.step % 100 == 0) {
      log::info("step " + std::to_string(row.step) + " reward " + fixed(row.reward_total) +
                " format " + fixed(row.reward_format) + " iou " + fixed(row.reward_iou) +
                " len " + fixed(row.len_mean, 1));
    }
    if (cfg.checkpoint_every > 0 && s.step % cfg.checkpoint_every == 0) {
      save_ckpt(dir / ("checkpoint_" + std::to_string(s.step) + ".json"), snapshot(s));
    }
  };
  if (eval_log) {
    hooks.on_eval = [&](const grpo::TrainState& s) {
      const auto ckpt = snapshot(s);
      save_ckpt(dir / ("checkpoint_" + std::to_string(s.step) + ".json"), ckpt);
      const auto r = run::evaluate(cfg, ckpt, eval_set, "eval");
      std::ostringstream line;
      line.precision(17);
      line << s.step << ',' << r.giou << ',' << r.ciou << '\n';
      *eval_log << line.str();
      eval_log->flush();
      log::info("eval at step " + std::to_string(s.step) + ": gIoU " + fixed(r.giou) +
                " cIoU " + fixed(r.ciou));
    };
  }

  const auto result = run::train(cfg, records, hooks);
  save_ckpt(dir / "checkpoint.json", result.checkpoint);
  const auto& last = result.log.back();
  out << "steps=" << result.checkpoint.step << " reward_total=" << fixed(last.reward_total)
      << " reward_format=" << fixed(last.reward_format) << " reward_iou="
      << fixed(last.reward_iou) << " len_mean=" << fixed(last.len_mean, 2) << '\n';
  return kOk;
}

// ---- eval ---------------------------------------------------------------------------------

struct EvalFlags {
  ConfigFlags config;
  std::string checkpoint;
  std::string source = "policy";
  std::string dataset_id = "synth";
  std::optional<std::string> data;
  std::optional<std::size_t> n_samples;
  std::optional<std::uint64_t> data_seed;
  std::optional<double> temperature;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> backend;
  std::optional<std::string> endpoint;
  std::optional<long> timeout_ms;
  std::string out_dir = "eval";
};

int cmd_eval(const EvalFlags& f, std::ostream& out) {
  auto cfg = f.config.resolve();
  apply(cfg, "eval_data", f.data);
  apply(cfg, "eval_samples", f.n_samples);
  apply(cfg, "eval_data_seed", f.data_seed);
  apply(cfg, "eval_temperature", f.temperature);
  apply(cfg, "eval_seed", f.seed);
  apply(cfg, "backend", f.backend);
  apply(cfg, "endpoint", f.endpoint);
  apply(cfg, "timeout_ms", f.timeout_ms);
  cfg.validate();
  if (f.source == "policy" && f.checkpoint.empty()) {
    throw UsageError("--checkpoint is required with --source policy");
  }

  const auto records = run::eval_records(cfg);
  eval::EvalReport report;
  if (f.source == "policy") {
    report = run::evaluate(cfg, policy::load_checkpoint(f.checkpoint), records, f.dataset_id);
  } else {
    eval::OracleSource oracle;
    eval::EmptySource empty;
    eval::ResponseSource& src =
        f.source == "oracle" ? static_cast<eval::ResponseSource&>(oracle) : empty;
    eval::BenchmarkOptions opt{f.dataset_id, cfg.reward, cfg.backend, cfg.to_map()};
    report = eval::run_benchmark(records, src, opt);
  }

  const fs::path dir(f.out_dir);
  make_dir(dir);
  eval::write_report_files(dir, report);
  config::save_config(dir / "run.cfg", cfg);

  out << "gIoU=" << fixed(report.giou) << " cIoU=" << fixed(report.ciou) << " n=" << report.n
      << '\n';
  eval::write_table(out, std::span<const eval::EvalReport>(&report, 1));
  return kOk;
}

// ---- parse-check --------------------------------------------------------------------------

struct ParseFlags {
  std::string text;
  std::string file;
  std::string format_mode = "strict";
};

int cmd_parse_check(const ParseFlags& f, std::ostream& out) {
  const auto mode = parser::parse_format_mode(f.format_mode);
  if (!mode) throw UsageError("unknown format mode '" + f.format_mode + "'");

  std::vector<std::string> lines;
  if (!f.file.empty()) {
    auto in = open_in(f.file);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
  } else {
    lines.push_back(f.text);
  }

  out << "line,structure_valid,thinking_format,seg_format,violation,x1,y1,x2,y2,p1x,p1y,p2x,p2y\n";
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto ex = parser::extract_prompt(lines[i], *mode);
    out << (i + 1) << ',' << (ex.response.structure_valid ? 1 : 0) << ','
        << rewards::thinking_format_reward(ex.response) << ','
        << rewards::seg_format_reward(ex.response.answer, *mode) << ','
        << parser::to_string(ex.violation);
    if (ex.prompt) {
      const auto& p = *ex.prompt;
      for (double v : {p.bbox.x1, p.bbox.y1, p.bbox.x2, p.bbox.y2, p.p1.x, p.p1.y, p.p2.x, p.p2.y}) {
        out << ',' << parser::format_number(v);
      }
    } else {
      out << ",,,,,,,,";
    }
    out << '\n';
  }
  return kOk;
}

// ---- report -------------------------------------------------------------------------------

struct ReportFlags {
  std::string log_path;
  std::string out_dir = ".";
};

int cmd_report(const ReportFlags& f, std::ostream& out) {
  std::vector<grpo::LogRow> rows;
  {
    auto in = open_in(f.log_path);
    try {
      rows = grpo::read_log(in);
    } catch (const IoError&) {
      throw;
    } catch (const Error& e) {
      throw IoError(f.log_path + ": " + e.what());
    }
  }
  const fs::path dir(f.out_dir);
  make_dir(dir);

  auto rewards_csv = open_out(dir / "rewards.csv");
  rewards_csv.precision(17);
  rewards_csv << "step,reward_total,reward_think,reward_format,reward_iou,reward_bbox_l1,"
                 "reward_point_l1\n";
  auto length_csv = open_out(dir / "length.csv");
  length_csv.precision(17);
  length_csv << "step,len_mean,len_min\n";
  for (const auto& r : rows) {
    rewards_csv << r.step << ',' << r.reward_total << ',' << r.reward_think << ','
                << r.reward_format << ',' << r.reward_iou << ',' << r.reward_bbox_l1 << ','
                << r.reward_point_l1 << '\n';
    length_csv << r.step << ',' << r.len_mean << ',' << r.len_min << '\n';
  }
  if (!rewards_csv || !length_csv) throw IoError("cannot write report files in " + f.out_dir);
  out << "rows=" << rows.size() << '\n';
  return kOk;
}

int failure(std::ostream& err, int code, const std::exception& e) {
  err << "error: " << e.what() << '\n';
  return code;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reasoning-chain segmentation policies trained with group-relative RL", "segzero"};
  app.require_subcommand(1);
  std::function<int()> action;

  PrepareFlags pf;
  auto* prep = app.add_subcommand("prepare-data", "Generate or import a JSONL dataset");
  prep->add_option("--out", pf.out, "Dataset file to write")->required();
  auto* n_opt = prep->add_option("--n-samples", pf.n, "Synthetic records to generate");
  prep->add_option("--seed", pf.seed, "Generation seed");
  prep->add_option("--import", pf.import_path, "Convert an annotation JSONL instead")
      ->excludes(n_opt);
  prep->add_option("--min-objects", pf.min_objects, "Fewest objects per scene");
  prep->add_option("--max-objects", pf.max_objects, "Most objects per scene");
  prep->add_option("--png-dir", pf.png_dir, "Also dump each scene as <id>.png here");
  prep->callback([&] { action = [&] { return cmd_prepare(pf, out); }; });

  TrainFlags tf;
  auto* train = app.add_subcommand("train", "Train a policy with GRPO");
  tf.config.add_to(*train);
  train->add_option("--steps", tf.steps, "Training steps (0 writes the initial checkpoint)");
  train->add_option("--seed", tf.seed, "Training seed");
  train->add_option("--lr", tf.lr, "Learning rate");
  train->add_option("--format-mode", tf.format_mode, "strict or soft");
  train->add_option("--out-dir", tf.out_dir, "Output directory");
  train->add_option("--train-data", tf.train_data, "Training dataset file");
  train->add_option("--eval-data", tf.eval_data, "Dataset for periodic evaluation");
  train->callback([&] { action = [&] { return cmd_train(tf, out); }; });

  EvalFlags ef;
  auto* ev = app.add_subcommand("eval", "Compute gIoU and cIoU over a dataset");
  ef.config.add_to(*ev);
  ev->add_option("--checkpoint", ef.checkpoint, "Policy checkpoint");
  ev->add_option("--source", ef.source, "policy, oracle or empty")
      ->check(CLI::IsMember({"policy", "oracle", "empty"}));
  ev->add_option("--data", ef.data, "Dataset file (default: generated synthetic set)");
  ev->add_option("--n-samples", ef.n_samples, "Size of the generated set");
  ev->add_option("--data-seed", ef.data_seed, "Seed of the generated set");
  ev->add_option("--dataset-id", ef.dataset_id, "Name used in the report");
  ev->add_option("--temperature", ef.temperature, "Sample at this temperature instead of greedy");
  ev->add_option("--seed", ef.seed, "Sampling seed");
  ev->add_option("--backend", ef.backend, "synthetic or remote");
  ev->add_option("--endpoint", ef.endpoint, "Remote segmenter URL, http://host:port[/path]");
  ev->add_option("--timeout-ms", ef.timeout_ms, "Remote request budget in milliseconds");
  ev->add_option("--out-dir", ef.out_dir, "Directory for report.json, samples.csv, table.txt");
  ev->callback([&] { action = [&] { return cmd_eval(ef, out); }; });

  ParseFlags xf;
  auto* pc = app.add_subcommand("parse-check", "Report answer validity per completion as CSV");
  auto* text_opt = pc->add_option("--text", xf.text, "One completion");
  auto* file_opt = pc->add_option("--file", xf.file, "Completions, one per line");
  text_opt->excludes(file_opt);
  pc->add_option("--format-mode", xf.format_mode, "strict or soft");
  pc->callback([&] {
    if (text_opt->count() == 0 && file_opt->count() == 0) {
      throw CLI::RequiredError("--text or --file");
    }
    action = [&] { return cmd_parse_check(xf, out); };
  });

  ReportFlags rf;
  auto* rep = app.add_subcommand("report", "Write plot-ready CSVs from a training log");
  rep->add_option("--log", rf.log_path, "train_log.csv")->required();
  rep->add_option("--out-dir", rf.out_dir, "Directory for rewards.csv and length.csv");
  rep->callback([&] { action = [&] { return cmd_report(rf, out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    return action();
  } catch (const UsageError& e) {
    err << app.help() << '\n';
    return failure(err, kUsage, e);
  } catch (const config::ConfigError& e) {
    return failure(err, kUsage, e);
  } catch (const grpo::ConfigError& e) {
    return failure(err, kUsage, e);
  } catch (const segmenter::ConfigError& e) {
    return failure(err, kUsage, e);
  } catch (const grpo::NonFiniteLoss& e) {
    return failure(err, kNonFinite, e);
  } catch (const segmenter::BackendError& e) {
    return failure(err, kBackend, e);
  } catch (const eval::RecordError& e) {
    return failure(err, e.backend ? kBackend : kFailure, e);
  } catch (const IoError& e) {
    return failure(err, kIo, e);
  } catch (const dataprep::ParseError& e) {
    return failure(err, kIo, e);
  } catch (const policy::CheckpointError& e) {
    return failure(err, kIo, e);
  } catch (const std::exception& e) {
    return failure(err, kFailure, e);
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"segzero"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace segzero::cli
