// tools/main.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hadua/config.hpp"
#include "hadua/errors.hpp"
#include "hadua/eval.hpp"
#include "hadua/features.hpp"
#include "hadua/io.hpp"
#include "hadua/model.hpp"
#include "hadua/synthdata.hpp"
#include "hadua/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode {
  kOk = 0,
  kFailure = 1,
  kConfig = 2,
  kIo = 3,
  kLeakage = 4,
  kNumeric = 5,
};

int log_level() {
  const char* env = std::getenv("HADUA_LOG");
  if (env == nullptr) return 1;
  const std::string v(env);
  if (v == "quiet") return 0;
  if (v == "debug") return 2;
  return 1;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::fprintf(stderr, "[hadua] %s\n", msg.c_str());
}

void log_debug(const std::string& msg) {
  if (log_level() >= 2) std::fprintf(stderr, "[hadua] %s\n", msg.c_str());
}

std::string subject_filename(int subject) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "subject_%03d.csv", subject);
  return buf;
}

void apply_zscore(std::vector<hadua::SubjectDataset>& datasets) {
  for (hadua::SubjectDataset& d : datasets) {
    d.eeg = hadua::zscore_columns(d.eeg);
    d.eye = hadua::zscore_columns(d.eye);
  }
}

std::vector<hadua::SubjectDataset> load_datasets(const hadua::ExperimentConfig& cfg,
                                                 const std::string& data_dir) {
  auto datasets = hadua::read_dataset_dir(data_dir);
  for (const auto& d : datasets) {
    if (d.eeg.cols() != static_cast<std::size_t>(cfg.data.eeg_dim) ||
        d.eye.cols() != static_cast<std::size_t>(cfg.data.eye_dim)) {
      throw hadua::ConfigError("data on disk does not match the configured feature widths");
    }
    for (int y : d.labels) {
      if (y < 0 || y >= cfg.data.classes) {
        throw hadua::ConfigError("data on disk contains labels outside the configured classes");
      }
    }
  }
  if (cfg.zscore) apply_zscore(datasets);
  return datasets;
}

json metrics_to_json(const hadua::MetricsReport& m) {
  return {{"accuracy", m.accuracy},
          {"macro_f1", m.macro_f1},
          {"auc", m.auc},
          {"auc_partial", m.auc_partial},
          {"per_class_acc", m.per_class_acc},
          {"per_class_std", m.per_class_std},
          {"confusion", m.confusion}};
}

struct TrainOutcome {
  hadua::FitResult result;
  hadua::LosoSplit split;
};

TrainOutcome run_training(const hadua::ExperimentConfig& cfg,
                          const std::vector<hadua::SubjectDataset>& datasets, int held_out) {
  TrainOutcome out;
  out.split = hadua::leave_one_subject_out(datasets, held_out);
  // Leakage guard: no held-out row may be reachable from the training set.
  for (int s : out.split.source.subjects) {
    if (s == held_out) {
      throw hadua::LeakageError("held-out subject leaked into the source set");
    }
  }
  hadua::TrainConfig train_cfg = cfg.train;
  train_cfg.seed = cfg.seed;
  out.result = hadua::fit(train_cfg, cfg.model, out.split.source, out.split.target,
                          &out.split.target_labels);
  return out;
}

void write_train_outputs(const hadua::ExperimentConfig& cfg, const TrainOutcome& outcome,
                         int held_out, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const hadua::TrainState& state = outcome.result.state;
  hadua::write_epoch_log(out_dir + "/epoch_log.csv", state.history);
  hadua::write_pseudo_stats(out_dir + "/pseudo_stats.csv", state.history);
  hadua::save_checkpoint(state.best_params, out_dir + "/checkpoint.json");

  json report;
  report["run_id"] = cfg.run_id;
  report["seed"] = cfg.seed;
  report["held_out"] = held_out;
  report["spec_hash"] = cfg.spec_hash();
  report["ablation"] = {{"attention", cfg.train.ablation.attention},
                        {"mmd", cfg.train.ablation.mmd},
                        {"cmmd", cfg.train.ablation.cmmd},
                        {"gaussian_weight", cfg.train.ablation.gaussian_weight},
                        {"ua", cfg.train.ablation.ua},
                        {"hard_threshold", cfg.train.ablation.hard_threshold}};
  report["best_epoch"] = state.best_epoch;
  report["epochs_run"] = state.history.size();
  report["best_val_acc"] = state.best_val_acc;
  report["warning_no_improvement"] = state.warning_no_improvement;
  report["target"] = metrics_to_json(outcome.result.target_metrics);
  hadua::write_text_file(out_dir + "/metrics.json", report.dump(2) + "\n");
  hadua::write_text_file(out_dir + "/confusion.csv",
                         outcome.result.target_metrics.confusion_csv());
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir) {
  const auto cfg = hadua::ExperimentConfig::from_file(config_path);
  fs::create_directories(out_dir);
  const auto datasets = hadua::generate_subjects(cfg.data, cfg.seed);

  json manifest;
  manifest["seed"] = cfg.seed;
  manifest["spec_hash"] = cfg.spec_hash();
  manifest["classes"] = cfg.data.classes;
  manifest["eeg_dim"] = cfg.data.eeg_dim;
  manifest["eye_dim"] = cfg.data.eye_dim;
  manifest["n_subjects"] = cfg.data.n_subjects;
  std::vector<std::string> files;
  for (const auto& d : datasets) {
    const std::string name = subject_filename(d.subject);
    hadua::write_subject_csv(out_dir + "/" + name, d);
    files.push_back(name);
  }
  manifest["files"] = files;
  hadua::write_text_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");
  log_info("wrote " + std::to_string(files.size()) + " subject files to " + out_dir);
  return kOk;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir, int held_out, std::uint64_t seed_override,
              bool has_seed, const std::string& ablation) {
  auto cfg = hadua::ExperimentConfig::from_file(config_path);
  if (has_seed) cfg.seed = seed_override;
  if (!ablation.empty()) cfg.apply_ablation_preset(ablation);

  const auto datasets = load_datasets(cfg, data_dir);
  log_info("training with held-out subject " + std::to_string(held_out));
  const TrainOutcome outcome = run_training(cfg, datasets, held_out);
  write_train_outputs(cfg, outcome, held_out, out_dir);
  log_info("target accuracy " +
           hadua::format_double(outcome.result.target_metrics.accuracy));
  return kOk;
}

int cmd_eval(const std::string& config_path, const std::string& data_dir,
             const std::string& out_dir, int held_out, std::string checkpoint_path) {
  const auto cfg = hadua::ExperimentConfig::from_file(config_path);
  const auto datasets = load_datasets(cfg, data_dir);
  const hadua::LosoSplit split = hadua::leave_one_subject_out(datasets, held_out);
  if (checkpoint_path.empty()) checkpoint_path = out_dir + "/checkpoint.json";
  const hadua::ModelParams params = hadua::load_checkpoint(checkpoint_path);

  const hadua::Tensor probs =
      hadua::predict_probs(params, split.target.eeg, split.target.eye);
  const hadua::MetricsReport metrics = hadua::compute_metrics(probs, split.target_labels);

  fs::create_directories(out_dir);
  hadua::write_text_file(out_dir + "/metrics_eval.json",
                         metrics_to_json(metrics).dump(2) + "\n");
  hadua::write_text_file(out_dir + "/confusion_eval.csv", metrics.confusion_csv());

  // Feature importance: MI between each input feature and the prediction.
  const std::size_t n = split.target.eeg.rows();
  const std::size_t d_eeg = split.target.eeg.cols(), d_eye = split.target.eye.cols();
  hadua::Tensor all_features({n, d_eeg + d_eye});
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d_eeg; ++c) all_features.at(r, c) = split.target.eeg.at(r, c);
    for (std::size_t c = 0; c < d_eye; ++c) {
      all_features.at(r, d_eeg + c) = split.target.eye.at(r, c);
    }
  }
  const int bins = std::max(4, static_cast<int>(n / 40));
  const hadua::FeatureImportance fi =
      hadua::mi_feature_importance(all_features, probs, std::min(bins, 8));
  std::ostringstream mi_csv;
  mi_csv << "feature,modality,index,mi,degenerate\n";
  for (std::size_t j = 0; j < fi.mi.size(); ++j) {
    const bool is_eeg = j < d_eeg;
    mi_csv << j << "," << (is_eeg ? "eeg" : "eye") << "," << (is_eeg ? j : j - d_eeg) << ","
           << hadua::format_double(fi.mi[j]) << "," << (fi.degenerate[j] ? 1 : 0) << "\n";
  }
  hadua::write_text_file(out_dir + "/mi.csv", mi_csv.str());
  log_info("eval accuracy " + hadua::format_double(metrics.accuracy));
  return kOk;
}

struct SweepCell {
  std::size_t index = 0;
  double tau = 0.0, alpha = 0.0;
  int batch_size = 0;
  long epochs = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double acc = 0.0, macro_f1 = 0.0, auc = 0.0;
};

int cmd_sweep(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir, unsigned jobs) {
  const auto cfg = hadua::ExperimentConfig::from_file(config_path);
  if (!cfg.sweep) throw hadua::ConfigError("config: sweep section required for cmd sweep");
  const hadua::SweepSpec& sweep = *cfg.sweep;
  const auto datasets = load_datasets(cfg, data_dir);
  fs::create_directories(out_dir);

  std::vector<SweepCell> cells;
  if (sweep.kind == hadua::SweepSpec::Kind::kTauAlpha) {
    for (double tau : sweep.tau) {
      for (double alpha : sweep.alpha) {
        for (std::uint64_t seed : sweep.seeds) {
          SweepCell c;
          c.index = cells.size();
          c.tau = tau;
          c.alpha = alpha;
          c.seed = seed;
          cells.push_back(c);
        }
      }
    }
  } else {
    for (int batch : sweep.batch_size) {
      for (long epochs : sweep.epochs) {
        for (std::uint64_t seed : sweep.seeds) {
          SweepCell c;
          c.index = cells.size();
          c.batch_size = batch;
          c.epochs = epochs;
          c.seed = seed;
          cells.push_back(c);
        }
      }
    }
  }

  std::vector<int> held_outs;
  if (sweep.loso) {
    for (const auto& d : datasets) held_outs.push_back(d.subject);
  } else {
    held_outs.push_back(sweep.held_out);
  }

  const auto run_cell = [&](SweepCell& cell) {
    hadua::ExperimentConfig cell_cfg = cfg;
    cell_cfg.seed = cell.seed;
    if (sweep.kind == hadua::SweepSpec::Kind::kTauAlpha) {
      cell_cfg.train.ua.tau = cell.tau;
      cell_cfg.train.ua.alpha0 = cell.alpha;
    } else {
      cell_cfg.train.batch_size = static_cast<std::size_t>(cell.batch_size);
      cell_cfg.train.max_epochs = cell.epochs;
    }
    double acc = 0.0, f1 = 0.0, auc = 0.0;
    for (int held_out : held_outs) {
      const TrainOutcome outcome = run_training(cell_cfg, datasets, held_out);
      acc += outcome.result.target_metrics.accuracy;
      f1 += outcome.result.target_metrics.macro_f1;
      auc += outcome.result.target_metrics.auc;
    }
    const double folds = static_cast<double>(held_outs.size());
    cell.acc = acc / folds;
    cell.macro_f1 = f1 / folds;
    cell.auc = auc / folds;
    cell.ok = true;

    char dirname[32];
    std::snprintf(dirname, sizeof(dirname), "cell_%04zu", cell.index);
    const std::string cell_dir = out_dir + "/" + dirname;
    fs::create_directories(cell_dir);
    json summary = {{"seed", cell.seed},
                    {"acc", cell.acc},
                    {"macro_f1", cell.macro_f1},
                    {"auc", cell.auc}};
    if (sweep.kind == hadua::SweepSpec::Kind::kTauAlpha) {
      summary["tau"] = cell.tau;
      summary["alpha"] = cell.alpha;
    } else {
      summary["batch_size"] = cell.batch_size;
      summary["epochs"] = cell.epochs;
    }
    hadua::write_text_file(cell_dir + "/metrics.json", summary.dump(2) + "\n");
  };

  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  const unsigned workers =
      std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(cells.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= cells.size()) break;
        try {
          run_cell(cells[i]);
          std::lock_guard<std::mutex> lock(log_mutex);
          log_debug("cell " + std::to_string(i) + " done");
        } catch (const std::exception& e) {
          cells[i].ok = false;
          cells[i].error = e.what();
          std::lock_guard<std::mutex> lock(log_mutex);
          log_info("cell " + std::to_string(i) + " failed: " + e.what());
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();

  // Result rows in deterministic grid order regardless of completion order.
  std::ostringstream csv;
  std::ostringstream failures;
  bool any_failed = false;
  if (sweep.kind == hadua::SweepSpec::Kind::kTauAlpha) {
    csv << "tau,alpha,seed,acc,macro_f1,auc\n";
    for (const SweepCell& c : cells) {
      if (!c.ok) {
        any_failed = true;
        failures << "cell " << c.index << ": " << c.error << "\n";
        continue;
      }
      csv << hadua::format_double(c.tau) << "," << hadua::format_double(c.alpha) << ","
          << c.seed << "," << hadua::format_double(c.acc) << ","
          << hadua::format_double(c.macro_f1) << "," << hadua::format_double(c.auc) << "\n";
    }
  } else {
    csv << "batch_size,epochs,seed,acc,macro_f1,auc\n";
    for (const SweepCell& c : cells) {
      if (!c.ok) {
        any_failed = true;
        failures << "cell " << c.index << ": " << c.error << "\n";
        continue;
      }
      csv << c.batch_size << "," << c.epochs << "," << c.seed << ","
          << hadua::format_double(c.acc) << "," << hadua::format_double(c.macro_f1) << ","
          << hadua::format_double(c.auc) << "\n";
    }
  }
  hadua::write_text_file(out_dir + "/sweep.csv", csv.str());
  if (any_failed) {
    hadua::write_text_file(out_dir + "/failures.txt", failures.str());
    return kNumeric;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HADUA cross-subject domain adaptation pipeline"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_dir, ablation, checkpoint;
  int held_out = 0;
  std::uint64_t seed = 0;
  unsigned jobs = 1;

  CLI::App* gen = app.add_subcommand("gen-data", "Generate the synthetic benchmark dataset");
  gen->add_option("--config", config_path, "Experiment config JSON")->required();
  gen->add_option("--out", out_dir, "Output directory")->required();

  CLI::App* train = app.add_subcommand("train", "Train with one held-out subject");
  train->add_option("--config", config_path, "Experiment config JSON")->required();
  train->add_option("--data", data_dir, "Dataset directory (from gen-data)")->required();
  train->add_option("--out", out_dir, "Output directory")->required();
  train->add_option("--held-out", held_out, "Held-out subject id")->required();
  CLI::Option* seed_opt = train->add_option("--seed", seed, "Override the config seed");
  train->add_option("--ablation", ablation, "Ablation preset name");

  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a held-out subject");
  eval_cmd->add_option("--config", config_path, "Experiment config JSON")->required();
  eval_cmd->add_option("--data", data_dir, "Dataset directory")->required();
  eval_cmd->add_option("--out", out_dir, "Output directory (default checkpoint location)")
      ->required();
  eval_cmd->add_option("--held-out", held_out, "Held-out subject id")->required();
  eval_cmd->add_option("--checkpoint", checkpoint, "Checkpoint path override");

  CLI::App* sweep = app.add_subcommand("sweep", "Run the hyperparameter sensitivity grid");
  sweep->add_option("--config", config_path, "Experiment config JSON with a sweep section")
      ->required();
  sweep->add_option("--data", data_dir, "Dataset directory")->required();
  sweep->add_option("--out", out_dir, "Output directory")->required();
  sweep->add_option("--jobs", jobs, "Worker pool size")->default_val(1u);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(config_path, out_dir);
    if (train->parsed()) {
      return cmd_train(config_path, data_dir, out_dir, held_out, seed,
                       seed_opt->count() > 0, ablation);
    }
    if (eval_cmd->parsed()) return cmd_eval(config_path, data_dir, out_dir, held_out, checkpoint);
    if (sweep->parsed()) return cmd_sweep(config_path, data_dir, out_dir, jobs);
  } catch (const hadua::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const hadua::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kIo;
  } catch (const hadua::LeakageError& e) {
    std::fprintf(stderr, "leakage guard: %s\n", e.what());
    return kLeakage;
  } catch (const hadua::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kFailure;
}
