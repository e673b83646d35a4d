// core/src/config.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "hadua/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hadua/errors.hpp"

namespace hadua {

namespace {

using nlohmann::json;

const json& require_key(const json& j, const std::string& context, const std::string& key) {
  if (!j.contains(key)) {
    throw ConfigError("config: missing required key '" + context + key + "'");
  }
  return j.at(key);
}

void reject_unknown(const json& j, const std::string& context,
                    const std::set<std::string>& known) {
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) {
      throw ConfigError("config: unknown key '" + context + key + "'");
    }
  }
}

template <typename T>
T get_as(const json& j, const std::string& context, const std::string& key) {
  try {
    return require_key(j, context, key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: key '" + context + key + "' has the wrong type");
  }
}

DataSpec parse_data(const json& j) {
  reject_unknown(j, "data.",
                 {"n_subjects", "samples_per_subject", "classes", "d_latent", "eeg_dim",
                  "eye_dim", "eta", "class_sep", "latent_noise", "eeg_noise", "eye_noise",
                  "eye_dropout", "eeg_latent_dims", "eye_latent_dims", "class_priors"});
  DataSpec d;
  d.n_subjects = get_as<int>(j, "data.", "n_subjects");
  d.samples_per_subject = get_as<int>(j, "data.", "samples_per_subject");
  d.classes = get_as<int>(j, "data.", "classes");
  d.d_latent = get_as<int>(j, "data.", "d_latent");
  d.eeg_dim = get_as<int>(j, "data.", "eeg_dim");
  d.eye_dim = get_as<int>(j, "data.", "eye_dim");
  d.eta = get_as<double>(j, "data.", "eta");
  d.class_sep = get_as<double>(j, "data.", "class_sep");
  d.latent_noise = get_as<double>(j, "data.", "latent_noise");
  d.eeg_noise = get_as<double>(j, "data.", "eeg_noise");
  d.eye_noise = get_as<double>(j, "data.", "eye_noise");
  d.eye_dropout = get_as<double>(j, "data.", "eye_dropout");
  d.eeg_latent_dims = get_as<int>(j, "data.", "eeg_latent_dims");
  d.eye_latent_dims = get_as<int>(j, "data.", "eye_latent_dims");
  d.class_priors = get_as<std::vector<double>>(j, "data.", "class_priors");
  d.validate();
  return d;
}

json dump_data(const DataSpec& d) {
  return {{"n_subjects", d.n_subjects},
          {"samples_per_subject", d.samples_per_subject},
          {"classes", d.classes},
          {"d_latent", d.d_latent},
          {"eeg_dim", d.eeg_dim},
          {"eye_dim", d.eye_dim},
          {"eta", d.eta},
          {"class_sep", d.class_sep},
          {"latent_noise", d.latent_noise},
          {"eeg_noise", d.eeg_noise},
          {"eye_noise", d.eye_noise},
          {"eye_dropout", d.eye_dropout},
          {"eeg_latent_dims", d.eeg_latent_dims},
          {"eye_latent_dims", d.eye_latent_dims},
          {"class_priors", d.class_priors}};
}

void parse_model(const json& j, ModelConfig& m) {
  reject_unknown(j, "model.",
                 {"d_model", "encoder_hidden", "classifier_hidden", "heads", "tokens",
                  "fusion"});
  m.d_model = get_as<std::size_t>(j, "model.", "d_model");
  m.encoder_hidden = get_as<std::size_t>(j, "model.", "encoder_hidden");
  m.classifier_hidden = get_as<std::size_t>(j, "model.", "classifier_hidden");
  m.heads = get_as<std::size_t>(j, "model.", "heads");
  m.tokens = get_as<std::size_t>(j, "model.", "tokens");
  const std::string fusion = get_as<std::string>(j, "model.", "fusion");
  if (fusion == "eeg_cross") {
    m.fusion = ModelConfig::Fusion::kEegCross;
  } else if (fusion == "eeg_eye_cross") {
    m.fusion = ModelConfig::Fusion::kEegEyeCross;
  } else {
    throw ConfigError("config: model.fusion must be 'eeg_cross' or 'eeg_eye_cross'");
  }
}

json dump_model(const ModelConfig& m) {
  return {{"d_model", m.d_model},
          {"encoder_hidden", m.encoder_hidden},
          {"classifier_hidden", m.classifier_hidden},
          {"heads", m.heads},
          {"tokens", m.tokens},
          {"fusion",
           m.fusion == ModelConfig::Fusion::kEegEyeCross ? "eeg_eye_cross" : "eeg_cross"}};
}

void parse_train(const json& j, TrainConfig& t) {
  reject_unknown(j, "train.",
                 {"lr", "weight_decay", "batch_size", "max_epochs", "early_stop_patience",
                  "gamma_mmd", "gamma_cmmd", "adam_beta1", "adam_beta2", "adam_eps",
                  "val_fraction", "lambda_max", "stats_momentum", "cmmd_probs"});
  t.lr = get_as<double>(j, "train.", "lr");
  t.weight_decay = get_as<double>(j, "train.", "weight_decay");
  t.batch_size = get_as<std::size_t>(j, "train.", "batch_size");
  t.max_epochs = get_as<long>(j, "train.", "max_epochs");
  t.early_stop_patience = get_as<long>(j, "train.", "early_stop_patience");
  t.gamma_mmd = get_as<double>(j, "train.", "gamma_mmd");
  t.gamma_cmmd = get_as<double>(j, "train.", "gamma_cmmd");
  t.adam_beta1 = get_as<double>(j, "train.", "adam_beta1");
  t.adam_beta2 = get_as<double>(j, "train.", "adam_beta2");
  t.adam_eps = get_as<double>(j, "train.", "adam_eps");
  t.val_fraction = get_as<double>(j, "train.", "val_fraction");
  t.lambda_max = get_as<double>(j, "train.", "lambda_max");
  t.stats_momentum = get_as<double>(j, "train.", "stats_momentum");
  const std::string probs = get_as<std::string>(j, "train.", "cmmd_probs");
  if (probs == "interpolated") {
    t.cmmd_uses_interpolated = true;
  } else if (probs == "aligned") {
    t.cmmd_uses_interpolated = false;
  } else {
    throw ConfigError("config: train.cmmd_probs must be 'interpolated' or 'aligned'");
  }
}

json dump_train(const TrainConfig& t) {
  return {{"lr", t.lr},
          {"weight_decay", t.weight_decay},
          {"batch_size", t.batch_size},
          {"max_epochs", t.max_epochs},
          {"early_stop_patience", t.early_stop_patience},
          {"gamma_mmd", t.gamma_mmd},
          {"gamma_cmmd", t.gamma_cmmd},
          {"adam_beta1", t.adam_beta1},
          {"adam_beta2", t.adam_beta2},
          {"adam_eps", t.adam_eps},
          {"val_fraction", t.val_fraction},
          {"lambda_max", t.lambda_max},
          {"stats_momentum", t.stats_momentum},
          {"cmmd_probs", t.cmmd_uses_interpolated ? "interpolated" : "aligned"}};
}

void parse_pseudo(const json& j, UAConfig& ua, AblationSwitches& ab) {
  reject_unknown(j, "pseudo.",
                 {"tau", "alpha0", "t0", "k_decay", "schedule", "linear_ramp_epochs",
                  "hard_threshold", "threshold"});
  ua.tau = get_as<double>(j, "pseudo.", "tau");
  ua.alpha0 = get_as<double>(j, "pseudo.", "alpha0");
  ua.t0 = get_as<double>(j, "pseudo.", "t0");
  ua.k_decay = get_as<double>(j, "pseudo.", "k_decay");
  ua.linear_ramp_epochs = get_as<long>(j, "pseudo.", "linear_ramp_epochs");
  const std::string schedule = get_as<std::string>(j, "pseudo.", "schedule");
  if (schedule == "sigmoid") {
    ua.schedule = UAConfig::Schedule::kSigmoid;
  } else if (schedule == "linear") {
    ua.schedule = UAConfig::Schedule::kLinear;
  } else {
    throw ConfigError("config: pseudo.schedule must be 'sigmoid' or 'linear'");
  }
  ab.hard_threshold = get_as<bool>(j, "pseudo.", "hard_threshold");
  ab.threshold = get_as<double>(j, "pseudo.", "threshold");
  ua.validate();
}

json dump_pseudo(const UAConfig& ua, const AblationSwitches& ab) {
  return {{"tau", ua.tau},
          {"alpha0", ua.alpha0},
          {"t0", ua.t0},
          {"k_decay", ua.k_decay},
          {"schedule", ua.schedule == UAConfig::Schedule::kLinear ? "linear" : "sigmoid"},
          {"linear_ramp_epochs", ua.linear_ramp_epochs},
          {"hard_threshold", ab.hard_threshold},
          {"threshold", ab.threshold}};
}

void parse_kernel(const json& j, KernelConfig& k) {
  reject_unknown(j, "kernel.", {"bandwidth_mode", "sigma"});
  k.sigma = get_as<double>(j, "kernel.", "sigma");
  const std::string mode = get_as<std::string>(j, "kernel.", "bandwidth_mode");
  if (mode == "fixed") {
    k.mode = KernelConfig::Bandwidth::kFixed;
  } else if (mode == "median") {
    k.mode = KernelConfig::Bandwidth::kMedian;
  } else {
    throw ConfigError("config: kernel.bandwidth_mode must be 'fixed' or 'median'");
  }
}

json dump_kernel(const KernelConfig& k) {
  return {{"bandwidth_mode", k.mode == KernelConfig::Bandwidth::kFixed ? "fixed" : "median"},
          {"sigma", k.sigma}};
}

void parse_ablation(const json& j, AblationSwitches& a) {
  reject_unknown(j, "ablation.", {"attention", "mmd", "cmmd", "gaussian_weight", "ua"});
  a.attention = get_as<bool>(j, "ablation.", "attention");
  a.mmd = get_as<bool>(j, "ablation.", "mmd");
  a.cmmd = get_as<bool>(j, "ablation.", "cmmd");
  a.gaussian_weight = get_as<bool>(j, "ablation.", "gaussian_weight");
  a.ua = get_as<bool>(j, "ablation.", "ua");
}

json dump_ablation(const AblationSwitches& a) {
  return {{"attention", a.attention},
          {"mmd", a.mmd},
          {"cmmd", a.cmmd},
          {"gaussian_weight", a.gaussian_weight},
          {"ua", a.ua}};
}

SweepSpec parse_sweep(const json& j) {
  reject_unknown(j, "sweep.",
                 {"kind", "tau", "alpha", "batch_size", "epochs", "seeds", "held_out",
                  "loso"});
  SweepSpec s;
  const std::string kind = get_as<std::string>(j, "sweep.", "kind");
  if (kind == "tau_alpha") {
    s.kind = SweepSpec::Kind::kTauAlpha;
  } else if (kind == "batch_epoch") {
    s.kind = SweepSpec::Kind::kBatchEpoch;
  } else {
    throw ConfigError("config: sweep.kind must be 'tau_alpha' or 'batch_epoch'");
  }
  s.tau = get_as<std::vector<double>>(j, "sweep.", "tau");
  s.alpha = get_as<std::vector<double>>(j, "sweep.", "alpha");
  s.batch_size = get_as<std::vector<int>>(j, "sweep.", "batch_size");
  s.epochs = get_as<std::vector<long>>(j, "sweep.", "epochs");
  s.seeds = get_as<std::vector<std::uint64_t>>(j, "sweep.", "seeds");
  s.held_out = get_as<int>(j, "sweep.", "held_out");
  s.loso = get_as<bool>(j, "sweep.", "loso");
  if (s.seeds.empty()) throw ConfigError("config: sweep.seeds must be non-empty");
  if (s.kind == SweepSpec::Kind::kTauAlpha && (s.tau.empty() || s.alpha.empty())) {
    throw ConfigError("config: a tau_alpha sweep needs non-empty sweep.tau and sweep.alpha");
  }
  if (s.kind == SweepSpec::Kind::kBatchEpoch && (s.batch_size.empty() || s.epochs.empty())) {
    throw ConfigError(
        "config: a batch_epoch sweep needs non-empty sweep.batch_size and sweep.epochs");
  }
  return s;
}

json dump_sweep(const SweepSpec& s) {
  return {{"kind", s.kind == SweepSpec::Kind::kTauAlpha ? "tau_alpha" : "batch_epoch"},
          {"tau", s.tau},
          {"alpha", s.alpha},
          {"batch_size", s.batch_size},
          {"epochs", s.epochs},
          {"seeds", s.seeds},
          {"held_out", s.held_out},
          {"loso", s.loso}};
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  c.model.classes = c.data.classes;
  c.model.eeg_dim = static_cast<std::size_t>(c.data.eeg_dim);
  c.model.eye_dim = static_cast<std::size_t>(c.data.eye_dim);
  return c;
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: JSON parse error: ") + e.what());
  }
  reject_unknown(j, "",
                 {"run_id", "seed", "data", "features", "model", "train", "pseudo", "kernel",
                  "ablation", "sweep"});
  ExperimentConfig c;
  c.run_id = get_as<std::string>(j, "", "run_id");
  c.seed = get_as<std::uint64_t>(j, "", "seed");
  c.data = parse_data(require_key(j, "", "data"));

  const json& feat = require_key(j, "", "features");
  reject_unknown(feat, "features.", {"zscore"});
  c.zscore = get_as<bool>(feat, "features.", "zscore");

  parse_model(require_key(j, "", "model"), c.model);
  c.model.classes = c.data.classes;
  c.model.eeg_dim = static_cast<std::size_t>(c.data.eeg_dim);
  c.model.eye_dim = static_cast<std::size_t>(c.data.eye_dim);
  c.model.validate();

  parse_train(require_key(j, "", "train"), c.train);
  parse_pseudo(require_key(j, "", "pseudo"), c.train.ua, c.train.ablation);
  parse_kernel(require_key(j, "", "kernel"), c.train.kernel);
  parse_ablation(require_key(j, "", "ablation"), c.train.ablation);
  c.train.validate();

  if (j.contains("sweep")) c.sweep = parse_sweep(j.at("sweep"));
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string ExperimentConfig::to_json_text() const {
  json j;
  j["run_id"] = run_id;
  j["seed"] = seed;
  j["data"] = dump_data(data);
  j["features"] = {{"zscore", zscore}};
  j["model"] = dump_model(model);
  j["train"] = dump_train(train);
  j["pseudo"] = dump_pseudo(train.ua, train.ablation);
  j["kernel"] = dump_kernel(train.kernel);
  j["ablation"] = dump_ablation(train.ablation);
  if (sweep) j["sweep"] = dump_sweep(*sweep);
  return j.dump(2);
}

std::string ExperimentConfig::spec_hash() const {
  const std::string text = to_json_text();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

void ExperimentConfig::apply_ablation_preset(const std::string& name) {
  AblationSwitches& a = train.ablation;
  if (name == "full") {
    return;
  } else if (name == "no-ua") {
    a.ua = false;
  } else if (name == "no-gaussian-weight") {
    a.gaussian_weight = false;
  } else if (name == "no-cmmd") {
    a.cmmd = false;
  } else if (name == "no-mmd") {
    a.mmd = false;
  } else if (name == "no-attention") {
    a.attention = false;
  } else if (name == "hard-threshold") {
    a.hard_threshold = true;
  } else if (name == "source-only") {
    a.mmd = false;
    a.cmmd = false;
    a.gaussian_weight = false;
    a.ua = false;
  } else if (name == "dfn-baseline") {
    a.attention = false;
    a.mmd = false;
    a.cmmd = false;
    a.gaussian_weight = false;
    a.ua = false;
  } else {
    throw ConfigError("config: unknown ablation preset '" + name + "'");
  }
}

}  // namespace hadua
