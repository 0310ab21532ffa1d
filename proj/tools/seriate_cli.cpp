// seriate: structure serialization, sequence-model training and density
// recovery from the command line.
//
// Subcommands: gen, serialize, train, recover, eval.  Every option can come
// from a line-oriented `key = value` config file (--config) or a --key flag;
// flags override config keys, unknown config keys are rejected, and the
// effective merged config is echoed into the output manifest.  Exit codes:
// 0 success, 2 config error, 3 data error, 4 numeric failure.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "seriate/checkpoint.hpp"
#include "seriate/datagen.hpp"
#include "seriate/dataio.hpp"
#include "seriate/density.hpp"
#include "seriate/train.hpp"

namespace {

using namespace seriate;
using nlohmann::json;

class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct KeySpec {
  std::string name;
  std::string default_value;  // empty plus required=true: must be provided
  std::string help;
  bool required = false;
};

// Effective configuration after merging defaults, config file, and flags.
class RunConfig {
public:
  RunConfig(const std::vector<KeySpec>& specs, const std::string& config_path,
            const std::map<std::string, std::string>& flag_values) {
    for (const auto& spec : specs) values_[spec.name] = spec.default_value;

    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot open config file: " + config_path);
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto trim = [](std::string s) {
          const auto b = s.find_first_not_of(" \t\r");
          const auto e = s.find_last_not_of(" \t\r");
          return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
          throw ConfigError(config_path + ":" + std::to_string(lineno) +
                            ": expected `key = value`");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!values_.contains(key))
          throw ConfigError(config_path + ":" + std::to_string(lineno) +
                            ": unknown key `" + key + "`");
        values_[key] = value;
      }
    }
    for (const auto& [key, value] : flag_values) values_[key] = value;

    for (const auto& spec : specs)
      if (spec.required && values_.at(spec.name).empty())
        throw ConfigError("missing required option `" + spec.name + "`");
  }

  const std::string& str(const std::string& key) const { return values_.at(key); }

  std::uint64_t u64(const std::string& key) const {
    try {
      return std::stoull(str(key));
    } catch (const std::exception&) {
      throw ConfigError("option `" + key + "` is not an integer: " + str(key));
    }
  }

  double real(const std::string& key) const {
    try {
      return std::stod(str(key));
    } catch (const std::exception&) {
      throw ConfigError("option `" + key + "` is not a number: " + str(key));
    }
  }

  bool boolean(const std::string& key) const {
    const std::string& v = str(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("option `" + key + "` is not a boolean: " + v);
  }

  json to_json() const {
    json j;
    for (const auto& [k, v] : values_) j[k] = v;
    return j;
  }

private:
  std::map<std::string, std::string> values_;
};

void write_manifest(const std::filesystem::path& out_path, const std::string& command,
                    const RunConfig& cfg, const std::vector<std::string>& outputs,
                    double wall_seconds, json extra = json::object()) {
  json manifest;
  manifest["format_version"] = 1;
  manifest["command"] = command;
  manifest["effective_config"] = cfg.to_json();
  manifest["outputs"] = outputs;
  // Timestamps live here and only here.
  manifest["created_unix_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count();
  manifest["wall_seconds"] = wall_seconds;
  if (!extra.empty()) manifest["stats"] = extra;
  atomic_write_file(out_path, manifest.dump(2) + "\n");
}

SamplerConfig sampler_from(const RunConfig& cfg, const StructureBackend& backend) {
  SamplerConfig sampler;
  const std::string mode = cfg.str("mode");
  if (mode == "streaming")
    sampler.mode = SamplerConfig::Mode::Streaming;
  else if (mode == "enumerating")
    sampler.mode = SamplerConfig::Mode::Enumerating;
  else
    throw ConfigError("mode must be streaming or enumerating, got " + mode);

  const std::string measure = cfg.str("measure");
  if (measure == "uniform")
    sampler.measure = SamplingMeasure::uniform();
  else if (measure == "biased-front")
    sampler.measure =
        SamplingMeasure::biased_front(cfg.real("front_fraction"), cfg.real("drop_prob"));
  else if (measure == "conditional")
    sampler.measure = default_measure(backend, MeasureMode::Conditional);
  else
    throw ConfigError("measure must be uniform, biased-front or conditional");

  sampler.enumeration_bound = cfg.u64("enumeration_bound");
  sampler.seed = cfg.u64("seed");
  sampler.canonical_order = cfg.boolean("canonical");
  return sampler;
}

const std::vector<KeySpec> kSamplerKeys{
    {"mode", "streaming", "streaming | enumerating"},
    {"measure", "uniform", "uniform | biased-front | conditional"},
    {"front_fraction", "0.5", "biased-front: probability of fronting the input block"},
    {"drop_prob", "0.0", "biased-front: per-feature drop probability"},
    {"canonical", "false", "always pick the canonically smallest candidate"},
    {"enumeration_bound", "1000000", "max fiber size for enumeration"},
};

// ----------------------------------------------------------------------------
// gen

int cmd_gen(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string kind = cfg.str("kind");
  const std::filesystem::path out = cfg.str("out");
  const std::uint64_t seed = cfg.u64("seed");
  const std::size_t count = cfg.u64("count");
  Philox rng(seed);

  Dataset data;
  json gen_stats;
  if (kind == "vdp") {
    VdpDatasetConfig gen_cfg;
    gen_cfg.count = count;
    gen_cfg.length = cfg.u64("length");
    gen_cfg.step_size = cfg.real("step_size");
    for (auto& series : generate_vdp_dataset(gen_cfg, rng))
      data.push_back({std::move(series), std::nullopt});
    gen_stats["parameter_ranges"] = {{"positions", {-1.0, 1.0}},
                                     {"velocities", {-1.0, 1.0}},
                                     {"k", {2.0, 4.0}},
                                     {"mu", {2.0, 4.0}}};
  } else if (kind == "tree") {
    std::vector<std::string> labels;
    std::stringstream ss(cfg.str("labels"));
    std::string label;
    while (std::getline(ss, label, ',')) labels.push_back(label);
    for (auto& tree : generate_random_trees(labels, count, cfg.u64("max_nodes"), rng,
                                            cfg.boolean("ordered")))
      data.push_back({std::move(tree), std::nullopt});
  } else {
    throw ConfigError("kind must be vdp or tree, got `" + kind + "`");
  }

  write_dataset(out, data);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  gen_stats["instances"] = data.size();
  write_manifest(out.string() + ".manifest.json", "gen", cfg, {out.string()}, wall,
                 gen_stats);
  std::cout << "wrote " << data.size() << " instances to " << out.string() << "\n";
  return 0;
}

// ----------------------------------------------------------------------------
// serialize

int cmd_serialize(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset data = read_dataset(cfg.str("data"));
  if (data.empty()) throw Error("empty dataset");
  const BackendSchema schema = derive_schema(data);
  const auto backend = make_backend(schema);
  const SamplerConfig sampler = sampler_from(cfg, *backend);
  const std::size_t per_instance = cfg.u64("samples_per_instance");
  const std::filesystem::path out = cfg.str("out");

  Philox root(cfg.u64("seed"));
  std::vector<CorpusRecord> corpus;
  corpus.reserve(data.size() * per_instance);
  std::map<std::size_t, std::size_t> length_histogram;
  std::set<StateKey> distinct_states;

  for (std::size_t i = 0; i < data.size(); ++i) {
    Philox stream = root.split(i);
    for (std::size_t s = 0; s < per_instance; ++s) {
      CorpusRecord record;
      record.instance_id = i;
      record.serialization =
          sample_serialization(*backend, data[i].instance, sampler, stream);
      ++length_histogram[record.serialization.elements.size()];
      for (const auto& state : replay_states(*backend, record.serialization))
        distinct_states.insert(state);
      corpus.push_back(std::move(record));
    }
  }

  write_corpus(out, corpus, backend->alphabet());

  std::cout << "serializations: " << corpus.size() << "\n";
  std::cout << "sequence-length histogram:\n";
  for (const auto& [length, n] : length_histogram)
    std::cout << "  " << length << " " << n << "\n";
  std::cout << "distinct states: " << distinct_states.size() << "\n";

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(out.string() + ".manifest.json", "serialize", cfg, {out.string()}, wall,
                 {{"serializations", corpus.size()},
                  {"distinct_states", distinct_states.size()}});
  return 0;
}

// ----------------------------------------------------------------------------
// train

int cmd_train(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset data = read_dataset(cfg.str("data"));
  if (data.empty()) throw Error("empty dataset");
  const BackendSchema schema = derive_schema(data);
  const auto backend = make_backend(schema);

  Dataset validation;
  if (!cfg.str("valid_data").empty()) validation = read_dataset(cfg.str("valid_data"));

  TrainConfig train_cfg;
  train_cfg.lambda = cfg.real("lambda");
  train_cfg.learning_rate = cfg.real("learning_rate");
  train_cfg.beta1 = cfg.real("beta1");
  train_cfg.beta2 = cfg.real("beta2");
  train_cfg.epsilon = cfg.real("epsilon");
  train_cfg.batch_instances = cfg.u64("batch_instances");
  train_cfg.serializations_per_instance = cfg.u64("serializations_per_instance");
  train_cfg.max_steps = cfg.u64("max_steps");
  train_cfg.max_wall_seconds = cfg.real("max_wall_seconds");
  train_cfg.clip = cfg.real("clip");
  train_cfg.hidden_dim = cfg.u64("hidden_dim");
  train_cfg.mixture_components = cfg.u64("mixture_components");
  train_cfg.eval_interval = cfg.u64("eval_interval");
  train_cfg.seed = cfg.u64("seed");

  const std::string objective = cfg.str("objective");
  if (objective == "generative") {
    train_cfg.objective = TrainConfig::Objective::Generative;
  } else if (objective == "discriminative") {
    train_cfg.objective = TrainConfig::Objective::Discriminative;
  } else {
    throw ConfigError("objective must be generative or discriminative");
  }
  const std::string target = cfg.str("target");
  if (target == "classification")
    train_cfg.target_kind = TrainConfig::TargetKind::Classification;
  else if (target == "regression")
    train_cfg.target_kind = TrainConfig::TargetKind::Regression;
  else
    throw ConfigError("target must be classification or regression");
  const std::string cell = cfg.str("cell");
  if (cell == "sigmoid")
    train_cfg.cell = CellKind::Sigmoid;
  else if (cell == "gru")
    train_cfg.cell = CellKind::Gru;
  else
    throw ConfigError("cell must be sigmoid or gru");

  train_cfg.sampler = sampler_from(cfg, *backend);
  try {
    train_cfg.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  std::optional<TrainerSnapshot> resume;
  if (!cfg.str("resume").empty()) {
    Checkpoint prev = load_checkpoint(cfg.str("resume"));
    if (!prev.opt) throw Error("checkpoint has no optimizer state, cannot resume");
    resume = TrainerSnapshot{std::move(prev.params), std::move(*prev.opt)};
  }

  const bool wall_clock_metrics = cfg.boolean("metrics_wall_clock");
  std::string metrics_csv = "step,train_nll,valid_nll,reg_value,wall_seconds\n";
  const auto on_step = [&](const StepMetrics& m) {
    metrics_csv += std::to_string(m.step);
    metrics_csv += ",";
    metrics_csv += format_double(m.train_nll);
    metrics_csv += ",";
    metrics_csv += format_double(m.valid_nll);
    metrics_csv += ",";
    metrics_csv += format_double(m.reg_value);
    metrics_csv += ",";
    // Reproducible by default: wall time goes to the manifest instead.
    metrics_csv += format_double(wall_clock_metrics ? m.wall_seconds : 0.0);
    metrics_csv += "\n";
  };

  const TrainResult result =
      train(*backend, data, validation.empty() ? nullptr : &validation, train_cfg,
            std::move(resume), on_step);

  const std::filesystem::path ckpt_path = cfg.str("checkpoint_out");
  Checkpoint ckpt;
  ckpt.params = result.params;
  ckpt.schema = schema;
  ckpt.opt = result.opt;
  save_checkpoint(ckpt_path, ckpt);

  const std::filesystem::path metrics_path = cfg.str("metrics_out");
  atomic_write_file(metrics_path, metrics_csv);

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json stats;
  stats["steps"] = result.opt.step;
  if (!result.metrics.empty()) {
    stats["final_train_nll"] = result.metrics.back().train_nll;
    stats["final_reg_value"] = result.metrics.back().reg_value;
  }
  write_manifest(ckpt_path.string() + ".manifest.json", "train", cfg,
                 {ckpt_path.string(), metrics_path.string()}, wall, stats);
  std::cout << "trained " << result.opt.step << " steps\n";
  return 0;
}

// ----------------------------------------------------------------------------
// recover

int cmd_recover(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset data = read_dataset(cfg.str("data"));
  if (data.empty()) throw Error("empty dataset");

  std::unique_ptr<StructureBackend> backend;
  std::unique_ptr<SequenceModel> model;
  ModelParams params;  // keeps the RNN model alive for the scorer
  TabularSeqModel oracle;

  const std::string scorer = cfg.str("scorer");
  if (scorer == "checkpoint") {
    Checkpoint ckpt = load_checkpoint(cfg.str("checkpoint"));
    backend = make_backend(ckpt.schema);
    params = std::move(ckpt.params);
    model = std::make_unique<RnnSequenceModel>(params, backend->alphabet());
  } else if (scorer == "oracle") {
    const std::string oracle_path =
        cfg.str("oracle_data").empty() ? cfg.str("data") : cfg.str("oracle_data");
    const Dataset oracle_data = read_dataset(oracle_path);
    backend = make_backend(derive_schema(oracle_data));
    SamplerConfig oracle_sampler;
    oracle_sampler.mode = SamplerConfig::Mode::Enumerating;
    oracle_sampler.enumeration_bound = cfg.u64("enumeration_bound");
    oracle = build_tabular_oracle(*backend, oracle_data, oracle_sampler,
                                  cfg.u64("enumeration_bound"));
    model = std::make_unique<TabularSeqModel>(oracle);
  } else {
    throw ConfigError("scorer must be checkpoint or oracle");
  }

  const SamplerConfig sampler = sampler_from(cfg, *backend);
  const std::size_t m = cfg.u64("m");
  const std::uint64_t exact_bound = cfg.u64("exact_bound");

  Philox root(cfg.u64("seed"));
  std::string report;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Philox stream = root.split(i);
    const auto est = recover_density(*backend, data[i].instance, *model, m, sampler,
                                     stream);
    json line;
    line["instance_id"] = i;
    line["estimate"] = est.estimate;
    line["stderr"] = est.stderr_;
    line["m"] = est.draws;
    line["mode"] = "singleton";
    if (exact_bound > 0) {
      try {
        line["exact"] = pushforward_prob(*backend, data[i].instance, *model, exact_bound);
      } catch (const EnumerationTooLarge&) {
        line["exact_unavailable"] = true;
      }
    }
    report += line.dump();
    report += "\n";
  }

  const std::filesystem::path out = cfg.str("out");
  atomic_write_file(out, report);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(out.string() + ".manifest.json", "recover", cfg, {out.string()}, wall,
                 {{"instances", data.size()}});
  std::cout << "recovered " << data.size() << " instances\n";
  return 0;
}

// ----------------------------------------------------------------------------
// eval

int cmd_eval(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset data = read_dataset(cfg.str("data"));
  if (data.empty()) throw Error("empty dataset");

  Checkpoint ckpt = load_checkpoint(cfg.str("checkpoint"));
  if (ckpt.params.head_kind == HeadKind::None) throw MissingHead();
  const auto backend = make_backend(ckpt.schema);
  const SamplerConfig sampler = sampler_from(cfg, *backend);
  const std::size_t r = cfg.u64("r");
  if (r < 1) throw ConfigError("r must be >= 1");

  const auto target_of = [](const DatasetEntry& entry) -> std::optional<std::string> {
    if (entry.label) return entry.label;
    if (const auto* record = std::get_if<PropositionalInstance>(&entry.instance))
      return record->label;
    return std::nullopt;
  };

  Philox root(cfg.u64("seed"));
  std::string csv;
  json stats;

  if (ckpt.params.head_kind == HeadKind::Classification) {
    const std::vector<std::string>& classes = ckpt.schema.label_classes;
    if (classes.size() != ckpt.params.target_dim)
      throw Error("checkpoint schema classes do not match the head dimension");
    csv = "instance_id,true_label,predicted_label,correct\n";
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto label = target_of(data[i]);
      if (!label) throw Error("eval dataset line " + std::to_string(i + 1) +
                              " carries no label");
      const StructureInstance view = discriminative_view(*backend, data[i].instance);
      Philox stream = root.split(i);
      Eigen::VectorXd mean_probs =
          Eigen::VectorXd::Zero(static_cast<Eigen::Index>(classes.size()));
      for (std::size_t k = 0; k < r; ++k) {
        const Serialization a = sample_serialization(*backend, view, sampler, stream);
        mean_probs += class_probabilities(ckpt.params, backend->alphabet(), a);
      }
      mean_probs /= static_cast<double>(r);
      Eigen::Index argmax = 0;
      mean_probs.maxCoeff(&argmax);
      const std::string& predicted = classes[static_cast<std::size_t>(argmax)];
      const bool hit = predicted == *label;
      correct += hit ? 1 : 0;
      csv += std::to_string(i) + "," + *label + "," + predicted + "," +
             (hit ? "1" : "0") + "\n";
    }
    const double accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    stats["accuracy"] = accuracy;
    std::cout << "accuracy " << format_double(accuracy) << "\n";
  } else {
    csv = "instance_id,target,prediction,nll\n";
    double total_nll = 0.0;
    std::vector<double> targets, predictions;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto label = target_of(data[i]);
      if (!label) throw Error("eval dataset line " + std::to_string(i + 1) +
                              " carries no target");
      double target_value = 0.0;
      try {
        target_value = std::stod(*label);
      } catch (const std::exception&) {
        throw Error("regression target is not numeric: " + *label);
      }
      const StructureInstance view = discriminative_view(*backend, data[i].instance);
      Philox stream = root.split(i);
      double nll_sum = 0.0, pred_sum = 0.0;
      for (std::size_t k = 0; k < r; ++k) {
        const Serialization a = sample_serialization(*backend, view, sampler, stream);
        Target y;
        y.real_value = target_value;
        nll_sum += discriminative_loss(ckpt.params, backend->alphabet(), a, y);
        const ForwardResult fwd = forward(ckpt.params, backend->alphabet(), a);
        const Eigen::VectorXd raw =
            ckpt.params.w_head * fwd.hidden.col(fwd.hidden.cols() - 1) +
            ckpt.params.b_head;
        const auto mcount = static_cast<Eigen::Index>(ckpt.params.mixture_components);
        const Eigen::VectorXd means = raw.segment(0, mcount);
        Eigen::VectorXd wl = raw.segment(2 * mcount, mcount);
        const double mx = wl.maxCoeff();
        const Eigen::VectorXd w =
            ((wl.array() - mx) - std::log((wl.array() - mx).exp().sum())).exp();
        pred_sum += means.dot(w);
      }
      const double nll = nll_sum / static_cast<double>(r);
      const double prediction = pred_sum / static_cast<double>(r);
      total_nll += nll;
      targets.push_back(target_value);
      predictions.push_back(prediction);
      csv += std::to_string(i) + "," + format_double(target_value) + "," +
             format_double(prediction) + "," + format_double(nll) + "\n";
    }
    const double mean_nll = total_nll / static_cast<double>(data.size());
    // Pearson correlation between targets and predictions.
    const auto mean_of = [](const std::vector<double>& v) {
      double s = 0.0;
      for (double x : v) s += x;
      return s / static_cast<double>(v.size());
    };
    const double mt = mean_of(targets), mp = mean_of(predictions);
    double cov = 0.0, vt = 0.0, vp = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      cov += (targets[i] - mt) * (predictions[i] - mp);
      vt += (targets[i] - mt) * (targets[i] - mt);
      vp += (predictions[i] - mp) * (predictions[i] - mp);
    }
    const double corr = vt > 0 && vp > 0 ? cov / std::sqrt(vt * vp) : 0.0;
    stats["mean_nll"] = mean_nll;
    stats["pearson_r"] = corr;
    std::cout << "mean_nll " << format_double(mean_nll) << " pearson_r "
              << format_double(corr) << "\n";
  }

  const std::filesystem::path out = cfg.str("out");
  atomic_write_file(out, csv);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(out.string() + ".manifest.json", "eval", cfg, {out.string()}, wall,
                 stats);
  return 0;
}

// ----------------------------------------------------------------------------

int dispatch(const std::string& command, const std::vector<KeySpec>& specs,
             const std::string& config_path,
             const std::map<std::string, std::string>& flags) {
  const RunConfig cfg(specs, config_path, flags);
  if (command == "gen") return cmd_gen(cfg);
  if (command == "serialize") return cmd_serialize(cfg);
  if (command == "train") return cmd_train(cfg);
  if (command == "recover") return cmd_recover(cfg);
  return cmd_eval(cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"structure serialization and sequence density estimation"};
  app.require_subcommand(1);

  const std::vector<KeySpec> common{
      {"seed", "0", "64-bit seed"},
  };

  std::map<std::string, std::vector<KeySpec>> commands;
  commands["gen"] = {
      {"kind", "", "vdp | tree", true},
      {"count", "", "number of instances", true},
      {"out", "", "output JSONL path", true},
      {"length", "21", "vdp: time steps per instance"},
      {"step_size", "0.1", "vdp: integrator step"},
      {"max_nodes", "20", "tree: maximum node count"},
      {"labels", "A,B,C,D,E,F,G,H,I,J,K,L,M,N,O,P,Q,R,S,T,U,V,W,X,Y,Z",
       "tree: comma-separated label set"},
      {"ordered", "false", "tree: ordered siblings"},
  };
  commands["serialize"] = {
      {"data", "", "input dataset JSONL", true},
      {"out", "", "output corpus JSONL", true},
      {"samples_per_instance", "2", "serializations per instance"},
  };
  commands["train"] = {
      {"data", "", "training dataset JSONL", true},
      {"checkpoint_out", "", "output checkpoint path", true},
      {"metrics_out", "", "output metrics CSV path", true},
      {"valid_data", "", "held-out dataset JSONL"},
      {"objective", "generative", "generative | discriminative"},
      {"target", "classification", "classification | regression"},
      {"hidden_dim", "32", "hidden units"},
      {"mixture_components", "1", "value-head mixture components"},
      {"cell", "sigmoid", "sigmoid | gru recurrent cell"},
      {"lambda", "0", "regularizer weight"},
      {"learning_rate", "0.001", "Adam learning rate"},
      {"beta1", "0.9", "Adam beta1"},
      {"beta2", "0.999", "Adam beta2"},
      {"epsilon", "1e-8", "Adam epsilon"},
      {"batch_instances", "32", "instances per step"},
      {"serializations_per_instance", "2", "serializations per instance"},
      {"max_steps", "1000", "total optimization steps"},
      {"max_wall_seconds", "0", "wall-clock budget in seconds (0: unlimited)"},
      {"clip", "5", "elementwise gradient clip range"},
      {"eval_interval", "50", "steps between held-out evaluations"},
      {"resume", "", "checkpoint to resume from"},
      {"metrics_wall_clock", "false", "write real wall time into the metrics CSV"},
  };
  commands["recover"] = {
      {"data", "", "test instances JSONL", true},
      {"out", "", "output report JSONL", true},
      {"checkpoint", "", "model checkpoint (scorer=checkpoint)"},
      {"scorer", "checkpoint", "checkpoint | oracle"},
      {"oracle_data", "", "dataset for the oracle scorer (defaults to `data`)"},
      {"m", "100", "Monte Carlo draws per instance"},
      {"exact_bound", "0", "also compute exact pushforward when fiber <= bound"},
  };
  commands["eval"] = {
      {"data", "", "labeled dataset JSONL", true},
      {"checkpoint", "", "model checkpoint", true},
      {"out", "", "output report CSV", true},
      {"r", "1", "resampled serializations per instance"},
  };
  for (auto& [name, specs] : commands) {
    specs.insert(specs.end(), common.begin(), common.end());
    if (name != "gen")
      specs.insert(specs.end(), kSamplerKeys.begin(), kSamplerKeys.end());
  }

  std::map<std::string, std::string> flag_values;
  std::string config_path;
  std::string chosen;

  for (auto& [name, specs] : commands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "key = value config file");
    for (const auto& spec : specs) {
      std::string names = "--" + spec.name;
      if (spec.name.find('_') != std::string::npos) {
        std::string dashed = spec.name;
        for (auto& c : dashed)
          if (c == '_') c = '-';
        names += ",--" + dashed;
      }
      sub->add_option_function<std::string>(
          names,
          [&flag_values, key = spec.name](const std::string& v) { flag_values[key] = v; },
          spec.help);
    }
    sub->callback([&chosen, name = name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  }

  try {
    return dispatch(chosen, commands.at(chosen), config_path, flag_values);
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return 2;
  } catch (const NonFiniteActivation& e) {
    std::cerr << "error: numeric: " << e.what() << "\n";
    return 4;
  } catch (const NonFiniteTrajectory& e) {
    std::cerr << "error: numeric: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "error: data: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
}
