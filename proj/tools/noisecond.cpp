// noisecond: synthesize corpora, train, enhance, evaluate, verify.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "noisecond/corpus.hpp"
#include "noisecond/dsp.hpp"
#include "noisecond/error.hpp"
#include "noisecond/kvconfig.hpp"
#include "noisecond/metrics.hpp"
#include "noisecond/model.hpp"
#include "noisecond/trainer.hpp"
#include "noisecond/verify.hpp"
#include "noisecond/wav.hpp"

namespace fs = std::filesystem;
using nc::cfg::KvMap;

namespace {

const std::set<std::string>& model_keys() {
  static const std::set<std::string> keys = {
      "arch",          "n",          "r",
      "freq_bins",     "frame_len",  "hop",
      "embed_dim",     "loc_hidden", "use_noise_embedding",
      "emb_blocks",    "enh_blocks", "baseline_crop",
      "baseline_layers", "baseline_width"};
  return keys;
}

const std::set<std::string>& train_keys() {
  static const std::set<std::string> keys = {
      "lr",          "batch_size",    "steps",       "seed",
      "eval_every",  "val_examples",  "auto_halve_lr", "max_halvings",
      "snr_set",     "preset"};
  return keys;
}

std::vector<double> parse_snr_set(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty()) throw nc::UsageError("snr_set is empty");
  return out;
}

std::string format_snr_set(const std::vector<double>& snrs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < snrs.size(); ++i) {
    if (i) os << ',';
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", snrs[i]);
    os << buf;
  }
  return os.str();
}

nc::model::ModelConfig preset_config(const std::string& name) {
  if (name == "paper") return nc::model::ModelConfig::paper_defaults();
  if (name == "desk") return nc::model::ModelConfig::desk();
  if (name == "miniature") return nc::model::ModelConfig::miniature();
  throw nc::UsageError("unknown preset: " + name);
}

// defaults <- config file <- command-line --set overrides.
KvMap merge_run_config(const std::string& config_path,
                       const std::vector<std::string>& set_flags) {
  KvMap file_kv;
  if (!config_path.empty()) file_kv = nc::cfg::parse_file(config_path);
  KvMap flag_kv;
  for (const auto& kvs : set_flags) {
    auto pos = kvs.find('=');
    if (pos == std::string::npos || pos == 0)
      throw nc::UsageError("--set expects key=value, got: " + kvs);
    std::string key = kvs.substr(0, pos);
    if (flag_kv.count(key)) throw nc::UsageError("duplicate --set key: " + key);
    flag_kv[key] = kvs.substr(pos + 1);
  }
  KvMap kv = nc::cfg::merged(file_kv, flag_kv);
  std::set<std::string> known = model_keys();
  known.insert(train_keys().begin(), train_keys().end());
  nc::cfg::require_known_keys(kv, known);
  return kv;
}

nc::model::ModelConfig model_from_run(const KvMap& kv) {
  nc::model::ModelConfig base = preset_config(nc::cfg::get_str(kv, "preset", "desk"));
  KvMap merged = base.to_kv();
  for (const auto& [k, v] : kv)
    if (model_keys().count(k)) merged[k] = v;
  return nc::model::ModelConfig::from_kv(merged);
}

nc::train::TrainConfig train_from_run(const KvMap& kv) {
  nc::train::TrainConfig tc;
  tc.lr = nc::cfg::get_double(kv, "lr", tc.lr);
  tc.batch_size = nc::cfg::get_int(kv, "batch_size", static_cast<long>(tc.batch_size));
  tc.steps = nc::cfg::get_int(kv, "steps", static_cast<long>(tc.steps));
  tc.seed = nc::cfg::get_int(kv, "seed", static_cast<long>(tc.seed));
  tc.eval_every = nc::cfg::get_int(kv, "eval_every", static_cast<long>(tc.eval_every));
  tc.val_examples =
      nc::cfg::get_int(kv, "val_examples", static_cast<long>(tc.val_examples));
  tc.auto_halve_lr = nc::cfg::get_bool(kv, "auto_halve_lr", tc.auto_halve_lr);
  tc.max_halvings =
      nc::cfg::get_int(kv, "max_halvings", static_cast<long>(tc.max_halvings));
  if (kv.count("snr_set")) tc.snr_set = parse_snr_set(kv.at("snr_set"));
  tc.model = model_from_run(kv);
  return tc;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw nc::IoError("cannot write " + path);
  out << text;
  if (!out) throw nc::IoError("short write to " + path);
}

nc::model::ModelConfig config_for_checkpoint(const std::string& ckpt_path,
                                             const std::string& config_path) {
  std::string path = config_path;
  if (path.empty()) {
    path = (fs::path(ckpt_path).parent_path() / "model.cfg").string();
    if (!fs::exists(path))
      throw nc::UsageError("no --model-config given and no model.cfg next to " +
                           ckpt_path);
  }
  KvMap kv = nc::cfg::parse_file(path);
  nc::cfg::require_known_keys(kv, model_keys());
  return nc::model::ModelConfig::from_kv(kv);
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("NOISECOND_THREADS")) {
    try {
      int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
      throw nc::UsageError(std::string("bad NOISECOND_THREADS value: ") + env);
    }
    throw nc::UsageError(std::string("bad NOISECOND_THREADS value: ") + env);
  }
  return 1;
}

int run_synth(const std::string& out_dir, std::size_t environments,
              std::size_t utterances, std::uint64_t seed, bool force,
              double speech_seconds, double noise_seconds, double tone_fraction) {
  if (environments == 0) throw nc::UsageError("--environments must be positive");
  if (utterances == 0) throw nc::UsageError("--utterances must be positive");
  nc::corpus::SynthConfig sc;
  sc.environments = environments;
  sc.utterances = utterances;
  sc.speech_seconds = speech_seconds;
  sc.noise_seconds = noise_seconds;
  sc.tone_fraction = tone_fraction;
  auto corpus = nc::corpus::synth_corpus(sc, seed);
  nc::corpus::write_corpus(out_dir, corpus, force);
  std::printf("wrote %zu speech + %zu noise recordings to %s\n",
              corpus.speech.size(), corpus.noise.size(), out_dir.c_str());
  return 0;
}

int run_train(const std::string& config_path, const std::string& corpus_dir,
              const std::string& out_dir, bool no_embedding,
              const std::string& baseline,
              const std::vector<std::string>& set_flags, bool force) {
  if (!baseline.empty() && baseline != "noise-aware")
    throw nc::UsageError("unknown --baseline: " + baseline);
  if (!fs::is_directory(corpus_dir))
    throw nc::UsageError("corpus dir not found: " + corpus_dir);
  if (fs::exists(out_dir) && !fs::is_empty(out_dir) && !force)
    throw nc::RefusingOverwrite(out_dir + " exists and is not empty");
  fs::create_directories(out_dir);

  KvMap kv = merge_run_config(config_path, set_flags);
  nc::train::TrainConfig tc = train_from_run(kv);
  if (no_embedding) tc.model.use_noise_embedding = false;
  if (baseline == "noise-aware") tc.model.arch = "noise_aware";
  tc.model.validate();
  tc.checkpoint_dir = out_dir;

  auto corpus = nc::corpus::load_corpus(corpus_dir);
  write_text((fs::path(out_dir) / "model.cfg").string(),
             nc::cfg::serialize(tc.model.to_kv()));
  auto result = nc::train::train(tc, corpus, &std::cerr);

  std::string log;
  for (const auto& line : result.log_lines) log += line + "\n";
  write_text((fs::path(out_dir) / "train.log").string(), log);
  std::printf("best val_loss=%.9g at step %llu (final lr %.9g, %zu halvings)\n",
              result.best_val_loss,
              static_cast<unsigned long long>(result.best_step), result.final_lr,
              result.halvings);
  std::printf("checkpoints: %s, %s\n", result.best_path.c_str(),
              result.last_path.c_str());
  return 0;
}

int run_enhance(const std::string& ckpt, const std::string& noisy_path,
                const std::string& hint_path, const std::string& out_path,
                const std::string& config_path) {
  auto mc = config_for_checkpoint(ckpt, config_path);
  nc::model::EnhancementModel<float> model(mc, 0);
  nc::train::load_checkpoint(ckpt, model);
  model.set_training(false);

  bool needs_hint = mc.arch == "noise_aware" || mc.use_noise_embedding;
  if (needs_hint && hint_path.empty())
    throw nc::UsageError("this model conditions on noise; --hint is required");

  auto noisy = nc::wav::read(noisy_path);
  nc::dsp::Waveform hint;
  if (!hint_path.empty()) {
    hint = nc::wav::read(hint_path);
  } else {
    hint.samples.assign((mc.r - 1) * mc.hop + mc.frame_len, 0.0f);
    hint.sample_rate = noisy.sample_rate;
  }
  auto enhanced = nc::train::enhance_utterance(model, noisy, hint);
  nc::wav::write(out_path, enhanced);
  std::printf("wrote %zu samples to %s\n", enhanced.samples.size(),
              out_path.c_str());
  return 0;
}

int run_evaluate(const std::string& ckpt, const std::string& corpus_dir,
                 const std::string& split_name, const std::string& out_prefix,
                 const std::string& config_path, std::uint64_t seed,
                 int threads) {
  auto mc = config_for_checkpoint(ckpt, config_path);
  nc::model::EnhancementModel<float> model(mc, 0);
  nc::train::load_checkpoint(ckpt, model);
  model.set_training(false);

  auto split = nc::corpus::split_from_name(split_name);
  auto corpus = nc::corpus::load_corpus(corpus_dir);
  nc::corpus::FrameSpec fspec{mc.frame_len, mc.hop};
  auto pairs = nc::corpus::build_eval_set(corpus.speech_in(split),
                                          corpus.noise_in(split),
                                          nc::corpus::default_snrs(), mc.r,
                                          fspec, seed);
  auto enhance = [&](const nc::corpus::EvalPair& p) {
    return nc::train::enhance_utterance(model, p.noisy, p.noise_segment);
  };
  auto report = nc::metrics::evaluate(enhance, pairs, threads);
  report.checkpoint_id = fs::path(ckpt).filename().string();
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(mc.hash()));
  report.config_id = hash;

  std::string table = nc::metrics::format_table(report);
  write_text(out_prefix + ".txt", table);
  write_text(out_prefix + ".records", nc::metrics::format_records(report));
  std::fputs(table.c_str(), stdout);
  return 0;
}

int run_verify(const std::string& suite) {
  auto checks = nc::verify::run_suite(suite);
  bool all_pass = true;
  for (const auto& c : checks) {
    std::printf("%s %-40s measured=%.6g%s%s\n", c.pass ? "PASS" : "FAIL",
                c.name.c_str(), c.measured, c.detail.empty() ? "" : " ",
                c.detail.c_str());
    all_pass = all_pass && c.pass;
  }
  std::printf("%s: %zu checks\n", all_pass ? "OK" : "FAILED", checks.size());
  return all_pass ? 0 : 5;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noise-conditioned speech enhancement toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  int threads_flag = 0;
  app.add_option("--threads", threads_flag,
                 "Worker thread cap (default: NOISECOND_THREADS or 1)");

  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus");
  std::string synth_out;
  std::size_t environments = 50, utterances = 200;
  std::uint64_t synth_seed = 0;
  bool synth_force = false;
  double speech_seconds = 1.5, noise_seconds = 3.0, tone_fraction = 0.5;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--environments", environments, "Noise environment count");
  synth->add_option("--utterances", utterances, "Speech utterance count");
  synth->add_option("--seed", synth_seed, "Random seed");
  synth->add_option("--speech-seconds", speech_seconds, "Utterance duration");
  synth->add_option("--noise-seconds", noise_seconds, "Noise recording duration");
  synth->add_option("--tone-fraction", tone_fraction,
                    "Fraction of tonal environments (rest band-limited)");
  synth->add_flag("--force", synth_force, "Overwrite a non-empty directory");

  auto* train = app.add_subcommand("train", "Train an enhancement model");
  std::string train_config, train_corpus, train_out, baseline;
  std::vector<std::string> set_flags;
  bool no_embedding = false, train_force = false;
  train->add_option("--config", train_config, "key=value config file");
  train->add_option("--corpus", train_corpus, "Corpus directory")->required();
  train->add_option("--out", train_out, "Checkpoint/log directory")->required();
  train->add_option("--set", set_flags,
                    "Config override key=value (beats the config file)");
  train->add_flag("--no-embedding", no_embedding,
                  "Disable the noise-embedding conditioning");
  train->add_option("--baseline", baseline, "Baseline arch: noise-aware");
  train->add_flag("--force", train_force, "Overwrite a non-empty directory");

  auto* enhance = app.add_subcommand("enhance", "Enhance one WAV file");
  std::string enh_ckpt, enh_noisy, enh_hint, enh_out, enh_config;
  enhance->add_option("--ckpt", enh_ckpt, "Checkpoint file")->required();
  enhance->add_option("--noisy", enh_noisy, "Noisy input WAV")->required();
  enhance->add_option("--hint", enh_hint, "Noise-only hint WAV (same environment)");
  enhance->add_option("--out", enh_out, "Enhanced output WAV")->required();
  enhance->add_option("--model-config", enh_config,
                      "Model config file (default: model.cfg next to --ckpt)");

  auto* evaluate = app.add_subcommand("evaluate", "Metrics over an eval split");
  std::string eval_ckpt, eval_corpus, eval_split = "test", eval_out, eval_config;
  std::uint64_t eval_seed = 0;
  evaluate->add_option("--ckpt", eval_ckpt, "Checkpoint file")->required();
  evaluate->add_option("--corpus", eval_corpus, "Corpus directory")->required();
  evaluate->add_option("--split", eval_split, "Split: train, valid or test");
  evaluate->add_option("--out", eval_out, "Report prefix (.txt, .records)")
      ->required();
  evaluate->add_option("--model-config", eval_config,
                       "Model config file (default: model.cfg next to --ckpt)");
  evaluate->add_option("--seed", eval_seed, "Eval-set pairing seed");

  auto* verify = app.add_subcommand("verify", "Run a verification suite");
  std::string suite = "all";
  verify->add_option("--suite", suite, "gradcheck, shapes, dsp, metrics or all")
      ->check(CLI::IsMember({"gradcheck", "shapes", "dsp", "metrics", "all"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    int threads = resolve_threads(threads_flag);
    if (synth->parsed())
      return run_synth(synth_out, environments, utterances, synth_seed,
                       synth_force, speech_seconds, noise_seconds, tone_fraction);
    if (train->parsed())
      return run_train(train_config, train_corpus, train_out, no_embedding,
                       baseline, set_flags, train_force);
    if (enhance->parsed())
      return run_enhance(enh_ckpt, enh_noisy, enh_hint, enh_out, enh_config);
    if (evaluate->parsed())
      return run_evaluate(eval_ckpt, eval_corpus, eval_split, eval_out,
                          eval_config, eval_seed, threads);
    if (verify->parsed()) return run_verify(suite);
    throw nc::UsageError("no subcommand");
  } catch (const nc::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    switch (e.code()) {
      case nc::ErrorCode::UsageError:
        return 2;
      case nc::ErrorCode::NumericFailure:
        return 4;
      default:
        return 3;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
