#include "noisecond/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "noisecond/error.hpp"
#include "noisecond/wav.hpp"

namespace fs = std::filesystem;

namespace nc::corpus {
namespace {

constexpr double kPi = 3.14159265358979323846;

void shuffle_ids(std::vector<std::string>& ids, Rng& rng) {
  for (std::size_t i = ids.size(); i > 1; --i)
    std::swap(ids[i - 1], ids[rng.index(i)]);
}

dsp::Waveform crop(const dsp::Waveform& w, std::size_t start, std::size_t len) {
  dsp::Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.assign(w.samples.begin() + start, w.samples.begin() + start + len);
  return out;
}

// Circular crop; used when a noise recording is shorter than the span it has
// to cover.
dsp::Waveform tile_crop(const dsp::Waveform& w, std::size_t start, std::size_t len) {
  dsp::Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.resize(len);
  const std::size_t n = w.samples.size();
  for (std::size_t i = 0; i < len; ++i) out.samples[i] = w.samples[(start + i) % n];
  return out;
}

}  // namespace

std::string split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
  }
  return "?";
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "valid") return Split::Valid;
  if (name == "test") return Split::Test;
  throw UsageError("unknown split '" + name + "'");
}

std::map<std::string, Split> assign_splits(const std::vector<std::string>& ids,
                                           std::array<double, 3> ratios,
                                           std::uint64_t seed) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9)
    throw UsageError("split ratios must sum to 1");
  std::set<std::string> seen;
  for (const auto& id : ids)
    if (!seen.insert(id).second) throw DuplicateId("'" + id + "' appears twice");

  std::vector<std::string> order = ids;
  Rng rng(seed);
  shuffle_ids(order, rng);

  const std::size_t n = order.size();
  std::size_t n_train = static_cast<std::size_t>(std::llround(ratios[0] * n));
  std::size_t n_valid = static_cast<std::size_t>(std::llround(ratios[1] * n));
  n_train = std::min(n_train, n);
  n_valid = std::min(n_valid, n - n_train);

  std::map<std::string, Split> out;
  for (std::size_t i = 0; i < n; ++i)
    out[order[i]] = i < n_train               ? Split::Train
                    : i < n_train + n_valid   ? Split::Valid
                                              : Split::Test;
  return out;
}

double rms(const dsp::Waveform& w) {
  double acc = 0;
  for (float s : w.samples) acc += static_cast<double>(s) * s;
  return w.samples.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(w.samples.size()));
}

dsp::Waveform mix_at_snr(const dsp::Waveform& speech, const dsp::Waveform& noise,
                         double snr_db) {
  if (speech.samples.size() != noise.samples.size())
    throw ShapeError("mix_at_snr length mismatch");
  const double rs = rms(speech), rn = rms(noise);
  if (rs <= 0.0 || rn <= 0.0)
    throw DegenerateSignal("mix_at_snr needs nonzero-RMS speech and noise");
  const double g = rs / (rn * std::pow(10.0, snr_db / 20.0));
  dsp::Waveform out;
  out.sample_rate = speech.sample_rate;
  out.samples.resize(speech.samples.size());
  // Mixing may exceed [-1, 1]; values stay unclipped on the feature path.
  for (std::size_t i = 0; i < out.samples.size(); ++i)
    out.samples[i] = static_cast<float>(static_cast<double>(speech.samples[i]) +
                                        g * static_cast<double>(noise.samples[i]));
  return out;
}

TrainingExample sample_training_example(
    const std::vector<const Recording*>& speech_set,
    const std::vector<const Recording*>& noise_set,
    const std::vector<double>& snr_set, std::size_t n, std::size_t r,
    const FrameSpec& fs, Rng& rng) {
  if (speech_set.empty() || noise_set.empty() || snr_set.empty())
    throw EmptyCorpus("sample_training_example needs nonempty sets");

  const Recording& sp = *speech_set[rng.index(speech_set.size())];
  const Recording& nz = *noise_set[rng.index(noise_set.size())];
  const double snr = snr_set[rng.index(snr_set.size())];

  const std::size_t span_n = dsp::span_samples(n, fs.frame_len, fs.hop);
  const std::size_t span_r = dsp::span_samples(r, fs.frame_len, fs.hop);
  if (sp.wav.size() < span_n)
    throw InputTooShort("utterance '" + sp.id + "' shorter than " +
                        std::to_string(n) + " frames");
  if (nz.wav.size() < span_n + span_r)
    throw InputTooShort("noise '" + nz.id + "' cannot host disjoint mix and hint spans");

  // Random n-frame window into the utterance.
  const std::size_t max_t0 =
      dsp::frame_count(sp.wav.size(), fs.frame_len, fs.hop) - n;
  const std::size_t s0 = rng.index(max_t0 + 1) * fs.hop;

  // Two disjoint blocks inside the noise recording; order is random.
  const bool mix_first = rng.index(2) == 0;
  const std::size_t span1 = mix_first ? span_n : span_r;
  const std::size_t span2 = mix_first ? span_r : span_n;
  const std::size_t slack = nz.wav.size() - span1 - span2;
  const std::size_t start1 = rng.index(slack + 1);
  const std::size_t start2 =
      start1 + span1 + rng.index(slack - start1 + 1);
  const std::size_t mix_start = mix_first ? start1 : start2;
  const std::size_t hint_start = mix_first ? start2 : start1;

  const dsp::Waveform clean = crop(sp.wav, s0, span_n);
  const dsp::Waveform noise_mix = crop(nz.wav, mix_start, span_n);
  const dsp::Waveform hint = crop(nz.wav, hint_start, span_r);
  const dsp::Waveform noisy = mix_at_snr(clean, noise_mix, snr);

  const auto noisy_spec = dsp::stft(noisy, fs.frame_len, fs.hop);
  const auto clean_spec = dsp::stft(clean, fs.frame_len, fs.hop);
  const auto hint_spec = dsp::stft(hint, fs.frame_len, fs.hop);

  TrainingExample ex;
  ex.noisy_segment = dsp::log_magnitude(noisy_spec);
  ex.noisy_phase = dsp::phase(noisy_spec);
  ex.noise_segment = dsp::log_magnitude(hint_spec);
  ex.snr_db = snr;
  ex.noise_id = nz.id;
  ex.speech_id = sp.id;

  const std::size_t center = n / 2;
  const auto clean_lm = dsp::log_magnitude(clean_spec);
  const std::size_t F = clean_lm.bins;
  ex.clean_frame.assign(clean_lm.v.begin() + center * F,
                        clean_lm.v.begin() + (center + 1) * F);
  ex.noisy_central_frame.assign(ex.noisy_segment.v.begin() + center * F,
                                ex.noisy_segment.v.begin() + (center + 1) * F);
  return ex;
}

std::vector<EvalPair> build_eval_set(
    const std::vector<const Recording*>& speech_set,
    const std::vector<const Recording*>& noise_set,
    const std::vector<double>& snr_set, std::size_t r, const FrameSpec& fs,
    std::uint64_t seed) {
  if (speech_set.empty() || noise_set.empty() || snr_set.empty())
    throw EmptyCorpus("build_eval_set needs nonempty sets");
  for (const auto* nz : noise_set)
    if (nz->split == Split::Train)
      throw SplitViolation("noise '" + nz->id + "' belongs to the training split");

  const std::size_t span_r = dsp::span_samples(r, fs.frame_len, fs.hop);
  Rng rng(seed);
  std::vector<EvalPair> out;
  out.reserve(speech_set.size());
  for (std::size_t i = 0; i < speech_set.size(); ++i) {
    const Recording& sp = *speech_set[i];
    const Recording& nz = *noise_set[rng.index(noise_set.size())];
    const double snr = snr_set[i % snr_set.size()];
    if (nz.wav.size() < span_r + fs.frame_len)
      throw InputTooShort("noise '" + nz.id + "' too short for an eval hint");

    EvalPair p;
    p.clean = sp.wav;
    p.noise_segment = crop(nz.wav, 0, span_r);
    // Mixing noise comes from past the hint, looped when the remainder is
    // shorter than the utterance.
    p.noisy = mix_at_snr(sp.wav, tile_crop(nz.wav, span_r, sp.wav.size()), snr);
    p.snr_db = snr;
    p.speech_id = sp.id;
    p.noise_id = nz.id;
    out.push_back(std::move(p));
  }
  return out;
}

dsp::Waveform synth_speech(double f0_hz, double seconds, int sample_rate, Rng& rng) {
  const std::size_t n = static_cast<std::size_t>(seconds * sample_rate);
  const std::size_t harmonics = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(0.45 * sample_rate / f0_hz)));
  std::vector<double> phases(harmonics);
  for (auto& p : phases) p = rng.uniform(0.0, 2.0 * kPi);
  const double env_freq = rng.uniform(1.0, 4.0);
  const double env_phase = rng.uniform(0.0, 2.0 * kPi);

  dsp::Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(n);
  double peak = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    double s = 0;
    for (std::size_t k = 0; k < harmonics; ++k)
      s += std::sin(2.0 * kPi * f0_hz * (k + 1) * t + phases[k]) / (k + 1.0);
    const double env = 0.55 + 0.45 * std::sin(2.0 * kPi * env_freq * t + env_phase);
    const double v = s * env;
    w.samples[i] = static_cast<float>(v);
    peak = std::max(peak, std::abs(v));
  }
  if (peak > 0)
    for (auto& s : w.samples) s = static_cast<float>(s * 0.5 / peak);
  return w;
}

dsp::Waveform synth_tone_noise(double freq_hz, double seconds, int sample_rate,
                               Rng& rng) {
  const std::size_t n = static_cast<std::size_t>(seconds * sample_rate);
  const double phase = rng.uniform(0.0, 2.0 * kPi);
  dsp::Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    w.samples[i] = static_cast<float>(0.3 * std::sin(2.0 * kPi * freq_hz * t + phase));
  }
  return w;
}

dsp::Waveform synth_band_noise(double center_hz, double width_hz, double seconds,
                               int sample_rate, Rng& rng) {
  const std::size_t n = static_cast<std::size_t>(seconds * sample_rate);
  constexpr std::size_t kComponents = 48;
  std::vector<double> freqs(kComponents), phases(kComponents);
  for (std::size_t k = 0; k < kComponents; ++k) {
    freqs[k] = rng.uniform(center_hz - width_hz / 2, center_hz + width_hz / 2);
    phases[k] = rng.uniform(0.0, 2.0 * kPi);
  }
  dsp::Waveform w;
  w.sample_rate = sample_rate;
  w.samples.resize(n);
  const double amp = 0.3 / std::sqrt(static_cast<double>(kComponents) / 2.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    double s = 0;
    for (std::size_t k = 0; k < kComponents; ++k)
      s += std::sin(2.0 * kPi * freqs[k] * t + phases[k]);
    w.samples[i] = static_cast<float>(amp * s);
  }
  return w;
}

SynthCorpus synth_corpus(const SynthConfig& cfg, std::uint64_t seed) {
  Rng master(seed);
  Rng speech_rng = master.fork(1);
  Rng noise_rng = master.fork(2);

  SynthCorpus out;
  std::vector<std::string> speech_ids, noise_ids;
  for (std::size_t u = 0; u < cfg.utterances; ++u)
    speech_ids.push_back("utt" + std::to_string(u));
  for (std::size_t e = 0; e < cfg.environments; ++e)
    noise_ids.push_back("env" + std::to_string(e));
  auto speech_splits = assign_splits(speech_ids, cfg.speech_ratios, master.next_u64());
  auto noise_splits = assign_splits(noise_ids, cfg.noise_ratios, master.next_u64());

  for (std::size_t u = 0; u < cfg.utterances; ++u) {
    Recording rec;
    rec.id = speech_ids[u];
    rec.split = speech_splits[rec.id];
    const double f0 = speech_rng.uniform(100.0, 300.0);
    rec.wav = synth_speech(f0, cfg.speech_seconds, cfg.sample_rate, speech_rng);
    out.speech.push_back(std::move(rec));
  }
  for (std::size_t e = 0; e < cfg.environments; ++e) {
    Recording rec;
    rec.id = noise_ids[e];
    rec.split = noise_splits[rec.id];
    if (noise_rng.uniform() < cfg.tone_fraction) {
      const double f = noise_rng.uniform(500.0, 7000.0);
      rec.wav = synth_tone_noise(f, cfg.noise_seconds, cfg.sample_rate, noise_rng);
    } else {
      const double c = noise_rng.uniform(500.0, 7000.0);
      const double bw = noise_rng.uniform(200.0, 1000.0);
      rec.wav = synth_band_noise(c, bw, cfg.noise_seconds, cfg.sample_rate, noise_rng);
    }
    out.noise.push_back(std::move(rec));
  }
  return out;
}

std::vector<const Recording*> Corpus::speech_in(Split s) const {
  std::vector<const Recording*> out;
  for (const auto& r : speech)
    if (r.split == s) out.push_back(&r);
  return out;
}

std::vector<const Recording*> Corpus::noise_in(Split s) const {
  std::vector<const Recording*> out;
  for (const auto& r : noise)
    if (r.split == s) out.push_back(&r);
  return out;
}

void write_corpus(const std::string& dir, const SynthCorpus& corpus, bool force) {
  fs::path root(dir);
  if (fs::exists(root) && !fs::is_empty(root) && !force)
    throw RefusingOverwrite(dir + " exists and is not empty (use --force)");
  fs::create_directories(root / "wav");

  std::ofstream manifest(root / "manifest.tsv");
  if (!manifest) throw IoError("cannot write manifest in " + dir);
  auto emit = [&](const Recording& rec, const char* kind) {
    const std::string rel = "wav/" + rec.id + ".wav";
    wav::write((root / rel).string(), rec.wav);
    manifest << rec.id << '\t' << rel << '\t' << split_name(rec.split) << '\t'
             << kind << '\n';
  };
  for (const auto& r : corpus.speech) emit(r, "speech");
  for (const auto& r : corpus.noise) emit(r, "noise");
  if (!manifest) throw IoError("short write to manifest in " + dir);
}

Corpus load_corpus(const std::string& dir) {
  fs::path root(dir);
  std::ifstream manifest(root / "manifest.tsv");
  if (!manifest) throw IoError("cannot open manifest in " + dir);

  Corpus out;
  std::set<std::string> speech_ids, noise_ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(manifest, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string id, rel, split, kind;
    if (!std::getline(fields, id, '\t') || !std::getline(fields, rel, '\t') ||
        !std::getline(fields, split, '\t') || !std::getline(fields, kind))
      throw IoError("malformed manifest line " + std::to_string(lineno));
    Recording rec;
    rec.id = id;
    rec.split = split_from_name(split);
    rec.wav = wav::read((root / rel).string());
    if (kind == "speech") {
      if (!speech_ids.insert(id).second)
        throw DuplicateId("speech id '" + id + "'");
      out.speech.push_back(std::move(rec));
    } else if (kind == "noise") {
      if (!noise_ids.insert(id).second)
        throw DuplicateId("noise id '" + id + "'");
      out.noise.push_back(std::move(rec));
    } else {
      throw IoError("manifest line " + std::to_string(lineno) +
                    ": unknown kind '" + kind + "'");
    }
  }
  if (out.speech.empty() && out.noise.empty())
    throw EmptyCorpus("manifest in " + dir + " lists no recordings");
  return out;
}

}  // namespace nc::corpus
