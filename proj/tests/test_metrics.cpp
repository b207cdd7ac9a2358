#include <cmath>
#include <vector>

#include "doctest.h"
#include "noisecond/corpus.hpp"
#include "noisecond/metrics.hpp"
#include "noisecond/rng.hpp"

using namespace nc;

namespace {

dsp::Waveform random_wave(std::size_t len, Rng& rng, double amp = 0.5) {
  dsp::Waveform w;
  w.samples.resize(len);
  for (auto& s : w.samples) s = static_cast<float>(rng.uniform(-amp, amp));
  return w;
}

// Frame-wise segmental SNR oracle: 25 ms frames hopped 10 ms, per-frame
// 10*log10(clean/error) clamped to [-10, 35], silent clean frames skipped.
double seg_snr_oracle(const dsp::Waveform& clean, const dsp::Waveform& enh) {
  const std::size_t len = std::min(clean.size(), enh.size());
  double acc = 0;
  std::size_t count = 0;
  for (std::size_t start = 0; start + 400 <= len; start += 160) {
    double pc = 0, pe = 0;
    for (std::size_t i = start; i < start + 400; ++i) {
      pc += double(clean.samples[i]) * clean.samples[i];
      const double d = enh.samples[i] - clean.samples[i];
      pe += d * d;
    }
    if (pc < 1e-10) continue;
    double snr = 10.0 * std::log10(pc / (pe > 0 ? pe : 1e-300));
    snr = std::min(35.0, std::max(-10.0, snr));
    acc += snr;
    ++count;
  }
  return acc / count;
}

// Double-loop LSD oracle over STFT magnitudes.
double lsd_oracle(const dsp::Waveform& clean, const dsp::Waveform& enh) {
  dsp::Waveform c = clean, e = enh;
  const std::size_t len = std::min(c.size(), e.size());
  c.samples.resize(len);
  e.samples.resize(len);
  auto sc = dsp::stft(c);
  auto se = dsp::stft(e);
  double acc = 0;
  for (std::size_t t = 0; t < sc.frames; ++t) {
    double frame = 0;
    for (std::size_t f = 0; f < sc.bins; ++f) {
      const double r = 20.0 * std::log10((std::abs(sc.at(t, f)) + 1e-7) /
                                         (std::abs(se.at(t, f)) + 1e-7));
      frame += r * r;
    }
    acc += std::sqrt(frame / sc.bins);
  }
  return acc / sc.frames;
}

}  // namespace

TEST_CASE("seg_snr of a signal with itself hits the 35 dB clamp") {
  Rng rng(51);
  auto w = random_wave(8000, rng);
  CHECK(metrics::seg_snr(w, w) == doctest::Approx(35.0));
}

TEST_CASE("seg_snr hits the -10 dB floor under overwhelming noise") {
  Rng rng(52);
  auto clean = random_wave(8000, rng, 0.05);
  auto enh = clean;
  for (std::size_t i = 0; i < enh.samples.size(); ++i)
    enh.samples[i] += static_cast<float>(rng.uniform(-0.9, 0.9));
  CHECK(metrics::seg_snr(clean, enh) == doctest::Approx(-10.0));
}

TEST_CASE("seg_snr matches the frame-wise oracle on random pairs") {
  Rng rng(53);
  for (int trial = 0; trial < 100; ++trial) {
    auto clean = random_wave(4000, rng);
    auto enh = clean;
    for (auto& s : enh.samples) s += static_cast<float>(rng.uniform(-0.1, 0.1));
    CHECK(metrics::seg_snr(clean, enh) ==
          doctest::Approx(seg_snr_oracle(clean, enh)).epsilon(1e-6));
  }
}

TEST_CASE("lsd closed forms") {
  Rng rng(54);
  auto w = random_wave(4000, rng);
  CHECK(metrics::lsd(w, w) == doctest::Approx(0.0));

  // |E| = 10 |C| everywhere -> 20 log10(1/10) in magnitude = 20.0.
  auto ten = w;
  for (auto& s : ten.samples) s *= 10.0f;
  CHECK(metrics::lsd(w, ten) == doctest::Approx(20.0).epsilon(1e-3));
}

TEST_CASE("lsd matches the double-loop oracle on random pairs") {
  Rng rng(55);
  for (int trial = 0; trial < 100; ++trial) {
    auto clean = random_wave(2400, rng);
    auto enh = random_wave(2400, rng);
    CHECK(metrics::lsd(clean, enh) ==
          doctest::Approx(lsd_oracle(clean, enh)).epsilon(1e-6));
  }
}

TEST_CASE("evaluate buckets by SNR and recombines weighted means") {
  Rng data_rng(56);
  std::vector<corpus::Recording> speech, noise;
  for (int i = 0; i < 12; ++i) {
    corpus::Recording r;
    r.id = "s" + std::to_string(i);
    r.split = corpus::Split::Test;
    r.wav = random_wave(12000, data_rng);
    speech.push_back(std::move(r));
  }
  for (int i = 0; i < 3; ++i) {
    corpus::Recording r;
    r.id = "n" + std::to_string(i);
    r.split = corpus::Split::Test;
    r.wav = random_wave(24000, data_rng);
    noise.push_back(std::move(r));
  }
  std::vector<const corpus::Recording*> ss, ns;
  for (auto& r : speech) ss.push_back(&r);
  for (auto& r : noise) ns.push_back(&r);
  corpus::FrameSpec fspec;
  auto pairs = corpus::build_eval_set(ss, ns, corpus::default_snrs(), 8, fspec, 3);

  metrics::EnhanceFn identity = [](const corpus::EvalPair& p) { return p.noisy; };
  auto report = metrics::evaluate(identity, pairs);

  REQUIRE(report.model_rows.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(report.model_rows[i].snr_db == corpus::default_snrs()[i]);
    CHECK(report.model_rows[i].count == 2);
    // Identity enhancement equals the noisy reference rows.
    CHECK(report.model_rows[i].seg_snr_db ==
          doctest::Approx(report.noisy_rows[i].seg_snr_db));
    CHECK(report.model_rows[i].lsd == doctest::Approx(report.noisy_rows[i].lsd));
  }

  double weighted = 0;
  std::size_t total = 0;
  for (const auto& row : report.model_rows) {
    weighted += row.seg_snr_db * row.count;
    total += row.count;
  }
  CHECK(report.model_overall.count == total);
  CHECK(report.model_overall.seg_snr_db == doctest::Approx(weighted / total));

  // A single pair makes the overall equal its bucket.
  std::vector<corpus::EvalPair> one = {pairs.front()};
  auto single = metrics::evaluate(identity, one);
  REQUIRE(single.model_rows.size() == 1);
  CHECK(single.model_overall.seg_snr_db ==
        doctest::Approx(single.model_rows[0].seg_snr_db));
  CHECK(single.model_overall.lsd == doctest::Approx(single.model_rows[0].lsd));

  // Formatters mention every bucket.
  auto table = metrics::format_table(report);
  for (const char* snr : {"0", "5", "10", "15", "20", "25"})
    CHECK(table.find(snr) != std::string::npos);
  CHECK(metrics::format_records(report).find("snr_db=all") != std::string::npos);
}
