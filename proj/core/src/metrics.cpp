#include "noisecond/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>

#include "noisecond/error.hpp"

namespace nc::metrics {
namespace {

constexpr double kSegSnrFloorDb = -10.0;
constexpr double kSegSnrCeilDb = 35.0;
constexpr double kSilentFrameEnergy = 1e-10;

std::size_t frame_len_for(int sample_rate) {
  return static_cast<std::size_t>(0.025 * sample_rate);
}
std::size_t hop_for(int sample_rate) {
  return static_cast<std::size_t>(0.010 * sample_rate);
}

}  // namespace

double seg_snr(const dsp::Waveform& clean, const dsp::Waveform& enhanced) {
  const std::size_t len = std::min(clean.size(), enhanced.size());
  const std::size_t frame = frame_len_for(clean.sample_rate);
  const std::size_t hop = hop_for(clean.sample_rate);
  if (len < frame) throw DegenerateSignal("seg_snr input shorter than one frame");

  double acc = 0;
  std::size_t valid = 0;
  for (std::size_t start = 0; start + frame <= len; start += hop) {
    double e_clean = 0, e_err = 0;
    for (std::size_t i = start; i < start + frame; ++i) {
      const double c = clean.samples[i];
      const double d = c - static_cast<double>(enhanced.samples[i]);
      e_clean += c * c;
      e_err += d * d;
    }
    if (e_clean < kSilentFrameEnergy) continue;
    const double snr = 10.0 * std::log10(e_clean / (e_err + 1e-12));
    acc += std::clamp(snr, kSegSnrFloorDb, kSegSnrCeilDb);
    ++valid;
  }
  if (valid == 0) throw DegenerateSignal("seg_snr found no non-silent frames");
  return acc / static_cast<double>(valid);
}

double lsd(const dsp::Waveform& clean, const dsp::Waveform& enhanced) {
  const std::size_t len = std::min(clean.size(), enhanced.size());
  const std::size_t frame = frame_len_for(clean.sample_rate);
  const std::size_t hop = hop_for(clean.sample_rate);
  if (len < frame) throw DegenerateSignal("lsd input shorter than one frame");

  dsp::Waveform c = clean, e = enhanced;
  c.samples.resize(len);
  e.samples.resize(len);
  const auto sc = dsp::stft(c, frame, hop);
  const auto se = dsp::stft(e, frame, hop);

  const double eps = dsp::kLogEps;
  double acc = 0;
  for (std::size_t t = 0; t < sc.frames; ++t) {
    double mean_sq = 0;
    for (std::size_t f = 0; f < sc.bins; ++f) {
      const double mc = std::abs(sc.at(t, f)) + eps;
      const double me = std::abs(se.at(t, f)) + eps;
      const double d = 20.0 * std::log10(mc / me);
      mean_sq += d * d;
    }
    acc += std::sqrt(mean_sq / static_cast<double>(sc.bins));
  }
  return acc / static_cast<double>(sc.frames);
}

MetricsReport evaluate(const EnhanceFn& enhance,
                       const std::vector<corpus::EvalPair>& pairs, int threads) {
  if (pairs.empty()) throw EmptyCorpus("evaluate needs at least one pair");

  struct PairResult {
    bool ok = false;
    std::string reason;
    double snr_db = 0;
    double model_seg = 0, model_lsd = 0;
    double noisy_seg = 0, noisy_lsd = 0;
  };
  std::vector<PairResult> results(pairs.size());

  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      PairResult& r = results[i];
      r.snr_db = pairs[i].snr_db;
      try {
        const dsp::Waveform enhanced = enhance(pairs[i]);
        r.model_seg = seg_snr(pairs[i].clean, enhanced);
        r.model_lsd = lsd(pairs[i].clean, enhanced);
        r.noisy_seg = seg_snr(pairs[i].clean, pairs[i].noisy);
        r.noisy_lsd = lsd(pairs[i].clean, pairs[i].noisy);
        r.ok = true;
      } catch (const std::exception& e) {
        r.reason = e.what();
      }
    }
  };

  const int nthreads = std::max(1, threads);
  if (nthreads == 1 || pairs.size() < 2) {
    worker(0, pairs.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (pairs.size() + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; ++t) {
      const std::size_t b = t * chunk;
      if (b >= pairs.size()) break;
      pool.emplace_back(worker, b, std::min(pairs.size(), b + chunk));
    }
    for (auto& th : pool) th.join();
  }

  // Fixed-order aggregation over the pair list.
  MetricsReport report;
  std::map<double, BucketStats> model_buckets, noisy_buckets;
  std::size_t ok_count = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& r = results[i];
    if (!r.ok) {
      report.skipped.emplace_back(pairs[i].speech_id + "/" + pairs[i].noise_id,
                                  r.reason);
      continue;
    }
    ++ok_count;
    auto& mb = model_buckets[r.snr_db];
    auto& nb = noisy_buckets[r.snr_db];
    mb.snr_db = nb.snr_db = r.snr_db;
    ++mb.count;
    ++nb.count;
    mb.seg_snr_db += r.model_seg;
    mb.lsd += r.model_lsd;
    nb.seg_snr_db += r.noisy_seg;
    nb.lsd += r.noisy_lsd;
  }
  if (ok_count == 0)
    throw DegenerateSignal("every eval pair failed: " +
                           (report.skipped.empty() ? std::string("?")
                                                   : report.skipped[0].second));

  auto finish = [](std::map<double, BucketStats>& buckets,
                   std::vector<BucketStats>& rows, BucketStats& overall) {
    double seg = 0, l = 0;
    std::size_t n = 0;
    for (auto& [snr, b] : buckets) {
      // bucket means; overall is the count-weighted mean of buckets
      seg += b.seg_snr_db;
      l += b.lsd;
      n += b.count;
      b.seg_snr_db /= static_cast<double>(b.count);
      b.lsd /= static_cast<double>(b.count);
      rows.push_back(b);
    }
    overall.count = n;
    overall.seg_snr_db = seg / static_cast<double>(n);
    overall.lsd = l / static_cast<double>(n);
  };
  finish(model_buckets, report.model_rows, report.model_overall);
  finish(noisy_buckets, report.noisy_rows, report.noisy_overall);
  return report;
}

std::string format_table(const MetricsReport& report) {
  std::ostringstream out;
  char buf[128];
  out << "Method            ";
  for (const auto& b : report.model_rows) {
    std::snprintf(buf, sizeof(buf), " | %5.0f dB", b.snr_db);
    out << buf;
  }
  out << " |  Overall\n";
  auto row = [&](const std::string& name, const std::vector<BucketStats>& rows,
                 const BucketStats& overall, bool use_lsd) {
    std::snprintf(buf, sizeof(buf), "%-18s", name.c_str());
    out << buf;
    for (const auto& b : rows) {
      std::snprintf(buf, sizeof(buf), " | %8.3f", use_lsd ? b.lsd : b.seg_snr_db);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), " | %8.3f\n",
                  use_lsd ? overall.lsd : overall.seg_snr_db);
    out << buf;
  };
  out << "-- SegSNR (dB) --\n";
  row("Noisy Speech", report.noisy_rows, report.noisy_overall, false);
  row("Enhanced", report.model_rows, report.model_overall, false);
  out << "-- LSD --\n";
  row("Noisy Speech", report.noisy_rows, report.noisy_overall, true);
  row("Enhanced", report.model_rows, report.model_overall, true);
  if (!report.skipped.empty()) {
    out << "skipped pairs: " << report.skipped.size() << "\n";
    for (const auto& [id, reason] : report.skipped)
      out << "  " << id << ": " << reason << "\n";
  }
  return out.str();
}

std::string format_records(const MetricsReport& report) {
  std::ostringstream out;
  char buf[256];
  auto rows = [&](const char* method, const std::vector<BucketStats>& r,
                  const BucketStats& overall) {
    for (const auto& b : r) {
      std::snprintf(buf, sizeof(buf),
                    "method=%s snr_db=%g count=%zu seg_snr_db=%.9g lsd=%.9g\n",
                    method, b.snr_db, b.count, b.seg_snr_db, b.lsd);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "method=%s snr_db=all count=%zu seg_snr_db=%.9g lsd=%.9g\n",
                  method, overall.count, overall.seg_snr_db, overall.lsd);
    out << buf;
  };
  if (!report.checkpoint_id.empty())
    out << "checkpoint=" << report.checkpoint_id << "\n";
  if (!report.config_id.empty()) out << "config=" << report.config_id << "\n";
  rows("noisy", report.noisy_rows, report.noisy_overall);
  rows("enhanced", report.model_rows, report.model_overall);
  for (const auto& [id, reason] : report.skipped)
    out << "skipped=" << id << " reason=\"" << reason << "\"\n";
  return out.str();
}

}  // namespace nc::metrics
