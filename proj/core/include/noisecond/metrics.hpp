#ifndef NOISECOND_METRICS_HPP
#define NOISECOND_METRICS_HPP

#include <functional>
#include <string>
#include <vector>

#include "noisecond/corpus.hpp"
#include "noisecond/dsp.hpp"

namespace nc::metrics {

// Mean of per-frame SNRs (25 ms frames hopped 10 ms), each clamped to
// [-10, 35] dB. Frames with clean energy below 1e-10 are skipped. Inputs
// are trimmed to the shorter length.
double seg_snr(const dsp::Waveform& clean, const dsp::Waveform& enhanced);

// Log-spectral distortion: per frame the RMS over bins of
// 20*log10((|C|+eps)/(|E|+eps)), averaged over frames. eps = 1e-7.
double lsd(const dsp::Waveform& clean, const dsp::Waveform& enhanced);

struct BucketStats {
  double snr_db = 0;
  std::size_t count = 0;
  double seg_snr_db = 0;
  double lsd = 0;
};

struct MetricsReport {
  std::vector<BucketStats> model_rows;  // one per SNR bucket, ascending
  std::vector<BucketStats> noisy_rows;  // unenhanced reference
  BucketStats model_overall;
  BucketStats noisy_overall;
  std::vector<std::pair<std::string, std::string>> skipped;  // (pair id, reason)
  std::string checkpoint_id;
  std::string config_id;
};

using EnhanceFn = std::function<dsp::Waveform(const corpus::EvalPair&)>;

// Enhances every pair, computes both metrics against the clean reference,
// buckets by SNR, and adds the unenhanced noisy rows. Per-pair failures are
// collected; only a fully failing set is an error.
MetricsReport evaluate(const EnhanceFn& enhance,
                       const std::vector<corpus::EvalPair>& pairs,
                       int threads = 1);

// Aligned plain-text table, method × SNR.
std::string format_table(const MetricsReport& report);

// Line-oriented records, one bucket per line.
std::string format_records(const MetricsReport& report);

}  // namespace nc::metrics

#endif
