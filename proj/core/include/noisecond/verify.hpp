#ifndef NOISECOND_VERIFY_HPP
#define NOISECOND_VERIFY_HPP

#include <functional>
#include <string>
#include <vector>

#include "noisecond/autodiff.hpp"

namespace nc::verify {

struct Check {
  std::string name;
  bool pass = false;
  double measured = 0;  // the quantity compared against the threshold
  std::string detail;
};

// Max relative error between analytic gradients and 64-bit central finite
// differences (h = 1e-5, denominators floored at 1e-8). build must construct
// the same scalar loss on every call.
double gradcheck(
    const std::function<ad::TensorPtr<double>(ad::Graph<double>&)>& build,
    const std::vector<ad::TensorPtr<double>>& params, double h = 1e-5);

// Per-op and full-miniature-model gradient checks, threshold 1e-4.
std::vector<Check> gradcheck_suite();

// Architecture shape traces at paper defaults; construction-only.
std::vector<Check> shapes_suite();

// STFT/ISTFT round-trip and feature-path inversion properties.
std::vector<Check> dsp_suite(std::uint64_t seed = 42);

// SegSNR/LSD sanity plus scalar-oracle comparisons.
std::vector<Check> metrics_suite(std::uint64_t seed = 42);

// name in {gradcheck, shapes, dsp, metrics, all}
std::vector<Check> run_suite(const std::string& name);

}  // namespace nc::verify

#endif
