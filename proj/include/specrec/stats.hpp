// Small statistics helpers shared by the validation campaign and the test
// suites.
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace specrec {

// Tolerance for comparing an empirical frequency against a probability at
// three standard errors, with a small additive guard for the Poisson regime
// of near-zero cells.
inline double mc_tolerance(double p_true, double p_hat, long samples) {
  const double v = std::max(p_true * (1.0 - p_true), p_hat * (1.0 - p_hat));
  return 3.0 * std::sqrt(v / static_cast<double>(samples)) + 2.0 / static_cast<double>(samples);
}

// Standard error of the mean of a correlated series via batch means.
inline double batch_mean_se(std::span<const double> series, int num_batches = 100) {
  const long n = static_cast<long>(series.size());
  if (n < 2 * num_batches) num_batches = std::max(2, static_cast<int>(n / 2));
  const long batch = n / num_batches;
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (int b = 0; b < num_batches; ++b) {
    double bm = 0.0;
    for (long i = b * batch; i < (b + 1) * batch; ++i) bm += series[i];
    bm /= static_cast<double>(batch);
    var += (bm - mean) * (bm - mean);
  }
  var /= (num_batches - 1);
  return std::sqrt(var / num_batches);
}

inline double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

inline double mean(std::span<const double> values) {
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

inline double sample_se(std::span<const double> values) {
  const double m = mean(values);
  double var = 0.0;
  for (double v : values) var += (v - m) * (v - m);
  var /= static_cast<double>(values.size() - 1);
  return std::sqrt(var / static_cast<double>(values.size()));
}

}  // namespace specrec
