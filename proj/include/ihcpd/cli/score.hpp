#pragma once

#include "ihcpd/errors.hpp"

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace ihcpd::cli {

struct DetectionScore {
  std::size_t true_positives = 0;
  std::size_t predicted = 0;
  std::size_t actual = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Mean of (prediction - truth) over matched pairs; 0 when nothing matched.
  double mean_delay = 0.0;
};

// Each true change point claims the earliest unclaimed prediction within
// +-tolerance. Empty denominators yield a score of 1 (nothing to get wrong).
inline DetectionScore score_detections(std::span<const std::size_t> predicted, std::span<const std::size_t> truth,
                                       std::size_t tolerance) {
  std::vector<std::size_t> pred(predicted.begin(), predicted.end());
  std::vector<std::size_t> real(truth.begin(), truth.end());
  std::sort(pred.begin(), pred.end());
  std::sort(real.begin(), real.end());
  std::vector<bool> used(pred.size(), false);

  DetectionScore s;
  s.predicted = pred.size();
  s.actual = real.size();
  double delay_sum = 0.0;
  for (std::size_t cp : real) {
    for (std::size_t j = 0; j < pred.size(); ++j) {
      if (used[j]) continue;
      const std::size_t diff = pred[j] > cp ? pred[j] - cp : cp - pred[j];
      if (diff <= tolerance) {
        used[j] = true;
        ++s.true_positives;
        delay_sum += static_cast<double>(pred[j]) - static_cast<double>(cp);
        break;
      }
    }
  }
  s.precision = s.predicted == 0 ? 1.0 : static_cast<double>(s.true_positives) / s.predicted;
  s.recall = s.actual == 0 ? 1.0 : static_cast<double>(s.true_positives) / s.actual;
  s.f1 = s.precision + s.recall == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  s.mean_delay = s.true_positives == 0 ? 0.0 : delay_sum / s.true_positives;
  return s;
}

} // namespace ihcpd::cli
