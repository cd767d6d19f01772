#include "atla/common/stats.h"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace atla {

double ReturnStats::StandardError() const {
  if (returns.empty()) return 0.0;
  return std / std::sqrt(static_cast<double>(returns.size()));
}

ReturnStats Summarize(std::vector<double> returns) {
  ReturnStats stats;
  stats.mean = Mean(returns);
  double ss = 0.0;
  for (double r : returns) ss += (r - stats.mean) * (r - stats.mean);
  stats.std = returns.empty() ? 0.0 : std::sqrt(ss / returns.size());
  stats.returns = std::move(returns);
  return stats;
}

double Mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double Median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::string FormatDouble(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

}  // namespace atla
