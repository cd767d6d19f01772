#ifndef ATLA_COMMON_STATS_H_
#define ATLA_COMMON_STATS_H_

#include <span>
#include <string>
#include <vector>

namespace atla {

struct ReturnStats {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::vector<double> returns;

  double StandardError() const;
};

ReturnStats Summarize(std::vector<double> returns);

double Mean(std::span<const double> xs);
double Median(std::vector<double> xs);

// Shortest decimal text that parses back to the same double.
std::string FormatDouble(double x);

}  // namespace atla

#endif  // ATLA_COMMON_STATS_H_
