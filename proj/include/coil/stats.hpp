#pragma once

#include <span>
#include <vector>

namespace coil {

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

Summary summarize(std::span<const double> xs);

/// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> ranks(std::span<const double> xs);

/// Spearman rank correlation (Pearson on average ranks). 0 when either side is constant.
double spearman(std::span<const double> x, std::span<const double> y);

/// Least-squares slope of y on x.
double linear_slope(std::span<const double> x, std::span<const double> y);

/// Mean of the ceil(fraction * n) largest values.
double top_fraction_mean(std::span<const double> xs, double fraction);

}  // namespace coil
