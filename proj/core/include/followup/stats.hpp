#pragma once

#include <span>

namespace followup::stats {

// Upper quantile z such that P(|Z| <= z) = level.
double two_sided_z(double level);

double normal_cdf(double x);

// Two-sided p-value for a standard normal statistic.
double two_sided_p(double z);

// Upper tail of chi-square with one degree of freedom.
double chi2_1df_p(double chi2);

// Type 7 sample quantile (linear interpolation between order statistics).
// values need not be sorted. Throws InputError when empty.
double sample_quantile(std::span<const double> values, double p);

}  // namespace followup::stats
