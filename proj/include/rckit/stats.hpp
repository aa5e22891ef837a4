#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rckit {

// Inverse standard-normal CDF, Wichura's AS 241 (PPND16). Absolute error
// below 1e-9 across (0,1); does not depend on platform libm behaviour.
double norm_quantile(double p);

// Regularized incomplete beta I_x(a,b) by continued fraction.
double inc_beta(double a, double b, double x);

// Upper-tail p-value of an F statistic with (d1, d2) degrees of freedom.
double f_survival(double f, double d1, double d2);

double mean(std::span<const double> v);
// Unbiased (n-1) standard deviation, computed with Welford accumulation.
double sd(std::span<const double> v);
double median(std::vector<double> v); // by value: sorts a copy
// Median absolute deviation scaled by 1.4826 (consistent for the normal sd).
double mad(const std::vector<double>& v);

// Order statistic at 1-based rank ceil(n*q) of the sorted sample.
double percentile(std::vector<double> v, double q);

// Pearson correlation.
double correlation(std::span<const double> x, std::span<const double> y);

} // namespace rckit
