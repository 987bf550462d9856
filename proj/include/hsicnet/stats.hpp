#pragma once

#include <cstddef>
#include <vector>

namespace hsicnet::stats {

// Regularized incomplete beta I_x(a, b) via the standard continued fraction.
double incomplete_beta(double a, double b, double x);

// Student-t CDF P(T <= t) with df degrees of freedom.
double t_cdf(double t, std::size_t df);

// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> ranks_average_ties(const std::vector<double>& x);

// Spearman rank correlation (Pearson over tie-averaged ranks). Degenerate
// inputs (constant vector) return 0.
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

// log C(n, k)
double log_choose(std::size_t n, std::size_t k);

// Binomial pmf P(X = k), n trials, success probability p.
double binomial_pmf(std::size_t k, std::size_t n, double p);

}  // namespace hsicnet::stats
