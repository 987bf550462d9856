#include <doctest.h>

#include <cmath>
#include <vector>

#include "hsicnet/error.hpp"
#include "hsicnet/stats.hpp"

using namespace hsicnet;
using namespace hsicnet::stats;

TEST_CASE("incomplete beta handles edges and the uniform case") {
  CHECK(incomplete_beta(1.0, 1.0, 0.37) == doctest::Approx(0.37).epsilon(1e-12));
  CHECK(incomplete_beta(2.5, 1.5, 0.0) == 0.0);
  CHECK(incomplete_beta(2.5, 1.5, 1.0) == 1.0);
  // complement symmetry
  for (double x : {0.1, 0.3, 0.62, 0.9}) {
    double lhs = incomplete_beta(2.0, 3.5, x);
    double rhs = 1.0 - incomplete_beta(3.5, 2.0, 1.0 - x);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
  CHECK_THROWS_AS(incomplete_beta(0.0, 1.0, 0.5), Error);
  CHECK_THROWS_AS(incomplete_beta(1.0, 1.0, 1.5), Error);
}

TEST_CASE("t CDF matches the df=2 closed form") {
  // F(t) = 1/2 + t / (2 sqrt(2 + t^2)) for two degrees of freedom
  for (double t : {-5.0, -1.0, -0.2, 0.0, 0.5, 1.0, 3.4641016151377544, 10.0}) {
    double expect = 0.5 + t / (2.0 * std::sqrt(2.0 + t * t));
    CHECK(t_cdf(t, 2) == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("t CDF matches the df=1 Cauchy form and the normal limit") {
  for (double t : {-2.0, -0.5, 0.0, 1.0, 4.0}) {
    double expect = 0.5 + std::atan(t) / M_PI;
    CHECK(t_cdf(t, 1) == doctest::Approx(expect).epsilon(1e-10));
  }
  CHECK(t_cdf(1.96, 100000) == doctest::Approx(0.975).epsilon(2e-3));
  CHECK_THROWS_AS(t_cdf(1.0, 0), Error);
}

TEST_CASE("average ranks share tie groups") {
  CHECK(ranks_average_ties({10, 20, 20, 30}) ==
        std::vector<double>{1.0, 2.5, 2.5, 4.0});
  CHECK(ranks_average_ties({3, 1, 2}) == std::vector<double>{3.0, 1.0, 2.0});
  CHECK(ranks_average_ties({5, 5, 5}) == std::vector<double>{2.0, 2.0, 2.0});
}

TEST_CASE("spearman correlation tracks monotone order") {
  std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> inc{10, 20, 30, 40, 50};
  std::vector<double> dec{9, 7, 5, 3, 1};
  CHECK(spearman_rho(x, inc) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(spearman_rho(x, dec) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(spearman_rho({1, 2, 3}, {3, 1, 2}) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(spearman_rho(x, {7, 7, 7, 7, 7}) == 0.0);
  CHECK_THROWS_AS(spearman_rho({1, 2}, {1, 2, 3}), Error);
  CHECK_THROWS_AS(spearman_rho({1}, {2}), Error);
}

TEST_CASE("log choose and binomial pmf against exact values") {
  CHECK(std::exp(log_choose(10, 6)) == doctest::Approx(210.0).epsilon(1e-9));
  CHECK(std::exp(log_choose(5, 0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(log_choose(3, 4), Error);

  CHECK(binomial_pmf(3, 10, 0.5) == doctest::Approx(120.0 / 1024.0).epsilon(1e-12));
  CHECK(binomial_pmf(0, 4, 0.0) == 1.0);
  CHECK(binomial_pmf(1, 4, 0.0) == 0.0);
  CHECK(binomial_pmf(4, 4, 1.0) == 1.0);
  CHECK(binomial_pmf(9, 4, 0.3) == 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k <= 12; ++k) total += binomial_pmf(k, 12, 0.37);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(binomial_pmf(1, 2, 1.5), Error);
}
