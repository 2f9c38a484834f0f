#pragma once

#include <cstdint>
#include <vector>

namespace kr {

/// Regularized upper incomplete gamma Q(a, x) = Γ(a, x) / Γ(a).
double gamma_q(double a, double x);

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
double chi_square_sf(double statistic, int dof);

/// P(X >= k) for X ~ Binomial(n, p).
double binomial_sf(std::int64_t k, std::int64_t n, double p);

/// Two-sided exact binomial test: total probability of outcomes no more
/// likely than k.
double binomial_two_sided(std::int64_t k, std::int64_t n, double p);

/// Nearest-rank quantile of `values` (q in (0, 1]).
double nearest_rank(std::vector<double> values, double q);

double median(std::vector<double> values);

}  // namespace kr
