#include "kr/stats.hpp"
#include "kr/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kr {

namespace {

// Series for P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 1000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for Q(a, x), valid for x >= a + 1.
double gamma_q_fraction(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double log_binomial_pmf(std::int64_t k, std::int64_t n, double p) {
  if (p <= 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return k == n ? 0.0 : -std::numeric_limits<double>::infinity();
  const auto kd = static_cast<double>(k);
  const auto nd = static_cast<double>(n);
  return std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0) +
         kd * std::log(p) + (nd - kd) * std::log1p(-p);
}

}  // namespace

double gamma_q(double a, double x) {
  if (!(a > 0.0)) throw ValidationError("a", "gamma_q: a must be > 0");
  if (x <= 0.0) return 1.0;
  if (x < a + 1.0) return std::max(0.0, 1.0 - gamma_p_series(a, x));
  return gamma_q_fraction(a, x);
}

double chi_square_sf(double statistic, int dof) {
  if (dof < 1) throw ValidationError("dof", "chi_square_sf: dof must be >= 1");
  return gamma_q(0.5 * dof, 0.5 * statistic);
}

double binomial_sf(std::int64_t k, std::int64_t n, double p) {
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;
  double sum = 0.0;
  for (std::int64_t i = k; i <= n; ++i) sum += std::exp(log_binomial_pmf(i, n, p));
  return std::min(1.0, sum);
}

double binomial_two_sided(std::int64_t k, std::int64_t n, double p) {
  const double observed = log_binomial_pmf(k, n, p);
  const double slack = 1e-7;
  double sum = 0.0;
  for (std::int64_t i = 0; i <= n; ++i) {
    const double lp = log_binomial_pmf(i, n, p);
    if (lp <= observed + std::log1p(slack)) sum += std::exp(lp);
  }
  return std::min(1.0, sum);
}

double nearest_rank(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  const auto rank = static_cast<std::size_t>(std::max(1.0, std::ceil(q * n)));
  return values[std::min(values.size(), rank) - 1];
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 == 1 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

}  // namespace kr
