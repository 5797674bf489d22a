#include "sfr/special_math.hpp"

#include <cmath>
#include <numbers>

#include "sfr/errors.hpp"

namespace sfr {
namespace {

// Crossover between the ascending series and the asymptotic expansion. At 13
// the largest series term is ~1e4 (cancellation error ~1e-12) and the smallest
// asymptotic term is ~1e-11.
constexpr double kSeriesLimit = 13.0;
constexpr int kMaxTerms = 200;

struct JY {
  double j;
  double y;
};

// Ascending series for J_n and Y_n, n in {0, 1}.
//   J0 = sum (-1)^k q^k / (k!)^2,                         q = x^2/4
//   Y0 = (2/pi)(ln(x/2) + g) J0 + (2/pi) sum (-1)^(k+1) H_k q^k / (k!)^2
//   J1 = (x/2) sum (-1)^k q^k / (k! (k+1)!)
//   Y1 = (2/pi)(ln(x/2) + g) J1 - 2/(pi x)
//        - (1/pi) (x/2) sum (-1)^k (H_k + H_{k+1}) q^k / (k! (k+1)!)
JY series(int order, double x) {
  constexpr double pi = std::numbers::pi;
  constexpr double gamma = std::numbers::egamma;
  const double q = 0.25 * x * x;
  double term = 1.0;  // q^k / (k! (k+n)!) with sign
  double harmonic = 0.0;  // H_k
  double sum_j = 0.0;
  double sum_y = 0.0;
  for (int k = 0; k < kMaxTerms; ++k) {
    if (k > 0) {
      term *= -q / (static_cast<double>(k) * static_cast<double>(k + order));
      harmonic += 1.0 / k;
    }
    sum_j += term;
    if (order == 0) {
      sum_y -= harmonic * term;
    } else {
      sum_y += (2.0 * harmonic + 1.0 / (k + 1)) * term;
    }
    if (std::abs(term) <= 1e-17 * std::abs(sum_j) && k > 2) break;
  }
  const double log_part = std::log(0.5 * x) + gamma;
  if (order == 0) {
    const double j0 = sum_j;
    return {j0, (2.0 / pi) * (log_part * j0 + sum_y)};
  }
  const double j1 = 0.5 * x * sum_j;
  return {j1, (2.0 / pi) * log_part * j1 - 2.0 / (pi * x) - (0.5 * x / pi) * sum_y};
}

// Hankel asymptotic expansion: J = A (P cos chi - Q sin chi), Y = A (P sin chi + Q cos chi),
// A = sqrt(2 / (pi x)), chi = x - (n/2 + 1/4) pi, summed until the terms stop decreasing.
JY asymptotic(int order, double x) {
  constexpr double pi = std::numbers::pi;
  const double mu = 4.0 * order * order;
  double p = 1.0;
  double q = 0.0;
  double term = 1.0;
  double prev = 1.0;
  for (int k = 1; k < kMaxTerms; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (k * 8.0 * x);
    const double mag = std::abs(term);
    if (mag > prev) break;
    // k = 1, 2, 3, 4, ... contribute +Q, -P, -Q, +P, ...
    switch (k % 4) {
      case 1: q += term; break;
      case 2: p -= term; break;
      case 3: q -= term; break;
      default: p += term; break;
    }
    if (mag < 1e-17) break;
    prev = mag;
  }
  const double amp = std::sqrt(2.0 / (pi * x));
  const double chi = x - (0.5 * order + 0.25) * pi;
  const double c = std::cos(chi);
  const double s = std::sin(chi);
  return {amp * (p * c - q * s), amp * (p * s + q * c)};
}

void check_order(int order) {
  if (order != 0 && order != 1) throw DomainError("bessel: only orders 0 and 1 are supported");
}

JY evaluate(int order, double x) { return x <= kSeriesLimit ? series(order, x) : asymptotic(order, x); }

double bessel_j_impl(int order, double x) {
  if (!std::isfinite(x)) throw DomainError("bessel: non-finite argument");
  if (x < 0.0) throw DomainError("bessel: negative argument");
  if (x == 0.0) return order == 0 ? 1.0 : 0.0;
  return evaluate(order, x).j;
}

double bessel_y_impl(int order, double x) {
  if (!std::isfinite(x)) throw DomainError("bessel: non-finite argument");
  if (!(x > 0.0)) throw DomainError("bessel Y: argument must be positive");
  return evaluate(order, x).y;
}

}  // namespace

double bessel(BesselKind kind, int order, double x) {
  check_order(order);
  return kind == BesselKind::J ? bessel_j_impl(order, x) : bessel_y_impl(order, x);
}

double bessel_j0(double x) { return bessel_j_impl(0, x); }
double bessel_j1(double x) { return bessel_j_impl(1, x); }
double bessel_y0(double x) { return bessel_y_impl(0, x); }
double bessel_y1(double x) { return bessel_y_impl(1, x); }

Complex hankel1(int order, double x) {
  check_order(order);
  if (!std::isfinite(x) || !(x > 0.0)) throw DomainError("hankel1: argument must be positive and finite");
  const JY v = evaluate(order, x);
  return {v.j, v.y};
}

}  // namespace sfr
