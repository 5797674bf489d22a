#include "sfr/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "sfr/errors.hpp"

namespace sfr {
namespace {

void check_pair(std::span<const Complex> truth, std::span<const Complex> estimate) {
  if (truth.empty() || truth.size() != estimate.size()) {
    throw ShapeError("metrics: fields must be non-empty and of equal length");
  }
}

double squared_norm(std::span<const Complex> v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return s;
}

}  // namespace

double nmse_db(std::span<const Complex> truth, std::span<const Complex> estimate) {
  check_pair(truth, estimate);
  const double ref = squared_norm(truth);
  if (!(ref > 0.0)) throw DomainError("nmse_db: reference field is identically zero");
  double err = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) err += std::norm(truth[i] - estimate[i]);
  return 10.0 * std::log10(std::max(err / ref, kNmseFloor));
}

double ncc(std::span<const Complex> truth, std::span<const Complex> estimate) {
  check_pair(truth, estimate);
  const double nt2 = squared_norm(truth);
  const double ne2 = squared_norm(estimate);
  if (!(nt2 > 0.0) || !(ne2 > 0.0)) throw DomainError("ncc: zero-norm field");
  Complex inner{0.0, 0.0};
  for (std::size_t i = 0; i < truth.size(); ++i) inner += std::conj(estimate[i]) * truth[i];
  return std::min(1.0, std::abs(inner) / std::sqrt(ne2 * nt2));
}

}  // namespace sfr
