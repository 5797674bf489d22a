#pragma once

#include <complex>

namespace sfr {

using Complex = std::complex<double>;

enum class BesselKind { J, Y };

/// Cylinder Bessel functions of integer order 0 or 1 for real arguments.
///
/// Accurate to about 1e-11 absolute over (0, 500]. Small arguments use the
/// ascending series, large ones the Hankel asymptotic expansion in
/// amplitude/phase form. Throws DomainError for non-finite x, for x < 0,
/// for x <= 0 with kind Y, and for orders other than 0 and 1.
double bessel(BesselKind kind, int order, double x);

double bessel_j0(double x);
double bessel_j1(double x);
double bessel_y0(double x);
double bessel_y1(double x);

/// H_n^(1)(x) = J_n(x) + j Y_n(x), order 0 or 1, x > 0.
Complex hankel1(int order, double x);

}  // namespace sfr
