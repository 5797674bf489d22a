#pragma once

#include <span>

#include "sfr/special_math.hpp"

namespace sfr {

/// Ratio floor for nmse_db; an exact match reports -300 dB.
inline constexpr double kNmseFloor = 1e-30;

/// 10 log10(||p - p_hat||^2 / ||p||^2). Throws ShapeError on length mismatch
/// or empty input, DomainError when the truth is identically zero.
double nmse_db(std::span<const Complex> truth, std::span<const Complex> estimate);

/// |p_hat^H p| / (||p_hat|| ||p||), in [0, 1]. Throws DomainError on a zero-norm input.
double ncc(std::span<const Complex> truth, std::span<const Complex> estimate);

}  // namespace sfr
