#pragma once

#include <string>
#include <string_view>

#include "kknock/common.hpp"
#include "kknock/rng.hpp"

namespace kknock {

enum class KernelFamily { Laplacian, Gaussian, Cauchy };

/// Shift-invariant kernel normalized so that K(0) = 1.
///
///   Laplacian  K(d) = exp(-|d| / b)
///   Gaussian   K(d) = exp(-b^2 d^2 / 2)
///   Cauchy     K(d) = 1 / (1 + b^2 d^2)
struct KernelSpec {
  KernelFamily family = KernelFamily::Laplacian;
  double scale = 1.0;
};

/// Throws ConfigError unless scale is finite and positive.
KernelSpec make_kernel(KernelFamily family, double scale = 1.0);

double kernel_eval(const KernelSpec& spec, double x, double x_prime);

/// One draw from the kernel's spectral density p(w), where
/// K(d) = integral of p(w) cos(w d) dw.
double sample_frequency(const KernelSpec& spec, RngStream& rng);

std::string to_string(KernelFamily family);
KernelFamily parse_kernel_family(std::string_view name);

}  // namespace kknock
