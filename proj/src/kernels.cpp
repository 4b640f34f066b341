#include "kknock/kernels.hpp"

#include <cmath>
#include <numbers>

#include "kknock/common.hpp"

namespace kknock {

KernelSpec make_kernel(KernelFamily family, double scale) {
  if (!(std::isfinite(scale) && scale > 0.0)) {
    throw ConfigError("kernel scale must be a positive finite number");
  }
  return KernelSpec{family, scale};
}

double kernel_eval(const KernelSpec& spec, double x, double x_prime) {
  const double d = x - x_prime;
  const double b = spec.scale;
  switch (spec.family) {
    case KernelFamily::Laplacian:
      return std::exp(-std::abs(d) / b);
    case KernelFamily::Gaussian:
      return std::exp(-0.5 * b * b * d * d);
    case KernelFamily::Cauchy:
      return 1.0 / (1.0 + b * b * d * d);
  }
  return 0.0;
}

double sample_frequency(const KernelSpec& spec, RngStream& rng) {
  const double b = spec.scale;
  switch (spec.family) {
    case KernelFamily::Laplacian: {
      // Cauchy(0, 1/b) by the tangent transform.
      const double u = rng.uniform();
      return std::tan(std::numbers::pi * (u - 0.5)) / b;
    }
    case KernelFamily::Gaussian:
      return b * rng.normal();
    case KernelFamily::Cauchy: {
      // Laplace(0, b) by inverse CDF; u in (-1/2, 1/2).
      const double u = rng.uniform() - 0.5;
      const double mag = -b * std::log1p(-2.0 * std::abs(u));
      return u < 0.0 ? -mag : mag;
    }
  }
  return 0.0;
}

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::Laplacian:
      return "laplacian";
    case KernelFamily::Gaussian:
      return "gaussian";
    case KernelFamily::Cauchy:
      return "cauchy";
  }
  return "unknown";
}

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "laplacian") return KernelFamily::Laplacian;
  if (name == "gaussian") return KernelFamily::Gaussian;
  if (name == "cauchy") return KernelFamily::Cauchy;
  throw ConfigError("unknown kernel family '" + std::string(name) +
                    "' (expected laplacian, gaussian or cauchy)");
}

}  // namespace kknock
