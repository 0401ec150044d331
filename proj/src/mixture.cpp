#include "pspin/mixture.hpp"

#include <algorithm>
#include <cmath>

namespace pspin {

MixtureSpec validate_mixture(const std::vector<std::pair<int, double>>& raw) {
  if (raw.empty()) throw ValidationError("mixture: empty coefficient list");
  std::vector<std::pair<int, double>> coeffs = raw;
  std::sort(coeffs.begin(), coeffs.end());
  double sumsq = 0.0;
  for (size_t i = 0; i < coeffs.size(); ++i) {
    auto [p, c] = coeffs[i];
    if (p < 2) throw BadDegree("mixture: degree p = " + std::to_string(p) + " < 2");
    if (i > 0 && coeffs[i - 1].first == p)
      throw DuplicateDegree("mixture: duplicate degree p = " + std::to_string(p));
    if (!(c > 0.0))
      throw NonPositiveCoefficient("mixture: c_" + std::to_string(p) + " = " +
                                   std::to_string(c) + " must be > 0");
    sumsq += c * c;
  }
  if (std::abs(sumsq - 1.0) > 1e-12)
    throw NotNormalized("mixture: sum of c_p^2 = " + std::to_string(sumsq) +
                        " deviates from 1 by more than 1e-12");
  return MixtureSpec{std::move(coeffs)};
}

double xi(const MixtureSpec& spec, double s) {
  if (std::abs(s) > 1.0 + 1e-12)
    throw DomainError("xi: |s| = " + std::to_string(std::abs(s)) + " > 1");
  double acc = 0.0;
  for (auto& [p, c] : spec.coefficients) acc += c * c * std::pow(s, p);
  return acc;
}

MixtureSpec sk_mixture() { return validate_mixture({{2, 1.0}}); }

}  // namespace pspin
