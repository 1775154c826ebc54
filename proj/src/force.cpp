#include "kinetic_layer/force.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss.hpp>

#include "kinetic_layer/errors.hpp"
#include "kinetic_layer/grids.hpp"

namespace kinetic_layer {

namespace {

void require_nonnegative(double eta, const char* what) {
  if (!(eta >= 0.0)) throw DomainError(std::string(what) + ": eta must be nonnegative");
}

}  // namespace

ForceProfile::ForceProfile(Kind kind, double radius, double epsilon, double width)
    : kind_(kind), radius_(radius), epsilon_(epsilon), width_(width) {}

ForceProfile ForceProfile::flat() { return ForceProfile(Kind::flat, 0.0, 0.0, 0.0); }

ForceProfile ForceProfile::inner(double radius, double epsilon, double width) {
  if (!(radius > 0.0) || !(epsilon > 0.0) || !(width > 0.0)) {
    throw DomainError("ForceProfile::inner: radius, epsilon and width must be positive");
  }
  return ForceProfile(Kind::inner, radius, epsilon, width);
}

ForceProfile ForceProfile::outer(double radius, double epsilon, double width) {
  if (!(radius > 0.0) || !(epsilon > 0.0) || !(width > 0.0)) {
    throw DomainError("ForceProfile::outer: radius, epsilon and width must be positive");
  }
  if (!(0.75 * width < radius)) {
    throw DomainError("ForceProfile::outer: force support reaches the centre");
  }
  return ForceProfile(Kind::outer, radius, epsilon, width);
}

double ForceProfile::force(double eta) const {
  require_nonnegative(eta, "force");
  if (is_flat()) return 0.0;
  const double mu = epsilon_ * eta;
  const double s = orientation();
  return -s * epsilon_ * cutoff_psi(mu, width_) / (radius_ + s * mu);
}

double ForceProfile::scaled_integral(double a, double b) const {
  const double s = orientation();
  const double plateau = 0.5 * width_;
  const double end = 0.75 * width_;
  double total = 0.0;
  // ψ ≡ 1 part in closed form.
  const double pa = std::min(a, plateau);
  const double pb = std::min(b, plateau);
  if (pb > pa) total += s * std::log1p(s * (pb - pa) / (radius_ + s * pa));
  // Smoothstep ramp by Gauss–Legendre; the integrand is a cubic over a linear factor.
  const double ra = std::clamp(a, plateau, end);
  const double rb = std::clamp(b, plateau, end);
  if (rb > ra) {
    auto integrand = [&](double m) { return cutoff_psi(m, width_) / (radius_ + s * m); };
    total += boost::math::quadrature::gauss<double, 20>::integrate(integrand, ra, rb);
  }
  return total;
}

double ForceProfile::potential(double eta) const {
  require_nonnegative(eta, "potential");
  if (is_flat()) return 0.0;
  return orientation() * scaled_integral(0.0, epsilon_ * eta);
}

double ForceProfile::potential_difference(double a, double b) const {
  require_nonnegative(a, "potential_difference");
  require_nonnegative(b, "potential_difference");
  if (is_flat() || a == b) return 0.0;
  if (b < a) return -potential_difference(b, a);
  return orientation() * scaled_integral(epsilon_ * a, epsilon_ * b);
}

double ForceProfile::energy(double eta, double phi) const {
  return std::cos(phi) * std::exp(potential(eta));
}

double ForceProfile::support_end() const {
  if (is_flat()) return std::numeric_limits<double>::infinity();
  return 0.75 * width_ / epsilon_;
}

double ForceProfile::potential_limit() const {
  if (is_flat()) return 0.0;
  return potential(support_end());
}

double ForceProfile::inverse_potential(double v) const {
  if (is_flat()) {
    if (v == 0.0) return 0.0;
    throw DomainError("inverse_potential: flat potential only takes the value 0");
  }
  const double s = orientation();
  const double limit = potential_limit();
  // Work with the increasing quantity s·V.
  const double target = s * v;
  const double top = s * limit;
  if (target < 0.0 || target > top * (1.0 + 1e-14) + 1e-300) {
    throw DomainError("inverse_potential: value outside the range of V");
  }
  const double plateau_eta = 0.5 * width_ / epsilon_;
  const double plateau_value = s * potential(plateau_eta);
  if (target <= plateau_value) {
    // V = ln((R + sμ)/R) on the plateau.
    return s * radius_ * std::expm1(v) / epsilon_;
  }
  if (target >= top) return support_end();
  double lo = plateau_eta;
  double hi = support_end();
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (s * potential(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double eta = 0.5 * (lo + hi);
  const double slope = -s * force(eta);
  if (slope > 0.0) {
    const double polished = eta - (s * potential(eta) - target) / slope;
    if (polished >= lo && polished <= hi) eta = polished;
  }
  return eta;
}

}  // namespace kinetic_layer
