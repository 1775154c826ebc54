#include "kinetic_layer/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kinetic_layer/errors.hpp"
#include "kinetic_layer/grids.hpp"

namespace kinetic_layer {

const char* to_string(CaseTag tag) {
  switch (tag) {
    case CaseTag::I: return "I";
    case CaseTag::II: return "II";
    case CaseTag::III: return "III";
    case CaseTag::IV: return "IV";
  }
  return "?";
}

double phi_prime(const ForceProfile& profile, double phi, double eta, double eta_target) {
  const double arg = std::cos(phi) * std::exp(profile.potential_difference(eta_target, eta));
  if (std::abs(arg) > 1.0 + 1e-13) {
    throw UnreachableError("phi_prime: characteristic does not reach the requested height");
  }
  return std::acos(std::clamp(arg, -1.0, 1.0));
}

double sin_squared_along(const ForceProfile& profile, double phi, double eta,
                         double eta_target) {
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  // sin²φ′ = sin²φ − cos²φ·(e^{2(V(η) − V(η′))} − 1)
  const double dv = profile.potential_difference(eta_target, eta);
  return s * s - c * c * std::expm1(2.0 * dv);
}

double turning_point(const ForceProfile& profile, double eta, double phi) {
  if (eta < 0.0) throw DomainError("turning_point: eta must be nonnegative");
  const double e = std::abs(profile.energy(eta, phi));
  if (e < 1.0) throw NoTurningError("turning_point: |E| < 1, the characteristic reaches the wall");
  if (profile.kind() != ForceProfile::Kind::inner) return 0.0;
  const double v = std::min(std::log(e), profile.potential_limit());
  return std::min(profile.inverse_potential(v), eta);
}

namespace {

// Height where a convex-side curve with energy |E| < 1 turns back toward the wall, or −1.
double upper_turning(const ForceProfile& profile, double abs_energy) {
  if (profile.kind() != ForceProfile::Kind::outer || abs_energy <= 0.0) return -1.0;
  const double v = std::log(abs_energy);
  if (v <= profile.potential_limit() || v > 0.0) return -1.0;
  return profile.inverse_potential(v);
}

}  // namespace

double attenuation(const ForceProfile& profile, double eta_hi, double eta_lo, double phi,
                   double penalty) {
  if (eta_lo < 0.0 || eta_hi < eta_lo) {
    throw DomainError("attenuation: need 0 <= eta_lo <= eta_hi");
  }
  if (penalty < 0.0) throw DomainError("attenuation: penalty must be nonnegative");
  if (eta_hi == eta_lo) return 0.0;
  const double scale = 1.0 + penalty;
  if (profile.is_flat()) {
    const double s = std::abs(std::sin(phi));
    if (s == 0.0) throw GrazingError("attenuation: grazing direction on a flat profile");
    return scale * (eta_hi - eta_lo) / s;
  }
  if (sin_squared_along(profile, phi, eta_hi, eta_lo) < -1e-13) {
    throw UnreachableError("attenuation: segment not covered by the characteristic");
  }
  const double abs_energy = std::abs(profile.energy(eta_hi, phi));

  // sin²φ′ is smallest at one end of the segment: the lower end on the concave side, the
  // upper end on the convex side. Writing ξ = base ± t² around that end (or around the
  // turning point beyond it) turns the 1/√ behaviour into a smooth integrand.
  const bool lower = profile.kind() == ForceProfile::Kind::inner;
  double base;
  double ref_eta = eta_hi;
  double ref_phi = phi;
  if (lower) {
    base = eta_lo;
    if (abs_energy >= 1.0) {
      base = std::min(turning_point(profile, eta_hi, phi), eta_lo);
      ref_eta = base;
      ref_phi = std::cos(phi) >= 0.0 ? 0.0 : kPi;
    }
  } else {
    base = eta_hi;
    const double top = upper_turning(profile, abs_energy);
    if (top >= 0.0) {
      base = std::max(top, eta_hi);
      ref_eta = base;
      ref_phi = std::cos(phi) >= 0.0 ? 0.0 : kPi;
    }
  }
  auto to_eta = [&](double t) { return lower ? base + t * t : base - t * t; };
  auto integrand = [&](double t) {
    const double s2 = sin_squared_along(profile, ref_phi, ref_eta, to_eta(t));
    if (!(s2 > 0.0)) return 0.0;
    return 2.0 * t / std::sqrt(s2);
  };
  auto to_t = [&](double xi) { return std::sqrt(std::max(lower ? xi - base : base - xi, 0.0)); };

  std::vector<double> cuts{to_t(eta_lo), to_t(eta_hi)};
  for (double b : {0.5 * profile.width() / profile.epsilon(), profile.support_end()}) {
    if (b > eta_lo && b < eta_hi) cuts.push_back(to_t(b));
  }
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    if (cuts[k + 1] <= cuts[k]) continue;
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, cuts[k], cuts[k + 1], 15, 1e-13);
  }
  return scale * total;
}

CaseTag classify(const ForceProfile& profile, const CharPoint& point) {
  const double s = std::sin(point.phi);
  if (s == 0.0) throw GrazingError("classify: sinφ = 0");
  const bool steep = std::abs(profile.energy(point.eta, point.phi)) <= 1.0;
  if (s > 0.0) return steep ? CaseTag::I : CaseTag::II;
  return steep ? CaseTag::IV : CaseTag::III;
}

std::vector<CharPoint> trace_curve(const ForceProfile& profile, const CharPoint& start,
                                   double eta_max, int samples) {
  if (samples < 2) throw DomainError("trace_curve: need at least two samples");
  if (start.eta < 0.0 || eta_max < start.eta) {
    throw DomainError("trace_curve: need 0 <= start.eta <= eta_max");
  }
  const double c = std::cos(start.phi);
  const double e = profile.energy(start.eta, start.phi);
  const bool upper = std::sin(start.phi) >= 0.0;
  auto angle_at = [&](double xi, bool upper_branch) {
    const double a = phi_prime(profile, start.phi, start.eta, xi);
    return upper_branch ? a : -a;
  };
  std::vector<CharPoint> out;
  out.reserve(static_cast<std::size_t>(samples));

  if (profile.is_flat() || std::abs(c) < 1e-300) {
    for (int i = 0; i < samples; ++i) {
      out.push_back({eta_max * i / (samples - 1), start.phi});
    }
    return out;
  }

  // Admissible heights form one interval [lo, hi] because V is monotone.
  double lo = 0.0;
  double hi = eta_max;
  bool turn_low = false;
  bool turn_high = false;
  if (profile.kind() == ForceProfile::Kind::inner) {
    if (std::abs(e) >= 1.0) {
      lo = turning_point(profile, start.eta, start.phi);
      turn_low = true;
    }
  } else {
    const double top = upper_turning(profile, std::abs(e));
    if (top >= 0.0 && top < eta_max) {
      hi = top;
      turn_high = true;
    }
  }

  auto fill = [&](double a, double b, int n, bool upper_branch, bool skip_first) {
    for (int i = skip_first ? 1 : 0; i < n; ++i) {
      const double xi = a + (b - a) * i / (n - 1);
      out.push_back({xi, angle_at(xi, upper_branch)});
    }
  };

  if (turn_low) {
    const int first = samples / 2 + 1;
    const int second = samples - first + 1;
    fill(hi, lo, first, false, false);
    fill(lo, hi, std::max(second, 2), true, true);
    out.back().eta = hi;
  } else if (turn_high) {
    const int first = samples / 2 + 1;
    const int second = samples - first + 1;
    fill(lo, hi, first, true, false);
    fill(hi, lo, std::max(second, 2), false, true);
  } else {
    fill(lo, hi, samples, upper, false);
  }
  return out;
}

std::vector<CharPoint> integrate_characteristic(const ForceProfile& profile,
                                                const CharPoint& start, double arc_length,
                                                double step) {
  if (!(step > 0.0) || arc_length < 0.0) {
    throw DomainError("integrate_characteristic: need step > 0 and arc_length >= 0");
  }
  auto rhs = [&](double eta, double phi) {
    const double f = profile.force(std::max(eta, 0.0));
    return std::pair{std::sin(phi), -f * std::cos(phi)};
  };
  std::vector<CharPoint> path{start};
  double eta = start.eta;
  double phi = start.phi;
  const int steps = static_cast<int>(std::ceil(arc_length / step));
  const double h = steps > 0 ? arc_length / steps : 0.0;
  for (int n = 0; n < steps; ++n) {
    const auto [a1, b1] = rhs(eta, phi);
    const auto [a2, b2] = rhs(eta + 0.5 * h * a1, phi + 0.5 * h * b1);
    const auto [a3, b3] = rhs(eta + 0.5 * h * a2, phi + 0.5 * h * b2);
    const auto [a4, b4] = rhs(eta + h * a3, phi + h * b3);
    eta += h * (a1 + 2.0 * a2 + 2.0 * a3 + a4) / 6.0;
    phi += h * (b1 + 2.0 * b2 + 2.0 * b3 + b4) / 6.0;
    if (eta < 0.0) break;
    path.push_back({eta, phi});
  }
  return path;
}

}  // namespace kinetic_layer
