#pragma once

#include <vector>

#include "kinetic_layer/force.hpp"

namespace kinetic_layer {

struct CharPoint {
  double eta = 0.0;
  double phi = 0.0;
};

/// Branch of the (η, φ) phase plane by direction and energy.
///   I: sinφ > 0, |E| ≤ 1    II: sinφ > 0, |E| > 1
///   III: sinφ < 0, |E| > 1  IV: sinφ < 0, |E| ≤ 1
enum class CaseTag { I, II, III, IV };

const char* to_string(CaseTag tag);

/// Angle in (0, π) reached at η′ by the characteristic through (η, φ).
/// The opposite branch at η′ has angle −φ′.
double phi_prime(const ForceProfile& profile, double phi, double eta, double eta_target);

/// sin²φ′ at η′ along the characteristic through (η, φ), free of cancellation near
/// turning points.
double sin_squared_along(const ForceProfile& profile, double phi, double eta,
                         double eta_target);

/// η⁺ where the characteristic through (η, φ) turns (e^{V(η⁺)} = |E|).
double turning_point(const ForceProfile& profile, double eta, double phi);

/// ∫_{η_lo}^{η_hi} (1 + λ)/sinφ′(ξ) dξ along the characteristic through (η_hi, φ).
/// Divided by 1 + λ this is the arc length between the two heights.
double attenuation(const ForceProfile& profile, double eta_hi, double eta_lo, double phi,
                   double penalty = 0.0);

CaseTag classify(const ForceProfile& profile, const CharPoint& point);

/// Samples the constant-energy curve through `start` restricted to 0 ≤ η ≤ eta_max.
/// A curve with a turning point is emitted through it and continued on the other branch.
std::vector<CharPoint> trace_curve(const ForceProfile& profile, const CharPoint& start,
                                   double eta_max, int samples);

/// Forward integration in arc length of dη/ds = sinφ, dφ/ds = −F cosφ with classical RK4
/// and no energy projection. Stops early if η leaves [0, ∞).
std::vector<CharPoint> integrate_characteristic(const ForceProfile& profile,
                                                const CharPoint& start, double arc_length,
                                                double step);

}  // namespace kinetic_layer
