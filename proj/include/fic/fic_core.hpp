#pragma once

// Mono-dimensional Fractal Impedance Controller: the saturating spring
// profile, the divergence/convergence attractor and the phase detector.
// Everything here is per axis and stateless apart from the FicState value
// the caller threads through.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace fic {

enum class Phase { kDivergence = 0, kConvergence = 1 };

/// Hysteresis on |error| used by the phase detector (m).
inline constexpr double kPhaseDeadband = 1e-6;

template <typename Scalar>
class FicParams {
 public:
  /// Throws std::invalid_argument unless stiffness > 0, saturation_error > 0,
  /// 0 < onset_fraction < 1 and max_force > onset_fraction*stiffness*saturation_error.
  FicParams(Scalar stiffness, Scalar saturation_error, Scalar max_force,
            Scalar onset_fraction = Scalar(0.9))
      : stiffness_(stiffness),
        saturation_error_(saturation_error),
        max_force_(max_force),
        onset_fraction_(onset_fraction) {
    if (!(stiffness > 0) || !(saturation_error > 0))
      throw std::invalid_argument("FicParams: stiffness and saturation_error must be positive");
    if (!(onset_fraction > 0) || !(onset_fraction < 1))
      throw std::invalid_argument("FicParams: onset_fraction must lie in (0, 1)");
    onset_force_ = onset_fraction * stiffness * saturation_error;
    if (!(max_force > onset_force_))
      throw std::invalid_argument("FicParams: max_force must exceed onset_fraction*stiffness*saturation_error");
    force_span_ = max_force - onset_force_;
    saturation_width_ = (1 - onset_fraction) * saturation_error / (2 * std::numbers::pi_v<Scalar>);
    force_ceiling_ = std::nextafter(max_force, Scalar(0));
  }

  Scalar stiffness() const { return stiffness_; }
  Scalar saturation_error() const { return saturation_error_; }
  Scalar max_force() const { return max_force_; }
  Scalar onset_fraction() const { return onset_fraction_; }

  // Derived constants: F0, dF and S.
  Scalar onset_force() const { return onset_force_; }
  Scalar force_span() const { return force_span_; }
  Scalar saturation_width() const { return saturation_width_; }

  /// Error magnitude where the linear branch hands over to the tanh branch.
  Scalar onset_error() const { return onset_fraction_ * saturation_error_; }

  /// Largest representable force strictly below max_force.
  Scalar force_ceiling() const { return force_ceiling_; }

 private:
  Scalar stiffness_;
  Scalar saturation_error_;
  Scalar max_force_;
  Scalar onset_fraction_;
  Scalar onset_force_{};
  Scalar force_span_{};
  Scalar saturation_width_{};
  Scalar force_ceiling_{};
};

template <typename Scalar>
struct FicState {
  Phase phase = Phase::kDivergence;
  Scalar x_max = 0;        // signed peak latched at the last D->C switch
  Scalar prev_err = 0;
  Scalar running_max = 0;  // largest |error| in the current divergence phase
  Scalar running_min = 0;  // smallest |error| in the current convergence phase
  bool initialized = false;
};

/// Odd, monotone, saturating spring profile. Never reaches max_force.
template <typename Scalar>
Scalar force_profile(const FicParams<Scalar>& p, Scalar e) {
  const Scalar mag = std::abs(e);
  if (mag <= p.onset_error()) return p.stiffness() * e;
  const Scalar arg = (mag - p.saturation_error()) / p.saturation_width() + std::numbers::pi_v<Scalar>;
  Scalar f = p.force_span() / 2 * (std::tanh(arg) + 1) + p.onset_force();
  // tanh rounds to exactly 1 far from the onset; keep the bound strict.
  f = std::min(f, p.force_ceiling());
  return std::copysign(f, e);
}

/// Advances the divergence/convergence detector by one sample.
///
/// Convergence starts once |e| falls kPhaseDeadband below the peak of the
/// current divergence phase; divergence resumes once |e| climbs the same
/// margin above the convergence minimum. A sign change always starts a new
/// divergence cycle. Throws std::invalid_argument on non-finite input.
template <typename Scalar>
FicState<Scalar> update_phase(const FicState<Scalar>& s, Scalar e_new) {
  if (!std::isfinite(e_new)) throw std::invalid_argument("update_phase: non-finite error");
  const Scalar mag = std::abs(e_new);
  const Scalar eps = Scalar(kPhaseDeadband);
  FicState<Scalar> next = s;
  next.prev_err = e_new;

  if (!s.initialized) {
    next.phase = Phase::kDivergence;
    next.x_max = 0;
    next.running_max = mag;
    next.running_min = mag;
    next.initialized = true;
    return next;
  }

  Scalar sign_ref = s.prev_err;
  if (sign_ref == 0 && s.phase == Phase::kConvergence) sign_ref = s.x_max;
  if (e_new * sign_ref < 0) {
    next.phase = Phase::kDivergence;
    next.running_max = mag;
    next.running_min = mag;
    return next;
  }

  if (s.phase == Phase::kDivergence) {
    if (mag < s.running_max - eps) {
      next.phase = Phase::kConvergence;
      const Scalar sign_src = e_new != 0 ? e_new : s.prev_err;
      next.x_max = std::copysign(s.running_max, sign_src);
      next.running_min = mag;
    } else {
      next.running_max = std::max(s.running_max, mag);
    }
  } else {
    if (mag > s.running_min + eps) {
      next.phase = Phase::kDivergence;
      next.running_max = mag;
      next.running_min = mag;
    } else {
      next.running_min = std::min(s.running_min, mag);
    }
  }
  return next;
}

/// Attractor force for an error whose phase has already been updated.
template <typename Scalar>
Scalar fic_force(const FicParams<Scalar>& p, const FicState<Scalar>& s, Scalar e) {
  if (s.phase == Phase::kDivergence || s.x_max == 0) return force_profile(p, e);
  const Scalar peak_force = force_profile(p, s.x_max);
  const Scalar f = 2 * peak_force / s.x_max * (e - s.x_max / 2);
  return std::clamp(f, -p.force_ceiling(), p.force_ceiling());
}

namespace detail {

template <typename Scalar, typename F>
Scalar adaptive_simpson(const F& f, Scalar a, Scalar b, Scalar fa, Scalar fm, Scalar fb,
                        Scalar whole, Scalar tol, int depth) {
  const Scalar m = (a + b) / 2;
  const Scalar lm = (a + m) / 2;
  const Scalar rm = (m + b) / 2;
  const Scalar flm = f(lm);
  const Scalar frm = f(rm);
  const Scalar left = (m - a) / 6 * (fa + 4 * flm + fm);
  const Scalar right = (b - m) / 6 * (fm + 4 * frm + fb);
  const Scalar delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15 * tol) return left + right + delta / 15;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

}  // namespace detail

/// Energy stored in the spring profile between 0 and |e| (J).
template <typename Scalar>
Scalar stored_energy(const FicParams<Scalar>& p, Scalar e) {
  const Scalar mag = std::abs(e);
  const Scalar lin = std::min(mag, p.onset_error());
  Scalar energy = p.stiffness() / 2 * lin * lin;
  if (mag <= p.onset_error()) return energy;

  auto f = [&p](Scalar s) { return force_profile(p, s); };
  const Scalar a = p.onset_error();
  // Split at the tanh inflection so each panel sees at most one bend.
  const Scalar knee = p.saturation_error() - std::numbers::pi_v<Scalar> * p.saturation_width();
  auto integrate = [&](Scalar lo, Scalar hi) {
    if (hi <= lo) return Scalar(0);
    const Scalar flo = f(lo), fhi = f(hi), fmid = f((lo + hi) / 2);
    const Scalar whole = (hi - lo) / 6 * (flo + 4 * fmid + fhi);
    return detail::adaptive_simpson<Scalar>(f, lo, hi, flo, fmid, fhi, whole, Scalar(1e-13), 48);
  };
  energy += integrate(a, std::min(mag, knee)) + integrate(std::max(a, knee), mag);
  return energy;
}

/// Per-axis FIC acting on a fixed-size error vector.
template <typename Scalar, int Dim = 3>
class FicAttractor {
 public:
  using Vector = Eigen::Matrix<Scalar, Dim, 1>;

  explicit FicAttractor(FicParams<Scalar> params) : params_(params) {}

  /// Updates each axis' phase with `error` and returns the attractor force.
  Vector force(const Vector& error) {
    Vector out;
    for (int i = 0; i < Dim; ++i) {
      states_[i] = update_phase(states_[i], error[i]);
      out[i] = fic_force(params_, states_[i], error[i]);
    }
    return out;
  }

  void reset() { states_ = {}; }

  const FicParams<Scalar>& params() const { return params_; }
  const FicState<Scalar>& state(int axis) const { return states_[axis]; }

 private:
  FicParams<Scalar> params_;
  std::array<FicState<Scalar>, Dim> states_{};
};

}  // namespace fic
