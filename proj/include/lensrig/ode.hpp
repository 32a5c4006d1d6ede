#pragma once

// Fixed-step classic RK4 on std::array states, plus bisection event location.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>

namespace lensrig {

template <std::size_t N>
using State = std::array<double, N>;

template <std::size_t N, class Rhs>
inline State<N> rk4_step(const Rhs& f, const State<N>& s, double h) {
  State<N> k1 = f(s), tmp;
  for (std::size_t i = 0; i < N; ++i) tmp[i] = s[i] + 0.5 * h * k1[i];
  State<N> k2 = f(tmp);
  for (std::size_t i = 0; i < N; ++i) tmp[i] = s[i] + 0.5 * h * k2[i];
  State<N> k3 = f(tmp);
  for (std::size_t i = 0; i < N; ++i) tmp[i] = s[i] + h * k3[i];
  State<N> k4 = f(tmp);
  State<N> out;
  for (std::size_t i = 0; i < N; ++i)
    out[i] = s[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

// Integrate from t=0 to t=t_end (either sign) with |step| <= h, splitting the
// final partial step exactly. Calls observe(t, state) after every step if given.
template <std::size_t N, class Rhs>
inline State<N> rk4_integrate(const Rhs& f, State<N> s, double t_end, double h,
                              const std::function<void(double, const State<N>&)>& observe = {}) {
  if (t_end == 0.0) return s;
  const double dir = t_end > 0 ? 1.0 : -1.0;
  h = std::abs(h);
  double t = 0.0;
  if (observe) observe(t, s);
  while (dir * (t_end - t) > 1e-15) {
    const double step = dir * std::min(h, dir * (t_end - t));
    s = rk4_step(f, s, step);
    t += step;
    if (observe) observe(t, s);
  }
  return s;
}

// Bisection on a continuous event function g over [t_lo, t_hi] with
// g(state(t_lo)) * g(state(t_hi)) <= 0. restart(t) must reproduce the state at
// parameter t. Returns the bracketing midpoint once |t_hi - t_lo| < tol.
template <std::size_t N>
inline double bisect_event(const std::function<State<N>(double)>& restart,
                           const std::function<double(const State<N>&)>& g,
                           double t_lo, double t_hi, double tol = 1e-10) {
  double g_lo = g(restart(t_lo));
  for (int it = 0; it < 200 && std::abs(t_hi - t_lo) > tol; ++it) {
    const double t_mid = 0.5 * (t_lo + t_hi);
    const double g_mid = g(restart(t_mid));
    if ((g_lo <= 0 && g_mid <= 0) || (g_lo > 0 && g_mid > 0)) {
      t_lo = t_mid;
      g_lo = g_mid;
    } else {
      t_hi = t_mid;
    }
  }
  return 0.5 * (t_lo + t_hi);
}

}  // namespace lensrig
