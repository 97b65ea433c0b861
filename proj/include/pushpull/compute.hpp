// Copyright 2026 The pushpull Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Per-device computation latency: Gamma-distributed cycles per bit, the
// log(1/eps) local-iteration count, and the Hoeffding-style bound on the
// average local training latency.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "pushpull/rng.hpp"

namespace pushpull {

struct ComputeProfile {
  double data_bits = 1.0;       // D_k
  double frequency_hz = 1.0;    // f_k, cycles per second
  double cycles_per_bit = 1.0;  // c_k, most recent draw
  double gamma_shape = 2.0;     // kappa
  double gamma_scale = 1.0;     // beta

  void validate() const {
    if (!(data_bits > 0 && frequency_hz > 0 && cycles_per_bit > 0 && gamma_shape > 0 &&
          gamma_scale > 0))
      throw std::invalid_argument("compute profile: all fields must be strictly positive");
  }
};

inline double sample_cycles(double shape, double scale, std::uint64_t seed) {
  if (!(shape > 0.0) || !(scale > 0.0))
    throw std::invalid_argument("sample_cycles: Gamma shape and scale must be positive (got " +
                                std::to_string(shape) + ", " + std::to_string(scale) + ")");
  Rng rng = make_rng(seed, Stream::compute);
  std::gamma_distribution<double> g(shape, scale);
  double c = g(rng);
  // The Gamma law has no mass at 0, but a floating-point draw can underflow.
  return c > 0.0 ? c : std::numeric_limits<double>::min();
}

// I_l(eps) = ceil(p_scale * ln(1/eps)), at least one iteration.
inline int local_iterations(double epsilon, double p_scale) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("local_iterations: local accuracy epsilon must lie in (0, 1), got " +
                                std::to_string(epsilon));
  if (!(p_scale > 0.0)) throw std::invalid_argument("local_iterations: p_scale must be positive");
  const double x = p_scale * std::log(1.0 / epsilon);
  // Absorb representation error so that e.g. ln(e^3) * 2 still yields 6.
  const double r = std::round(x);
  const double v = std::abs(x - r) < 1e-9 * std::max(1.0, r) ? r : std::ceil(x);
  return std::max(1, static_cast<int>(v));
}

// T_comp = I_l(eps) * D_k * c_k / f_k, in seconds.
inline double local_latency(const ComputeProfile& profile, double epsilon, double p_scale) {
  profile.validate();
  return local_iterations(epsilon, p_scale) * profile.data_bits * profile.cycles_per_bit /
         profile.frequency_hz;
}

// Wilson-Hilferty approximation to the Gamma median.
inline double gamma_median(double shape, double scale) {
  const double a = 1.0 - 1.0 / (9.0 * shape);
  return shape * scale * a * a * a;
}

struct LatencyBoundInputs {
  std::vector<double> latencies;  // T_1..T_K, seconds
  double epsilon = 0.1;           // local accuracy target
  double theta = 0.9;             // global accuracy target
  double p = 1.0;
  double q = 1.0;
  double frame_seconds = 1.0;     // T_F
  double time_budget = 1.0;       // T_max
};

struct LatencyBound {
  double value = 0.0;
  double mean_latency = 0.0;
  double correction = 0.0;
  double log_inv_h = 0.0;
  std::size_t clamped = 0;  // latencies moved into [p ln(1/eps), 2 T_F]
};

// Clamps every latency into [p ln(1/eps), 2 T_F]. Idempotent.
inline std::size_t clamp_latencies(std::vector<double>& latencies, double p, double epsilon,
                                   double frame_seconds) {
  const double lo = p * std::log(1.0 / epsilon), hi = 2.0 * frame_seconds;
  std::size_t moved = 0;
  for (auto& t : latencies) {
    const double c = std::clamp(t, lo, hi);
    if (c != t) ++moved;
    t = c;
  }
  return moved;
}

// Right-hand side of the local-latency bound:
//   mean(T_k) + ln(1/eps^2) (2q - p(1-theta)) sqrt(ln(1/h) / 2),
//   h = exp(-2 T_max^2 / (K (2 T_F - p ln(1/eps))^2)).
// Latencies are clamped first. A nonpositive correction (2q <= p(1-theta)) is
// computed and returned as is.
inline LatencyBound hoeffding_bound(const LatencyBoundInputs& in) {
  if (in.latencies.empty()) throw std::invalid_argument("hoeffding_bound: no latencies given");
  if (!(in.epsilon > 0.0 && in.epsilon < 1.0))
    throw std::invalid_argument("hoeffding_bound: epsilon must lie in (0, 1)");
  if (!(in.theta > 0.0 && in.theta < 1.0))
    throw std::invalid_argument("hoeffding_bound: theta must lie in (0, 1)");
  if (!(in.p > 0.0) || !(in.q > 0.0))
    throw std::invalid_argument("hoeffding_bound: p and q must be positive");
  if (!(in.time_budget > 0.0))
    throw std::invalid_argument("hoeffding_bound: time budget must be positive");
  const double log_inv_eps = std::log(1.0 / in.epsilon);
  const double span = 2.0 * in.frame_seconds - in.p * log_inv_eps;
  if (std::abs(span) < 1e-12)
    throw std::invalid_argument("hoeffding_bound: 2 T_F equals p ln(1/eps); the bound is undefined");
  if (span < 0.0)
    throw std::invalid_argument("hoeffding_bound: 2 T_F must exceed p ln(1/eps) (latency interval is empty)");

  LatencyBound out;
  std::vector<double> t = in.latencies;
  out.clamped = clamp_latencies(t, in.p, in.epsilon, in.frame_seconds);
  const double k = static_cast<double>(t.size());
  for (double v : t) out.mean_latency += v;
  out.mean_latency /= k;
  out.log_inv_h = 2.0 * in.time_budget * in.time_budget / (k * span * span);
  out.correction = std::log(1.0 / (in.epsilon * in.epsilon)) *
                   (2.0 * in.q - in.p * (1.0 - in.theta)) * std::sqrt(out.log_inv_h / 2.0);
  out.value = out.mean_latency + out.correction;
  return out;
}

}  // namespace pushpull
