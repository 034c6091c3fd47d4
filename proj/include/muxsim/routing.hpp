#pragma once

#include <bit>
#include <string>

#include "muxsim/errors.hpp"

namespace muxsim {

// Switch-network configuration for one heralded bin. Loop i has length 2^i
// bin periods; bit i of loop_mask is set when the photon traverses loop i.
struct Route {
  unsigned loop_mask = 0;
  int n_loops = 0;
  int delay_bins = 0;
  int output_bin = 0;

  bool uses_loop(int i) const noexcept { return (loop_mask >> i) & 1u; }
  int loops_used() const noexcept { return std::popcount(loop_mask); }
};

inline int loops_for(int n_output_bins) {
  int loops = 0;
  while ((1 << loops) < n_output_bins) ++loops;
  return loops;
}

/// Delay a photon heralded in `herald_bin` into the last bin of the cycle.
/// The required delay is decomposed in binary over the available loops.
inline Route route_bin(int herald_bin, int n_output_bins, int n_loops) {
  if (n_output_bins < 1) throw routing_error("need at least one output bin");
  if (herald_bin < 0 || herald_bin >= n_output_bins)
    throw routing_error("herald bin " + std::to_string(herald_bin) + " outside [0, " +
                        std::to_string(n_output_bins) + ")");
  if (n_loops < 0 || n_loops > 30) throw routing_error("unsupported loop count");
  Route r;
  r.n_loops = n_loops;
  r.output_bin = n_output_bins - 1;
  r.delay_bins = r.output_bin - herald_bin;
  if (r.delay_bins >= (1 << n_loops))
    throw routing_error("delay of " + std::to_string(r.delay_bins) + " bins not representable with " +
                        std::to_string(n_loops) + " loops");
  r.loop_mask = static_cast<unsigned>(r.delay_bins);
  return r;
}

inline Route route_bin(int herald_bin, int n_output_bins) {
  return route_bin(herald_bin, n_output_bins, loops_for(n_output_bins));
}

}  // namespace muxsim
