#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "muxsim/apparatus.hpp"
#include "muxsim/figures.hpp"
#include "muxsim/mux.hpp"

using namespace muxsim;

TEST(Routing, EveryBinReachesTheOutputSlot) {
  for (int n : {1, 2, 3, 4, 8, 16}) {
    std::set<unsigned> masks;
    for (int h = 0; h < n; ++h) {
      const Route r = route_bin(h, n);
      EXPECT_EQ(r.output_bin, n - 1);
      int delay = 0;
      for (int i = 0; i < r.n_loops; ++i)
        if (r.uses_loop(i)) delay += 1 << i;
      EXPECT_EQ(h + delay, r.output_bin);
      EXPECT_TRUE(masks.insert(r.loop_mask).second);
    }
  }
  EXPECT_EQ(route_bin(3, 4).loops_used(), 0);
  EXPECT_EQ(route_bin(0, 4).loops_used(), 2);
}

TEST(Routing, RejectsUnroutableBins) {
  EXPECT_THROW(route_bin(4, 4), routing_error);
  EXPECT_THROW(route_bin(-1, 4), routing_error);
  EXPECT_THROW(route_bin(0, 0), routing_error);
  EXPECT_THROW(route_bin(0, 8, 2), routing_error);
}

TEST(SwitchNetwork, PathTransmission) {
  const SwitchNetwork n;
  EXPECT_NEAR(n.path_transmission(route_bin(3, 4)), std::pow(10, -0.4), 1e-15);
  EXPECT_NEAR(n.path_transmission(route_bin(0, 4)), std::pow(10, -0.4) * 0.95 * 0.95, 1e-15);
  SwitchNetwork flat;
  flat.path_loss_db = 3.0;
  EXPECT_NEAR(flat.path_transmission(route_bin(0, 4)), std::pow(10, -0.3), 1e-15);
}

TEST(Priority, MatchesSubsetEnumeration) {
  const auto t = apparatus::topology();
  for (double p : {1.0, 10.0, 60.0}) {
    std::vector<BinProbs> bins;
    for (const auto& b : t.bins) bins.push_back(bin_probs(t, b, p));
    const MuxProbs m = compose_priority(bins);
    const std::size_t n = bins.size();
    double trig = 0, pc = 0, pa = 0;
    for (unsigned s = 1; s < (1u << n); ++s) {
      double w = 1;
      for (std::size_t i = 0; i < n; ++i) w *= (s >> i) & 1u ? bins[i].p_trig : 1 - bins[i].p_trig;
      const std::size_t first = static_cast<std::size_t>(__builtin_ctz(s));
      trig += w;
      pc += w * bins[first].p_c / bins[first].p_trig;
      pa += w * bins[first].p_a / bins[first].p_trig;
    }
    EXPECT_NEAR(m.p_trig, trig, 1e-14);
    EXPECT_NEAR(m.p_c, pc, 1e-12 * pc);
    EXPECT_NEAR(m.p_a, pa, 1e-12 * pa);
  }
}

TEST(Priority, ForwardPassMatchesPrintedNesting) {
  const auto t = pass_subset(apparatus::topology(), 1);
  const double p = 7.0;
  std::vector<BinProbs> b;
  for (const auto& bin : t.bins) b.push_back(bin_probs(t, bin, p));
  const double pc = b[0].p_c + (1 - b[0].p_trig) * (b[1].p_c + (1 - b[1].p_trig) * (b[2].p_c + (1 - b[2].p_trig) * b[3].p_c));
  const double pa = b[0].p_a + (1 - b[0].p_trig) * (b[1].p_a + (1 - b[1].p_trig) * (b[2].p_a + (1 - b[2].p_trig) * b[3].p_a));
  const MuxProbs m = mux_probs(t, p);
  EXPECT_NEAR(m.p_c, pc, 1e-15);
  EXPECT_NEAR(m.p_a, pa, 1e-15);
  EXPECT_NEAR(m.p_trig, 1 - (1 - b[0].p_trig) * (1 - b[1].p_trig) * (1 - b[2].p_trig) * (1 - b[3].p_trig), 1e-15);
}

TEST(Priority, ReturnPassAccidentalPrintedIndicesDiffer) {
  // The printed return-pass accidental nesting repeats delay 1 and reuses
  // delay 0 in place of 2 and 3; the regular nesting differs from it.
  const auto t = pass_subset(apparatus::topology(), 2);
  std::vector<BinProbs> b;
  for (const auto& bin : t.bins) b.push_back(bin_probs(t, bin, 9.0));
  const double printed =
      b[0].p_a + (1 - b[0].p_trig) * (b[1].p_a + (1 - b[1].p_trig) * (b[1].p_a + (1 - b[2].p_trig) * b[0].p_trig * (b[1].p_a / b[1].p_trig)));
  const double regular = b[0].p_a + (1 - b[0].p_trig) * (b[1].p_a + (1 - b[1].p_trig) * (b[2].p_a + (1 - b[2].p_trig) * b[3].p_a));
  EXPECT_NEAR(mux_probs(t, 9.0).p_a, regular, 1e-15);
  EXPECT_GT(std::abs(printed - regular) / regular, 1e-3);
}

TEST(Hybrid, PassCombinationEqualsFlatPriority) {
  const auto t = apparatus::topology();
  for (double p : {0.5, 5.0, 50.0}) {
    const MuxProbs flat = mux_probs(t, p);
    const MuxProbs h = hybrid_combine(mux_probs(pass_subset(t, 1), p), mux_probs(pass_subset(t, 2), p));
    EXPECT_NEAR(flat.p_trig, h.p_trig, 1e-15);
    EXPECT_NEAR(flat.p_c, h.p_c, 1e-15);
    EXPECT_NEAR(flat.p_a, h.p_a, 1e-17);
    EXPECT_NEAR(flat.p_single, h.p_single, 1e-15);
  }
}

TEST(Hybrid, AddingBinsNeverLowersTrigger) {
  auto t = apparatus::topology();
  const double p = 12.0;
  double prev = 0;
  MuxTopology partial = t;
  for (std::size_t k = 1; k <= t.bins.size(); ++k) {
    partial.bins.assign(t.bins.begin(), t.bins.begin() + static_cast<std::ptrdiff_t>(k));
    const double v = mux_trigger_prob(partial, p);
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(Mux, SeventeenRepetitionsReachNinetyNinePercent) {
  EXPECT_GE(simple_mux_single_prob(0.25, 17, 1.0), 0.99);
  EXPECT_LT(simple_mux_single_prob(0.25, 16, 1.0), 0.99);
  EXPECT_NEAR(simple_mux_single_prob(0.25, 1, 1.0), 0.25, 1e-15);
  EXPECT_THROW(simple_mux_single_prob(1.5, 2, 1.0), domain_error);
  EXPECT_THROW(simple_mux_single_prob(0.5, 0, 1.0), domain_error);
}

TEST(Mux, TriggerAboveEverySingleSourceOverDefaultSweep) {
  const muxsim::Setup s{apparatus::topology(), apparatus::herald_chain()};
  for (double p = 2.5; p <= 50.5; p += 2.0) {
    const double mux = mux_output_rates(s, p).r_trig_hz;
    for (const auto& b : s.topology.bins) EXPECT_GT(mux, single_source_rates(s, b, p).r_trig_hz) << b.name << " " << p;
  }
}

TEST(Mux, ZeroPowerGivesZeroRates) {
  const auto r = mux_rates(apparatus::topology(), 0.0, apparatus::herald_chain());
  EXPECT_EQ(r.r_trig_hz, 0.0);
  EXPECT_EQ(r.r_coincidence_hz, 0.0);
  EXPECT_FALSE(r.car.has_value());
}

TEST(Mux, ValidationRejectsBadTopologies) {
  auto t = apparatus::topology();
  t.bins[0].pump_fraction = 0.9;
  EXPECT_THROW(validate(t), config_error);
  t = apparatus::topology();
  t.bins[2].pass = 3;
  EXPECT_THROW(validate(t), config_error);
  t = apparatus::topology();
  t.extrinsic_transmission = 0.0;
  EXPECT_THROW(validate(t), config_error);
  t = apparatus::topology();
  t.bins[1].eta_sw = 1.2;
  EXPECT_THROW(validate(t), config_error);
}

TEST(Mux, SaturationScalesAllRatesTogether) {
  const auto t = apparatus::topology();
  const auto a = mux_rates(t, 20.0, DeadtimeChain{});
  const auto b = mux_rates(t, 20.0, apparatus::herald_chain());
  EXPECT_LT(b.r_trig_hz, a.r_trig_hz);
  EXPECT_NEAR(*a.car, *b.car, 1e-9 * *a.car);
  EXPECT_NEAR(b.r_coincidence_hz / a.r_coincidence_hz, b.r_trig_hz / a.r_trig_hz, 1e-12);
}

TEST(Tradeoff, InterpolationAndBestSingle) {
  const std::vector<EmissionPoint> curve{{1, 0.1, 0.001}, {2, 0.2, 0.003}, {3, 0.25, 0.009}};
  EXPECT_NEAR(*p_single_at_multi(curve, 0.002), 0.15, 1e-15);
  EXPECT_FALSE(p_single_at_multi(curve, 0.02).has_value());
  EXPECT_FALSE(p_single_at_multi(curve, 0.0005).has_value());

  std::vector<double> grid;
  for (double p = 0.5; p <= 200; p *= 1.1) grid.push_back(p);
  const auto tc = emission_tradeoff_curve(apparatus::topology(), LossMask::extrinsic_removed, grid, {});
  ASSERT_EQ(tc.singles.size(), 8u);
  for (std::size_t i = 1; i < tc.mux.size(); ++i) EXPECT_GT(tc.mux[i].p_multi, tc.mux[i - 1].p_multi);
  const double pm = 1e-8;
  const auto best = best_single_at_multi(tc, pm);
  ASSERT_TRUE(best.has_value());
  EXPECT_GT(*p_single_at_multi(tc.mux, pm), *best);
}
