#include <doctest.h>

#include <algorithm>

#include "mmw/channel.hpp"
#include "oracles.hpp"

using namespace mmw;

namespace {

double oracle_gain_db(const ArrayConfig& c, double az, double el) {
  return 20.0 * std::log10(std::abs(oracle::array_factor(c.rows, c.cols, c.element_spacing_wl, c.steer_az_deg, c.steer_el_deg, az, el)));
}

ChannelScenario quiet() {
  ChannelScenario s;
  s.add_noise = false;
  return s;
}

}  // namespace

TEST_SUITE("channel") {

TEST_CASE("boresight gain of the 4x4 array") {
  const ArrayConfig a{};
  CHECK(std::abs(array_factor(a, 0.0, 0.0)) == doctest::Approx(16.0).epsilon(1e-12));
  CHECK(array_gain_db(a, 0.0, 0.0) == doctest::Approx(24.0824).epsilon(1e-5));
  CHECK(a.element_count() == 16);
}

TEST_CASE("unsteered pattern 40 degrees off axis") {
  const ArrayConfig a{};
  const Complex af = array_factor(a, 40.0, 0.0);
  const auto ref = oracle::array_factor(4, 4, 0.5, 0.0, 0.0, 40.0, 0.0);
  CHECK(std::abs(af - ref) < 1e-9);
  CHECK(array_gain_db(a, 0.0, 0.0) - array_gain_db(a, 40.0, 0.0) >= 10.0);
  // Four-element half-wavelength line: first null at 30 degrees.
  CHECK(std::abs(array_factor(a, 30.0, 0.0)) < 1e-9);
}

TEST_CASE("conjugate steering restores full coherence") {
  const ArrayConfig s = ArrayConfig::steered(40.0, 0.0);
  CHECK(std::abs(array_factor(s, 40.0, 0.0)) == doctest::Approx(16.0).epsilon(1e-12));
  CHECK(std::abs(std::abs(array_factor(s, 40.0, 0.0)) - 16.0) < 1e-9);
}

TEST_CASE("every commandable steering is coherent in its own direction") {
  int count = 0;
  for (double az = kSteerAzMinDeg; az <= kSteerAzMaxDeg; az += kSteerStepDeg) {
    for (double el = kSteerElMinDeg; el <= kSteerElMaxDeg; el += kSteerStepDeg) {
      const ArrayConfig c = ArrayConfig::steered(az, el);
      CHECK(std::abs(std::abs(array_factor(c, az, el)) - 16.0) < 1e-9);
      ++count;
    }
  }
  CHECK(count == 63);
}

TEST_CASE("array factor agrees with the element summation oracle") {
  const std::vector<std::pair<double, double>> steerings{{0, 0}, {40, 0}, {-20, 30}, {10, -30}, {-40, -10}};
  for (const auto& [saz, sel] : steerings) {
    const ArrayConfig c = ArrayConfig::steered(saz, sel);
    for (double az = -90.0; az <= 90.0; az += 3.0) {
      for (double el = -45.0; el <= 45.0; el += 3.0) {
        const auto ref = oracle::array_factor(4, 4, 0.5, saz, sel, az, el);
        CHECK(std::abs(array_factor(c, az, el) - ref) < 1e-9);
      }
    }
  }
  // Non-default geometry.
  const ArrayConfig odd{3, 5, 0.7, 20.0, 10.0};
  for (double az = -90.0; az <= 90.0; az += 5.0)
    CHECK(std::abs(array_factor(odd, az, 7.0) - oracle::array_factor(3, 5, 0.7, 20.0, 10.0, az, 7.0)) < 1e-9);
}

TEST_CASE("steering commands are limited to the 10 degree grid") {
  CHECK_NOTHROW(ArrayConfig::steered(-40.0, 30.0));
  CHECK_THROWS_AS(ArrayConfig::steered(45.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ArrayConfig::steered(50.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ArrayConfig::steered(0.0, 40.0), std::invalid_argument);
  CHECK_THROWS_AS(ArrayConfig::steered(12.0, 0.0), std::invalid_argument);
  CHECK(on_steering_grid(20.0, -30.0));
  CHECK_FALSE(on_steering_grid(20.0, -35.0));
  CHECK(snap_to_steering_grid(37.0, kSteerAzMinDeg, kSteerAzMaxDeg) == 40.0);
  CHECK(snap_to_steering_grid(-14.0, kSteerAzMinDeg, kSteerAzMaxDeg) == -10.0);
  CHECK(snap_to_steering_grid(73.0, kSteerAzMinDeg, kSteerAzMaxDeg) == 40.0);

  ArrayConfig bad{};
  bad.rows = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ArrayConfig{};
  bad.element_spacing_wl = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("misalignment loss of the composite pair") {
  const ArrayConfig flat{};
  CHECK(misalignment_loss(flat, 0.0) == doctest::Approx(0.0).epsilon(1e-12));
  const double l40 = misalignment_loss(flat, 40.0);
  CHECK(l40 > 15.0);
  CHECK(l40 == doctest::Approx(2.0 * (oracle_gain_db(flat, 0.0, 0.0) - oracle_gain_db(flat, 40.0, 0.0))).epsilon(1e-9));
  CHECK(misalignment_loss(ArrayConfig::steered(40.0, 0.0), 40.0) <= 0.1);

  for (double off = 1.0; off <= 89.0; off += 1.0) {
    CHECK(misalignment_loss(flat, off) > 0.0);
    CHECK(misalignment_loss(flat, -off) == doctest::Approx(misalignment_loss(flat, off)).epsilon(1e-9));
  }
}

TEST_CASE("free-space path loss at 1 m and 29.8 GHz") {
  CHECK(std::abs(free_space_path_loss_db(1.0, 29.8e9) - 61.93) <= 0.01);
  CHECK(free_space_path_loss_db(2.0, 29.8e9) - free_space_path_loss_db(1.0, 29.8e9) ==
        doctest::Approx(20.0 * std::log10(2.0)));
  CHECK_THROWS_AS((void)free_space_path_loss_db(0.0, 29.8e9), std::invalid_argument);
  CHECK_THROWS_AS((void)free_space_path_loss_db(1.0, -1.0), std::invalid_argument);
  CHECK(thermal_noise_dbm(0.0, 1.0) == doctest::Approx(-174.0));
  CHECK(thermal_noise_dbm(10.0, 30.72e6) == doctest::Approx(-174.0 + 74.874 + 10.0).epsilon(1e-4));
}

TEST_CASE("aligned waypoint chain lands on the measured anchors") {
  const LinkBudget b = compute_link_budget(quiet());
  REQUIRE(b.waypoints.size() == 10);
  CHECK(std::abs(b.at("dac_output").power_dbm - (-26.3)) < 1e-9);
  CHECK(std::abs(b.at("balun_i_plus").power_dbm - (-33.2)) < 1e-9);
  CHECK(std::abs(b.at("balun_i_minus").power_dbm - (-33.7)) < 1e-9);
  CHECK(std::abs(b.at("rx_q_plus").power_dbm - (-40.0)) < 1e-9);
  CHECK(std::abs(b.at("rx_q_minus").power_dbm - (-39.6)) < 1e-9);
  CHECK(b.at("tx_eirp").power_dbm == doctest::Approx(-33.2 + 24.0824).epsilon(1e-4));
  CHECK(b.at("rx_incident").power_dbm ==
        doctest::Approx(b.at("tx_eirp").power_dbm - free_space_path_loss_db(1.0, 29.8e9)));
  CHECK(b.at("tx_eirp").carrier_hz == 29.8e9);
  CHECK(b.at("dac_output").carrier_hz == 3.8e9);
  CHECK(b.at("baseband").carrier_hz == 0.0);
  CHECK_THROWS_AS((void)b.at("nowhere"), std::out_of_range);
}

TEST_CASE("waypoint names and order do not depend on the scenario") {
  ChannelScenario a = quiet();
  ChannelScenario b = quiet();
  b.rx_offset_az_deg = 40.0;
  b.rx_array = ArrayConfig::steered(40.0, 0.0);
  b.distance_m = 3.0;
  const auto wa = compute_link_budget(a).waypoints;
  const auto wb = compute_link_budget(b).waypoints;
  REQUIRE(wa.size() == wb.size());
  const std::vector<std::string> order{"dac_output",      "balun_i_plus", "balun_i_minus", "tx_eirp",   "rx_incident",
                                       "rx_array_output", "rx_q_plus",    "rx_q_minus",    "adc_input", "baseband"};
  for (std::size_t i = 0; i < wa.size(); ++i) {
    CHECK(wa[i].stage == order[i]);
    CHECK(wb[i].stage == order[i]);
  }
  CHECK(compute_link_budget(b).at("rx_q_plus").power_dbm < compute_link_budget(a).at("rx_q_plus").power_dbm);
}

TEST_CASE("budget serialisations") {
  const LinkBudget b = compute_link_budget(quiet());
  const std::string csv = b.to_csv();
  CHECK(csv.rfind("stage,power_dbm,frequency_ghz\n", 0) == 0);
  CHECK(csv.find("dac_output,-26.3000,3.8000\n") != std::string::npos);
  CHECK(csv.find("rx_q_plus,-40.0000,3.8000\n") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);
  const std::string table = b.to_table();
  CHECK(table.find("(-33.20 dBm, 3.8000 GHz)") != std::string::npos);
  CHECK(table.find("(-9.12 dBm, 29.8000 GHz)") != std::string::npos);
}

TEST_CASE("propagate scales the active span to the Q+ port power") {
  std::vector<Complex> x(2000);
  const auto burst = oracle::awgn(1000, 0.3, 4);
  std::copy(burst.begin(), burst.end(), x.begin() + 500);
  const IqBuffer in(x, kShapedRateHz);

  const ChannelScenario s = quiet();
  const PropagationResult r = propagate(in, s);
  CHECK(power_db(active_span_power(r.signal)) == doctest::Approx(-40.0).epsilon(1e-9));
  for (std::size_t i = 0; i < 500; ++i) CHECK(r.signal[i] == Complex{});

  ChannelScenario off = quiet();
  off.rx_offset_az_deg = 40.0;
  const PropagationResult r2 = propagate(in, off);
  const double pattern = array_gain_db(ArrayConfig{}, 0.0, 0.0) - array_gain_db(ArrayConfig{}, 40.0, 0.0);
  CHECK(power_db(active_span_power(r2.signal)) == doctest::Approx(-40.0 - pattern).epsilon(1e-9));
  CHECK(r2.budget.at("rx_q_plus").power_dbm == doctest::Approx(-40.0 - pattern).epsilon(1e-9));
}

TEST_CASE("transparent channel is a pure constant scale; cfo and phase rotate") {
  const IqBuffer in(oracle::awgn(3000, 1.0, 5), kShapedRateHz);
  ChannelScenario s = quiet();
  s.bypass_gains = true;
  const PropagationResult r = propagate(in, s);
  CHECK(r.signal.vec() == in.vec());
  CHECK(r.amplitude_gain == 1.0);

  s.cfo_hz = 123.4e3;
  s.phase_rad = 0.9;
  const PropagationResult rot = propagate(in, s);
  for (std::size_t n = 0; n < in.size(); ++n) {
    const Complex expect = in[n] * std::polar(1.0, 2.0 * oracle::kPi * s.cfo_hz * static_cast<double>(n) / kShapedRateHz + 0.9);
    CHECK(std::abs(rot.signal[n] - expect) < 1e-12);
  }
}

TEST_CASE("signal switch and exact array null remove the signal") {
  const IqBuffer in(oracle::awgn(1000, 1.0, 6), kShapedRateHz);
  ChannelScenario s = quiet();
  s.signal_present = false;
  for (const auto& v : propagate(in, s).signal.samples()) CHECK(v == Complex{});
  ChannelScenario null = quiet();
  null.rx_offset_az_deg = 30.0;
  CHECK(propagate(in, null).signal.energy() < 1e-20);
}

TEST_CASE("injected noise power matches the configured level") {
  const IqBuffer silent(std::vector<Complex>(1000000), kBasebandRateHz);
  ChannelScenario s;
  s.signal_present = false;
  s.noise_power_dbm = -63.0;
  s.seed = 77;
  const double measured = power_db(propagate(silent, s).signal.mean_power());
  CHECK(std::abs(measured - (-63.0)) < 0.2);

  // At a higher sample rate the per-sample variance grows with fs / bandwidth.
  const IqBuffer fast(std::vector<Complex>(1000000), kShapedRateHz);
  const double fast_db = power_db(propagate(fast, s).signal.mean_power());
  CHECK(std::abs(fast_db - (-63.0 + 10.0)) < 0.2);

  // Default floor comes from the noise figure.
  ChannelScenario nf;
  CHECK(nf.effective_noise_dbm() == doctest::Approx(thermal_noise_dbm(10.0, 30.72e6)));
}

TEST_CASE("propagation is reproducible for a fixed seed") {
  const IqBuffer in(oracle::awgn(5000, 1.0, 10), kShapedRateHz);
  ChannelScenario s;
  s.noise_power_dbm = -50.0;
  s.cfo_hz = 5e3;
  s.seed = 42;
  CHECK(propagate(in, s).signal.vec() == propagate(in, s).signal.vec());
  ChannelScenario t = s;
  t.seed = 43;
  CHECK(propagate(in, s).signal.vec() != propagate(in, t).signal.vec());
}

TEST_CASE("scenario validation") {
  ChannelScenario s;
  s.distance_m = 0.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = ChannelScenario{};
  s.rx_offset_az_deg = 95.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = ChannelScenario{};
  s.rx_array.steer_az_deg = 15.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  CHECK_THROWS_AS((void)propagate(IqBuffer({{1.0, 0.0}}, kShapedRateHz), s), std::invalid_argument);
}

}  // TEST_SUITE
