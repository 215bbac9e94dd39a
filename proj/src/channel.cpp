#include "mmw/channel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/random/normal_distribution.hpp>

namespace mmw {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

// Sum over M centred elements of exp(j (m - (M-1)/2) psi); real-valued.
double centred_line_factor(int m, double psi) {
  const double s = std::sin(psi / 2.0);
  if (std::abs(s) < 1e-8) {
    double acc = 0.0;
    for (int i = 0; i < m; ++i) acc += std::cos((i - (m - 1) / 2.0) * psi);
    return acc;
  }
  return std::sin(m * psi / 2.0) / s;
}

bool on_grid(double deg, double lo, double hi) {
  if (deg < lo - 1e-9 || deg > hi + 1e-9) return false;
  const double steps = deg / kSteerStepDeg;
  return std::abs(steps - std::round(steps)) < 1e-9;
}

}  // namespace

ArrayConfig ArrayConfig::steered(double az_deg, double el_deg) {
  ArrayConfig cfg;
  cfg.steer_az_deg = az_deg;
  cfg.steer_el_deg = el_deg;
  cfg.validate();
  return cfg;
}

void ArrayConfig::validate() const {
  if (rows < 1 || cols < 1) throw std::invalid_argument("ArrayConfig: array must have at least one element");
  if (!(element_spacing_wl > 0.0)) throw std::invalid_argument("ArrayConfig: element spacing must be positive");
  if (!on_steering_grid(steer_az_deg, steer_el_deg)) {
    throw std::invalid_argument("ArrayConfig: steering (" + std::to_string(steer_az_deg) + ", " +
                                std::to_string(steer_el_deg) + ") is not a commandable grid point");
  }
}

bool on_steering_grid(double az_deg, double el_deg) {
  return on_grid(az_deg, kSteerAzMinDeg, kSteerAzMaxDeg) && on_grid(el_deg, kSteerElMinDeg, kSteerElMaxDeg);
}

double snap_to_steering_grid(double deg, double lo_deg, double hi_deg) {
  return std::clamp(std::round(deg / kSteerStepDeg) * kSteerStepDeg, lo_deg, hi_deg);
}

Complex array_factor(const ArrayConfig& cfg, double az_deg, double el_deg) {
  const double az = az_deg * kDeg;
  const double el = el_deg * kDeg;
  const double saz = cfg.steer_az_deg * kDeg;
  const double sel = cfg.steer_el_deg * kDeg;
  const double k = 2.0 * kPi * cfg.element_spacing_wl;
  const double psi_y = k * (std::cos(sel) * std::sin(saz) - std::cos(el) * std::sin(az));
  const double psi_z = k * (std::sin(sel) - std::sin(el));
  return {centred_line_factor(cfg.cols, psi_y) * centred_line_factor(cfg.rows, psi_z), 0.0};
}

double array_gain_db(const ArrayConfig& cfg, double az_deg, double el_deg) {
  return 20.0 * std::log10(std::max(std::abs(array_factor(cfg, az_deg, el_deg)), 1e-15));
}

double misalignment_loss(const ArrayConfig& cfg, double offset_az_deg) {
  const ArrayConfig boresight{cfg.rows, cfg.cols, cfg.element_spacing_wl, 0.0, 0.0};
  const double reference = 2.0 * array_gain_db(boresight, 0.0, 0.0);
  return reference - 2.0 * array_gain_db(cfg, offset_az_deg, 0.0);
}

double free_space_path_loss_db(double distance_m, double carrier_hz) {
  if (!(distance_m > 0.0) || !(carrier_hz > 0.0)) throw std::invalid_argument("free_space_path_loss_db: non-positive input");
  const double wavelength = kSpeedOfLight / carrier_hz;
  return 20.0 * std::log10(4.0 * kPi * distance_m / wavelength);
}

double thermal_noise_dbm(double noise_figure_db, double bandwidth_hz) {
  return -174.0 + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
}

LinkCalibration LinkCalibration::fitted() {
  LinkCalibration cal;
  cal.tx_port_split_db = cal.dac_output_dbm - cal.balun_loss_db - kAnchorBalunIPlusDbm;
  cal.tx_port_imbalance_db = kAnchorBalunIPlusDbm - kAnchorBalunIMinusDbm;
  cal.tx_conversion_gain_db = 0.0;
  cal.rx_port_imbalance_db = kAnchorRxQMinusDbm - kAnchorRxQPlusDbm;

  const ArrayConfig boresight{};
  const double array_db = array_gain_db(boresight, 0.0, 0.0);
  const double at_rx_array = kAnchorBalunIPlusDbm + cal.tx_conversion_gain_db + array_db -
                             free_space_path_loss_db(1.0, kMmWaveCarrierHz) + array_db;
  cal.rx_conversion_gain_db = kAnchorRxQPlusDbm - at_rx_array;
  return cal;
}

const Waypoint& LinkBudget::at(const std::string& stage) const {
  auto it = std::find_if(waypoints.begin(), waypoints.end(), [&](const Waypoint& w) { return w.stage == stage; });
  if (it == waypoints.end()) throw std::out_of_range("LinkBudget: no stage " + stage);
  return *it;
}

std::string LinkBudget::to_table() const {
  std::ostringstream os;
  os << std::fixed;
  for (const auto& w : waypoints) {
    os << std::left << std::setw(18) << w.stage << std::right << "(" << std::setprecision(2) << w.power_dbm
       << " dBm, " << std::setprecision(4) << w.carrier_hz / 1e9 << " GHz)\n";
  }
  return os.str();
}

std::string LinkBudget::to_csv() const {
  std::ostringstream os;
  os << std::fixed;
  os << "stage,power_dbm,frequency_ghz\n";
  for (const auto& w : waypoints) {
    os << w.stage << "," << std::setprecision(4) << w.power_dbm << "," << std::setprecision(4) << w.carrier_hz / 1e9
       << "\n";
  }
  return os.str();
}

double ChannelScenario::effective_noise_dbm() const {
  return noise_power_dbm.value_or(thermal_noise_dbm(noise_figure_db, noise_bandwidth_hz));
}

void ChannelScenario::validate() const {
  if (!(distance_m > 0.0)) throw std::invalid_argument("ChannelScenario: distance must be positive");
  if (!(carrier_hz > 0.0)) throw std::invalid_argument("ChannelScenario: carrier must be positive");
  if (!(noise_bandwidth_hz > 0.0)) throw std::invalid_argument("ChannelScenario: noise bandwidth must be positive");
  if (std::abs(rx_offset_az_deg) > 90.0 || std::abs(tx_offset_az_deg) > 90.0) {
    throw std::invalid_argument("ChannelScenario: offsets must lie within [-90, 90] degrees");
  }
  tx_array.validate();
  rx_array.validate();
}

LinkBudget compute_link_budget(const ChannelScenario& s) {
  const LinkCalibration& cal = s.calibration;
  const double i_plus = cal.dac_output_dbm - cal.balun_loss_db - cal.tx_port_split_db;
  const double eirp = i_plus + cal.tx_conversion_gain_db + array_gain_db(s.tx_array, s.tx_offset_az_deg, 0.0);
  const double incident = eirp - free_space_path_loss_db(s.distance_m, s.carrier_hz);
  const double rx_array_out = incident + array_gain_db(s.rx_array, s.rx_offset_az_deg, 0.0);
  const double q_plus = rx_array_out + cal.rx_conversion_gain_db;
  const double q_minus = q_plus + cal.rx_port_imbalance_db;
  const double adc_in = power_db(std::pow(10.0, q_plus / 10.0) + std::pow(10.0, q_minus / 10.0)) - cal.balun_loss_db;

  LinkBudget b;
  b.waypoints = {
      {"dac_output", cal.dac_output_dbm, s.if_hz},
      {"balun_i_plus", i_plus, s.if_hz},
      {"balun_i_minus", i_plus - cal.tx_port_imbalance_db, s.if_hz},
      {"tx_eirp", eirp, s.carrier_hz},
      {"rx_incident", incident, s.carrier_hz},
      {"rx_array_output", rx_array_out, s.carrier_hz},
      {"rx_q_plus", q_plus, s.if_hz},
      {"rx_q_minus", q_minus, s.if_hz},
      {"adc_input", adc_in, s.if_hz},
      {"baseband", adc_in, 0.0},
  };
  return b;
}

double active_span_power(const IqBuffer& signal) {
  double peak = 0.0;
  for (const auto& v : signal.samples()) peak = std::max(peak, std::norm(v));
  if (!(peak > 0.0)) return 0.0;
  const double floor = peak * 1e-6;
  std::size_t first = 0;
  while (std::norm(signal[first]) < floor) ++first;
  std::size_t last = signal.size() - 1;
  while (std::norm(signal[last]) < floor) --last;
  double acc = 0.0;
  for (std::size_t i = first; i <= last; ++i) acc += std::norm(signal[i]);
  return acc / static_cast<double>(last - first + 1);
}

PropagationResult propagate(const IqBuffer& signal, const ChannelScenario& s) {
  s.validate();
  PropagationResult result;
  result.budget = compute_link_budget(s);

  const double fs = signal.sample_rate_hz();
  Complex gain{1.0, 0.0};
  if (!s.bypass_gains) {
    const double p_in = active_span_power(signal);
    const double target_mw = std::pow(10.0, result.budget.at("rx_q_plus").power_dbm / 10.0);
    const double amp = p_in > 0.0 ? std::sqrt(target_mw / p_in) : 0.0;
    const Complex af = array_factor(s.tx_array, s.tx_offset_az_deg, 0.0) * array_factor(s.rx_array, s.rx_offset_az_deg, 0.0);
    gain = std::polar(amp, std::arg(af));
  }
  if (!s.signal_present) gain = 0.0;
  result.amplitude_gain = std::abs(gain);

  std::vector<Complex> out(signal.size());
  for (std::size_t n = 0; n < signal.size(); ++n) out[n] = signal[n] * gain;
  mix_in_place(out, s.cfo_hz / fs, s.phase_rad);

  if (s.add_noise) {
    const double variance = std::pow(10.0, s.effective_noise_dbm() / 10.0) * fs / s.noise_bandwidth_hz;
    const double sigma = std::sqrt(variance / 2.0);
    std::mt19937_64 gen(s.seed);
    boost::random::normal_distribution<double> gauss(0.0, sigma);
    for (auto& v : out) {
      const double re = gauss(gen);
      const double im = gauss(gen);
      v += Complex{re, im};
    }
  }

  result.signal = IqBuffer{std::move(out), fs};
  return result;
}

}  // namespace mmw
