#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmw/common.hpp"

namespace mmw {

// Steering grid of the 4x4 analog beamformer.
inline constexpr double kSteerAzMinDeg = -40.0;
inline constexpr double kSteerAzMaxDeg = 40.0;
inline constexpr double kSteerElMinDeg = -30.0;
inline constexpr double kSteerElMaxDeg = 30.0;
inline constexpr double kSteerStepDeg = 10.0;

/// Uniform rectangular array in the y-z plane, broadside along x. Columns
/// run along azimuth, rows along elevation, element positions are centred
/// on the array origin and spacing is in wavelengths.
struct ArrayConfig {
  int rows = 4;
  int cols = 4;
  double element_spacing_wl = 0.5;
  double steer_az_deg = 0.0;
  double steer_el_deg = 0.0;

  /// Config steered to (az, el); throws std::invalid_argument if the command
  /// is off the 10 degree grid or outside +-40 az / +-30 el.
  static ArrayConfig steered(double az_deg, double el_deg);

  [[nodiscard]] int element_count() const { return rows * cols; }
  void validate() const;
};

bool on_steering_grid(double az_deg, double el_deg);

/// Rounds a requested angle to the nearest commandable grid angle.
double snap_to_steering_grid(double deg, double lo_deg, double hi_deg);

/// Complex array gain toward (az, el) with ideal phase shifters conjugate to
/// the steered direction. Magnitude is element_count() when (az, el) equals
/// the steering direction.
Complex array_factor(const ArrayConfig& cfg, double az_deg, double el_deg);

double array_gain_db(const ArrayConfig& cfg, double az_deg, double el_deg);

/// Loss of the composite Tx*Rx response when both arrays see the link
/// offset_az_deg off boresight (with cfg's steering), relative to the
/// unsteered boresight-aligned pair.
double misalignment_loss(const ArrayConfig& cfg, double offset_az_deg);

double free_space_path_loss_db(double distance_m, double carrier_hz);

double thermal_noise_dbm(double noise_figure_db, double bandwidth_hz);

// Power anchors measured on the hardware in the aligned setup.
inline constexpr double kAnchorDacOutputDbm = -26.3;
inline constexpr double kAnchorBalunIPlusDbm = -33.2;
inline constexpr double kAnchorBalunIMinusDbm = -33.7;
inline constexpr double kAnchorRxQPlusDbm = -40.0;
inline constexpr double kAnchorRxQMinusDbm = -39.6;
inline constexpr double kBalunLossDb = 1.5;

/// Per-stage constants of the link model. fitted() solves the free ones so
/// the aligned 1 m scenario lands on the anchors above.
struct LinkCalibration {
  double dac_output_dbm = kAnchorDacOutputDbm;
  double balun_loss_db = kBalunLossDb;
  double tx_port_split_db = 0.0;      // single-ended -> I+ port, beyond the balun loss
  double tx_port_imbalance_db = 0.0;  // I+ minus I-
  double tx_conversion_gain_db = 0.0; // IF -> mmW upconverter, per element feed
  double rx_conversion_gain_db = 0.0; // mmW -> IF downconverter, to the Q+ port
  double rx_port_imbalance_db = 0.0;  // Q- minus Q+

  static LinkCalibration fitted();
};

struct Waypoint {
  std::string stage;
  double power_dbm = 0.0;
  double carrier_hz = 0.0;
};

struct LinkBudget {
  std::vector<Waypoint> waypoints;

  [[nodiscard]] const Waypoint& at(const std::string& stage) const;
  [[nodiscard]] std::string to_table() const;
  [[nodiscard]] std::string to_csv() const;
};

struct ChannelScenario {
  double distance_m = 1.0;
  double carrier_hz = kMmWaveCarrierHz;
  double if_hz = kIntermediateFreqHz;
  // Direction of the Tx as seen from the Rx boresight (physical rotation of the Rx).
  double rx_offset_az_deg = 0.0;
  // Direction of the Rx as seen from the Tx boresight.
  double tx_offset_az_deg = 0.0;
  ArrayConfig tx_array{};
  ArrayConfig rx_array{};
  double cfo_hz = 0.0;
  double phase_rad = 0.0;

  bool add_noise = true;
  double noise_figure_db = 10.0;
  // Overrides the noise-figure floor when set; referred to the Rx port and
  // measured in noise_bandwidth_hz.
  std::optional<double> noise_power_dbm;
  double noise_bandwidth_hz = kBasebandRateHz;

  bool signal_present = true;
  // Skip the link-budget scaling and array gains (transparent channel).
  bool bypass_gains = false;

  std::uint64_t seed = 1;
  LinkCalibration calibration = LinkCalibration::fitted();

  [[nodiscard]] double effective_noise_dbm() const;
  void validate() const;
};

/// Waypoint chain for a scenario; stage names and order never change.
LinkBudget compute_link_budget(const ChannelScenario& scenario);

struct PropagationResult {
  IqBuffer signal;
  LinkBudget budget;
  double amplitude_gain = 0.0;
};

/// Applies the link gain (input's active-span power taken as the DAC output
/// level, output referred to the Rx Q+ port in sqrt(mW) units), the static
/// array phase, CFO rotation, static phase, then seeded complex AWGN whose
/// per-sample variance is the noise power scaled by fs / noise_bandwidth.
PropagationResult propagate(const IqBuffer& signal, const ChannelScenario& scenario);

/// Mean power over the span between the first and last sample within 60 dB
/// of the peak; zero for an all-zero buffer.
double active_span_power(const IqBuffer& signal);

}  // namespace mmw
