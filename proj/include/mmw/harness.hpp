#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mmw/channel.hpp"
#include "mmw/common.hpp"
#include "mmw/frontend.hpp"
#include "mmw/rx.hpp"
#include "mmw/tx.hpp"

namespace mmw {

// Committed calibration of the desk-scale testbed. The noise floor sits at the
// Rx Q+ port in 30.72 MHz and places the 40 degree misaligned link (about
// 12.8 dB of Rx pattern loss) in the degraded-but-detectable regime.
inline constexpr double kTestbedNoiseFloorDbm = -58.0;
inline constexpr double kTestbedCfoHz = 5e3;
inline constexpr double kTestbedPhaseRad = 0.7;
inline constexpr std::size_t kDefaultGapSamples = 480;

struct ChainConfig {
  FrameLayout layout = FrameLayout::standard();
  RrcFilterSpec filter = design_rrc();
  // Zero samples (at 30.72 MHz) before and after the frame in each capture.
  std::size_t gap_samples = kDefaultGapSamples;
  double if_hz = kIntermediateFreqHz;
};

struct ExpectedOutcome {
  bool detected = true;
  double ber_min = 0.0;
  double ber_max = 0.0;
};

struct ScenarioPreset {
  std::string name;
  ChannelScenario scenario;
  double detection_threshold = 0.75;
  ExpectedOutcome expected;
};

/// aligned, misaligned, steered.
std::vector<ScenarioPreset> testbed_presets();
ScenarioPreset preset_by_name(const std::string& name);

struct TxStages {
  TxFrame frame;
  IqBuffer shaped;        // 307.2 MSPS, whole capture
  QuantizedIq quantized;  // DAC words, whole capture
  IqBuffer converter;     // 4.9152 GSPS after the DAC-tile NCO
};

struct RunRecord {
  std::string preset;
  std::uint64_t seed = 0;
  std::size_t frame_index = 0;
  RxReport report;
  LinkBudget budget;
  double wall_time_s = 0.0;
};

struct RunSummary {
  std::vector<RunRecord> records;
  std::size_t bit_errors = 0;
  std::size_t total_bits = 0;
  std::size_t detected = 0;
  double aggregate_ber = 0.0;
  double detection_rate = 0.0;
  double mean_peak_metric = 0.0;
  double min_peak_metric = 0.0;
  double max_peak_metric = 0.0;
  double per_frame_ber_variance = 0.0;
};

/// Wires Tx baseband -> front end -> channel -> front end -> Rx baseband.
class Testbed {
 public:
  explicit Testbed(ChainConfig config = {});

  [[nodiscard]] TxStages transmit(std::span<const std::uint8_t> bits) const;
  /// DAC-tile NCO down, 16x decimation.
  [[nodiscard]] IqBuffer receive_front_end(const IqBuffer& converter_rate) const;

  [[nodiscard]] RunRecord run_frame(const ScenarioPreset& preset, std::uint64_t seed, std::size_t frame_index) const;

  /// Frame start in the 307.2 MSPS matched-filter output of a capture.
  [[nodiscard]] std::size_t nominal_frame_start() const;

  [[nodiscard]] const ChainConfig& config() const { return config_; }
  [[nodiscard]] const Receiver& receiver() const { return receiver_; }

 private:
  ChainConfig config_;
  Receiver receiver_;
};

/// Payload bits for one frame of a run; depends only on (seed, frame_index).
BitVector frame_payload(std::uint64_t seed, std::size_t frame_index, const FrameLayout& layout);

RunSummary run_scenario(const Testbed& bed, const ScenarioPreset& preset, std::uint64_t seed, std::size_t n_frames,
                        unsigned threads = 1);

std::string run_csv(const RunSummary& summary);
std::string run_summary_text(const RunSummary& summary);

enum class SweepAxis { OffsetDeg, NoiseDbm, CfoHz, Threshold };
SweepAxis parse_sweep_axis(const std::string& name);
std::string sweep_axis_name(SweepAxis axis);

struct SweepRow {
  double value = 0.0;
  double detection_rate = 0.0;
  double mean_peak_metric = 0.0;
  double ber = 0.0;
};

std::vector<SweepRow> sweep(const Testbed& bed, SweepAxis axis, const std::vector<double>& values,
                            const ScenarioPreset& base, std::uint64_t seed, std::size_t n_frames,
                            unsigned threads = 1);
std::string sweep_csv(SweepAxis axis, const std::vector<SweepRow>& rows);

/// Pipeline taps that can be dumped to an IQ file.
inline const std::vector<std::string> kDumpStages{"baseband", "shaped", "quantized", "channel-out",
                                                  "matched-filter-out"};

void dump_stage(const Testbed& bed, const std::string& stage, const ScenarioPreset& preset, std::uint64_t seed,
                const std::filesystem::path& path);

using KeyValues = std::map<std::string, std::string>;

/// Flat "key = value" text, '#' starts a comment.
KeyValues parse_config(const std::string& text);
KeyValues load_config(const std::filesystem::path& path);

/// Applies scenario and chain keys; throws std::invalid_argument on unknown
/// keys or unparsable values.
void apply_config(const KeyValues& kv, ScenarioPreset& preset, ChainConfig& chain);

}  // namespace mmw
