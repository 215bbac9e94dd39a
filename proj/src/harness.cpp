#include "mmw/harness.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "mmw/iq_file.hpp"

namespace mmw {
namespace {

std::string fixed(double v, int precision) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

ChannelScenario testbed_scenario() {
  ChannelScenario s;
  s.noise_power_dbm = kTestbedNoiseFloorDbm;
  s.cfo_hz = kTestbedCfoHz;
  s.phase_rad = kTestbedPhaseRad;
  return s;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: cannot parse " + key + " = '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw std::invalid_argument("config: cannot parse " + key + " = '" + value + "' as a boolean");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<ScenarioPreset> testbed_presets() {
  ScenarioPreset aligned{"aligned", testbed_scenario(), 0.75, {true, 0.0, 0.0}};

  ScenarioPreset misaligned{"misaligned", testbed_scenario(), 0.5, {true, 0.01, 0.25}};
  misaligned.scenario.rx_offset_az_deg = 40.0;

  ScenarioPreset steered{"steered", testbed_scenario(), 0.75, {true, 0.0, 0.0}};
  steered.scenario.rx_offset_az_deg = 40.0;
  steered.scenario.rx_array = ArrayConfig::steered(40.0, 0.0);

  return {aligned, misaligned, steered};
}

ScenarioPreset preset_by_name(const std::string& name) {
  for (auto& p : testbed_presets()) {
    if (p.name == name) return p;
  }
  throw std::invalid_argument("unknown preset '" + name + "' (expected aligned, misaligned or steered)");
}

Testbed::Testbed(ChainConfig config) : config_(std::move(config)), receiver_(config_.layout, config_.filter) {}

std::size_t Testbed::nominal_frame_start() const {
  return config_.gap_samples * static_cast<std::size_t>(config_.filter.samples_per_symbol) +
         2 * static_cast<std::size_t>(config_.filter.group_delay());
}

TxStages Testbed::transmit(std::span<const std::uint8_t> bits) const {
  TxStages st;
  st.frame = build_frame(bits, config_.layout);

  std::vector<Complex> burst(config_.gap_samples, Complex{});
  burst.insert(burst.end(), st.frame.time_samples.vec().begin(), st.frame.time_samples.vec().end());
  burst.resize(burst.size() + config_.gap_samples, Complex{});

  st.shaped = interpolate_pulse_shape(IqBuffer{std::move(burst), kBasebandRateHz}, config_.filter);
  st.quantized = scale_quantize(st.shaped);
  const IqBuffer dac = dequantize(st.quantized, st.shaped.sample_rate_hz());
  const IqBuffer fast = resample_16(dac, ResampleDirection::Up);
  st.converter = nco_shift(fast, {folded_nco_frequency(config_.if_hz, kConverterRateHz), 0.0});
  return st;
}

IqBuffer Testbed::receive_front_end(const IqBuffer& converter_rate) const {
  const IqBuffer baseband = nco_shift(converter_rate, {-folded_nco_frequency(config_.if_hz, kConverterRateHz), 0.0});
  return resample_16(baseband, ResampleDirection::Down);
}

BitVector frame_payload(std::uint64_t seed, std::size_t frame_index, const FrameLayout& layout) {
  return prbs_bits(mix_seed(seed, 0, frame_index), static_cast<std::size_t>(layout.bits_per_frame()));
}

RunRecord Testbed::run_frame(const ScenarioPreset& preset, std::uint64_t seed, std::size_t frame_index) const {
  const auto t0 = std::chrono::steady_clock::now();

  const BitVector bits = frame_payload(seed, frame_index, config_.layout);
  const TxStages tx = transmit(bits);

  ChannelScenario scenario = preset.scenario;
  scenario.seed = mix_seed(seed, 1, frame_index);
  const PropagationResult air = propagate(tx.converter, scenario);

  RunRecord rec;
  rec.preset = preset.name;
  rec.seed = seed;
  rec.frame_index = frame_index;
  rec.report = receiver_.process(receive_front_end(air.signal), bits, preset.detection_threshold);
  rec.budget = air.budget;
  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

RunSummary run_scenario(const Testbed& bed, const ScenarioPreset& preset, std::uint64_t seed, std::size_t n_frames,
                        unsigned threads) {
  if (n_frames < 1) throw std::invalid_argument("run_scenario: need at least one frame");

  RunSummary sum;
  sum.records.resize(n_frames);
  threads = std::clamp<unsigned>(threads, 1U, static_cast<unsigned>(n_frames));
  if (threads == 1) {
    for (std::size_t i = 0; i < n_frames; ++i) sum.records[i] = bed.run_frame(preset, seed, i);
  } else {
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < threads; ++w) {
      workers.emplace_back([&, w] {
        for (std::size_t i = w; i < n_frames; i += threads) sum.records[i] = bed.run_frame(preset, seed, i);
      });
    }
    for (auto& t : workers) t.join();
  }

  double peak_sum = 0.0;
  double ber_sum = 0.0;
  double ber_sq = 0.0;
  sum.min_peak_metric = 1.0;
  for (const auto& r : sum.records) {
    sum.bit_errors += r.report.bit_errors;
    sum.total_bits += static_cast<std::size_t>(bed.config().layout.bits_per_frame());
    sum.detected += r.report.detection.detected ? 1 : 0;
    peak_sum += r.report.detection.peak_metric;
    sum.min_peak_metric = std::min(sum.min_peak_metric, r.report.detection.peak_metric);
    sum.max_peak_metric = std::max(sum.max_peak_metric, r.report.detection.peak_metric);
    ber_sum += r.report.ber;
    ber_sq += r.report.ber * r.report.ber;
  }
  const auto n = static_cast<double>(n_frames);
  sum.aggregate_ber = static_cast<double>(sum.bit_errors) / static_cast<double>(sum.total_bits);
  sum.detection_rate = static_cast<double>(sum.detected) / n;
  sum.mean_peak_metric = peak_sum / n;
  sum.per_frame_ber_variance = std::max(0.0, ber_sq / n - (ber_sum / n) * (ber_sum / n));
  return sum;
}

std::string run_csv(const RunSummary& summary) {
  std::ostringstream os;
  os << rx_report_csv_header() << ",seed,frame,bit_errors,max_metric\n";
  for (const auto& r : summary.records) {
    os << rx_report_csv_row(r.preset, r.report) << "," << r.seed << "," << r.frame_index << "," << r.report.bit_errors
       << "," << fixed(r.report.detection.max_metric, 6) << "\n";
  }
  return os.str();
}

std::string run_summary_text(const RunSummary& s) {
  std::ostringstream os;
  os << "frames=" << s.records.size() << " detected=" << s.detected << " bit_errors=" << s.bit_errors << "/"
     << s.total_bits << " ber=" << fixed(s.aggregate_ber, 6) << " ber_var=" << fixed(s.per_frame_ber_variance, 6)
     << " peak_mean=" << fixed(s.mean_peak_metric, 4) << " peak_min=" << fixed(s.min_peak_metric, 4)
     << " peak_max=" << fixed(s.max_peak_metric, 4);
  return os.str();
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "offset_deg") return SweepAxis::OffsetDeg;
  if (name == "noise_dbm") return SweepAxis::NoiseDbm;
  if (name == "cfo_hz") return SweepAxis::CfoHz;
  if (name == "threshold") return SweepAxis::Threshold;
  throw std::invalid_argument("unknown sweep axis '" + name + "' (expected offset_deg, noise_dbm, cfo_hz, threshold)");
}

std::string sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::OffsetDeg: return "offset_deg";
    case SweepAxis::NoiseDbm: return "noise_dbm";
    case SweepAxis::CfoHz: return "cfo_hz";
    case SweepAxis::Threshold: return "threshold";
  }
  return "unknown";
}

std::vector<SweepRow> sweep(const Testbed& bed, SweepAxis axis, const std::vector<double>& values,
                            const ScenarioPreset& base, std::uint64_t seed, std::size_t n_frames, unsigned threads) {
  if (values.empty()) throw std::invalid_argument("sweep: empty value list");
  std::vector<SweepRow> rows;
  rows.reserve(values.size());
  for (double v : values) {
    ScenarioPreset p = base;
    switch (axis) {
      case SweepAxis::OffsetDeg: p.scenario.rx_offset_az_deg = v; break;
      case SweepAxis::NoiseDbm: p.scenario.noise_power_dbm = v; break;
      case SweepAxis::CfoHz: p.scenario.cfo_hz = v; break;
      case SweepAxis::Threshold: p.detection_threshold = v; break;
    }
    const RunSummary s = run_scenario(bed, p, seed, n_frames, threads);
    rows.push_back({v, s.detection_rate, s.mean_peak_metric, s.aggregate_ber});
  }
  return rows;
}

std::string sweep_csv(SweepAxis axis, const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << sweep_axis_name(axis) << ",detection_rate,mean_peak_metric,ber\n";
  for (const auto& r : rows) {
    os << fixed(r.value, 3) << "," << fixed(r.detection_rate, 4) << "," << fixed(r.mean_peak_metric, 6) << ","
       << fixed(r.ber, 6) << "\n";
  }
  return os.str();
}

void dump_stage(const Testbed& bed, const std::string& stage, const ScenarioPreset& preset, std::uint64_t seed,
                const std::filesystem::path& path) {
  if (std::find(kDumpStages.begin(), kDumpStages.end(), stage) == kDumpStages.end()) {
    throw std::invalid_argument("dump_stage: unknown stage '" + stage + "'");
  }
  const auto& cfg = bed.config();
  const BitVector bits = frame_payload(seed, 0, cfg.layout);
  const TxStages tx = bed.transmit(bits);

  const std::size_t sps = static_cast<std::size_t>(cfg.filter.samples_per_symbol);
  const std::size_t frame_first = cfg.gap_samples * sps;
  const std::size_t frame_len = static_cast<std::size_t>(cfg.layout.frame_len()) * sps;

  IqDump dump;
  dump.stage = stage;
  if (stage == "baseband") {
    dump.sample_rate_hz = kBasebandRateHz;
    dump.data = scale_quantize(tx.frame.time_samples);
  } else if (stage == "shaped") {
    // Only the frame's own window; the leading gap is silent so this equals
    // shaping the bare frame.
    std::vector<Complex> win(tx.shaped.vec().begin() + static_cast<std::ptrdiff_t>(frame_first),
                             tx.shaped.vec().begin() + static_cast<std::ptrdiff_t>(frame_first + frame_len));
    dump.sample_rate_hz = kShapedRateHz;
    dump.data = scale_quantize(IqBuffer{std::move(win), kShapedRateHz});
  } else if (stage == "quantized") {
    dump.sample_rate_hz = kShapedRateHz;
    dump.data.full_scale = 1.0;
    dump.data.words.assign(tx.quantized.words.begin() + static_cast<std::ptrdiff_t>(2 * frame_first),
                           tx.quantized.words.begin() + static_cast<std::ptrdiff_t>(2 * (frame_first + frame_len)));
  } else {
    ChannelScenario scenario = preset.scenario;
    scenario.seed = mix_seed(seed, 1, 0);
    const PropagationResult air = propagate(tx.converter, scenario);
    if (stage == "channel-out") {
      dump.sample_rate_hz = kConverterRateHz;
      dump.data = scale_quantize(air.signal);
    } else {
      const IqBuffer mf = matched_filter(bed.receive_front_end(air.signal), cfg.filter);
      dump.sample_rate_hz = kShapedRateHz;
      dump.data = scale_quantize(mf);
    }
  }
  write_iq_file(path, dump);
}

KeyValues parse_config(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(line_no) + ": missing '='");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_config(const KeyValues& kv, ScenarioPreset& preset, ChainConfig& chain) {
  ChannelScenario& s = preset.scenario;
  double rolloff = chain.filter.rolloff;
  int span = chain.filter.span_symbols;
  for (const auto& [key, value] : kv) {
    if (key == "distance_m") s.distance_m = parse_double(key, value);
    else if (key == "carrier_hz") s.carrier_hz = parse_double(key, value);
    else if (key == "if_hz") s.if_hz = chain.if_hz = parse_double(key, value);
    else if (key == "rx_offset_az_deg") s.rx_offset_az_deg = parse_double(key, value);
    else if (key == "tx_offset_az_deg") s.tx_offset_az_deg = parse_double(key, value);
    else if (key == "rx_steer_az_deg") s.rx_array.steer_az_deg = parse_double(key, value);
    else if (key == "rx_steer_el_deg") s.rx_array.steer_el_deg = parse_double(key, value);
    else if (key == "tx_steer_az_deg") s.tx_array.steer_az_deg = parse_double(key, value);
    else if (key == "tx_steer_el_deg") s.tx_array.steer_el_deg = parse_double(key, value);
    else if (key == "element_spacing_wl") s.rx_array.element_spacing_wl = s.tx_array.element_spacing_wl = parse_double(key, value);
    else if (key == "cfo_hz") s.cfo_hz = parse_double(key, value);
    else if (key == "phase_rad") s.phase_rad = parse_double(key, value);
    else if (key == "noise_power_dbm") s.noise_power_dbm = parse_double(key, value);
    else if (key == "noise_figure_db") {
      s.noise_figure_db = parse_double(key, value);
      s.noise_power_dbm.reset();
    }
    else if (key == "add_noise") s.add_noise = parse_bool(key, value);
    else if (key == "signal_present") s.signal_present = parse_bool(key, value);
    else if (key == "detection_threshold") preset.detection_threshold = parse_double(key, value);
    else if (key == "gap_samples") chain.gap_samples = static_cast<std::size_t>(parse_double(key, value));
    else if (key == "rrc_rolloff") rolloff = parse_double(key, value);
    else if (key == "rrc_span_symbols") span = static_cast<int>(parse_double(key, value));
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  if (!(preset.detection_threshold > 0.0 && preset.detection_threshold <= 1.0)) {
    throw std::invalid_argument("config: detection_threshold must be in (0, 1]");
  }
  if (rolloff != chain.filter.rolloff || span != chain.filter.span_symbols) chain.filter = design_rrc(rolloff, span);
  s.validate();
}

}  // namespace mmw
