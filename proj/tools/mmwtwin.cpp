// Command-line runner for the mmWave OFDM testbed twin.

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <thread>

#include "mmw/harness.hpp"
#include "mmw/iq_file.hpp"

namespace {

struct Common {
  std::string preset = "aligned";
  std::uint64_t seed = 1;
  std::string config;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--preset", c.preset, "Scenario preset: aligned, misaligned, steered")->capture_default_str();
  cmd->add_option("--seed", c.seed, "Base seed")->capture_default_str();
  cmd->add_option("--config", c.config, "Flat key = value file overriding preset/chain settings");
}

std::pair<mmw::ScenarioPreset, mmw::ChainConfig> resolve(const Common& c) {
  auto preset = mmw::preset_by_name(c.preset);
  mmw::ChainConfig chain;
  if (!c.config.empty()) mmw::apply_config(mmw::load_config(c.config), preset, chain);
  return {preset, chain};
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mmwtwin: OFDM + mmWave beamforming testbed simulator"};
  app.require_subcommand(1);

  unsigned threads = std::max(1U, std::thread::hardware_concurrency());
  app.add_option("--threads", threads, "Worker threads for independent frames");

  Common run_opts;
  std::size_t run_frames = 100;
  std::string run_out;
  auto* run = app.add_subcommand("run", "Run a preset for N frames and write per-frame CSV");
  add_common(run, run_opts);
  run->add_option("--frames", run_frames, "Number of frames")->capture_default_str();
  run->add_option("--out", run_out, "CSV output path (default stdout)");

  Common sweep_opts;
  std::string axis;
  std::vector<double> values;
  std::size_t sweep_frames = 20;
  std::string sweep_out;
  auto* sw = app.add_subcommand("sweep", "Sweep one parameter and write one aggregate row per value");
  add_common(sw, sweep_opts);
  sw->add_option("--axis", axis, "offset_deg | noise_dbm | cfo_hz | threshold")->required();
  sw->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');
  sw->add_option("--frames", sweep_frames, "Frames per value")->capture_default_str();
  sw->add_option("--out", sweep_out, "CSV output path (default stdout)");

  Common dump_opts;
  std::string stage;
  std::string dump_out;
  auto* dump = app.add_subcommand("dump", "Dump one pipeline stage as an int16 IQ file with a .meta sidecar");
  add_common(dump, dump_opts);
  dump->add_option("--stage", stage, "baseband | shaped | quantized | channel-out | matched-filter-out")->required();
  dump->add_option("--out", dump_out, "Output IQ file")->required();

  Common budget_opts;
  bool budget_csv = false;
  auto* budget = app.add_subcommand("budget", "Print the link-budget waypoint table");
  add_common(budget, budget_opts);
  budget->add_flag("--csv", budget_csv, "CSV instead of the plain table");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto [preset, chain] = resolve(run_opts);
      const mmw::Testbed bed(chain);
      const auto t0 = std::chrono::steady_clock::now();
      const auto summary = mmw::run_scenario(bed, preset, run_opts.seed, run_frames, threads);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      emit(mmw::run_csv(summary), run_out);
      std::cerr << preset.name << ": " << mmw::run_summary_text(summary) << " wall_s=" << secs << "\n";
    } else if (*sw) {
      auto [preset, chain] = resolve(sweep_opts);
      const auto ax = mmw::parse_sweep_axis(axis);
      const mmw::Testbed bed(chain);
      const auto rows = mmw::sweep(bed, ax, values, preset, sweep_opts.seed, sweep_frames, threads);
      emit(mmw::sweep_csv(ax, rows), sweep_out);
    } else if (*dump) {
      auto [preset, chain] = resolve(dump_opts);
      const mmw::Testbed bed(chain);
      mmw::dump_stage(bed, stage, preset, dump_opts.seed, dump_out);
      std::cerr << "wrote " << dump_out << " and " << mmw::sidecar_path(dump_out).string() << "\n";
    } else if (*budget) {
      auto [preset, chain] = resolve(budget_opts);
      const auto b = mmw::compute_link_budget(preset.scenario);
      std::cout << (budget_csv ? b.to_csv() : b.to_table());
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
