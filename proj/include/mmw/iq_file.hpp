#pragma once

#include <filesystem>
#include <string>

#include "mmw/frontend.hpp"

namespace mmw {

// Stage dumps: little-endian int16 interleaved I/Q (the QuantizedIq word
// layout) plus a "<path>.meta" text sidecar of key = value lines.
struct IqDump {
  std::string stage;
  double sample_rate_hz = 0.0;
  QuantizedIq data;

  /// Samples restored to their original amplitude (word / 2^15 * full_scale).
  [[nodiscard]] IqBuffer samples() const;
};

std::filesystem::path sidecar_path(const std::filesystem::path& path);

void write_iq_file(const std::filesystem::path& path, const IqDump& dump);
IqDump read_iq_file(const std::filesystem::path& path);

}  // namespace mmw
