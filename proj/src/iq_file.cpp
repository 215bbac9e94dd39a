#include "mmw/iq_file.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace mmw {

IqBuffer IqDump::samples() const {
  IqBuffer b = dequantize(data, sample_rate_hz);
  for (auto& s : b.samples()) s *= data.full_scale;
  return b;
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".meta";
  return p;
}

void write_iq_file(const std::filesystem::path& path, const IqDump& dump) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_iq_file: cannot open " + path.string());
  std::vector<char> bytes;
  bytes.reserve(dump.data.words.size() * 2);
  for (std::int16_t w : dump.data.words) {
    const auto u = static_cast<std::uint16_t>(w);
    bytes.push_back(static_cast<char>(u & 0xFFU));
    bytes.push_back(static_cast<char>(u >> 8));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));

  std::ofstream meta(sidecar_path(path));
  if (!meta) throw std::runtime_error("write_iq_file: cannot open sidecar for " + path.string());
  meta << std::setprecision(17);
  meta << "format = int16_le_iq\n";
  meta << "stage = " << dump.stage << "\n";
  meta << "sample_rate_hz = " << dump.sample_rate_hz << "\n";
  meta << "full_scale = " << dump.data.full_scale << "\n";
  meta << "samples = " << dump.data.sample_count() << "\n";
}

IqDump read_iq_file(const std::filesystem::path& path) {
  std::ifstream meta(sidecar_path(path));
  if (!meta) throw std::runtime_error("read_iq_file: missing sidecar for " + path.string());
  std::map<std::string, std::string> kv;
  for (std::string line; std::getline(meta, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  if (kv["format"] != "int16_le_iq") throw std::runtime_error("read_iq_file: unsupported format");

  IqDump dump;
  dump.stage = kv["stage"];
  dump.sample_rate_hz = std::stod(kv.at("sample_rate_hz"));
  dump.data.full_scale = std::stod(kv.at("full_scale"));

  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_iq_file: cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 4 != 0) throw std::runtime_error("read_iq_file: truncated sample data");
  dump.data.words.resize(bytes.size() / 2);
  for (std::size_t i = 0; i < dump.data.words.size(); ++i) {
    const auto u = static_cast<std::uint16_t>(bytes[2 * i] | (bytes[2 * i + 1] << 8));
    dump.data.words[i] = static_cast<std::int16_t>(u);
  }
  if (dump.data.sample_count() != std::stoull(kv.at("samples"))) {
    throw std::runtime_error("read_iq_file: sample count does not match sidecar");
  }
  return dump;
}

}  // namespace mmw
