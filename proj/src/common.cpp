#include "mmw/common.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace mmw {

IqBuffer::IqBuffer(std::vector<Complex> samples, double sample_rate_hz)
    : samples_(std::move(samples)), rate_hz_(sample_rate_hz) {
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    throw std::invalid_argument("IqBuffer: sample rate must be positive");
  }
}

bool IqBuffer::all_finite() const {
  return std::all_of(samples_.begin(), samples_.end(), [](const Complex& s) {
    return std::isfinite(s.real()) && std::isfinite(s.imag());
  });
}

double IqBuffer::energy() const {
  double e = 0.0;
  for (const auto& s : samples_) e += std::norm(s);
  return e;
}

double IqBuffer::mean_power() const {
  return samples_.empty() ? 0.0 : energy() / static_cast<double>(samples_.size());
}

FrameLayout FrameLayout::standard() {
  FrameLayout layout;

  std::vector<int> virt;
  virt.push_back(0);
  for (int sc = 27; sc <= 31; ++sc) virt.push_back(subcarrier_to_bin(sc));
  for (int sc = -32; sc <= -27; ++sc) virt.push_back(subcarrier_to_bin(sc));
  std::sort(virt.begin(), virt.end());
  std::copy(virt.begin(), virt.end(), layout.virtual_bins.begin());

  const std::array<int, 4> pilot_sc{-21, -7, 7, 21};
  for (std::size_t i = 0; i < pilot_sc.size(); ++i) layout.pilot_bins[i] = subcarrier_to_bin(pilot_sc[i]);

  // Data subcarriers in ascending subcarrier order -26..26.
  std::size_t d = 0;
  for (int sc = -26; sc <= 26; ++sc) {
    if (sc == 0 || std::abs(sc) == 7 || std::abs(sc) == 21) continue;
    layout.data_bins[d++] = subcarrier_to_bin(sc);
  }

  layout.validate();
  return layout;
}

bool FrameLayout::is_virtual(int bin) const {
  return std::find(virtual_bins.begin(), virtual_bins.end(), bin) != virtual_bins.end();
}

void FrameLayout::validate() const {
  if (frame_len() != 480) throw std::logic_error("FrameLayout: frame length is not 480 samples");
  if (payload_fft != 64 || lts_len != 64) throw std::logic_error("FrameLayout: expected 64-point symbols");

  std::array<int, 64> seen{};
  auto mark = [&](auto const& set) {
    for (int b : set) {
      if (b < 0 || b >= 64) throw std::logic_error("FrameLayout: bin out of range");
      ++seen[static_cast<std::size_t>(b)];
    }
  };
  mark(data_bins);
  mark(pilot_bins);
  mark(virtual_bins);
  if (!std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; })) {
    throw std::logic_error("FrameLayout: subcarrier sets do not partition 0..63");
  }
}

IqBuffer qpsk_map(std::span<const std::uint8_t> bits, double sample_rate_hz) {
  if (bits.size() % 2 != 0) throw std::invalid_argument("qpsk_map: odd number of bits");
  const double a = 1.0 / std::sqrt(2.0);
  std::vector<Complex> out;
  out.reserve(bits.size() / 2);
  for (std::size_t i = 0; i < bits.size(); i += 2) {
    out.emplace_back(bits[i] ? -a : a, bits[i + 1] ? -a : a);
  }
  return {std::move(out), sample_rate_hz};
}

BitVector qpsk_demap(std::span<const Complex> symbols) {
  BitVector bits;
  bits.reserve(symbols.size() * 2);
  for (const auto& s : symbols) {
    bits.push_back(s.real() < 0.0 ? 1 : 0);
    bits.push_back(s.imag() < 0.0 ? 1 : 0);
  }
  return bits;
}

BitVector prbs_bits(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 gen(seed);
  BitVector bits(n);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 64 == 0) word = gen();
    bits[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1U);
  }
  return bits;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  auto splitmix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return splitmix(splitmix(splitmix(seed) ^ stream) ^ index);
}

double power_db(double linear) {
  return 10.0 * std::log10(std::max(linear, 1e-300));
}

void mix_in_place(std::span<Complex> x, double cycles_per_sample, double phase_rad) {
  constexpr std::size_t kBlock = 256;
  const double two_pi = 2.0 * std::numbers::pi;
  const Complex step = std::polar(1.0, two_pi * cycles_per_sample);
  for (std::size_t start = 0; start < x.size(); start += kBlock) {
    // Fractional cycles at the block start, keeping the product's rounding error.
    const double whole = cycles_per_sample * static_cast<double>(start);
    const double cyc = (whole - std::floor(whole)) + std::fma(cycles_per_sample, static_cast<double>(start), -whole);
    const Complex r0 = std::polar(1.0, two_pi * cyc + phase_rad);
    double rr = r0.real();
    double ri = r0.imag();
    const std::size_t end = std::min(x.size(), start + kBlock);
    for (std::size_t n = start; n < end; ++n) {
      const double xr = x[n].real();
      const double xi = x[n].imag();
      x[n] = {xr * rr - xi * ri, xr * ri + xi * rr};
      const double nr = rr * step.real() - ri * step.imag();
      ri = rr * step.imag() + ri * step.real();
      rr = nr;
    }
  }
}

}  // namespace mmw
