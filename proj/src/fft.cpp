#include "declip/fft.hpp"

#include <cmath>
#include <cstdint>
#include <unordered_map>

#include "declip/errors.hpp"

namespace declip::fft {
namespace {

constexpr double kTau = 6.283185307179586476925286766559;

struct Tables {
  std::vector<std::uint32_t> bitrev;  // permutation of [0, n)
  std::vector<double> tw;             // e^{-i*tau*k/n}, k < n/2, interleaved
};

const Tables& tables_for(std::size_t n) {
  thread_local std::unordered_map<std::size_t, Tables> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  Tables t;
  t.bitrev.resize(n);
  std::uint32_t log2n = 0;
  while ((std::size_t{1} << log2n) < n) ++log2n;
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t r = 0;
    for (std::uint32_t b = 0; b < log2n; ++b)
      r |= ((i >> b) & 1u) << (log2n - 1 - b);
    t.bitrev[i] = r;
  }
  t.tw.resize(n);  // n/2 complex values
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double a = -kTau * static_cast<double>(k) / static_cast<double>(n);
    t.tw[2 * k] = std::cos(a);
    t.tw[2 * k + 1] = std::sin(a);
  }
  return cache.emplace(n, std::move(t)).first->second;
}

void check_size(std::size_t n) {
  if (!is_power_of_two(n))
    throw InvalidArgument("fft: size " + std::to_string(n) +
                          " is not a power of two");
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void forward_inplace(double* data, std::size_t n) {
  check_size(n);
  if (n == 1) return;
  const Tables& t = tables_for(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = t.bitrev[i];
    if (i < j) {
      std::swap(data[2 * i], data[2 * j]);
      std::swap(data[2 * i + 1], data[2 * j + 1]);
    }
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len >> 1;
    const std::size_t step = n / len;
    for (std::size_t base = 0; base < n; base += len) {
      const double* w = t.tw.data();
      for (std::size_t j = 0; j < half; ++j) {
        const double wr = w[2 * j * step];
        const double wi = w[2 * j * step + 1];
        double* a = data + 2 * (base + j);
        double* b = data + 2 * (base + j + half);
        const double vr = b[0] * wr - b[1] * wi;
        const double vi = b[0] * wi + b[1] * wr;
        b[0] = a[0] - vr;
        b[1] = a[1] - vi;
        a[0] += vr;
        a[1] += vi;
      }
    }
  }
}

void inverse_inplace(double* data, std::size_t n) {
  check_size(n);
  for (std::size_t i = 0; i < n; ++i) data[2 * i + 1] = -data[2 * i + 1];
  forward_inplace(data, n);
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    data[2 * i] *= inv;
    data[2 * i + 1] *= -inv;
  }
}

void rfft(const double* x, std::size_t n, double* re, double* im) {
  check_size(n);
  thread_local std::vector<double> buf;
  buf.assign(2 * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) buf[2 * i] = x[i];
  forward_inplace(buf.data(), n);
  const std::size_t bins = n / 2 + 1;
  for (std::size_t k = 0; k < bins; ++k) {
    re[k] = buf[2 * k];
    im[k] = buf[2 * k + 1];
  }
}

void irfft(const double* re, const double* im, std::size_t n, double* x) {
  check_size(n);
  thread_local std::vector<double> buf;
  buf.assign(2 * n, 0.0);
  const std::size_t bins = n / 2 + 1;
  for (std::size_t k = 0; k < bins; ++k) {
    buf[2 * k] = re[k];
    buf[2 * k + 1] = im[k];
  }
  for (std::size_t k = bins; k < n; ++k) {
    buf[2 * k] = re[n - k];
    buf[2 * k + 1] = -im[n - k];
  }
  inverse_inplace(buf.data(), n);
  for (std::size_t i = 0; i < n; ++i) x[i] = buf[2 * i];
}

void rfft(const std::vector<double>& x, std::vector<double>& re,
          std::vector<double>& im) {
  const std::size_t bins = x.size() / 2 + 1;
  re.resize(bins);
  im.resize(bins);
  rfft(x.data(), x.size(), re.data(), im.data());
}

std::vector<double> irfft(const std::vector<double>& re,
                          const std::vector<double>& im, std::size_t n) {
  if (re.size() != n / 2 + 1 || im.size() != n / 2 + 1)
    throw InvalidArgument("irfft: spectrum size does not match n/2+1");
  std::vector<double> x(n);
  irfft(re.data(), im.data(), n, x.data());
  return x;
}

}  // namespace declip::fft
