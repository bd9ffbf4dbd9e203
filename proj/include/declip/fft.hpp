#pragma once

#include <cstddef>
#include <vector>

namespace declip::fft {

bool is_power_of_two(std::size_t n);

// In-place radix-2 transforms over interleaved complex data
// [re0, im0, re1, im1, ...]. n is the number of complex points and must be a
// power of two. forward_inplace applies e^{-2*pi*i*k*n/N} with no scaling;
// inverse_inplace applies the conjugate kernel and divides by n.
void forward_inplace(double* data, std::size_t n);
void inverse_inplace(double* data, std::size_t n);

// One-sided transform of a real signal: re/im must hold n/2 + 1 values.
void rfft(const double* x, std::size_t n, double* re, double* im);

// Inverse of rfft under the conjugate-symmetry assumption; writes n samples
// (scaling 1/n, so irfft(rfft(x)) == x).
void irfft(const double* re, const double* im, std::size_t n, double* x);

// Convenience overloads on vectors.
void rfft(const std::vector<double>& x, std::vector<double>& re,
          std::vector<double>& im);
std::vector<double> irfft(const std::vector<double>& re,
                          const std::vector<double>& im, std::size_t n);

}  // namespace declip::fft
