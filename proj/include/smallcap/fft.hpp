#pragma once
// Minimal iterative radix-2 complex FFT, plus an in-place multidimensional
// wrapper.  All grids in this project have power-of-two sides (4*R^{1/2} with
// even log2 R), so a general-length transform is unnecessary.

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace smallcap {

using cplx = std::complex<double>;

// In-place FFT of length n = 2^k on strided data; sign = -1 forward, +1 inverse
// (inverse is unnormalized; divide by n yourself).
inline void fft_strided(cplx* data, std::size_t n, std::size_t stride, int sign) {
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft: length must be a power of two");
  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i * stride], data[j * stride]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * 3.141592653589793238462643 / static_cast<double>(len);
    const cplx wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        cplx u = data[(i + k) * stride];
        cplx v = data[(i + k + len / 2) * stride] * w;
        data[(i + k) * stride] = u + v;
        data[(i + k + len / 2) * stride] = u - v;
        w *= wlen;
      }
    }
  }
}

// In-place n-dimensional FFT on a dense row-major array of shape G^dims.
inline void fftn(std::vector<cplx>& a, std::size_t G, int dims, int sign) {
  std::size_t total = 1;
  for (int d = 0; d < dims; ++d) total *= G;
  if (a.size() != total) throw std::invalid_argument("fftn: shape mismatch");
  std::vector<cplx> line(G);
  for (int d = 0; d < dims; ++d) {
    std::size_t stride = 1;
    for (int k = d + 1; k < dims; ++k) stride *= G;
    const std::size_t block = stride * G;
    for (std::size_t base = 0; base < total; base += block) {
      for (std::size_t off = 0; off < stride; ++off)
        fft_strided(a.data() + base + off, G, stride, sign);
    }
  }
}

inline void ifftn_normalized(std::vector<cplx>& a, std::size_t G, int dims) {
  fftn(a, G, dims, +1);
  double norm = 1.0;
  for (int d = 0; d < dims; ++d) norm *= static_cast<double>(G);
  for (cplx& v : a) v /= norm;
}

// Signed frequency index for bin k of an N-point transform.
inline std::int64_t fft_freq_index(std::size_t k, std::size_t N) {
  return k < N / 2 ? static_cast<std::int64_t>(k)
                   : static_cast<std::int64_t>(k) - static_cast<std::int64_t>(N);
}

}  // namespace smallcap
