#pragma once

#include <functional>
#include <span>

#include "vortexlab/geometry.hpp"

namespace vortexlab::spectral {

// In-place unnormalized DFT along one real axis (sign -1 forward, +1 backward).
void fft_axis(std::span<cplx> f, const TorusGeometry& geom, int axis, int sign);
// In-place unnormalized n-dimensional DFT.
void fft_full(std::span<cplx> f, const TorusGeometry& geom, int sign);

// Spectral derivative d/dx_axis in coordinate units.
//
// `charge` is the twist of the function in the complex plane containing the
// axis: a section of charge q satisfies
//   f(x + L, y) = exp(2 pi i q y / L) f(x, y),   f(x, y + L) = f(x, y).
// For q != 0 the x-derivative is taken on the magnetic-translation unfolding:
// after a DFT in y the coefficients obey c_k(x + L) = c_{k-q}(x), so each
// residue class of k mod |q| is one smooth periodic function on a line of
// length (N/|q|) L, which is differentiated spectrally. N must be divisible by |q|.
Field deriv(std::span<const cplx> f, const TorusGeometry& geom, int axis, int charge = 0);

// Fourier multiplier on a periodic field: f -> IFFT(m(k) * FFT(f)), k the
// angular wavenumber vector (coordinate units).
Field multiplier(std::span<const cplx> f, const TorusGeometry& geom,
                 const std::function<cplx(std::span<const double>)>& m);

// Coordinate Laplacian sum_a d^2/dx_a^2 of a periodic field.
Field laplacian(std::span<const cplx> f, const TorusGeometry& geom);

// Solves (coordinate) Laplacian u = rhs with mean(u) = 0; the mean of rhs is dropped.
Field solve_poisson(std::span<const cplx> rhs, const TorusGeometry& geom);

// Per-shell power of a periodic field: fraction of spectral mass with
// max_a |mode_a| >= cutoff.
double spectral_mass_above(std::span<const cplx> f, const TorusGeometry& geom, int cutoff);

// Number of worker threads FFTW may use (VORTEXLAB_THREADS); planning is serialized.
void set_threads(int n);

}  // namespace vortexlab::spectral
