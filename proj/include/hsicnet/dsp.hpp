#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "hsicnet/events.hpp"

namespace hsicnet::dsp {

// --- filtering helpers -------------------------------------------------------

// Odd-length windowed-sinc FIR kernels (Hamming window), DC gain 1 for the
// low-pass. Used by the resampler and the event detectors.
std::vector<double> design_lowpass_fir(double cutoff_hz, double fs,
                                       std::size_t taps);
std::vector<double> design_bandpass_fir(double lo_hz, double hi_hz, double fs,
                                        std::size_t taps);

// Same-length convolution with reflect padding; symmetric kernels make this
// zero phase. Kernel length must be odd.
std::vector<double> filter_same(const std::vector<double>& x,
                                const std::vector<double>& kernel);

// --- spectra -----------------------------------------------------------------

struct PowerSpectrum {
  std::vector<double> freqs;  // Hz, strictly increasing from 0
  std::vector<double> power;  // density, units^2 / Hz
};

struct FrequencyBand {
  std::string name;
  double lo_hz = 0.0;  // inclusive
  double hi_hz = 0.0;  // exclusive
};

// Welch power spectral density: Hann-windowed segments, 50% overlap by
// default, one-sided density scaling (sum(power)*df ~ variance for zero-mean
// input). segment_len = 0 picks min(len, 4 s * fs). Throws on empty input,
// non-positive fs, or overlap outside [0, 1).
PowerSpectrum welch_psd(const std::vector<double>& samples, double fs,
                        std::size_t segment_len = 0, double overlap = 0.5);

// Fraction of total power per band; the denominator is the power inside the
// covering range [min lo, max hi) of the supplied bands. Throws a numeric
// error when that total is zero.
std::vector<double> relative_bandpower(const PowerSpectrum& psd,
                                       const std::vector<FrequencyBand>& bands);

// Standard EEG bands over 0.5-30 Hz: Delta, Theta, Alpha, Beta.
const std::vector<FrequencyBand>& eeg_bands();

// --- ECG ---------------------------------------------------------------------

// QRS detection in the Pan-Tompkins spirit: 5-20 Hz band-pass, squared
// derivative, 150 ms moving-window integration, adaptive signal/noise
// thresholds, 200 ms refractory, peak refined on the band-passed trace.
// Needs at least one second of signal. Offset-invariant by construction.
EventList detect_r_peaks(const std::vector<double>& samples, double fs);

// --- complexity measures -------------------------------------------------------

// Sample entropy -ln(A/B) with Chebyshev distance, tolerance r*std(series),
// self-matches excluded. nullopt when no template pair matches (A or B zero).
// Requires len >= m + 2 and r > 0.
std::optional<double> sample_entropy(const std::vector<double>& series,
                                     std::size_t m, double r);

// Coarse-grains by non-overlapping means (scale tau) then applies
// sample_entropy per scale. Scale 1 equals sample_entropy exactly.
// Requires max(scale)*(m+2) <= len.
std::vector<std::optional<double>> multiscale_entropy(
    const std::vector<double>& series, const std::vector<std::size_t>& scales,
    std::size_t m, double r);

// Higuchi fractal dimension: least-squares slope of log mean curve length
// against log(1/k), k = 1..k_max. nullopt for constant series. Requires
// len >= 2*k_max and k_max >= 2.
std::optional<double> higuchi_fd(const std::vector<double>& series,
                                 std::size_t k_max);

// --- correlation ---------------------------------------------------------------

struct CorrelationResult {
  // Symmetric Pearson matrix over the kept rows, unit diagonal.
  std::vector<std::vector<double>> matrix;
  std::vector<std::size_t> kept_rows;     // indices into the input
  std::vector<std::size_t> dropped_rows;  // zero-variance rows
};

// Pearson correlations across rows (each row one window, equal lengths).
// Zero-variance rows are dropped and reported; fewer than two valid rows is
// a numeric error.
CorrelationResult correlation_matrix(
    const std::vector<std::vector<double>>& windows);

}  // namespace hsicnet::dsp
