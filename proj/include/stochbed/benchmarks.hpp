#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "stochbed/problem.hpp"
#include "stochbed/rng.hpp"
#include "stochbed/types.hpp"

namespace stochbed {

// --- synthetic 1D testbed ---

double synthetic1d_mean(double x);
double synthetic1d_noise_sd(double x);
double synthetic1d_sample(double x, std::uint64_t seed);

/// Quadratic mean with input-dependent noise, standard normal input around 5,
/// threshold 9.
ProblemSpec make_synthetic1d();

// --- four-branch 2D testbed ---

/// Negated minimum of the four branch functions, so that large values are the
/// rare ones under a standard normal input.
double fourbranch_mean(double x1, double x2);
/// Response mean: the margin above the failure level, negated; crosses zero
/// on the failure boundary.
double fourbranch_response_mean(double x1, double x2);
double fourbranch_noise_sd(double x1, double x2);
double fourbranch_sample(double x1, double x2, std::uint64_t seed);

ProblemSpec make_fourbranch2d();

// --- ship roll pipeline ---

/// Narrowband Gaussian wavenumber spectrum and the sampling grid of the
/// synthesized record.
struct SpectrumConfig {
  double hs = 12.0;            ///< significant wave height, m
  double k0 = 0.018;           ///< carrier wavenumber, 1/m
  double bandwidth = 9.0e-4;   ///< spectral width K, 1/m
  double gravity = 9.81;       ///< m/s^2
  double duration = 540000.0;  ///< record length, s (150 h)
  double dt = 0.1;             ///< sample spacing, s

  /// Carrier period 2*pi/omega(k0) under the deep-water dispersion
  /// omega = sqrt(g k).
  double peak_period() const;

  /// Spectral density F(k).
  double spectrum(double k) const;
};

void check_spectrum(const SpectrumConfig& cfg);

/// Elevation record together with its analytic-signal envelope. dt and hs are
/// carried along because group extraction needs both.
struct WaveField {
  Vector eta;
  Vector rho;
  double dt = 0.1;
  double hs = 12.0;
  double peak_period = 0.0;

  double duration() const { return dt * static_cast<double>(eta.size()); }
};

/// Superpose independent uniform-phase harmonics on the FFT frequency grid,
/// with amplitudes a_m = sqrt(2 F(k_m) dk_m) over the band k0 +- 5K. The
/// envelope is the modulus of the analytic signal, so |eta| <= rho holds
/// sample by sample.
WaveField synth_wave_field(const SpectrumConfig& cfg, std::uint64_t seed);

/// Envelope of a real record: modulus of the FFT-based analytic signal.
Vector hilbert_envelope(const Vector& eta);

/// One wave group: envelope peak time, height, Gaussian fit of the half-width
/// and the window of record it owns. Times are in seconds from record start.
struct WaveGroup {
  double t_c = 0.0;
  double amplitude = 0.0;
  double length = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
};

/// Split the record at local minima of the envelope, absorb windows whose
/// peak stays below 0.25 hs into the neighbor across the shallower cut, then
/// fit A exp(-(t-t_c)^2 / (2 L^2)) to each surviving window. Windows tile the
/// record; a record with no peak above threshold yields an empty catalog.
std::vector<WaveGroup> extract_groups(const WaveField& field);

/// Product-Gaussian kernel density over (L, A) pairs.
struct GroupDensity {
  Matrix points;     ///< n x 2, columns (L, A)
  Vector bandwidth;  ///< per-coordinate kernel width
  Matrix support;    ///< 2 x 2, rows (lo, hi) per coordinate

  double density(const Vector& x) const;
  Vector sample(Rng& rng) const;
};

GroupDensity group_density(const std::vector<WaveGroup>& catalog);

/// Roll equation coefficients. Defaults follow the softening-spring vessel
/// with parametric and direct wave forcing at heading pi/6.
struct RollParams {
  double alpha1 = 0.19;
  double alpha2 = 0.06;
  double beta1 = 0.04;
  double beta2 = -0.1;
  double eps1 = 0.020;
  double eps2 = 0.004;
  double phi = 3.14159265358979323846 / 6.0;
};

struct RollBlowup : std::runtime_error {
  RollBlowup(const std::string& what, double t) : std::runtime_error(what), time(t) {}
  double time;
};

/// Integrate the roll equation with classical RK4 against a sampled forcing
/// record, `substeps` integrator steps per forcing sample with the forcing
/// interpolated linearly in between. Returns the roll angle on the forcing
/// grid. Throws RollBlowup when the state stops being finite.
Vector roll_simulate(const Vector& eta, double dt_eta, double xi0, double xidot0,
                     const RollParams& params, int substeps = 1);

struct ShipItrConfig {
  int neighbors = 10;        ///< candidate groups per query
  double tolerance = 1.0;    ///< max standardized distance to the nearest group
  int upstream_groups = 5;   ///< warm-up windows integrated before the target
  bool use_abs = false;      ///< respond with max |xi| instead of max xi
};

/// Stochastic response at (L, A): pick one of the nearest catalog groups,
/// integrate the recorded forcing from a few windows upstream, and return the
/// roll maximum over the chosen group's window. The softening spring can
/// escape (capsize) in heavy seas: a capsize during warm-up restarts the ship
/// from rest at the next window boundary, and a capsize inside the target
/// window returns the vanishing-stability angle sqrt(beta1/|beta2|).
double ship_itr_sample(double length, double amplitude,
                       const std::vector<WaveGroup>& catalog, const WaveField& field,
                       std::uint64_t seed, const RollParams& params = {},
                       const ShipItrConfig& cfg = {});

/// Ship roll problem plus the record and catalog it is built on, kept alive
/// for exact reference computations against the same realization.
struct ShipProblem {
  ProblemSpec spec;
  std::shared_ptr<const WaveField> field;
  std::shared_ptr<const std::vector<WaveGroup>> catalog;
  std::shared_ptr<const GroupDensity> density;
};

/// Synthesize (or reload from STOCHBED_CACHE_DIR) the wave record, extract
/// the group catalog, and wire the (L, A) problem: KDE input density,
/// empirical-marginal + Gaussian-copula unit map, catalog importance
/// quadrature, threshold 0.3 rad.
ShipProblem make_shiproll(const SpectrumConfig& cfg, std::uint64_t field_seed,
                          const RollParams& params = {}, const ShipItrConfig& itr = {});

void save_wave_field(const WaveField& field, const std::string& path);
WaveField load_wave_field(const std::string& path);
void save_catalog(const std::vector<WaveGroup>& catalog, const std::string& path);
std::vector<WaveGroup> load_catalog(const std::string& path);

}  // namespace stochbed
