#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "stirap/error.hpp"

namespace stirap {

/// One Gaussian pulse: amplitude envelope sqrt(I) exp(-((t - center)/width)^2).
struct GaussianParams {
  double peak_intensity_tw = 0.0;  // TW/cm^2
  double center_fs = 0.0;
  double width_fs = 1.0;           // 1/e half-width of the amplitude
  double carrier_ev = 0.0;
  double phase = 0.0;              // radians

  void validate() const;
};

/// Field-amplitude envelope (a.u.) as a weighted sum of Gaussians; the Rabi
/// frequency of a transition is its dipole element times this envelope.
class Envelope {
 public:
  struct Term {
    double weight = 1.0;
    double center_fs = 0.0;
    double width_fs = 1.0;
  };

  Envelope() = default;
  Envelope(double amplitude_au, std::vector<Term> terms);
  static Envelope gaussian(double amplitude_au, double center_fs, double width_fs);
  static Envelope from(const GaussianParams& p);

  double operator()(double t_fs) const;
  double amplitude() const { return amplitude_; }
  const std::vector<Term>& terms() const { return terms_; }
  Envelope scaled(double factor) const;

  /// Interval outside which every term is below 1e-30 of its weight.
  std::pair<double, double> support() const;

 private:
  double amplitude_ = 0.0;
  std::vector<Term> terms_;
};

enum class FieldRole { Pump, Stokes, Probe };

struct ControlField {
  Envelope envelope;
  double carrier_ev = 0.0;
  double phase = 0.0;
  FieldRole role = FieldRole::Pump;

  /// envelope(t) cos(ω t + φ), t measured from the common phase origin t = 0.
  double value(double t_fs) const;
};

ControlField make_field(const GaussianParams& p, FieldRole role);

inline double sample_field(const ControlField& f, double t_fs) { return f.value(t_fs); }

struct CompositePulses {
  Envelope pump;
  Envelope stokes;
};

/// Pump  = E_P [G_L sin α + G_R sin β],  Stokes = E_S [G_L cos α + G_R cos β],
/// G_X = exp(-((t - t_X)/γ_X)^2). Amplitudes in a.u.; α, β in [0, π/2].
CompositePulses composite_envelopes(double alpha, double beta, double amp_pump_au, double amp_stokes_au,
                                    double t_left_fs, double t_right_fs, double gamma_left_fs,
                                    double gamma_right_fs);

struct GaussianFit {
  double amplitude_au = 0.0;
  double center_fs = 0.0;
  double width_fs = 0.0;
  double residual = 0.0;  // sum of squared deviations
  int iterations = 0;
  std::vector<double> residual_history;

  double intensity_tw() const;
};

/// Non-convergence of the fit; carries the best parameters found.
class FitError : public NumericError {
 public:
  FitError(const std::string& what, GaussianFit best) : NumericError(what), best_(std::move(best)) {}
  const GaussianFit& best() const { return best_; }

 private:
  GaussianFit best_;
};

/// Amplitude, center and width from the sample moments.
GaussianFit moment_guess(const std::vector<double>& t_fs, const std::vector<double>& y);

/// Damped Gauss-Newton least squares of A exp(-((t-t0)/γ)^2) to samples. Steps
/// that do not lower the residual are rejected, so the history is non-increasing.
GaussianFit fit_gaussian(const std::vector<double>& t_fs, const std::vector<double>& y, const GaussianFit& guess,
                         int max_iterations = 500, double tolerance = 1e-14);
GaussianFit fit_gaussian(const std::vector<double>& t_fs, const std::vector<double>& y);

/// Numerical floor for envelope ratios: values below it count as zero.
inline constexpr double kEnvelopeFloor = 1e-200;

struct BoundaryResiduals {
  double initial = 0.0;  // |Ω_P/Ω_S − tan α| at the earliest point where both exceed the floor
  double final = 0.0;    // |Ω_P/Ω_S − tan β| at the latest such point
};

/// Throws NumericError when no grid point has both envelopes above the floor.
BoundaryResiduals stirap_boundary_residuals(const Envelope& pump, const Envelope& stokes, double alpha, double beta,
                                            const std::vector<double>& t_fs, double floor = kEnvelopeFloor);

/// CSV `t_fs,omega_P,omega_S` of Rabi frequencies (a.u.).
void export_envelopes_csv(const std::filesystem::path& path, const Envelope& pump, const Envelope& stokes,
                          double mu_pump, double mu_stokes, const std::vector<double>& t_fs);

/// n points evenly spaced on [a, b].
std::vector<double> linspace(double a, double b, std::size_t n);

}  // namespace stirap
