#include "openqs/ramsey.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <thread>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "openqs/errors.hpp"

namespace oqs {

namespace {

constexpr Complex kI{0.0, 1.0};
constexpr double kPi = 3.14159265358979323846;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

// diag(e^{-i dw t / 2}, e^{i dw t / 2})
CMatrix frame(double delta_omega, double t) {
  CMatrix w = CMatrix::Zero(2, 2);
  w(0, 0) = std::exp(-kI * (0.5 * delta_omega * t));
  w(1, 1) = std::exp(kI * (0.5 * delta_omega * t));
  return w;
}

// Rotating-frame propagator for H_rot = [[-dw/2, -U], [-U*, dw/2]].
CMatrix rabi(const RamseyDerived& d, Complex u, double s) {
  CMatrix h(2, 2);
  h << -0.5 * d.delta_omega, -u, -std::conj(u), 0.5 * d.delta_omega;
  const double w = d.big_omega;
  const double sinc = w == 0.0 ? s : std::sin(w * s) / w;
  return std::cos(w * s) * identity(2) - kI * sinc * h;
}

CMatrix hermitize(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

CMatrix pulse_raw(const CMatrix& f, double tau, const RamseyDerived& d, Complex u, double t_start) {
  const CMatrix p = frame(d.delta_omega, t_start + tau) * rabi(d, u, tau) * frame(d.delta_omega, t_start).adjoint();
  return hermitize(p * f * p.adjoint());
}

CMatrix flight(const CMatrix& f, double t, Complex lambda, Theory theory) {
  if (theory == Theory::Standard) return f;
  CMatrix m = f;
  const Complex decay = std::exp(-lambda * t);
  m(0, 1) *= decay;
  m(1, 0) *= std::conj(decay);
  return m;
}

// No state checks: the transit-time integral also visits T < 0, where the
// modified flight is an analytic continuation rather than a physical state.
double compose(const RamseyConfig& config, const RamseyDerived& d, double t_free, Theory theory) {
  const CMatrix f1 = pulse_raw(CoefficientMatrix::ground().matrix(), config.tau, d, config.u_eg, 0.0);
  const CMatrix f2 = flight(f1, t_free, config.lambda_tilde_eg, theory);
  return pulse_raw(f2, config.tau, d, config.u_eg, config.tau + t_free)(0, 0).real();
}

void require_finite(double x, const char* field) {
  if (!std::isfinite(x)) raise(ErrorKind::InvalidArgument, std::string("field '") + field + "' is not finite");
}

void require_nonnegative(double x, const char* field) {
  require_finite(x, field);
  if (x < 0.0) raise(ErrorKind::InvalidArgument, std::string("field '") + field + "' must be >= 0, got " + fmt(x));
}

}  // namespace

std::string to_string(Theory theory) { return theory == Theory::Standard ? "standard" : "modified"; }

Theory theory_from_string(const std::string& name) {
  if (name == "standard") return Theory::Standard;
  if (name == "modified") return Theory::Modified;
  raise(ErrorKind::InvalidArgument, "unknown theory '" + name + "' (expected standard or modified)");
}

void RamseyConfig::validate() const {
  require_finite(e_g, "e_g");
  require_finite(e_e, "e_e");
  if (e_e <= e_g) raise(ErrorKind::InvalidArgument, "field 'e_e' must exceed 'e_g'");
  require_finite(u_eg.real(), "u_eg");
  require_finite(u_eg.imag(), "u_eg");
  require_finite(omega, "omega");
  require_nonnegative(tau, "tau");
  require_nonnegative(t_free, "t_free");
  require_nonnegative(t0, "t0");
  require_nonnegative(sigma, "sigma");
  require_nonnegative(lambda_tilde_eg.real(), "lambda_tilde_eg.re");
  require_finite(lambda_tilde_eg.imag(), "lambda_tilde_eg.im");
}

RamseyDerived derive(const RamseyConfig& config) {
  RamseyDerived d;
  d.delta_omega = config.omega - (config.e_e - config.e_g);
  d.big_omega = std::hypot(0.5 * d.delta_omega, std::abs(config.u_eg));
  return d;
}

CoefficientMatrix::CoefficientMatrix() : CoefficientMatrix(CoefficientMatrix::ground()) {}

CoefficientMatrix::CoefficientMatrix(const CMatrix& f) {
  if (f.rows() != 2 || f.cols() != 2) raise(ErrorKind::DimensionMismatch, "coefficient matrix must be 2x2");
  if (!f.allFinite()) raise(ErrorKind::InvalidState, "coefficient matrix is not finite");
  if (hermiticity_residual(f) > 1e-10) {
    raise(ErrorKind::InvalidState, "coefficient matrix is not Hermitian (residual " + fmt(hermiticity_residual(f)) + ")");
  }
  const double ee = f(0, 0).real();
  const double gg = f(1, 1).real();
  if (std::abs(ee + gg - 1.0) > 1e-10) raise(ErrorKind::InvalidState, "coefficient trace is " + fmt(ee + gg));
  if (ee < -1e-10 || gg < -1e-10 || ee > 1.0 + 1e-10 || gg > 1.0 + 1e-10) {
    raise(ErrorKind::InvalidState, "populations outside [0, 1]");
  }
  f_ = hermitize(f);
}

CoefficientMatrix CoefficientMatrix::ground() {
  CMatrix f = CMatrix::Zero(2, 2);
  f(1, 1) = 1.0;
  return CoefficientMatrix(f);
}

CoefficientMatrix CoefficientMatrix::excited() {
  CMatrix f = CMatrix::Zero(2, 2);
  f(0, 0) = 1.0;
  return CoefficientMatrix(f);
}

CoefficientMatrix pulse_closed_form(const CoefficientMatrix& f_init, double tau, const RamseyDerived& derived,
                                    Complex u_eg, double t_start) {
  if (!(tau >= 0.0) || !std::isfinite(tau)) raise(ErrorKind::InvalidArgument, "pulse duration must be finite and >= 0");
  if (tau == 0.0) return f_init;
  return CoefficientMatrix(pulse_raw(f_init.matrix(), tau, derived, u_eg, t_start));
}

FamilyConstants ground_start_constants(const RamseyDerived& derived) {
  if (derived.big_omega == 0.0) raise(ErrorKind::DegenerateFit, "Omega = 0 leaves the integration constants undetermined");
  return {0.0, 0.0, 0.5 * derived.delta_omega, 1.0 / derived.big_omega};
}

CoefficientMatrix family_pulse(const FamilyConstants& c, double t, const RamseyDerived& derived, Complex u_eg) {
  const double w = derived.big_omega;
  if (w == 0.0) raise(ErrorKind::DegenerateFit, "Omega = 0 leaves the integration constants undetermined");
  const double dw = derived.delta_omega;
  const double r2 = c.r * c.r;
  const double u2 = std::norm(u_eg);
  const double phase = 2.0 * w * t + 2.0 * c.b;
  const double a2 = 1.0 + c.a * c.a;
  CMatrix f(2, 2);
  f(1, 1) = 0.5 * r2 * (a2 * (w * w + 0.25 * dw * dw) + u2 * std::cos(phase));
  f(0, 0) = 0.5 * r2 * u2 * (a2 - std::cos(phase));
  f(1, 0) = -0.5 * r2 * std::exp(kI * (dw * t)) * std::conj(u_eg) *
            (c.d - 0.5 * dw * std::cos(phase) + kI * (w * std::sin(phase)));
  f(0, 1) = std::conj(f(1, 0));
  return CoefficientMatrix(f);
}

CoefficientMatrix rwa_ode(const CoefficientMatrix& f_init, double tau, const RamseyDerived& derived, Complex u_eg,
                          double dt, double t_start) {
  if (!(dt > 0.0) || !std::isfinite(dt)) raise(ErrorKind::InvalidArgument, "step must be positive");
  if (!(tau >= 0.0) || !std::isfinite(tau)) raise(ErrorKind::InvalidArgument, "pulse duration must be finite and >= 0");
  if (derived.big_omega > 0.0 && dt > (1e-2 / derived.big_omega) * (1.0 + 1e-12)) {
    raise(ErrorKind::StepTooLarge, "dt = " + fmt(dt) + " exceeds 1e-2 / Omega = " + fmt(1e-2 / derived.big_omega));
  }
  if (tau == 0.0) return f_init;
  const double dw = derived.delta_omega;
  const auto rhs = [&](double t, const CMatrix& f) {
    CMatrix v = CMatrix::Zero(2, 2);
    v(0, 1) = -u_eg * std::exp(-kI * (dw * t));
    v(1, 0) = std::conj(v(0, 1));
    CMatrix out = -kI * (v * f - f * v);
    return out;
  };
  const auto n = static_cast<long>(std::ceil(tau / dt - 1e-9));
  const double h = tau / static_cast<double>(n);
  CMatrix f = f_init.matrix();
  for (long k = 0; k < n; ++k) {
    const double t = t_start + static_cast<double>(k) * h;
    const CMatrix k1 = rhs(t, f);
    const CMatrix k2 = rhs(t + 0.5 * h, f + 0.5 * h * k1);
    const CMatrix k3 = rhs(t + 0.5 * h, f + 0.5 * h * k2);
    const CMatrix k4 = rhs(t + h, f + h * k3);
    f += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return CoefficientMatrix(hermitize(f));
}

std::vector<TrajectoryPoint> full_ode(const CMatrix& h0, const CMatrix& u, double omega, const CMatrix& f_init,
                                      double t_span, double dt, int stride) {
  require_hermitian(h0, "H_0");
  const int d = static_cast<int>(h0.rows());
  if (u.rows() != d || u.cols() != d || f_init.rows() != d || f_init.cols() != d) {
    raise(ErrorKind::DimensionMismatch, "U and f must match H_0");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) raise(ErrorKind::InvalidArgument, "step must be positive");
  if (!(t_span >= 0.0) || !std::isfinite(t_span)) raise(ErrorKind::InvalidArgument, "time span must be finite and >= 0");
  if (stride < 1) raise(ErrorKind::InvalidArgument, "stride must be >= 1");
  if (omega != 0.0 && dt > (0.05 / std::abs(omega)) * (1.0 + 1e-12)) {
    raise(ErrorKind::StepTooLarge, "dt = " + fmt(dt) + " exceeds 0.05 / omega = " + fmt(0.05 / std::abs(omega)));
  }

  const HermEig eig = herm_eig(h0);
  CMatrix q(d, d);
  RVector e(d);
  for (int k = 0; k < d; ++k) {
    q.col(k) = eig.vectors.col(d - 1 - k);
    e(k) = eig.values(d - 1 - k);
  }
  const CMatrix ub = q.adjoint() * u * q;

  const auto phases = [&](double t) {
    CMatrix p(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) p(i, j) = std::exp(kI * ((e(i) - e(j)) * t));
    return p;
  };
  const auto rhs = [&](double t, const CMatrix& f) {
    const CMatrix hp = -ub * std::exp(-kI * (omega * t)) - ub.adjoint() * std::exp(kI * (omega * t));
    const CMatrix hi = hp.cwiseProduct(phases(t));
    CMatrix out = -kI * (hi * f - f * hi);
    return out;
  };
  const auto point = [&](double t, const CMatrix& f) {
    return TrajectoryPoint{t, f, f.cwiseProduct(phases(-t))};
  };

  const auto n = t_span == 0.0 ? 0L : static_cast<long>(std::ceil(t_span / dt - 1e-9));
  const double h = n == 0 ? 0.0 : t_span / static_cast<double>(n);
  std::vector<TrajectoryPoint> out;
  CMatrix f = f_init;
  out.push_back(point(0.0, f));
  for (long k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * h;
    const CMatrix k1 = rhs(t, f);
    const CMatrix k2 = rhs(t + 0.5 * h, f + 0.5 * h * k1);
    const CMatrix k3 = rhs(t + 0.5 * h, f + 0.5 * h * k2);
    const CMatrix k4 = rhs(t + h, f + h * k3);
    f += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if ((k + 1) % stride == 0 || k + 1 == n) out.push_back(point(static_cast<double>(k + 1) * h, f));
  }
  return out;
}

CoefficientMatrix free_flight(const CoefficientMatrix& f, double t, Complex lambda_tilde_eg, Theory theory) {
  if (!(t >= 0.0) || !std::isfinite(t)) raise(ErrorKind::InvalidArgument, "free-flight time must be finite and >= 0");
  return CoefficientMatrix(flight(f.matrix(), t, lambda_tilde_eg, theory));
}

double protocol_at(const RamseyConfig& config, double t_free, Theory theory) {
  config.validate();
  require_nonnegative(t_free, "t_free");
  return compose(config, derive(config), t_free, theory);
}

double protocol(const RamseyConfig& config, Theory theory) { return protocol_at(config, config.t_free, theory); }

double Fringe::at(double t) const { return baseline + (amplitude * std::exp(rate * t)).real(); }

double Fringe::gaussian_average(double t0, double sigma) const {
  const double out = baseline + (amplitude * std::exp(rate * t0 + rate * rate * (0.25 * sigma * sigma))).real();
  if (!std::isfinite(out)) raise(ErrorKind::Overflow, "Gaussian average of the fringe is not finite");
  return out;
}

Fringe fringe(const RamseyConfig& config, Theory theory) {
  config.validate();
  const RamseyDerived d = derive(config);
  const auto f1 = pulse_closed_form(CoefficientMatrix::ground(), config.tau, d, config.u_eg, 0.0);
  const CMatrix v = rabi(d, config.u_eg, config.tau);
  Fringe fr;
  fr.baseline = std::norm(v(0, 0)) * f1.ee() + std::norm(v(0, 1)) * f1.gg();
  fr.amplitude = 2.0 * v(0, 0) * std::conj(v(0, 1)) * std::exp(kI * (d.delta_omega * config.tau)) * f1.eg();
  fr.rate = kI * d.delta_omega;
  if (theory == Theory::Modified) fr.rate -= config.lambda_tilde_eg;
  return fr;
}

GaussianResult gaussian_fraction(const RamseyConfig& config, Theory theory, const GaussianOptions& options) {
  config.validate();
  const RamseyDerived d = derive(config);
  GaussianResult res;
  res.closed_form = fringe(config, theory).gaussian_average(config.t0, config.sigma);
  res.value = res.closed_form;
  const double t0 = config.t0;
  const double sigma = config.sigma;
  if (sigma == 0.0) {
    res.quadrature = compose(config, d, t0, theory);
    return res;
  }

  double lo = t0 - 8.0 * sigma;
  const double hi = t0 + 8.0 * sigma;
  const double negative_mass = 0.5 * std::erfc(t0 / sigma);
  double mass = 1.0;
  if (lo < 0.0 && options.truncate) {
    lo = 0.0;
    mass = 1.0 - negative_mass;
    res.truncated = true;
    res.warnings.push_back("transit-time density clipped at T = 0; discarded mass " + fmt(negative_mass) +
                           " renormalized");
  } else if (negative_mass > 1e-12) {
    res.warnings.push_back("transit-time density puts mass " + fmt(negative_mass) + " at T < 0");
  }
  if (!options.quadrature && !res.truncated) return res;

  const double norm = 1.0 / (std::sqrt(kPi) * sigma);
  const auto integrand = [&](double t) {
    const double x = (t - t0) / sigma;
    return norm * std::exp(-x * x) * compose(config, d, t, theory);
  };
  double err = 0.0;
  double val = 0.0;
  try {
    val = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, lo, hi, 30, options.quad_tol, &err);
  } catch (const std::exception& ex) {
    raise(ErrorKind::QuadratureFailure, std::string("transit-time quadrature failed: ") + ex.what());
  }
  if (!std::isfinite(val) || !(err <= 1e-9)) {
    raise(ErrorKind::QuadratureFailure, "transit-time quadrature did not converge (error estimate " + fmt(err) + ")");
  }
  res.quadrature = val / mass;
  res.quadrature_error = err / mass;
  if (res.truncated) res.value = res.quadrature;
  return res;
}

double shortcut_fraction(const RamseyConfig& config, Theory theory) {
  config.validate();
  const RamseyDerived d = derive(config);
  const Complex lam = theory == Theory::Modified ? config.lambda_tilde_eg : Complex{};
  const double s = std::sin(2.0 * d.big_omega * config.tau);
  const double t = config.t_free;
  return 0.5 * s * s * (1.0 + std::exp(-lam.real() * t) * std::cos((d.delta_omega - lam.imag()) * t));
}

double shortcut_gaussian_fraction(const RamseyConfig& config, Theory theory) {
  config.validate();
  const RamseyDerived d = derive(config);
  const Complex lam = theory == Theory::Modified ? config.lambda_tilde_eg : Complex{};
  const double s = std::sin(2.0 * d.big_omega * config.tau);
  const double re = lam.real();
  const double shift = d.delta_omega - lam.imag();
  const double s2 = config.sigma * config.sigma;
  return 0.5 * s * s *
         (1.0 + std::exp(-re * (config.t0 - re * s2 / 4.0)) * std::cos(shift * (config.t0 - re * s2 / 2.0)) *
                    std::exp(-0.25 * shift * shift * s2));
}

ScanResult scan(const RamseyConfig& config, const std::vector<double>& delta_omega_grid, Theory theory,
                const ScanOptions& options) {
  config.validate();
  const auto& grid = delta_omega_grid;
  if (grid.empty()) raise(ErrorKind::InvalidArgument, "scan grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) raise(ErrorKind::InvalidArgument, "scan grid has a non-finite entry");
    if (i > 0 && grid[i] < grid[i - 1]) raise(ErrorKind::InvalidArgument, "scan grid is not sorted");
  }

  const std::size_t n = grid.size();
  std::vector<ScanRow> rows(n);
  std::vector<std::vector<std::string>> notes(n);
  std::vector<std::exception_ptr> failures(n);
  const auto work = [&](std::size_t i) {
    try {
      RamseyConfig c = config;
      c.omega = (config.e_e - config.e_g) + grid[i];
      const GaussianResult g = gaussian_fraction(c, theory, options.gaussian);
      rows[i] = {grid[i], protocol(c, theory), g.value, fringe(c, theory).baseline};
      notes[i] = g.warnings;
    } catch (...) {
      failures[i] = std::current_exception();
    }
  };

  unsigned threads = options.threads > 0 ? static_cast<unsigned>(options.threads) : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1u, static_cast<unsigned>(n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += threads) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  ScanResult out{config, theory, std::move(rows), {}};
  for (const auto& list : notes)
    for (const auto& w : list)
      if (std::find(out.warnings.begin(), out.warnings.end(), w) == out.warnings.end()) out.warnings.push_back(w);
  return out;
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) raise(ErrorKind::InvalidArgument, "linspace needs n >= 1");
  if (n == 1) return {lo};
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  out.back() = hi;
  return out;
}

std::string to_csv(const ScanResult& result) {
  std::string out = "delta_omega,pb_e,pb_e_avg\n";
  char buf[96];
  for (const auto& r : result.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", r.delta_omega, r.pb_e, r.pb_e_avg);
    out += buf;
  }
  return out;
}

}  // namespace oqs
