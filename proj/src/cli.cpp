#include "openqs/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "openqs/channels.hpp"
#include "openqs/errors.hpp"
#include "openqs/lindblad.hpp"
#include "openqs/quantum.hpp"
#include "openqs/ramsey.hpp"

namespace oqs::cli {

namespace {

// A domain failure that carries a machine-readable payload for the error record.
class Failure : public Error {
 public:
  Failure(ErrorKind kind, const std::string& message, Json details)
      : Error(kind, message), details_(std::move(details)) {}
  const Json& details() const { return details_; }

 private:
  Json details_;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  raise(ErrorKind::ConfigParse, "field '" + field + "': " + what);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_keys(const Json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) bad(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) bad(join(path, key), "unknown key");
  }
}

const Json& need(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) bad(join(path, key), "missing");
  return obj.at(key);
}

double number(const Json& j, const std::string& field) {
  if (!j.is_number()) bad(field, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) bad(field, "not finite");
  return x;
}

double nonnegative(const Json& j, const std::string& field) {
  const double x = number(j, field);
  if (x < 0.0) bad(field, "must be >= 0, got " + fmt(x));
  return x;
}

long long integer(const Json& j, const std::string& field) {
  if (!j.is_number_integer()) bad(field, "expected an integer");
  return j.get<long long>();
}

std::string text(const Json& j, const std::string& field, const std::set<std::string>& choices) {
  if (!j.is_string()) bad(field, "expected a string");
  const auto s = j.get<std::string>();
  if (!choices.empty() && !choices.count(s)) {
    std::string list;
    for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
    bad(field, "'" + s + "' is not one of {" + list + "}");
  }
  return s;
}

Json complex_json(Complex z) { return Json{{"re", z.real()}, {"im", z.imag()}}; }

Complex complex_of(const Json& j, const std::string& field) {
  if (j.is_number()) return {number(j, field), 0.0};
  check_keys(j, field, {"re", "im"});
  return {number(need(j, "re", field), join(field, "re")), j.contains("im") ? number(j["im"], join(field, "im")) : 0.0};
}

Json matrix_json(const CMatrix& m) {
  Json re = Json::array();
  Json im = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    Json c = Json::array();
    for (int j = 0; j < m.cols(); ++j) {
      r.push_back(m(i, j).real());
      c.push_back(m(i, j).imag());
    }
    re.push_back(r);
    im.push_back(c);
  }
  return Json{{"re", re}, {"im", im}};
}

CMatrix matrix_of(const Json& j, const std::string& field) {
  check_keys(j, field, {"re", "im"});
  const auto grid = [&](const Json& a, const std::string& f) {
    if (!a.is_array() || a.empty()) bad(f, "expected a non-empty array of rows");
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string fi = f + "[" + std::to_string(i) + "]";
      if (!a[i].is_array() || a[i].size() != a[0].size() || a[i].empty()) bad(fi, "rows must be non-empty and equal length");
      std::vector<double> row;
      for (std::size_t k = 0; k < a[i].size(); ++k) row.push_back(number(a[i][k], fi + "[" + std::to_string(k) + "]"));
      rows.push_back(row);
    }
    return rows;
  };
  const auto re = grid(need(j, "re", field), join(field, "re"));
  CMatrix m(static_cast<int>(re.size()), static_cast<int>(re[0].size()));
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) m(r, c) = re[r][c];
  if (j.contains("im")) {
    const auto im = grid(j["im"], join(field, "im"));
    if (im.size() != re.size() || im[0].size() != re[0].size()) bad(join(field, "im"), "shape differs from re");
    for (int r = 0; r < m.rows(); ++r)
      for (int c = 0; c < m.cols(); ++c) m(r, c) += Complex(0.0, im[r][c]);
  }
  return m;
}

// Re-raises library errors met while checking a config as ConfigParse on `field`.
template <typename F>
auto checked(const std::string& field, F&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigParse) throw;
    bad(field, std::string(to_string(e.kind())) + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Payload sections

Json ramsey_section(const Json& j, const std::string& path) {
  check_keys(j, path, {"e_g", "e_e", "u_eg", "omega", "tau", "t_free", "t0", "sigma", "lambda_tilde_eg"});
  const auto f = [&](const char* k) { return join(path, k); };
  RamseyConfig c;
  c.e_g = number(need(j, "e_g", path), f("e_g"));
  c.e_e = number(need(j, "e_e", path), f("e_e"));
  if (c.e_e <= c.e_g) bad(f("e_e"), "must exceed " + f("e_g"));
  c.u_eg = complex_of(need(j, "u_eg", path), f("u_eg"));
  c.omega = j.contains("omega") ? number(j["omega"], f("omega")) : c.e_e - c.e_g;
  c.tau = nonnegative(need(j, "tau", path), f("tau"));
  c.t0 = nonnegative(need(j, "t0", path), f("t0"));
  c.t_free = j.contains("t_free") ? nonnegative(j["t_free"], f("t_free")) : c.t0;
  c.sigma = nonnegative(need(j, "sigma", path), f("sigma"));
  c.lambda_tilde_eg = j.contains("lambda_tilde_eg") ? complex_of(j["lambda_tilde_eg"], f("lambda_tilde_eg")) : Complex{};
  if (c.lambda_tilde_eg.real() < 0.0) bad(f("lambda_tilde_eg.re"), "must be >= 0");
  checked(path, [&] { c.validate(); });
  return Json{{"e_g", c.e_g},   {"e_e", c.e_e},       {"u_eg", complex_json(c.u_eg)},
              {"omega", c.omega}, {"tau", c.tau},     {"t_free", c.t_free},
              {"t0", c.t0},     {"sigma", c.sigma}, {"lambda_tilde_eg", complex_json(c.lambda_tilde_eg)}};
}

RamseyConfig ramsey_of(const Json& j) {
  RamseyConfig c;
  c.e_g = j["e_g"].get<double>();
  c.e_e = j["e_e"].get<double>();
  c.u_eg = {j["u_eg"]["re"].get<double>(), j["u_eg"]["im"].get<double>()};
  c.omega = j["omega"].get<double>();
  c.tau = j["tau"].get<double>();
  c.t_free = j["t_free"].get<double>();
  c.t0 = j["t0"].get<double>();
  c.sigma = j["sigma"].get<double>();
  c.lambda_tilde_eg = {j["lambda_tilde_eg"]["re"].get<double>(), j["lambda_tilde_eg"]["im"].get<double>()};
  return c;
}

Json scan_section(const Json& j, const std::string& path) {
  check_keys(j, path, {"delta_omega_min", "delta_omega_max", "points", "threads"});
  const double lo = number(need(j, "delta_omega_min", path), join(path, "delta_omega_min"));
  const double hi = number(need(j, "delta_omega_max", path), join(path, "delta_omega_max"));
  if (hi < lo) bad(join(path, "delta_omega_max"), "must be >= delta_omega_min");
  const long long n = integer(need(j, "points", path), join(path, "points"));
  if (n < 1 || n > 1000000) bad(join(path, "points"), "must be in [1, 1e6]");
  if (n == 1 && hi != lo) bad(join(path, "points"), "a single point needs delta_omega_min == delta_omega_max");
  const long long threads = j.contains("threads") ? integer(j["threads"], join(path, "threads")) : 0;
  if (threads < 0 || threads > 1024) bad(join(path, "threads"), "must be in [0, 1024]");
  return Json{{"delta_omega_min", lo}, {"delta_omega_max", hi}, {"points", n}, {"threads", threads}};
}

Json model_section(const Json& j, const std::string& path) {
  check_keys(j, path, {"hamiltonian", "lindblads"});
  const CMatrix h = matrix_of(need(j, "hamiltonian", path), join(path, "hamiltonian"));
  if (h.rows() != h.cols() || h.rows() > 16) bad(join(path, "hamiltonian"), "must be square with dim <= 16");
  LindbladModel m{h, {}};
  Json ls = Json::array();
  if (j.contains("lindblads")) {
    if (!j["lindblads"].is_array()) bad(join(path, "lindblads"), "expected an array");
    for (std::size_t a = 0; a < j["lindblads"].size(); ++a) {
      const std::string fa = join(path, "lindblads") + "[" + std::to_string(a) + "]";
      m.lindblads.push_back(matrix_of(j["lindblads"][a], fa));
      if (m.lindblads.back().rows() != h.rows() || m.lindblads.back().cols() != h.cols()) bad(fa, "shape differs from hamiltonian");
      ls.push_back(matrix_json(m.lindblads.back()));
    }
  }
  checked(path, [&] { m.validate(); });
  return Json{{"hamiltonian", matrix_json(h)}, {"lindblads", ls}};
}

LindbladModel model_of(const Json& j) {
  LindbladModel m{matrix_of(j["hamiltonian"], "model.hamiltonian"), {}};
  for (const auto& l : j["lindblads"]) m.lindblads.push_back(matrix_of(l, "model.lindblads"));
  return m;
}

Json state_section(const Json& j, const std::string& path, int dim) {
  if (j.is_string()) {
    text(j, path, {"random", "maximally_mixed"});
    return j;
  }
  const CMatrix rho = matrix_of(j, path);
  if (rho.rows() != dim || rho.cols() != dim) bad(path, "must be " + std::to_string(dim) + "x" + std::to_string(dim));
  checked(path, [&] { DensityMatrix{rho}; });
  return matrix_json(rho);
}

DensityMatrix state_of(const Json& j, int dim, std::uint64_t seed) {
  if (j.is_string() && j.get<std::string>() == "maximally_mixed") return DensityMatrix::maximally_mixed(dim);
  if (j.is_string()) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    CMatrix g(dim, dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) g(r, c) = Complex(n(rng), n(rng));
    CMatrix rho = g * g.adjoint() + 0.05 * identity(dim);
    return DensityMatrix(rho / rho.trace().real());
  }
  return DensityMatrix(matrix_of(j, "rho0"));
}

Json times_section(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) bad(path, "expected a non-empty array");
  Json out = Json::array();
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(nonnegative(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

Json measurement_section(const Json& j, const std::string& path) {
  check_keys(j, path, {"basis", "classes", "l_coeffs", "h_coeffs"});
  const Json& l = need(j, "l_coeffs", path);
  if (!l.is_array() || l.empty()) bad(join(path, "l_coeffs"), "expected a non-empty array of rows");
  std::vector<std::vector<Complex>> lc;
  Json l_out = Json::array();
  for (std::size_t a = 0; a < l.size(); ++a) {
    const std::string fa = join(path, "l_coeffs") + "[" + std::to_string(a) + "]";
    if (!l[a].is_array() || l[a].size() != l[0].size() || l[a].empty()) bad(fa, "rows must be non-empty and equal length");
    std::vector<Complex> row;
    Json r = Json::array();
    for (std::size_t k = 0; k < l[a].size(); ++k) {
      row.push_back(complex_of(l[a][k], fa + "[" + std::to_string(k) + "]"));
      r.push_back(complex_json(row.back()));
    }
    lc.push_back(row);
    l_out.push_back(r);
  }
  const int d = static_cast<int>(lc[0].size());
  std::vector<double> hc(d, 0.0);
  if (j.contains("h_coeffs")) {
    const Json& h = j["h_coeffs"];
    if (!h.is_array() || static_cast<int>(h.size()) != d) bad(join(path, "h_coeffs"), "expected " + std::to_string(d) + " numbers");
    for (int k = 0; k < d; ++k) hc[k] = number(h[k], join(path, "h_coeffs") + "[" + std::to_string(k) + "]");
  }
  const CMatrix basis = j.contains("basis") ? matrix_of(j["basis"], join(path, "basis")) : identity(d);
  std::vector<std::vector<int>> classes;
  if (j.contains("classes")) {
    const Json& cl = j["classes"];
    if (!cl.is_array()) bad(join(path, "classes"), "expected an array of index arrays");
    for (std::size_t c = 0; c < cl.size(); ++c) {
      const std::string fc = join(path, "classes") + "[" + std::to_string(c) + "]";
      if (!cl[c].is_array()) bad(fc, "expected an array of indices");
      std::vector<int> members;
      for (const auto& x : cl[c]) members.push_back(static_cast<int>(integer(x, fc)));
      classes.push_back(members);
    }
  }
  checked(path, [&] { measurement_model(ProjectorBasis(basis, classes), lc, hc); });
  Json out{{"basis", matrix_json(basis)}, {"classes", Json::array()}, {"l_coeffs", l_out}, {"h_coeffs", hc}};
  for (const auto& c : classes) out["classes"].push_back(c);
  return out;
}

MeasurementModel measurement_of(const Json& j) {
  std::vector<std::vector<Complex>> lc;
  for (const auto& row : j["l_coeffs"]) {
    std::vector<Complex> r;
    for (const auto& z : row) r.push_back({z["re"].get<double>(), z["im"].get<double>()});
    lc.push_back(r);
  }
  std::vector<std::vector<int>> classes;
  for (const auto& c : j["classes"]) classes.push_back(c.get<std::vector<int>>());
  return measurement_model(ProjectorBasis(matrix_of(j["basis"], "measurement.basis"), classes), lc,
                           j["h_coeffs"].get<std::vector<double>>());
}

Json kernel_section(const Json& j, const std::string& path) {
  check_keys(j, path, {"dim", "tau", "matrix"});
  const long long d = integer(need(j, "dim", path), join(path, "dim"));
  if (d < 1 || d > 16) bad(join(path, "dim"), "must be in [1, 16]");
  const double tau = number(need(j, "tau", path), join(path, "tau"));
  const CMatrix m = matrix_of(need(j, "matrix", path), join(path, "matrix"));
  if (m.rows() != d * d || m.cols() != d * d) bad(join(path, "matrix"), "must be dim^2 x dim^2");
  Kernel k{static_cast<int>(d), tau, m};
  checked(path, [&] { k.validate(1e-8); });
  return Json{{"dim", d}, {"tau", tau}, {"matrix", matrix_json(m)}};
}

const std::set<std::string> kCommon{"command", "seed", "format"};

std::set<std::string> with_common(std::set<std::string> keys) {
  keys.insert(kCommon.begin(), kCommon.end());
  return keys;
}

FdScheme scheme_of(const std::string& s) {
  if (s == "one-sided") return FdScheme::OneSided;
  if (s == "forward") return FdScheme::Forward;
  if (s == "richardson") return FdScheme::Richardson;
  return FdScheme::Central;
}

// ---------------------------------------------------------------------------
// Commands

struct Artifact {
  Json result;
  std::vector<std::string> warnings;
  std::string csv;  // set by commands with a tabular form
};

std::vector<Theory> theories_of(const std::string& s) {
  if (s == "both") return {Theory::Standard, Theory::Modified};
  return {theory_from_string(s)};
}

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Json scan_summary(const ScanResult& r) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < r.rows.size(); ++i)
    if (r.rows[i].pb_e_avg > r.rows[best].pb_e_avg) best = i;
  Json s{{"argmax_delta_omega", r.rows[best].delta_omega}, {"max_pb_e_avg", r.rows[best].pb_e_avg}};
  if (r.theory == Theory::Modified) {
    const Complex lam = r.config.lambda_tilde_eg;
    const double s2 = r.config.sigma * r.config.sigma;
    s["predicted_center"] = lam.imag();
    s["predicted_damping"] = std::exp(-lam.real() * (r.config.t0 - lam.real() * s2 / 4.0));
  } else {
    s["predicted_center"] = 0.0;
    s["predicted_damping"] = 1.0;
  }
  return s;
}

Artifact ramsey_scan(const Json& doc) {
  const RamseyConfig base = ramsey_of(doc["ramsey"]);
  const Json& sc = doc["scan"];
  const auto grid = linspace(sc["delta_omega_min"].get<double>(), sc["delta_omega_max"].get<double>(),
                             sc["points"].get<int>());
  ScanOptions opts;
  opts.threads = sc["threads"].get<int>();
  opts.gaussian.truncate = doc["truncate_gaussian"].get<bool>();

  Artifact a;
  std::vector<ScanResult> results;
  for (Theory th : theories_of(doc["theory"].get<std::string>())) results.push_back(scan(base, grid, th, opts));

  Json rows = Json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Json row{{"delta_omega", grid[i]}};
    for (const auto& r : results) {
      const std::string sfx = results.size() > 1 && r.theory == Theory::Modified ? "_modified" : "";
      row["pb_e" + sfx] = r.rows[i].pb_e;
      row["pb_e_avg" + sfx] = r.rows[i].pb_e_avg;
      row["baseline" + sfx] = r.rows[i].baseline;
    }
    rows.push_back(row);
  }
  Json summary = Json::object();
  for (const auto& r : results) {
    summary[to_string(r.theory)] = scan_summary(r);
    for (const auto& w : r.warnings)
      if (std::find(a.warnings.begin(), a.warnings.end(), w) == a.warnings.end()) a.warnings.push_back(w);
  }
  a.result = Json{{"rows", rows}, {"summary", summary}};

  if (results.size() == 1) {
    a.csv = to_csv(results[0]);
  } else {
    a.csv = "delta_omega,pb_e,pb_e_avg,pb_e_modified,pb_e_avg_modified\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      a.csv += g17(grid[i]) + "," + g17(results[0].rows[i].pb_e) + "," + g17(results[0].rows[i].pb_e_avg) + "," +
               g17(results[1].rows[i].pb_e) + "," + g17(results[1].rows[i].pb_e_avg) + "\n";
    }
  }
  return a;
}

Artifact ramsey_point(const Json& doc) {
  const RamseyConfig c = ramsey_of(doc["ramsey"]);
  GaussianOptions opts;
  opts.truncate = doc["truncate_gaussian"].get<bool>();
  const RamseyDerived d = derive(c);
  Artifact a;
  a.result = Json{{"delta_omega", d.delta_omega}, {"big_omega", d.big_omega}};
  for (Theory th : theories_of(doc["theory"].get<std::string>())) {
    const auto g = gaussian_fraction(c, th, opts);
    const auto fr = fringe(c, th);
    a.result[to_string(th)] = Json{{"pb_e", protocol(c, th)},
                                   {"pb_e_avg", g.value},
                                   {"closed_form", g.closed_form},
                                   {"quadrature", g.quadrature},
                                   {"quadrature_error", g.quadrature_error},
                                   {"truncated", g.truncated},
                                   {"shortcut_pb_e", shortcut_fraction(c, th)},
                                   {"shortcut_pb_e_avg", shortcut_gaussian_fraction(c, th)},
                                   {"fringe",
                                    {{"baseline", fr.baseline},
                                     {"amplitude", complex_json(fr.amplitude)},
                                     {"rate", complex_json(fr.rate)}}}};
    for (const auto& w : g.warnings)
      if (std::find(a.warnings.begin(), a.warnings.end(), w) == a.warnings.end()) a.warnings.push_back(w);
  }
  return a;
}

Artifact lindblad_evolve(const Json& doc, std::uint64_t seed) {
  const LindbladModel m = model_of(doc["model"]);
  const DensityMatrix rho0 = state_of(doc["rho0"], m.dim(), seed);
  Artifact a;
  Json traj = Json::array();
  std::string header = "t";
  for (int k = 0; k < m.dim(); ++k) header += ",p_" + std::to_string(k);
  a.csv = header + ",purity,entropy\n";
  for (const auto& tj : doc["times"]) {
    const double t = tj.get<double>();
    const DensityMatrix rho = evolve(m, rho0, t);
    const double s = vn_entropy(rho);
    traj.push_back(Json{{"t", t}, {"rho", matrix_json(rho.matrix())}, {"purity", rho.purity()}, {"entropy", s}});
    a.csv += g17(t);
    for (int k = 0; k < m.dim(); ++k) a.csv += "," + g17(rho.matrix()(k, k).real());
    a.csv += "," + g17(rho.purity()) + "," + g17(s) + "\n";
  }
  a.result = Json{{"rho0", matrix_json(rho0.matrix())}, {"trajectory", traj}};
  return a;
}

const char* class_name(ModeClass c) {
  switch (c) {
    case ModeClass::Decaying: return "decaying";
    case ModeClass::Stationary: return "stationary";
    default: return "forbidden";
  }
}

Artifact lindblad_spectrum(const Json& doc) {
  const LindbladModel m = model_of(doc["model"]);
  const auto sp = spectrum(m);
  Json modes = Json::array();
  for (std::size_t n = 0; n < sp.mus.size(); ++n) {
    modes.push_back(Json{{"mu", complex_json(sp.mus[n])}, {"rank", sp.ranks[n]}, {"class", class_name(sp.classes[n])}});
  }
  Artifact a;
  a.result = Json{{"modes", modes},
                  {"threshold", sp.threshold},
                  {"counts",
                   {{"decaying", sp.count(ModeClass::Decaying)},
                    {"stationary", sp.count(ModeClass::Stationary)},
                    {"forbidden", sp.count(ModeClass::Forbidden)}}},
                  {"diagonalizable", sp.chains.diagonalizable()},
                  {"balance_residual", m.balance_residual()}};
  return a;
}

Artifact born_check(const Json& doc, std::uint64_t seed) {
  const MeasurementModel mm = measurement_of(doc["measurement"]);
  const DensityMatrix rho0 = state_of(doc["rho0"], mm.basis.dim(), seed);
  double horizon = 0.0;
  if (doc.contains("horizon")) {
    horizon = doc["horizon"].get<double>();
  } else {
    const double g = decay_matrix(mm).gamma_min();
    if (g <= 0.0) raise(ErrorKind::NoConvergence, "gamma_min is zero: coherences do not decay");
    horizon = doc["horizon_gamma"].get<double>() / g;
  }
  const double tol = doc["tol"].get<double>();
  const auto r = born_limit_check(mm, rho0, horizon, tol);
  Json res{{"converged", r.converged},      {"residual", r.residual}, {"predicted_bound", r.predicted_bound},
           {"gamma_min", r.gamma_min},      {"horizon", horizon},     {"tol", tol},
           {"rho0", matrix_json(rho0.matrix())}};
  if (!r.converged) {
    throw Failure(ErrorKind::NoConvergence,
                  "residual " + fmt(r.residual) + " above tolerance " + fmt(tol) + " at horizon " + fmt(horizon), res);
  }
  return {res, {}, {}};
}

Artifact cp_check(const Json& doc, std::uint64_t seed) {
  Json res = Json::object();
  Kernel k;
  std::optional<GksForm> gks;
  if (doc.contains("kernel")) {
    const Json& kj = doc["kernel"];
    k = Kernel{kj["dim"].get<int>(), kj["tau"].get<double>(), matrix_of(kj["matrix"], "kernel.matrix")};
  } else {
    const CMatrix l = build_superoperator(model_of(doc["model"]));
    k = kernel_from_generator(l, doc["tau"].get<double>());
    gks = gks_project(l);
  }
  const double tol = doc["tol"].get<double>();
  const auto cp = choi_cp_test(k, tol);
  Json lambdas = Json::array();
  for (int i = 0; i < cp.spectrum.lambdas.size(); ++i) lambdas.push_back(cp.spectrum.lambdas(i));
  res["is_cp"] = cp.is_cp;
  res["min_lambda"] = cp.min_lambda;
  res["tol"] = tol;
  res["choi_eigenvalues"] = lambdas;
  if (gks) {
    const auto bfr = bfr_derivative_check(*gks, doc["bfr_trials"].get<int>(), seed);
    res["c_min_eigenvalue"] = gks->c_min_eigenvalue();
    res["bfr_min"] = bfr.min_value;
    res["bfr_trials"] = bfr.trials;
  }
  if (!cp.is_cp) {
    throw Failure(ErrorKind::NotCompletelyPositive, "Choi matrix has eigenvalue " + fmt(cp.min_lambda) + " below -" + fmt(tol),
                  res);
  }
  return {res, {}, {}};
}

Artifact entropy_check(const Json& doc, std::uint64_t seed) {
  const LindbladModel m = model_of(doc["model"]);
  const DensityMatrix rho0 = state_of(doc["rho0"], m.dim(), seed);
  double ll = 0.0;
  double lld = 0.0;
  for (const auto& l : m.lindblads) {
    ll += (l.adjoint() * l).trace().real();
    lld += (l * l.adjoint()).trace().real();
  }
  Json rows = Json::array();
  double min_rate = std::numeric_limits<double>::infinity();
  const double eps = 1e-4;
  for (const auto& tj : doc["times"]) {
    const double t = tj.get<double>();
    const DensityMatrix rho = evolve(m, rho0, t);
    const double rate = entropy_rate(rho, m.lindblads);
    const double lo = t >= eps ? t - eps : t;
    const double fd = (vn_entropy(evolve(m, rho0, t + eps)) - vn_entropy(evolve(m, rho0, lo))) / (t + eps - lo);
    min_rate = std::min(min_rate, rate);
    rows.push_back(Json{{"t", t}, {"entropy", vn_entropy(rho)}, {"entropy_rate", rate}, {"fd_rate", fd}});
  }
  const bool balanced = m.balanced();
  Json res{{"balanced", balanced},
           {"balance_residual", m.balance_residual()},
           {"trace_identity_residual", std::abs(ll - lld)},
           {"min_entropy_rate", min_rate},
           {"samples", rows}};
  if (balanced && min_rate < -1e-12) {
    throw Failure(ErrorKind::NotBalanced, "entropy decreases for a balanced model (rate " + fmt(min_rate) + ")", res);
  }
  Artifact a{res, {}, {}};
  if (!balanced) a.warnings.push_back("model is not balanced; entropy may decrease");
  return a;
}

Artifact extract(const Json& doc) {
  const CMatrix l0 = build_superoperator(model_of(doc["model"]));
  const double h = doc["step"].get<double>();
  std::vector<Kernel> samples;
  for (double s : {-2.0, -1.0, 1.0, 2.0}) samples.push_back(kernel_from_generator(l0, s * h));
  const auto est = extract_generator(samples, scheme_of(doc["scheme"].get<std::string>()));
  Artifact a;
  a.result = Json{{"generator", matrix_json(est.generator)},
                  {"step", est.step},
                  {"error_estimate", est.error_estimate},
                  {"relative_error", (est.generator - l0).norm() / std::max(1e-300, l0.norm())}};
  return a;
}

const Json& default_scan_document() {
  static const Json doc = Json::parse(R"({
    "command": "ramsey-scan",
    "theory": "both",
    "ramsey": {
      "e_g": 0.0, "e_e": 100.0, "u_eg": {"re": 1.0, "im": 0.0},
      "tau": 0.7853981633974483, "t0": 800.0, "sigma": 80.0,
      "lambda_tilde_eg": {"re": 0.00125, "im": 0.0004}
    },
    "scan": {"delta_omega_min": -0.02, "delta_omega_max": 0.02, "points": 801}
  })");
  return doc;
}

void write_error(std::ostream& err, ErrorKind kind, const std::string& message, int code, const Json& details = {}) {
  Json e{{"kind", std::string(to_string(kind))}, {"message", message}, {"exit_code", code}};
  if (!details.is_null()) e["details"] = details;
  err << Json{{"schema_version", kSchemaVersion}, {"error", e}}.dump() << "\n";
}

int exit_code(ErrorKind kind) {
  if (kind == ErrorKind::ConfigParse) return kExitConfig;
  if (kind == ErrorKind::IoError) return kExitIo;
  return kExitDomain;
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"ramsey-scan",  "ramsey-point", "lindblad-evolve", "lindblad-spectrum",
                                              "born-check",   "cp-check",     "entropy-check",   "extract-generator"};
  return names;
}

RunConfig normalize(const Json& document, const std::string& command) {
  if (!document.is_object()) bad("<root>", "expected an object");
  std::string cmd = command;
  if (document.contains("command")) {
    const auto named = text(document["command"], "command", {});
    if (!cmd.empty() && named != cmd) bad("command", "'" + named + "' conflicts with the requested '" + cmd + "'");
    cmd = named;
  }
  if (cmd.empty()) bad("command", "missing");
  if (std::find(commands().begin(), commands().end(), cmd) == commands().end()) bad("command", "unknown command '" + cmd + "'");

  RunConfig rc;
  rc.command = cmd;
  if (document.contains("seed")) {
    if (!document["seed"].is_number_unsigned()) bad("seed", "expected a non-negative integer");
    rc.seed = document["seed"].get<std::uint64_t>();
  }
  if (document.contains("format")) rc.format = text(document["format"], "format", {"csv", "json"});

  const Json& d = document;
  Json out{{"command", cmd}, {"seed", rc.seed}, {"format", rc.format}};
  if (cmd == "ramsey-scan" || cmd == "ramsey-point") {
    check_keys(d, "", with_common({"theory", "truncate_gaussian", "ramsey", "scan"}));
    out["theory"] = d.contains("theory") ? text(d["theory"], "theory", {"standard", "modified", "both"}) : "standard";
    if (d.contains("truncate_gaussian") && !d["truncate_gaussian"].is_boolean()) bad("truncate_gaussian", "expected a boolean");
    out["truncate_gaussian"] = d.value("truncate_gaussian", false);
    out["ramsey"] = ramsey_section(need(d, "ramsey", ""), "ramsey");
    if (cmd == "ramsey-scan") {
      out["scan"] = scan_section(need(d, "scan", ""), "scan");
    } else if (d.contains("scan")) {
      bad("scan", "unknown key");
    }
  } else if (cmd == "lindblad-evolve" || cmd == "entropy-check") {
    check_keys(d, "", with_common({"model", "rho0", "times"}));
    out["model"] = model_section(need(d, "model", ""), "model");
    const int dim = static_cast<int>(out["model"]["hamiltonian"]["re"].size());
    out["rho0"] = state_section(need(d, "rho0", ""), "rho0", dim);
    out["times"] = times_section(need(d, "times", ""), "times");
  } else if (cmd == "lindblad-spectrum") {
    check_keys(d, "", with_common({"model"}));
    out["model"] = model_section(need(d, "model", ""), "model");
  } else if (cmd == "born-check") {
    check_keys(d, "", with_common({"measurement", "rho0", "horizon", "horizon_gamma", "tol"}));
    out["measurement"] = measurement_section(need(d, "measurement", ""), "measurement");
    const int dim = static_cast<int>(out["measurement"]["h_coeffs"].size());
    out["rho0"] = state_section(need(d, "rho0", ""), "rho0", dim);
    if (d.contains("horizon") == d.contains("horizon_gamma")) bad("horizon", "give exactly one of horizon, horizon_gamma");
    if (d.contains("horizon")) out["horizon"] = nonnegative(d["horizon"], "horizon");
    if (d.contains("horizon_gamma")) out["horizon_gamma"] = nonnegative(d["horizon_gamma"], "horizon_gamma");
    out["tol"] = d.contains("tol") ? nonnegative(d["tol"], "tol") : 1e-6;
  } else if (cmd == "cp-check") {
    check_keys(d, "", with_common({"kernel", "model", "tau", "tol", "bfr_trials"}));
    if (d.contains("kernel") == d.contains("model")) bad("kernel", "give exactly one of kernel, model");
    int dim = 0;
    if (d.contains("kernel")) {
      if (d.contains("tau") || d.contains("bfr_trials")) bad(d.contains("tau") ? "tau" : "bfr_trials", "only valid with model");
      out["kernel"] = kernel_section(d["kernel"], "kernel");
      dim = out["kernel"]["dim"].get<int>();
    } else {
      out["model"] = model_section(d["model"], "model");
      out["tau"] = nonnegative(need(d, "tau", ""), "tau");
      const long long trials = d.contains("bfr_trials") ? integer(d["bfr_trials"], "bfr_trials") : 200;
      if (trials < 1) bad("bfr_trials", "must be >= 1");
      out["bfr_trials"] = trials;
      dim = static_cast<int>(out["model"]["hamiltonian"]["re"].size());
    }
    out["tol"] = d.contains("tol") ? nonnegative(d["tol"], "tol") : 1e-10 * dim;
  } else {
    check_keys(d, "", with_common({"model", "step", "scheme"}));
    out["model"] = model_section(need(d, "model", ""), "model");
    const double h = d.contains("step") ? number(d["step"], "step") : 1e-4;
    if (!(h > 0.0)) bad("step", "must be > 0");
    out["step"] = h;
    out["scheme"] =
        d.contains("scheme") ? text(d["scheme"], "scheme", {"central", "one-sided", "forward", "richardson"}) : "central";
  }
  rc.document = out;
  return rc;
}

RunConfig validate_config(const std::string& path, const std::string& command) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::IoError, "cannot read config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string body = buf.str();
  Json doc;
  try {
    doc = Json::parse(body);
  } catch (const Json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, body.size());
    const auto line = 1 + std::count(body.begin(), body.begin() + static_cast<long>(upto), '\n');
    const auto last_nl = body.rfind('\n', upto == 0 ? 0 : upto - 1);
    const std::size_t column = last_nl == std::string::npos ? upto : upto - last_nl - 1;
    raise(ErrorKind::ConfigParse, path + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + e.what());
  }
  RunConfig rc = normalize(doc, command);
  rc.input_path = path;
  return rc;
}

std::string emit_config(const RunConfig& config) { return config.document.dump(2) + "\n"; }

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    const Json& doc = config.document;
    const std::uint64_t seed = config.seed;
    Artifact a;
    const std::string& c = config.command;
    if (c == "ramsey-scan") a = ramsey_scan(doc);
    else if (c == "ramsey-point") a = ramsey_point(doc);
    else if (c == "lindblad-evolve") a = lindblad_evolve(doc, seed);
    else if (c == "lindblad-spectrum") a = lindblad_spectrum(doc);
    else if (c == "born-check") a = born_check(doc, seed);
    else if (c == "cp-check") a = cp_check(doc, seed);
    else if (c == "entropy-check") a = entropy_check(doc, seed);
    else a = extract(doc);

    std::string text;
    if (config.format == "csv") {
      if (a.csv.empty()) raise(ErrorKind::ConfigParse, "field 'format': csv is not available for " + c);
      text = a.csv;
      for (const auto& w : a.warnings) err << Json{{"warning", w}}.dump() << "\n";
    } else {
      Json rec{{"schema_version", kSchemaVersion},
               {"flag_set_version", kFlagSetVersion},
               {"command", c},
               {"config", doc},
               {"result", a.result},
               {"warnings", a.warnings}};
      text = rec.dump(2) + "\n";
    }
    if (config.output_path) {
      std::ofstream f(*config.output_path, std::ios::binary | std::ios::trunc);
      if (!f) raise(ErrorKind::IoError, "cannot open '" + *config.output_path + "' for writing");
      f << text;
      f.flush();
      if (!f) raise(ErrorKind::IoError, "write to '" + *config.output_path + "' failed");
    } else {
      out << text;
    }
    return kExitOk;
  } catch (const Failure& f) {
    write_error(err, f.kind(), f.what(), exit_code(f.kind()), f.details());
    return exit_code(f.kind());
  } catch (const Error& e) {
    write_error(err, e.kind(), e.what(), exit_code(e.kind()));
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    write_error(err, ErrorKind::InvalidArgument, e.what(), kExitDomain);
    return kExitDomain;
  }
}

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Open quantum systems toolkit: Ramsey fringes, Lindblad dynamics and channel checks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "openqs flag set " + std::to_string(kFlagSetVersion));

  struct Flags {
    std::string config;
    std::string out;
    std::string format;
    std::optional<std::uint64_t> seed;
    std::string theory;
    bool truncate = false;
  } flags;

  for (const auto& name : commands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("config_path", flags.config, "Config file (same as --config)");
    sub->add_option("--config", flags.config, "JSON config file");
    sub->add_option("--out", flags.out, "Output file (default: standard output)");
    sub->add_option("--format", flags.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", flags.seed, "Seed for stochastic parts (random rho0, BFR trials)");
    if (name.rfind("ramsey-", 0) == 0) {
      sub->add_option("--theory", flags.theory, "Theory")->check(CLI::IsMember({"standard", "modified", "both"}));
      sub->add_flag("--truncate-gaussian", flags.truncate, "Clip negative transit times and renormalize");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    write_error(err, ErrorKind::ConfigParse, e.what(), kExitConfig);
    return kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    Json doc;
    if (!flags.config.empty()) {
      // Parse once for syntax diagnostics, then apply flag overrides.
      doc = Json::parse(validate_config(flags.config, command).document.dump());
    } else if (command == "ramsey-scan") {
      doc = default_scan_document();
    } else {
      raise(ErrorKind::ConfigParse, "field 'config': required for " + command);
    }
    if (!flags.theory.empty()) doc["theory"] = flags.theory;
    if (flags.truncate) doc["truncate_gaussian"] = true;
    if (flags.seed) doc["seed"] = *flags.seed;
    if (!flags.format.empty()) doc["format"] = flags.format;
    RunConfig rc = normalize(doc, command);
    if (!flags.config.empty()) rc.input_path = flags.config;
    if (!flags.out.empty()) rc.output_path = flags.out;
    return run(rc, out, err);
  } catch (const Error& e) {
    write_error(err, e.kind(), e.what(), exit_code(e.kind()));
    return exit_code(e.kind());
  }
}

}  // namespace oqs::cli
