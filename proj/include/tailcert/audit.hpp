#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tailcert/certificates.hpp"
#include "tailcert/error.hpp"
#include "tailcert/numerics.hpp"

namespace tailcert {

struct SampleSet {
  std::size_t p = 0;
  std::vector<Vector> samples;
  std::string provenance;

  std::size_t n() const noexcept { return samples.size(); }

  void validate() const {
    if (p == 0) throw ShapeError("sample set: p must be positive");
    if (samples.empty()) throw DomainError("sample set: no samples");
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples[i].size() != p)
        throw ShapeError("sample set: sample " + std::to_string(i) + " has dim " +
                         std::to_string(samples[i].size()) + ", expected " + std::to_string(p));
      if (!all_finite(samples[i]))
        throw DomainError("sample set: non-finite value in sample " + std::to_string(i));
    }
  }
};

enum class Centering { mean, median };

inline std::string_view to_string(Centering c) { return c == Centering::mean ? "mean" : "median"; }
inline Centering parse_centering(std::string_view s) {
  if (s == "mean") return Centering::mean;
  if (s == "median") return Centering::median;
  throw DomainError("unknown centering '" + std::string(s) + "'");
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) throw DomainError("median of empty set");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

/// Empirical mean or coordinate-wise median.
inline Vector center_of(const SampleSet& s, Centering c) {
  s.validate();
  Vector out(s.p, 0.0);
  if (c == Centering::mean) {
    for (const Vector& x : s.samples)
      for (std::size_t k = 0; k < s.p; ++k) out[k] += x[k];
    for (double& v : out) v /= static_cast<double>(s.n());
  } else {
    std::vector<double> col(s.n());
    for (std::size_t k = 0; k < s.p; ++k) {
      for (std::size_t i = 0; i < s.n(); ++i) col[i] = s.samples[i][k];
      out[k] = median_of(col);
    }
  }
  return out;
}

/// Returns u / ‖u‖ and whether normalization changed u beyond 1e-12.
inline std::pair<Vector, bool> normalized_direction(std::span<const double> u) {
  const double r = norm2(u);
  if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("direction must be a nonzero finite vector");
  Vector out(u.begin(), u.end());
  const bool changed = std::abs(r - 1.0) > 1e-12;
  if (changed)
    for (double& v : out) v /= r;
  return {out, changed};
}

/// uᵀ(x_i − center) for every sample.
inline std::vector<double> project(const SampleSet& s, std::span<const double> u,
                                   std::span<const double> center) {
  if (u.size() != s.p || center.size() != s.p) throw ShapeError("project: dimension mismatch");
  std::vector<double> out(s.n());
  for (std::size_t i = 0; i < s.n(); ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < s.p; ++k) acc += u[k] * (s.samples[i][k] - center[k]);
    out[i] = acc;
  }
  return out;
}

inline void check_grid(std::span<const double> grid) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0) || !std::isfinite(grid[i]))
      throw DomainError("grid values must be finite and >= 0");
    if (i > 0 && grid[i] < grid[i - 1]) throw DomainError("grid must be sorted ascending");
  }
}

/// Fraction of |values| >= t for each t of an ascending grid.
inline std::vector<double> exceedance_of(std::span<const double> values, std::span<const double> grid) {
  check_grid(grid);
  std::vector<double> mags(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) mags[i] = std::abs(values[i]);
  std::sort(mags.begin(), mags.end());
  std::vector<double> out;
  out.reserve(grid.size());
  const double n = static_cast<double>(mags.size());
  for (double t : grid) {
    const auto it = std::lower_bound(mags.begin(), mags.end(), t);
    out.push_back(static_cast<double>(mags.end() - it) / n);
  }
  return out;
}

struct ExceedanceCurve {
  std::vector<double> probabilities;
  bool direction_normalized = false;
};

inline ExceedanceCurve exceedance_curve(const SampleSet& s, std::span<const double> u,
                                        Centering centering, std::span<const double> grid) {
  auto [dir, changed] = normalized_direction(u);
  const Vector c = center_of(s, centering);
  return {exceedance_of(project(s, dir, c), grid), changed};
}

// ---------------------------------------------------------------------------
// Orlicz norms
// ---------------------------------------------------------------------------

namespace detail {

// Smallest K with mean(phi(|d_i| / K)) <= 2, phi(x) = e^{x²} or e^{x}.
template <typename Phi>
double orlicz_estimate(std::span<const double> values, Phi phi, double bracket_hi) {
  if (values.size() < 2) throw DomainError("Orlicz estimate needs n >= 2");
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); })) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  std::vector<double> dev(values.size());
  double max_dev = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    dev[i] = std::abs(values[i] - mean);
    max_dev = std::max(max_dev, dev[i]);
  }
  if (max_dev == 0.0) return 0.0;
  for (double& d : dev) d /= max_dev;  // estimate on the unit scale, rescale at the end
  auto satisfied = [&](double k) {
    double acc = 0.0;
    for (double d : dev) acc += phi(d / k);
    return acc / static_cast<double>(dev.size()) <= 2.0;
  };
  double lo = 0.0;
  double hi = bracket_hi;  // every term <= 2 here
  while (!satisfied(hi)) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (satisfied(mid)) hi = mid;
    else lo = mid;
  }
  return hi * max_dev;
}

}  // namespace detail

/// Empirical ψ₂ norm of the mean-centred values.
inline double orlicz_psi2_estimate(std::span<const double> values) {
  return detail::orlicz_estimate(values, [](double x) { return std::exp(x * x); },
                                 1.0 / std::sqrt(std::log(2.0)));
}

/// Empirical ψ₁ norm of the mean-centred values.
inline double orlicz_psi1_estimate(std::span<const double> values) {
  return detail::orlicz_estimate(values, [](double x) { return std::exp(x); }, 1.0 / std::log(2.0));
}

// ---------------------------------------------------------------------------
// Hill tail index
// ---------------------------------------------------------------------------

inline std::size_t default_hill_k(std::size_t n) {
  return std::max<std::size_t>(1, std::min<std::size_t>(n / 20, 1000));
}

/// Hill estimator α̂ = [ (1/k) Σ_{i≤k} ln(X_(i) / X_(k+1)) ]⁻¹ on descending order statistics.
inline double hill_estimator(std::span<const double> values, std::size_t k) {
  if (k == 0 || k >= values.size()) throw DomainError("hill_estimator: need 1 <= k < n");
  std::vector<double> v(values.begin(), values.end());
  for (double x : v)
    if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("hill_estimator: values must be finite magnitudes");
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end(), std::greater<>());
  const double threshold = v[k];
  if (!(threshold > 0.0)) throw DomainError("hill_estimator: X_(k+1) is zero");
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) acc += std::log(v[i] / threshold);
  if (!(acc > 0.0)) throw DomainError("hill_estimator: top k+1 order statistics are tied");
  return static_cast<double>(k) / acc;
}

/// Euclidean norms of the samples, optionally after subtracting a center.
inline std::vector<double> magnitudes(const SampleSet& s, std::optional<Vector> center = std::nullopt) {
  std::vector<double> out(s.n());
  for (std::size_t i = 0; i < s.n(); ++i)
    out[i] = center ? distance2(s.samples[i], *center) : norm2(s.samples[i]);
  return out;
}

/// (log10 t, log10 P(M >= t)) at each positive order statistic of `mags`.
inline std::vector<std::pair<double, double>> survival_curve(std::span<const double> mags) {
  std::vector<double> v(mags.begin(), mags.end());
  std::sort(v.begin(), v.end(), std::greater<>());
  std::vector<std::pair<double, double>> out;
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0)) break;
    if (i + 1 < v.size() && v[i + 1] == v[i]) continue;  // report each distinct value once
    out.emplace_back(std::log10(v[i]), std::log10(static_cast<double>(i + 1) / n));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Certificate checks
// ---------------------------------------------------------------------------

struct MaxGrowthResult {
  bool pass = true;
  double max_abs_deviation = 0.0;
  double allowance = 0.0;
  double delta = 0.0;
  std::size_t n = 0;
};

/// Passes iff max_i |uᵀ(x_i − center)| <= quantile(cert, delta / n), the
/// union-bound allowance at confidence 1 − delta.
inline MaxGrowthResult max_growth_check(const SampleSet& s, std::span<const double> u,
                                        const TailCertificate& cert, double delta,
                                        Centering centering = Centering::mean) {
  if (cert.family != TailFamily::sub_gaussian)
    throw CapabilityError("max_growth_check requires a sub-Gaussian certificate");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("max_growth_check: delta must be in (0, 1)");
  auto [dir, changed] = normalized_direction(u);
  (void)changed;
  const Vector c = center_of(s, centering);
  const std::vector<double> proj = project(s, dir, c);
  MaxGrowthResult r;
  r.n = s.n();
  r.delta = delta;
  for (double v : proj) r.max_abs_deviation = std::max(r.max_abs_deviation, std::abs(v));
  r.allowance = quantile(cert, delta / static_cast<double>(s.n()));
  r.pass = r.max_abs_deviation <= r.allowance;
  return r;
}

struct SlackRule {
  double sigma_multiplier = 3.0;
  /// Grid points are tested only where the bound is >= floor_count / n.
  double floor_count = 10.0;
};

struct Violation {
  double t = 0.0;
  double empirical = 0.0;
  double bound = 0.0;
  double slack = 0.0;
};

struct Verdict {
  bool consistent = true;
  bool underpowered = false;
  std::size_t tested_points = 0;
  std::optional<Violation> violation;
};

struct HillSummary {
  std::size_t k = 0;
  std::optional<double> index;
};

struct EmpiricalTailReport {
  Vector direction;
  bool direction_normalized = false;
  Centering centering = Centering::mean;
  std::size_t n = 0;
  std::vector<double> grid;
  std::vector<double> empirical_exceedance;
  std::vector<double> certificate_bound;
  double psi2_estimate = 0.0;
  double psi1_estimate = 0.0;
  HillSummary hill;
  Verdict verdict;
};

/// Flags a violation at the first grid t where the empirical exceedance
/// exceeds b + k·√(b(1 − b)/n), b = evaluate(cert, t), among points with
/// b >= floor_count / n.
inline EmpiricalTailReport compare_to_certificate(const SampleSet& s, std::span<const double> u,
                                                  const TailCertificate& cert,
                                                  std::span<const double> grid,
                                                  const SlackRule& rule = {},
                                                  Centering centering = Centering::mean,
                                                  std::optional<std::size_t> hill_k = std::nullopt) {
  if (cert.p != s.p)
    throw ShapeError("compare_to_certificate: certificate p = " + std::to_string(cert.p) +
                     " but samples have p = " + std::to_string(s.p));
  check_grid(grid);
  if (grid.empty()) throw DomainError("compare_to_certificate: empty grid");
  EmpiricalTailReport r;
  auto [dir, changed] = normalized_direction(u);
  r.direction = dir;
  r.direction_normalized = changed;
  r.centering = centering;
  r.n = s.n();
  r.grid.assign(grid.begin(), grid.end());
  const Vector c = center_of(s, centering);
  const std::vector<double> proj = project(s, dir, c);
  r.empirical_exceedance = exceedance_of(proj, grid);
  const double n = static_cast<double>(s.n());
  for (double t : grid) r.certificate_bound.push_back(evaluate(cert, t));

  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double b = r.certificate_bound[i];
    if (b < rule.floor_count / n) continue;
    ++r.verdict.tested_points;
    const double slack = rule.sigma_multiplier * std::sqrt(b * (1.0 - b) / n);
    if (r.empirical_exceedance[i] > b + slack && !r.verdict.violation) {
      r.verdict.consistent = false;
      r.verdict.violation = Violation{grid[i], r.empirical_exceedance[i], b, slack};
    }
  }
  r.verdict.underpowered = r.verdict.tested_points == 0;

  if (s.n() >= 2) {
    r.psi2_estimate = orlicz_psi2_estimate(proj);
    r.psi1_estimate = orlicz_psi1_estimate(proj);
    r.hill.k = hill_k.value_or(default_hill_k(s.n()));
    std::vector<double> mags(proj.size());
    for (std::size_t i = 0; i < proj.size(); ++i) mags[i] = std::abs(proj[i]);
    if (r.hill.k < mags.size()) {
      try {
        r.hill.index = hill_estimator(mags, r.hill.k);
      } catch (const DomainError&) {
        r.hill.index.reset();
      }
    }
  }
  return r;
}

/// The p canonical axes followed by `n_random` seeded unit directions.
inline std::vector<Vector> direction_panel(std::size_t p, std::size_t n_random, RngStream& rng) {
  std::vector<Vector> out;
  for (std::size_t k = 0; k < p; ++k) {
    Vector e(p, 0.0);
    e[k] = 1.0;
    out.push_back(std::move(e));
  }
  for (std::size_t k = 0; k < n_random; ++k) out.push_back(rng.unit_vector(p));
  return out;
}

/// `steps` evenly spaced points on [t0, t1].
inline std::vector<double> linear_grid(double t0, double t1, std::size_t steps) {
  if (steps == 0) throw DomainError("grid needs at least one point");
  if (!(t0 >= 0.0) || !(t1 >= t0)) throw DomainError("grid needs 0 <= t0 <= t1");
  std::vector<double> g(steps);
  for (std::size_t i = 0; i < steps; ++i)
    g[i] = steps == 1 ? t0 : t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(steps - 1);
  return g;
}

/// Default grid: [0, quantile(cert, 1/n)] in 64 points, which spans every
/// testable bound value.
inline std::vector<double> default_grid(const TailCertificate& cert, std::size_t n,
                                        std::size_t steps = 64) {
  const double delta = std::min(0.5, 1.0 / static_cast<double>(std::max<std::size_t>(n, 3)));
  return linear_grid(0.0, quantile(cert, delta), steps);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json report_to_json(const EmpiricalTailReport& r) {
  nlohmann::json verdict = {{"consistent_with_certificate", r.verdict.consistent},
                            {"underpowered", r.verdict.underpowered},
                            {"tested_points", r.verdict.tested_points}};
  if (r.verdict.violation) {
    const Violation& v = *r.verdict.violation;
    verdict["violation"] = {{"t", v.t}, {"empirical", v.empirical}, {"bound", v.bound}, {"slack", v.slack}};
  } else {
    verdict["violation"] = nullptr;
  }
  nlohmann::json hill = {{"k", r.hill.k}};
  hill["index_estimate"] = r.hill.index ? nlohmann::json(*r.hill.index) : nlohmann::json();
  return {{"direction", r.direction},
          {"direction_normalized", r.direction_normalized},
          {"centering", std::string(to_string(r.centering))},
          {"n", r.n},
          {"grid", r.grid},
          {"empirical_exceedance", r.empirical_exceedance},
          {"certificate_bound", r.certificate_bound},
          {"psi2_estimate", r.psi2_estimate},
          {"psi1_estimate", r.psi1_estimate},
          {"hill", hill},
          {"verdict", verdict}};
}

inline nlohmann::json max_growth_to_json(const MaxGrowthResult& m) {
  return {{"pass", m.pass},
          {"max_abs_deviation", m.max_abs_deviation},
          {"allowance", m.allowance},
          {"delta", m.delta},
          {"n", m.n}};
}

}  // namespace tailcert
