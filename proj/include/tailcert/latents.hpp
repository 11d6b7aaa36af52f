#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tailcert/error.hpp"
#include "tailcert/numerics.hpp"

namespace tailcert {

struct GaussianLatent {
  Vector mu;
  Matrix sigma;
};

struct UniformCubeLatent {
  std::size_t dim = 0;
  double half_side = 1.0;
};

struct UniformBallLatent {
  std::size_t dim = 0;
  double radius = 1.0;
};

/// Realized through its Gaussian base, which is (1/‖Σ‖)-strongly log-concave.
/// An externally known γ may be supplied instead.
struct StronglyLogConcaveLatent {
  GaussianLatent base;
  std::optional<double> gamma;
};

/// Uniform (normalized volume) measure on the round sphere r·S^{d−1} ⊂ R^d.
struct SphereLatent {
  std::size_t ambient_dim = 0;
  double radius = 1.0;
};

using LatentSpec = std::variant<GaussianLatent, UniformCubeLatent, UniformBallLatent,
                                StronglyLogConcaveLatent, SphereLatent>;

inline std::string_view latent_kind(const LatentSpec& spec) {
  return std::visit(
      [](const auto& s) -> std::string_view {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GaussianLatent>) return "gaussian";
        else if constexpr (std::is_same_v<T, UniformCubeLatent>) return "cube";
        else if constexpr (std::is_same_v<T, UniformBallLatent>) return "ball";
        else if constexpr (std::is_same_v<T, StronglyLogConcaveLatent>) return "strongly_logconcave";
        else return "sphere";
      },
      spec);
}

inline std::size_t latent_dim(const LatentSpec& spec) {
  return std::visit(
      [](const auto& s) -> std::size_t {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GaussianLatent>) return s.mu.size();
        else if constexpr (std::is_same_v<T, StronglyLogConcaveLatent>) return s.base.mu.size();
        else if constexpr (std::is_same_v<T, SphereLatent>) return s.ambient_dim;
        else return s.dim;
      },
      spec);
}

inline GaussianLatent standard_gaussian(std::size_t d, double variance = 1.0) {
  return GaussianLatent{Vector(d, 0.0), Matrix::identity(d).scaled(variance)};
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Validates a spec once (Cholesky for Gaussian families) and then draws from it.
class LatentSampler {
 public:
  explicit LatentSampler(LatentSpec spec) : spec_(std::move(spec)) {
    std::visit([this](const auto& s) { prepare(s); }, spec_);
  }

  const LatentSpec& spec() const noexcept { return spec_; }
  std::size_t dim() const noexcept { return dim_; }

  Vector draw(RngStream& rng) const {
    return std::visit([&](const auto& s) { return draw_from(s, rng); }, spec_);
  }

  std::vector<Vector> sample(RngStream& rng, std::size_t n) const {
    if (n == 0) throw DomainError("sample: n must be >= 1");
    std::vector<Vector> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(draw(rng));
    return out;
  }

 private:
  void prepare_gaussian(const GaussianLatent& g) {
    if (g.mu.empty()) throw ShapeError("gaussian latent: empty mean");
    if (g.sigma.rows() != g.mu.size() || !g.sigma.square())
      throw ShapeError("gaussian latent: sigma must be dim x dim");
    if (!all_finite(g.mu)) throw DomainError("gaussian latent: non-finite mean");
    factor_ = cholesky(g.sigma);
    diagonal_ = factor_.is_diagonal();
    dim_ = g.mu.size();
  }
  void prepare(const GaussianLatent& g) { prepare_gaussian(g); }
  void prepare(const StronglyLogConcaveLatent& s) {
    prepare_gaussian(s.base);
    if (s.gamma && !(*s.gamma > 0.0)) throw DomainError("strongly log-concave latent: gamma must be > 0");
  }
  void prepare(const UniformCubeLatent& c) {
    if (c.dim == 0) throw ShapeError("cube latent: dim must be positive");
    if (!(c.half_side > 0.0)) throw DomainError("cube latent: half_side must be > 0");
    dim_ = c.dim;
  }
  void prepare(const UniformBallLatent& b) {
    if (b.dim == 0) throw ShapeError("ball latent: dim must be positive");
    if (!(b.radius > 0.0)) throw DomainError("ball latent: radius must be > 0");
    dim_ = b.dim;
  }
  void prepare(const SphereLatent& s) {
    if (s.ambient_dim < 3)
      throw DomainError("sphere latent: ambient dim must be >= 3 (intrinsic dim >= 2)");
    if (!(s.radius > 0.0)) throw DomainError("sphere latent: radius must be > 0");
    dim_ = s.ambient_dim;
  }

  Vector draw_gaussian(const GaussianLatent& g, RngStream& rng) const {
    Vector z = rng.normal_vector(dim_);
    Vector x;
    if (diagonal_) {
      x.resize(dim_);
      for (std::size_t i = 0; i < dim_; ++i) x[i] = factor_(i, i) * z[i];
    } else {
      x = lower_triangular_multiply(factor_, z);
    }
    for (std::size_t i = 0; i < dim_; ++i) x[i] += g.mu[i];
    return x;
  }
  Vector draw_from(const GaussianLatent& g, RngStream& rng) const { return draw_gaussian(g, rng); }
  Vector draw_from(const StronglyLogConcaveLatent& s, RngStream& rng) const {
    return draw_gaussian(s.base, rng);
  }
  Vector draw_from(const UniformCubeLatent& c, RngStream& rng) const {
    Vector x(c.dim);
    for (double& v : x) v = rng.uniform(-c.half_side, c.half_side);
    return x;
  }
  Vector draw_from(const UniformBallLatent& b, RngStream& rng) const {
    Vector x = rng.unit_vector(b.dim);
    const double r = b.radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(b.dim));
    for (double& v : x) v *= r;
    return x;
  }
  Vector draw_from(const SphereLatent& s, RngStream& rng) const {
    Vector x = rng.unit_vector(s.ambient_dim);
    for (double& v : x) v *= s.radius;
    return x;
  }

  LatentSpec spec_;
  Matrix factor_;
  bool diagonal_ = false;
  std::size_t dim_ = 0;
};

inline std::vector<Vector> sample(const LatentSpec& spec, RngStream& rng, std::size_t n) {
  return LatentSampler(spec).sample(rng, n);
}

/// Geodesic distance on r·S^{d−1}: r·arccos(xᵀy / r²), argument clamped to [−1, 1].
inline double sphere_geodesic(std::span<const double> x, std::span<const double> y, double r) {
  const double c = std::clamp(dot(x, y) / (r * r), -1.0, 1.0);
  return r * std::acos(c);
}

// ---------------------------------------------------------------------------
// Certificate parameters
// ---------------------------------------------------------------------------

enum class CheegerSource { none, user, heuristic_default };

inline std::string_view to_string(CheegerSource s) {
  switch (s) {
    case CheegerSource::none: return "none";
    case CheegerSource::user: return "user-supplied";
    case CheegerSource::heuristic_default: return "heuristic default, not a theorem";
  }
  return "none";
}

struct LatentParamOptions {
  std::optional<double> cheeger_override;
  /// Used for isotropic cube/ball latents when no override is given.
  double default_cheeger = 0.1;
  bool allow_default_cheeger = true;
  double norm_tol = 1e-10;
};

struct CertificateParams {
  std::string latent_kind;
  std::size_t latent_dim = 0;
  std::optional<double> sigma_op_norm;       // ‖Σ‖
  std::optional<double> sigma_sqrt_op_norm;  // ‖Σ^{1/2}‖
  std::optional<double> cheeger;             // Ψ_z
  CheegerSource cheeger_source = CheegerSource::none;
  std::optional<double> gamma;               // strong log-concavity
  std::optional<double> ricci_lower;         // λ
  std::optional<double> embedding_lipschitz; // L_φ
  std::optional<std::size_t> intrinsic_dim;
  std::optional<double> radius;

  double require_gamma() const {
    if (!gamma) throw CapabilityError("latent '" + latent_kind + "' is not strongly log-concave");
    return *gamma;
  }
};

namespace detail {

inline void set_cheeger(CertificateParams& out, const LatentParamOptions& opt, bool isotropic_default) {
  if (opt.cheeger_override) {
    if (!(*opt.cheeger_override > 0.0)) throw DomainError("Cheeger constant must be > 0");
    out.cheeger = *opt.cheeger_override;
    out.cheeger_source = CheegerSource::user;
  } else if (isotropic_default && opt.allow_default_cheeger) {
    out.cheeger = opt.default_cheeger;
    out.cheeger_source = CheegerSource::heuristic_default;
  }
}

}  // namespace detail

/// Extracts the constants each concentration certificate needs from a latent.
///
/// Gaussian: ‖Σ‖ (safe operator norm), ‖Σ^{1/2}‖ = √‖Σ‖, γ = 1/‖Σ‖.
/// Cube/ball: the law is centred and rescaled to isotropic position, so
/// Σ = (h²/3)·I for the cube and (R²/(d+2))·I for the ball.
/// Sphere r·S^{d−1}: λ = (d − 2)/r², L_φ = 1.
inline CertificateParams certificate_params(const LatentSpec& spec,
                                            const LatentParamOptions& opt = {}) {
  CertificateParams out;
  out.latent_kind = std::string(latent_kind(spec));
  out.latent_dim = latent_dim(spec);
  auto gaussian = [&](const GaussianLatent& g) {
    (void)cholesky(g.sigma);
    const double op = safe_operator_norm(g.sigma, opt.norm_tol);
    out.sigma_op_norm = op;
    out.sigma_sqrt_op_norm = std::sqrt(op);
    out.gamma = 1.0 / op;
    detail::set_cheeger(out, opt, false);
  };
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GaussianLatent>) {
          gaussian(s);
        } else if constexpr (std::is_same_v<T, StronglyLogConcaveLatent>) {
          gaussian(s.base);
          if (s.gamma) {
            if (!(*s.gamma > 0.0)) throw DomainError("gamma must be > 0");
            out.gamma = *s.gamma;
          }
        } else if constexpr (std::is_same_v<T, UniformCubeLatent>) {
          if (!(s.half_side > 0.0)) throw DomainError("cube half_side must be > 0");
          const double var = s.half_side * s.half_side / 3.0;
          out.sigma_op_norm = var;
          out.sigma_sqrt_op_norm = s.half_side / std::sqrt(3.0);
          detail::set_cheeger(out, opt, true);
        } else if constexpr (std::is_same_v<T, UniformBallLatent>) {
          if (!(s.radius > 0.0)) throw DomainError("ball radius must be > 0");
          const double var = s.radius * s.radius / static_cast<double>(s.dim + 2);
          out.sigma_op_norm = var;
          out.sigma_sqrt_op_norm = std::sqrt(var);
          detail::set_cheeger(out, opt, true);
        } else {
          if (s.ambient_dim < 3) throw DomainError("sphere ambient dim must be >= 3");
          const std::size_t d_int = s.ambient_dim - 1;
          out.intrinsic_dim = d_int;
          out.radius = s.radius;
          out.ricci_lower = static_cast<double>(d_int - 1) / (s.radius * s.radius);
          out.embedding_lipschitz = 1.0;
        }
      },
      spec);
  return out;
}

inline nlohmann::json params_to_json(const CertificateParams& p) {
  nlohmann::json j = {{"kind", p.latent_kind}, {"dim", p.latent_dim}};
  if (p.sigma_op_norm) j["sigma_op_norm"] = *p.sigma_op_norm;
  if (p.sigma_sqrt_op_norm) j["sigma_sqrt_op_norm"] = *p.sigma_sqrt_op_norm;
  if (p.cheeger) j["cheeger"] = *p.cheeger;
  j["cheeger_source"] = std::string(to_string(p.cheeger_source));
  if (p.gamma) j["gamma"] = *p.gamma;
  if (p.ricci_lower) j["ricci_lower"] = *p.ricci_lower;
  if (p.embedding_lipschitz) j["embedding_lipschitz"] = *p.embedding_lipschitz;
  if (p.intrinsic_dim) j["intrinsic_dim"] = *p.intrinsic_dim;
  if (p.radius) j["radius"] = *p.radius;
  return j;
}

}  // namespace tailcert
