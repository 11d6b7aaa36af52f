#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tailcert/error.hpp"
#include "tailcert/latents.hpp"
#include "tailcert/network.hpp"

namespace tailcert {

enum class TailFamily { sub_gaussian, sub_exponential };
enum class ConstantMode { tight, paper_form };

inline std::string_view to_string(TailFamily f) {
  return f == TailFamily::sub_gaussian ? "sub_gaussian" : "sub_exponential";
}
inline std::string_view to_string(ConstantMode m) {
  return m == ConstantMode::tight ? "tight" : "paper_form";
}
inline TailFamily parse_family(std::string_view s) {
  if (s == "sub_gaussian") return TailFamily::sub_gaussian;
  if (s == "sub_exponential") return TailFamily::sub_exponential;
  throw DomainError("unknown tail family '" + std::string(s) + "'");
}
inline ConstantMode parse_mode(std::string_view s) {
  if (s == "tight") return ConstantMode::tight;
  if (s == "paper_form" || s == "paper") return ConstantMode::paper_form;
  throw DomainError("unknown constant mode '" + std::string(s) + "'");
}

/// Absolute constants a certificate relies on but cannot verify.
struct AssumedConstants {
  std::optional<double> C;   // theorem-statement absolute constant (paper_form)
  std::optional<double> C6;  // log-concave concentration constant (tight log-concave)
  std::string cheeger_source = "none";
};

struct Provenance {
  std::string theorem;
  double lipschitz = 0.0;
  nlohmann::json latent_params = nlohmann::json::object();
  AssumedConstants assumed;
  std::vector<std::string> notes;
};

/// Closed-form tail bound for |uᵀ(X − E X)|:
///   sub-Gaussian:    min(1, prefactor · exp(−t² / scale²))
///   sub-exponential: min(1, prefactor · exp(−t / scale))
/// `prefactor` is 2 except for the tight log-concave form, which carries none.
struct TailCertificate {
  TailFamily family = TailFamily::sub_gaussian;
  double scale = 1.0;
  double prefactor = 2.0;
  ConstantMode mode = ConstantMode::tight;
  std::size_t p = 1;
  Provenance provenance;
};

struct CertifyOptions {
  double C = 2.0;
  double C6 = 1.0;
  /// Replaces the output dimension in the paper_form √p inflation.
  std::optional<std::size_t> p_override;
};

inline TailCertificate make_certificate(TailFamily family, double scale, double prefactor,
                                        ConstantMode mode, std::size_t p, Provenance prov) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw DomainError("certificate scale must be positive and finite (got " +
                      std::to_string(scale) + ")");
  if (!(prefactor >= 1.0) || !std::isfinite(prefactor))
    throw DomainError("certificate prefactor must be >= 1");
  if (p == 0) throw DomainError("certificate output dimension must be positive");
  return TailCertificate{family, scale, prefactor, mode, p, std::move(prov)};
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Unclamped bound; may exceed 1.
inline double raw_bound(const TailCertificate& cert, double t) {
  if (!(t >= 0.0)) throw DomainError("evaluate: t must be >= 0");
  const double x = t / cert.scale;
  const double e = cert.family == TailFamily::sub_gaussian ? x * x : x;
  return cert.prefactor * std::exp(-e);
}

inline double evaluate(const TailCertificate& cert, double t) {
  return std::min(1.0, raw_bound(cert, t));
}

/// True when the closed form exceeds 1 at t, i.e. the bound says nothing.
inline bool is_vacuous(const TailCertificate& cert, double t) { return raw_bound(cert, t) >= 1.0; }

/// Smallest t with evaluate(cert, t) <= delta.
inline double quantile(const TailCertificate& cert, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("quantile: delta must be in (0, 1)");
  const double l = std::log(cert.prefactor / delta);
  double t = cert.family == TailFamily::sub_gaussian ? cert.scale * std::sqrt(l) : cert.scale * l;
  // Closed form can land one ulp on the wrong side.
  while (evaluate(cert, t) > delta) t = std::nextafter(t, std::numeric_limits<double>::infinity());
  return t;
}

// ---------------------------------------------------------------------------
// Theorem-backed constructors
// ---------------------------------------------------------------------------

namespace detail {

inline Provenance base_provenance(std::string theorem, const LipschitzBound& lip,
                                  const CertificateParams& params) {
  Provenance prov;
  prov.theorem = std::move(theorem);
  prov.lipschitz = lip.value;
  prov.latent_params = params_to_json(params);
  prov.latent_params["lipschitz_method"] = std::string(to_string(lip.method));
  return prov;
}

inline double paper_p(std::size_t p, const CertifyOptions& opt) {
  return static_cast<double>(opt.p_override.value_or(p));
}

inline void note_paper_constant(Provenance& prov, const CertifyOptions& opt) {
  prov.assumed.C = opt.C;
  prov.notes.push_back("absolute constant C is unspecified by the source theorem; configured value " +
                       std::to_string(opt.C) + " is an assumption");
}

}  // namespace detail

/// Gaussian latent. tight: scale² = 2 L² ‖Σ‖ (per direction u);
/// paper_form: scale² = C² p L² ‖Σ‖.
inline TailCertificate certify_gaussian(const LipschitzBound& lip, const CertificateParams& params,
                                        std::size_t p, ConstantMode mode,
                                        const CertifyOptions& opt = {}) {
  if (!params.sigma_op_norm)
    throw CapabilityError("certify_gaussian: latent '" + params.latent_kind + "' has no ‖Σ‖");
  const double L = lip.value;
  const double s = *params.sigma_op_norm;
  Provenance prov = detail::base_provenance("gaussian_isoperimetric", lip, params);
  double scale2 = 0.0;
  if (mode == ConstantMode::tight) {
    scale2 = 2.0 * L * L * s;
  } else {
    scale2 = opt.C * opt.C * detail::paper_p(p, opt) * L * L * s;
    detail::note_paper_constant(prov, opt);
  }
  return make_certificate(TailFamily::sub_gaussian, std::sqrt(scale2), 2.0, mode, p, std::move(prov));
}

/// Log-concave latent with Cheeger constant Ψ.
/// tight: bound(t) = exp(−Ψ t / (C6 L ‖Σ^{1/2}‖)), i.e. scale = C6 L ‖Σ^{1/2}‖ / Ψ, no prefactor;
/// paper_form: 2 exp(−t / scale) with scale = C √p L ‖Σ^{1/2}‖ / Ψ.
inline TailCertificate certify_logconcave(const LipschitzBound& lip, const CertificateParams& params,
                                          std::size_t p, ConstantMode mode,
                                          const CertifyOptions& opt = {}) {
  if (!params.cheeger)
    throw CapabilityError("certify_logconcave: no Cheeger constant supplied for latent '" +
                          params.latent_kind + "'");
  if (!params.sigma_sqrt_op_norm)
    throw CapabilityError("certify_logconcave: latent '" + params.latent_kind + "' has no ‖Σ^{1/2}‖");
  const double psi = *params.cheeger;
  if (!(psi > 0.0)) throw DomainError("Cheeger constant must be > 0");
  const double L = lip.value;
  const double root = *params.sigma_sqrt_op_norm;
  Provenance prov = detail::base_provenance("logconcave_cheeger", lip, params);
  prov.assumed.cheeger_source = std::string(to_string(params.cheeger_source));
  if (params.cheeger_source == CheegerSource::heuristic_default)
    prov.notes.push_back("Cheeger constant is a configured heuristic default, not a theorem");
  if (mode == ConstantMode::tight) {
    prov.assumed.C6 = opt.C6;
    prov.notes.push_back("log-concave concentration constant C6 is unspecified; configured value " +
                         std::to_string(opt.C6) + " is an assumption");
    return make_certificate(TailFamily::sub_exponential, opt.C6 * L * root / psi, 1.0, mode, p,
                            std::move(prov));
  }
  detail::note_paper_constant(prov, opt);
  const double scale = opt.C * std::sqrt(detail::paper_p(p, opt)) * L * root / psi;
  return make_certificate(TailFamily::sub_exponential, scale, 2.0, mode, p, std::move(prov));
}

/// γ-strongly log-concave latent. tight: scale² = 4 L² / γ;
/// paper_form: scale² = C² p L² ‖Σ‖ / γ.
inline TailCertificate certify_strongly_logconcave(const LipschitzBound& lip,
                                                   const CertificateParams& params, std::size_t p,
                                                   ConstantMode mode,
                                                   const CertifyOptions& opt = {}) {
  const double gamma = params.require_gamma();
  if (!(gamma > 0.0)) throw DomainError("gamma must be > 0");
  const double L = lip.value;
  Provenance prov = detail::base_provenance("strongly_logconcave", lip, params);
  double scale2 = 0.0;
  if (mode == ConstantMode::tight) {
    scale2 = 4.0 * L * L / gamma;
  } else {
    if (!params.sigma_op_norm)
      throw CapabilityError("certify_strongly_logconcave: paper_form needs ‖Σ‖");
    scale2 = opt.C * opt.C * detail::paper_p(p, opt) * L * L * *params.sigma_op_norm / gamma;
    detail::note_paper_constant(prov, opt);
  }
  return make_certificate(TailFamily::sub_gaussian, std::sqrt(scale2), 2.0, mode, p, std::move(prov));
}

/// Latent uniform on a manifold with Ricci curvature >= λ > 0, embedded with
/// Lipschitz constant L_φ. tight: scale² = 2 L² L_φ² / λ; paper_form: C² p L² L_φ² / λ.
inline TailCertificate certify_manifold(const LipschitzBound& lip, const CertificateParams& params,
                                        std::size_t p, ConstantMode mode,
                                        const CertifyOptions& opt = {}) {
  if (!params.ricci_lower || !params.embedding_lipschitz)
    throw CapabilityError("certify_manifold: latent '" + params.latent_kind +
                          "' has no Ricci lower bound / embedding constant");
  const double lambda = *params.ricci_lower;
  if (!(lambda > 0.0)) throw DomainError("certify_manifold: Ricci lower bound must be > 0");
  const double L = lip.value;
  const double Lphi = *params.embedding_lipschitz;
  Provenance prov = detail::base_provenance("gromov_levy_manifold", lip, params);
  double scale2 = 0.0;
  if (mode == ConstantMode::tight) {
    scale2 = 2.0 * L * L * Lphi * Lphi / lambda;
  } else {
    scale2 = opt.C * opt.C * detail::paper_p(p, opt) * L * L * Lphi * Lphi / lambda;
    detail::note_paper_constant(prov, opt);
  }
  return make_certificate(TailFamily::sub_gaussian, std::sqrt(scale2), 2.0, mode, p, std::move(prov));
}

/// Picks the certificate matching the latent family: Gaussian, cube/ball
/// (log-concave), strongly log-concave, or sphere.
inline TailCertificate certify_for_latent(const LatentSpec& spec, const LipschitzBound& lip,
                                          const CertificateParams& params, std::size_t p,
                                          ConstantMode mode, const CertifyOptions& opt = {}) {
  if (std::holds_alternative<GaussianLatent>(spec)) return certify_gaussian(lip, params, p, mode, opt);
  if (std::holds_alternative<StronglyLogConcaveLatent>(spec))
    return certify_strongly_logconcave(lip, params, p, mode, opt);
  if (std::holds_alternative<SphereLatent>(spec)) return certify_manifold(lip, params, p, mode, opt);
  return certify_logconcave(lip, params, p, mode, opt);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json certificate_to_json(const TailCertificate& c) {
  nlohmann::json assumed = {{"cheeger_source", c.provenance.assumed.cheeger_source}};
  assumed["C"] = c.provenance.assumed.C ? nlohmann::json(*c.provenance.assumed.C) : nlohmann::json();
  assumed["C6"] =
      c.provenance.assumed.C6 ? nlohmann::json(*c.provenance.assumed.C6) : nlohmann::json();
  return {{"family", std::string(to_string(c.family))},
          {"scale", c.scale},
          {"prefactor", c.prefactor},
          {"constant_mode", std::string(to_string(c.mode))},
          {"p", c.p},
          {"provenance",
           {{"theorem", c.provenance.theorem},
            {"lipschitz", c.provenance.lipschitz},
            {"latent_params", c.provenance.latent_params},
            {"assumed_constants", assumed},
            {"notes", c.provenance.notes}}}};
}

inline TailCertificate certificate_from_json(const nlohmann::json& j) {
  try {
    Provenance prov;
    const auto& pj = j.at("provenance");
    prov.theorem = pj.at("theorem").get<std::string>();
    prov.lipschitz = pj.at("lipschitz").get<double>();
    if (pj.contains("latent_params")) prov.latent_params = pj.at("latent_params");
    const auto& aj = pj.at("assumed_constants");
    if (aj.contains("C") && !aj.at("C").is_null()) prov.assumed.C = aj.at("C").get<double>();
    if (aj.contains("C6") && !aj.at("C6").is_null()) prov.assumed.C6 = aj.at("C6").get<double>();
    prov.assumed.cheeger_source = aj.value("cheeger_source", std::string("none"));
    if (pj.contains("notes")) prov.notes = pj.at("notes").get<std::vector<std::string>>();
    const TailFamily family = parse_family(j.at("family").get<std::string>());
    const double prefactor = j.value("prefactor", 2.0);
    return make_certificate(family, j.at("scale").get<double>(), prefactor,
                            parse_mode(j.at("constant_mode").get<std::string>()),
                            j.at("p").get<std::size_t>(), std::move(prov));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("certificate", std::nullopt, e.what());
  }
}

}  // namespace tailcert
