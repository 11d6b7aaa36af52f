#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tailcert/certificates.hpp"
#include "tailcert/error.hpp"
#include "tailcert/network.hpp"
#include "tailcert/numerics.hpp"

namespace tailcert {

enum class SigmaRule { sqrt_beta };

inline std::string_view to_string(SigmaRule) { return "sqrt_beta"; }
inline SigmaRule parse_sigma_rule(std::string_view s) {
  if (s == "sqrt_beta") return SigmaRule::sqrt_beta;
  throw DomainError("unknown sigma rule '" + std::string(s) + "'");
}

/// Variance schedule; vectors are indexed by τ − 1 for τ = 1..T.
struct Schedule {
  std::size_t T = 0;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;
  std::vector<double> sigma;
  SigmaRule sigma_rule = SigmaRule::sqrt_beta;
  double beta_start = 0.0;
  double beta_end = 0.0;
};

/// β_τ linear from beta_start (τ = 1) to beta_end (τ = T); α = 1 − β,
/// ᾱ_τ = ∏_{s≤τ} α_s, σ_τ = √β_τ.
inline Schedule linear_schedule(std::size_t T, double beta_start, double beta_end,
                                SigmaRule rule = SigmaRule::sqrt_beta) {
  if (T == 0) throw DomainError("linear_schedule: T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
    throw DomainError("linear_schedule: need 0 < beta_start <= beta_end < 1");
  Schedule s;
  s.T = T;
  s.sigma_rule = rule;
  s.beta_start = beta_start;
  s.beta_end = beta_end;
  s.beta.resize(T);
  s.alpha.resize(T);
  s.alpha_bar.resize(T);
  s.sigma.resize(T);
  double running = 1.0;
  for (std::size_t i = 0; i < T; ++i) {
    const double frac = T == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(T - 1);
    const double b = beta_start + (beta_end - beta_start) * frac;
    s.beta[i] = b;
    s.alpha[i] = 1.0 - b;
    running *= s.alpha[i];
    s.alpha_bar[i] = running;
    s.sigma[i] = std::sqrt(b);
  }
  return s;
}

/// Reverse DDPM sampler with a noise-prediction network taking (x, τ/T).
class DiffusionChain {
 public:
  DiffusionChain(Schedule schedule, FeedForwardNetwork noise_net)
      : schedule_(std::move(schedule)), net_(std::move(noise_net)) {
    if (net_.input_dim() < 2)
      throw ShapeError("diffusion chain: noise net input dim must be p + 1 >= 2", 0);
    p_ = net_.input_dim() - 1;
    if (net_.output_dim() != p_)
      throw ShapeError("diffusion chain: noise net output dim " + std::to_string(net_.output_dim()) +
                           " != p = " + std::to_string(p_),
                       net_.depth() - 1);
    if (schedule_.T == 0 || schedule_.beta.size() != schedule_.T ||
        schedule_.alpha.size() != schedule_.T || schedule_.alpha_bar.size() != schedule_.T ||
        schedule_.sigma.size() != schedule_.T)
      throw ShapeError("diffusion chain: schedule vectors must have length T");
  }

  const Schedule& schedule() const noexcept { return schedule_; }
  const FeedForwardNetwork& noise_net() const noexcept { return net_; }
  std::size_t p() const noexcept { return p_; }
  std::size_t T() const noexcept { return schedule_.T; }

  /// One reverse step X_τ → X_{τ−1} given ε_τ (ignored at τ = 1).
  Vector step(std::span<const double> x, std::size_t tau, std::span<const double> eps) const {
    const std::size_t i = tau - 1;
    const double a = schedule_.alpha[i];
    const double coef = (1.0 - a) / std::sqrt(1.0 - schedule_.alpha_bar[i]);
    Vector in(x.begin(), x.end());
    in.push_back(static_cast<double>(tau) / static_cast<double>(schedule_.T));
    const Vector f = net_.forward(in);
    const double inv_sqrt_a = 1.0 / std::sqrt(a);
    Vector out(p_);
    for (std::size_t k = 0; k < p_; ++k) {
      out[k] = inv_sqrt_a * (x[k] - coef * f[k]);
      if (tau > 1) out[k] += schedule_.sigma[i] * eps[k];
    }
    return out;
  }

  /// X_0 as a deterministic function of the augmented input (x_T, ε_1, …, ε_T).
  /// `eps[τ − 1]` holds ε_τ.
  Vector run(std::span<const double> x_T, const std::vector<Vector>& eps) const {
    if (x_T.size() != p_) throw ShapeError("diffusion run: x_T has wrong dimension");
    if (eps.size() != schedule_.T) throw ShapeError("diffusion run: need T noise vectors");
    Vector x(x_T.begin(), x_T.end());
    for (std::size_t tau = schedule_.T; tau >= 1; --tau) {
      if (eps[tau - 1].size() != p_) throw ShapeError("diffusion run: noise vector dimension");
      x = step(x, tau, eps[tau - 1]);
    }
    return x;
  }

 private:
  Schedule schedule_;
  FeedForwardNetwork net_;
  std::size_t p_ = 0;
};

/// Draws n independent X_0. Per draw: x_T ~ N(0, I_p), then ε_T, …, ε_2 in
/// that order as the chain consumes them.
inline std::vector<Vector> sample_chain(const DiffusionChain& chain, RngStream& rng, std::size_t n) {
  if (n == 0) throw DomainError("sample_chain: n must be >= 1");
  const std::size_t p = chain.p();
  std::vector<Vector> out;
  out.reserve(n);
  const Vector zero(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    Vector x = rng.normal_vector(p);
    for (std::size_t tau = chain.T(); tau >= 1; --tau) {
      if (tau > 1) {
        const Vector eps = rng.normal_vector(p);
        x = chain.step(x, tau, eps);
      } else {
        x = chain.step(x, tau, zero);
      }
    }
    out.push_back(std::move(x));
  }
  return out;
}

struct ChainLipschitzBound {
  std::vector<double> per_step;  // index τ − 1
  double composite = 0.0;
  double log_composite = 0.0;
};

/// L_τ = (1/√α_τ)(1 + ((1 − α_τ)/√(1 − ᾱ_τ)) L_f) + σ_τ·[τ > 1] + 1.
///
/// The head map (x_τ, ε_τ) ↦ J(x_τ) + σ_τ ε_τ is Lipschitz with the first two
/// terms; carrying the remaining augmented coordinates through unchanged adds
/// the final +1. The composite bound is ∏_τ L_τ.
inline ChainLipschitzBound per_step_lipschitz(const DiffusionChain& chain, const LipschitzBound& lip_f) {
  const Schedule& s = chain.schedule();
  ChainLipschitzBound out;
  out.per_step.resize(s.T);
  out.composite = 1.0;
  for (std::size_t tau = 1; tau <= s.T; ++tau) {
    const std::size_t i = tau - 1;
    const double coef = (1.0 - s.alpha[i]) / std::sqrt(1.0 - s.alpha_bar[i]);
    const double head = (1.0 / std::sqrt(s.alpha[i])) * (1.0 + coef * lip_f.value) +
                        (tau > 1 ? s.sigma[i] : 0.0);
    out.per_step[i] = head + 1.0;
    out.composite *= out.per_step[i];
    out.log_composite += std::log(out.per_step[i]);
  }
  return out;
}

/// Gaussian certificate for X_0 over the augmented N(0, I_{p(T+1)}) latent with
/// Lipschitz constant ∏ L_τ. tight: scale² = 2 (∏L_τ)²; paper_form: C² p (∏L_τ)².
inline TailCertificate certify_diffusion(const DiffusionChain& chain, const LipschitzBound& lip_f,
                                         ConstantMode mode, const CertifyOptions& opt = {}) {
  const ChainLipschitzBound chain_lip = per_step_lipschitz(chain, lip_f);
  if (!std::isfinite(chain_lip.composite))
    throw DomainError("certify_diffusion: composite Lipschitz bound overflows (log = " +
                      std::to_string(chain_lip.log_composite) + "); certificate would be vacuous");
  const double L = chain_lip.composite;
  const std::size_t p = chain.p();
  Provenance prov;
  prov.theorem = "diffusion_reduction";
  prov.lipschitz = L;
  const Schedule& s = chain.schedule();
  prov.latent_params = {{"kind", "augmented_gaussian"},
                        {"dim", p * (s.T + 1)},
                        {"sigma_op_norm", 1.0},
                        {"noise_net_lipschitz", lip_f.value},
                        {"T", s.T},
                        {"beta_start", s.beta_start},
                        {"beta_end", s.beta_end},
                        {"sigma_rule", std::string(to_string(s.sigma_rule))},
                        {"time_encoding", "tau/T"},
                        {"per_step_lipschitz", chain_lip.per_step}};
  prov.notes.push_back("sigma_tau = sqrt(beta_tau) is a configured rule; the sampler's sigma schedule is an assumption");
  double scale2 = 0.0;
  if (mode == ConstantMode::tight) {
    scale2 = 2.0 * L * L;
  } else {
    scale2 = opt.C * opt.C * detail::paper_p(p, opt) * L * L;
    detail::note_paper_constant(prov, opt);
  }
  return make_certificate(TailFamily::sub_gaussian, std::sqrt(scale2), 2.0, mode, p, std::move(prov));
}

inline nlohmann::json schedule_to_json(const Schedule& s) {
  return {{"T", s.T},
          {"beta_start", s.beta_start},
          {"beta_end", s.beta_end},
          {"sigma_rule", std::string(to_string(s.sigma_rule))}};
}

inline Schedule schedule_from_json(const nlohmann::json& j) {
  try {
    return linear_schedule(j.at("T").get<std::size_t>(), j.at("beta_start").get<double>(),
                           j.at("beta_end").get<double>(),
                           parse_sigma_rule(j.value("sigma_rule", std::string("sqrt_beta"))));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("schedule", std::nullopt, e.what());
  }
}

}  // namespace tailcert
