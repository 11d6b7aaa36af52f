#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "tailcert/audit.hpp"
#include "tailcert/data_io.hpp"
#include "tailcert/latents.hpp"

using namespace tailcert;

namespace {

SampleSet one_dim(std::vector<double> v) {
  SampleSet s;
  s.p = 1;
  for (double x : v) s.samples.push_back(Vector{x});
  return s;
}

SampleSet gaussian_samples(std::uint64_t seed, std::size_t n, std::size_t p) {
  RngStream rng(seed, 0);
  SampleSet s;
  s.p = p;
  s.samples = sample(standard_gaussian(p), rng, n);
  return s;
}

SampleSet cauchy_samples(std::uint64_t seed, std::size_t n, std::size_t p) {
  RngStream rng(seed, 0);
  return sample_target(CauchyTarget{Vector(p, 0.0), Matrix::identity(p)}, rng, n);
}

TailCertificate sub_gaussian(double scale, std::size_t p) {
  return make_certificate(TailFamily::sub_gaussian, scale, 2.0, ConstantMode::tight, p, Provenance{});
}

std::vector<double> first_coordinate(const SampleSet& s) {
  std::vector<double> v;
  for (const auto& x : s.samples) v.push_back(x[0]);
  return v;
}

}  // namespace

TEST(Exceedance, Examples) {
  const SampleSet s = one_dim({-1, 0, 1});
  const std::vector<double> grid{0.5, 2.0};
  const auto curve = exceedance_curve(s, Vector{1.0}, Centering::mean, grid);
  EXPECT_DOUBLE_EQ(curve.probabilities[0], 2.0 / 3.0);
  EXPECT_EQ(curve.probabilities[1], 0.0);
  EXPECT_FALSE(curve.direction_normalized);
  const SampleSet flat = one_dim({3, 3, 3, 3});
  const std::vector<double> pos{1e-9, 1.0};
  for (double p : exceedance_curve(flat, Vector{1.0}, Centering::mean, pos).probabilities) EXPECT_EQ(p, 0.0);
}

TEST(Exceedance, NonUnitDirectionIsNormalizedAndFlagged) {
  SampleSet s;
  s.p = 2;
  s.samples = {{1, 0}, {-1, 0}, {0, 0}};
  const std::vector<double> grid{0.5};
  const auto c = exceedance_curve(s, Vector{3, 0}, Centering::mean, grid);
  EXPECT_TRUE(c.direction_normalized);
  EXPECT_DOUBLE_EQ(c.probabilities[0], 2.0 / 3.0);
  EXPECT_THROW(exceedance_curve(s, Vector{0, 0}, Centering::mean, grid), DomainError);
}

TEST(Exceedance, MedianCentering) {
  const SampleSet s = one_dim({0, 0, 0, 10});
  const std::vector<double> grid{1.0};
  EXPECT_DOUBLE_EQ(exceedance_curve(s, Vector{1.0}, Centering::median, grid).probabilities[0], 0.25);
  EXPECT_DOUBLE_EQ(exceedance_curve(s, Vector{1.0}, Centering::mean, grid).probabilities[0], 1.0);
}

TEST(Exceedance, MonotoneAndBounded) {
  const SampleSet s = cauchy_samples(1, 2000, 3);
  RngStream rng(1, 1);
  std::vector<double> grid;
  for (int i = 0; i < 100; ++i) grid.push_back(i * 0.5);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = exceedance_curve(s, rng.normal_vector(3), Centering::mean, grid).probabilities;
    for (std::size_t i = 0; i < p.size(); ++i) {
      EXPECT_GE(p[i], 0.0);
      EXPECT_LE(p[i], 1.0);
      if (i > 0) EXPECT_LE(p[i], p[i - 1]);
    }
  }
}

TEST(Exceedance, GridValidation) {
  const SampleSet s = one_dim({1, 2});
  const std::vector<double> unsorted{1.0, 0.5};
  const std::vector<double> negative{-1.0};
  EXPECT_THROW(exceedance_curve(s, Vector{1.0}, Centering::mean, unsorted), DomainError);
  EXPECT_THROW(exceedance_curve(s, Vector{1.0}, Centering::mean, negative), DomainError);
}

TEST(Orlicz, Psi2Examples) {
  const std::vector<double> constant(10, 4.2);
  EXPECT_EQ(orlicz_psi2_estimate(constant), 0.0);
  std::vector<double> rad;
  for (int i = 0; i < 1000; ++i) rad.push_back(i % 2 ? 1.0 : -1.0);
  EXPECT_NEAR(orlicz_psi2_estimate(rad), 1.0 / std::sqrt(std::log(2.0)), 1e-9);
  EXPECT_NEAR(orlicz_psi2_estimate(rad), 1.201122, 1e-6);
  const auto g = first_coordinate(gaussian_samples(2, 100000, 1));
  EXPECT_NEAR(orlicz_psi2_estimate(g), std::sqrt(8.0 / 3.0), 0.05);
}

TEST(Orlicz, Psi1Examples) {
  const std::vector<double> constant(5, -1.0);
  EXPECT_EQ(orlicz_psi1_estimate(constant), 0.0);
  std::vector<double> rad;
  for (int i = 0; i < 1000; ++i) rad.push_back(i % 2 ? 1.0 : -1.0);
  EXPECT_NEAR(orlicz_psi1_estimate(rad), 1.0 / std::log(2.0), 1e-9);
}

TEST(Orlicz, Psi1StableForExponentialDraws) {
  std::vector<double> est;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RngStream rng(seed, 3);
    std::vector<double> v(100000);
    for (double& x : v) x = -std::log(1.0 - rng.uniform());
    est.push_back(orlicz_psi1_estimate(v));
  }
  const double mean = std::accumulate(est.begin(), est.end(), 0.0) / est.size();
  for (double e : est) {
    EXPECT_TRUE(std::isfinite(e));
    EXPECT_LE(std::abs(e - mean), 0.1 * mean);
  }
}

TEST(Orlicz, ScaleEquivariant) {
  const auto g = first_coordinate(gaussian_samples(3, 5000, 1));
  const double b2 = orlicz_psi2_estimate(g), b1 = orlicz_psi1_estimate(g);
  for (double c : {1e-3, 0.5, 7.0, 1e4}) {
    std::vector<double> scaled(g);
    for (double& x : scaled) x *= c;
    EXPECT_NEAR(orlicz_psi2_estimate(scaled), c * b2, 1e-6 * c * b2);
    EXPECT_NEAR(orlicz_psi1_estimate(scaled), c * b1, 1e-6 * c * b1);
  }
}

TEST(Orlicz, NeedsTwoValues) {
  const std::vector<double> one{1.0};
  EXPECT_THROW(orlicz_psi2_estimate(one), DomainError);
}

TEST(Hill, HandExample) {
  const std::vector<double> v{8, 4, 2, 1};
  EXPECT_NEAR(hill_estimator(v, 3), 1.0 / (2.0 * std::log(2.0)), 1e-15);
  EXPECT_NEAR(hill_estimator(v, 3), 0.721348, 1e-6);
}

TEST(Hill, CauchyMagnitudes) {
  const auto m = magnitudes(cauchy_samples(4, 10000, 1));
  const double a = hill_estimator(m, 500);
  EXPECT_GE(a, 0.85);
  EXPECT_LE(a, 1.15);
}

TEST(Hill, ParetoInverseCdfGrid) {
  const std::size_t n = 10000;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = std::pow(1.0 - (i + 0.5) / n, -0.5);
  EXPECT_NEAR(hill_estimator(v, 500), 2.0, 0.1);
}

TEST(Hill, ScaleInvariant) {
  const auto m = magnitudes(cauchy_samples(5, 3000, 2));
  const double a = hill_estimator(m, 150);
  for (double c : {1e-6, 3.0, 1e8}) {
    std::vector<double> s(m);
    for (double& x : s) x *= c;
    EXPECT_NEAR(hill_estimator(s, 150), a, 1e-12 * a);
  }
}

TEST(Hill, Errors) {
  const std::vector<double> v{3, 2, 1};
  EXPECT_THROW(hill_estimator(v, 0), DomainError);
  EXPECT_THROW(hill_estimator(v, 3), DomainError);
  const std::vector<double> zeros{5, 0, 0};
  EXPECT_THROW(hill_estimator(zeros, 1), DomainError);
  const std::vector<double> ties{2, 2, 2};
  EXPECT_THROW(hill_estimator(ties, 2), DomainError);
  EXPECT_EQ(default_hill_k(100), 5u);
  EXPECT_EQ(default_hill_k(10), 1u);
  EXPECT_EQ(default_hill_k(100000), 1000u);
}

TEST(MaxGrowth, SingleConstantSamplePasses) {
  const SampleSet s = one_dim({2.5});
  EXPECT_TRUE(max_growth_check(s, Vector{1.0}, sub_gaussian(1.0, 1), 0.01).pass);
}

TEST(MaxGrowth, GaussianMillionPasses) {
  const SampleSet s = gaussian_samples(6, 1000000, 2);
  // Identity map, Σ = I: tight scale √2.
  const auto r = max_growth_check(s, Vector{1.0, 0.0}, sub_gaussian(std::sqrt(2.0), 2), 0.01);
  EXPECT_TRUE(r.pass);
  EXPECT_NEAR(r.allowance, std::sqrt(2.0) * std::sqrt(std::log(2.0 * 1e6 / 0.01)), 1e-9);
}

TEST(MaxGrowth, CauchyMillionFails) {
  int failures = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    failures += !max_growth_check(cauchy_samples(100 + seed, 1000000, 2), Vector{1.0, 0.0}, sub_gaussian(10.0, 2), 0.01)
                     .pass;
  EXPECT_GE(failures, 9);
}

TEST(MaxGrowth, RequiresSubGaussian) {
  const auto se = make_certificate(TailFamily::sub_exponential, 1.0, 2.0, ConstantMode::tight, 1, Provenance{});
  EXPECT_THROW(max_growth_check(one_dim({1, 2}), Vector{1.0}, se, 0.01), CapabilityError);
  EXPECT_THROW(max_growth_check(one_dim({1, 2}), Vector{1.0}, sub_gaussian(1, 1), 1.0), DomainError);
}

TEST(Compare, GaussianIdentityConsistent) {
  const SampleSet s = gaussian_samples(7, 100000, 2);
  const auto cert = sub_gaussian(std::sqrt(2.0), 2);
  RngStream rng(7, 1);
  for (const auto& u : direction_panel(2, 8, rng)) {
    const auto r = compare_to_certificate(s, u, cert, default_grid(cert, s.n()));
    EXPECT_TRUE(r.verdict.consistent);
    EXPECT_FALSE(r.verdict.underpowered);
    EXPECT_GT(r.verdict.tested_points, 10u);
    EXPECT_NEAR(norm2(r.direction), 1.0, 1e-12);
    for (std::size_t i = 0; i < r.grid.size(); ++i) {
      EXPECT_GE(r.certificate_bound[i], 0.0);
      EXPECT_LE(r.certificate_bound[i], 1.0);
      if (i > 0) EXPECT_LE(r.empirical_exceedance[i], r.empirical_exceedance[i - 1]);
    }
  }
}

TEST(Compare, CauchyViolatesSmallCertificate) {
  const SampleSet s = cauchy_samples(8, 100000, 2);
  for (double scale : {1.0, 5.0, 10.0}) {
    const auto cert = sub_gaussian(scale, 2);
    const auto r = compare_to_certificate(s, Vector{1.0, 0.0}, cert, linear_grid(0, 20 * scale, 200));
    EXPECT_FALSE(r.verdict.consistent) << scale;
    ASSERT_TRUE(r.verdict.violation.has_value());
    EXPECT_GT(r.verdict.violation->empirical, r.verdict.violation->bound + r.verdict.violation->slack);
  }
}

TEST(Compare, EmptyEffectiveGridIsUnderpowered) {
  const SampleSet s = gaussian_samples(9, 100, 1);
  const auto cert = sub_gaussian(1.0, 1);
  const std::vector<double> grid{5.0, 6.0, 7.0};  // bounds far below 10/n
  const auto r = compare_to_certificate(s, Vector{1.0}, cert, grid);
  EXPECT_TRUE(r.verdict.consistent);
  EXPECT_TRUE(r.verdict.underpowered);
  EXPECT_EQ(r.verdict.tested_points, 0u);
}

TEST(Compare, DimensionMismatch) {
  EXPECT_THROW(compare_to_certificate(gaussian_samples(1, 10, 2), Vector{1, 0}, sub_gaussian(1, 3),
                                      linear_grid(0, 1, 3)),
               ShapeError);
}

TEST(Compare, ReportJsonShape) {
  const SampleSet s = cauchy_samples(10, 2000, 1);
  const auto cert = sub_gaussian(1.0, 1);
  const auto j = report_to_json(compare_to_certificate(s, Vector{2.0}, cert, linear_grid(0, 5, 11)));
  EXPECT_EQ(j["direction_normalized"], true);
  EXPECT_EQ(j["verdict"]["consistent_with_certificate"], false);
  EXPECT_TRUE(j["verdict"]["violation"].contains("slack"));
  EXPECT_EQ(j["grid"].size(), 11u);
  EXPECT_EQ(j["hill"]["k"], 100);
}

TEST(LightVsHeavy, Psi2StableForPushforwardButGrowsForCauchy) {
  RngStream net_rng(11, 0);
  const std::vector<std::size_t> widths{8, 16, 2};
  const std::vector<Activation> acts{Activation(ActivationKind::relu), Activation(ActivationKind::identity)};
  const auto net = random_network(net_rng, widths, acts, 1.0);
  RngStream latent_rng(11, 1);
  const LatentSampler sampler(standard_gaussian(8));
  std::vector<double> push, cauchy;
  const auto c = cauchy_samples(12, 100000, 2);
  for (std::size_t i = 0; i < 100000; ++i) {
    push.push_back(net.forward(sampler.draw(latent_rng))[0]);
    cauchy.push_back(c.samples[i][0]);
  }
  auto psi2_prefix = [](const std::vector<double>& v, std::size_t n) {
    return orlicz_psi2_estimate(std::span<const double>(v.data(), n));
  };
  const double p3 = psi2_prefix(push, 1000), p5 = psi2_prefix(push, 100000);
  EXPECT_LT(std::abs(p5 - p3) / p3, 0.2);
  EXPECT_LT(std::abs(psi2_prefix(push, 10000) - p3) / p3, 0.2);
  EXPECT_GT(psi2_prefix(cauchy, 100000), 1.5 * psi2_prefix(cauchy, 1000));
}

TEST(Panel, AxesThenRandomUnits) {
  RngStream rng(13, 0);
  const auto panel = direction_panel(3, 8, rng);
  ASSERT_EQ(panel.size(), 11u);
  EXPECT_EQ(panel[1], (Vector{0, 1, 0}));
  for (const auto& u : panel) EXPECT_NEAR(norm2(u), 1.0, 1e-12);
}

TEST(Grid, LinearAndDefault) {
  EXPECT_EQ(linear_grid(0, 1, 3), (std::vector<double>{0, 0.5, 1}));
  EXPECT_EQ(linear_grid(2, 2, 1), (std::vector<double>{2}));
  EXPECT_THROW(linear_grid(1, 0, 3), DomainError);
  const auto cert = sub_gaussian(2.0, 1);
  const auto g = default_grid(cert, 1000);
  EXPECT_EQ(g.size(), 64u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_LE(evaluate(cert, g.back()), 1.0 / 1000);
}

TEST(Survival, LogLogPoints) {
  const std::vector<double> m{1, 10, 100, 100};
  const auto s = survival_curve(m);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_DOUBLE_EQ(s[0].first, 2.0);
  EXPECT_DOUBLE_EQ(s[0].second, std::log10(0.5));
  EXPECT_DOUBLE_EQ(s[2].first, 0.0);
  EXPECT_DOUBLE_EQ(s[2].second, 0.0);
}

TEST(SampleSetValidate, Errors) {
  SampleSet s;
  s.p = 2;
  s.samples = {{1, 2}, {3}};
  EXPECT_THROW(s.validate(), ShapeError);
  s.samples = {{1, NAN}};
  EXPECT_THROW(s.validate(), DomainError);
}
