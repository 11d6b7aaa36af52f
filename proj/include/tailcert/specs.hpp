#pragma once

// Text and JSON forms of latent and target specs used by the command line:
//   gaussian:d=64,sigma=I        sphere:d=64,r=1       cube:d=8,half=1
//   ball:d=4,r=1                 slc:d=16,sigma=2      cauchy:d=2
//   student:d=2,dof=3            gaussian:d=2,sigma=0.5 (as a target)
// `sigma` accepts I or a positive scalar s (meaning s·I); `mu`, `mode` accept a scalar.

#include <cstddef>
#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

#include "tailcert/data_io.hpp"
#include "tailcert/error.hpp"
#include "tailcert/io_util.hpp"
#include "tailcert/latents.hpp"

namespace tailcert {

namespace detail {

struct KindArgs {
  std::string kind;
  std::map<std::string, std::string> args;
};

inline KindArgs parse_kind_args(std::string_view text) {
  KindArgs out;
  const auto colon = text.find(':');
  out.kind = std::string(text.substr(0, colon));
  if (out.kind.empty()) throw DomainError("spec '" + std::string(text) + "': missing kind");
  if (colon == std::string_view::npos) return out;
  std::string_view rest = text.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0)
      throw DomainError("spec '" + std::string(text) + "': expected key=value, got '" +
                        std::string(item) + "'");
    out.args[std::string(item.substr(0, eq))] = std::string(item.substr(eq + 1));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

inline double arg_real(const KindArgs& ka, const std::string& key, std::optional<double> fallback) {
  const auto it = ka.args.find(key);
  if (it == ka.args.end()) {
    if (fallback) return *fallback;
    throw DomainError("spec '" + ka.kind + "': missing '" + key + "'");
  }
  const auto v = parse_double(it->second);
  if (!v || !std::isfinite(*v))
    throw DomainError("spec '" + ka.kind + "': '" + key + "' is not a number");
  return *v;
}

inline std::size_t arg_dim(const KindArgs& ka) {
  const double d = arg_real(ka, "d", std::nullopt);
  if (!(d >= 1.0) || d != std::floor(d)) throw DomainError("spec '" + ka.kind + "': d must be a positive integer");
  return static_cast<std::size_t>(d);
}

inline Matrix arg_sigma(const KindArgs& ka, const std::string& key, std::size_t d) {
  const auto it = ka.args.find(key);
  if (it == ka.args.end() || it->second == "I") return Matrix::identity(d);
  const auto v = parse_double(it->second);
  if (!v || !(*v > 0.0)) throw DomainError("spec '" + ka.kind + "': '" + key + "' must be I or a positive scalar");
  return Matrix::identity(d).scaled(*v);
}

inline void reject_unknown(const KindArgs& ka, std::initializer_list<std::string_view> allowed) {
  for (const auto& [k, v] : ka.args) {
    bool ok = false;
    for (auto a : allowed) ok = ok || k == a;
    if (!ok) throw DomainError("spec '" + ka.kind + "': unknown key '" + k + "'");
  }
}

inline Matrix matrix_from_json(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw FormatError(field, std::nullopt, "expected a nested array");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  std::vector<double> e;
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw FormatError(field, i, "ragged row");
    for (const auto& v : j[i]) {
      if (!v.is_number()) throw FormatError(field, i, "non-numeric entry");
      e.push_back(v.get<double>());
    }
  }
  return Matrix(rows, cols, std::move(e));
}

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

}  // namespace detail

inline LatentSpec parse_latent(std::string_view text) {
  const auto ka = detail::parse_kind_args(text);
  if (ka.kind == "gaussian" || ka.kind == "slc") {
    const std::size_t d = detail::arg_dim(ka);
    GaussianLatent g{Vector(d, detail::arg_real(ka, "mu", 0.0)), detail::arg_sigma(ka, "sigma", d)};
    if (ka.kind == "gaussian") {
      detail::reject_unknown(ka, {"d", "mu", "sigma"});
      return g;
    }
    detail::reject_unknown(ka, {"d", "mu", "sigma", "gamma"});
    StronglyLogConcaveLatent s{std::move(g), std::nullopt};
    if (ka.args.count("gamma")) s.gamma = detail::arg_real(ka, "gamma", std::nullopt);
    return s;
  }
  if (ka.kind == "cube") {
    detail::reject_unknown(ka, {"d", "half"});
    return UniformCubeLatent{detail::arg_dim(ka), detail::arg_real(ka, "half", 1.0)};
  }
  if (ka.kind == "ball") {
    detail::reject_unknown(ka, {"d", "r"});
    return UniformBallLatent{detail::arg_dim(ka), detail::arg_real(ka, "r", 1.0)};
  }
  if (ka.kind == "sphere") {
    detail::reject_unknown(ka, {"d", "r"});
    return SphereLatent{detail::arg_dim(ka), detail::arg_real(ka, "r", 1.0)};
  }
  throw DomainError("unknown latent kind '" + ka.kind + "'");
}

inline LatentSpec latent_from_json(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "gaussian" || kind == "strongly_logconcave" || kind == "slc") {
      GaussianLatent g{j.at("mu").get<Vector>(), detail::matrix_from_json(j.at("sigma"), "sigma")};
      if (kind == "gaussian") return g;
      StronglyLogConcaveLatent s{std::move(g), std::nullopt};
      if (j.contains("gamma") && !j["gamma"].is_null()) s.gamma = j["gamma"].get<double>();
      return s;
    }
    if (kind == "cube") return UniformCubeLatent{j.at("dim").get<std::size_t>(), j.value("half_side", 1.0)};
    if (kind == "ball") return UniformBallLatent{j.at("dim").get<std::size_t>(), j.value("radius", 1.0)};
    if (kind == "sphere") return SphereLatent{j.at("dim").get<std::size_t>(), j.value("radius", 1.0)};
    throw FormatError("kind", std::nullopt, "unknown latent kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("latent", std::nullopt, e.what());
  }
}

inline nlohmann::json latent_to_json(const LatentSpec& spec) {
  return std::visit(
      [](const auto& s) -> nlohmann::json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GaussianLatent>) {
          return {{"kind", "gaussian"}, {"mu", s.mu}, {"sigma", detail::matrix_to_json(s.sigma)}};
        } else if constexpr (std::is_same_v<T, StronglyLogConcaveLatent>) {
          nlohmann::json j = {{"kind", "strongly_logconcave"},
                              {"mu", s.base.mu},
                              {"sigma", detail::matrix_to_json(s.base.sigma)}};
          j["gamma"] = s.gamma ? nlohmann::json(*s.gamma) : nlohmann::json();
          return j;
        } else if constexpr (std::is_same_v<T, UniformCubeLatent>) {
          return {{"kind", "cube"}, {"dim", s.dim}, {"half_side", s.half_side}};
        } else if constexpr (std::is_same_v<T, UniformBallLatent>) {
          return {{"kind", "ball"}, {"dim", s.dim}, {"radius", s.radius}};
        } else {
          return {{"kind", "sphere"}, {"dim", s.ambient_dim}, {"radius", s.radius}};
        }
      },
      spec);
}

inline TargetSpec parse_target(std::string_view text) {
  const auto ka = detail::parse_kind_args(text);
  const std::size_t d = detail::arg_dim(ka);
  if (ka.kind == "cauchy") {
    detail::reject_unknown(ka, {"d", "mode", "scale"});
    return CauchyTarget{Vector(d, detail::arg_real(ka, "mode", 0.0)), detail::arg_sigma(ka, "scale", d)};
  }
  if (ka.kind == "student") {
    detail::reject_unknown(ka, {"d", "mode", "scale", "dof"});
    return StudentTTarget{Vector(d, detail::arg_real(ka, "mode", 0.0)), detail::arg_sigma(ka, "scale", d),
                          detail::arg_real(ka, "dof", std::nullopt)};
  }
  if (ka.kind == "gaussian") {
    detail::reject_unknown(ka, {"d", "mu", "sigma"});
    return GaussianTarget{Vector(d, detail::arg_real(ka, "mu", 0.0)), detail::arg_sigma(ka, "sigma", d)};
  }
  throw DomainError("unknown target kind '" + ka.kind + "'");
}

inline TargetSpec target_from_json(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "cauchy")
      return CauchyTarget{j.at("mode").get<Vector>(), detail::matrix_from_json(j.at("scale"), "scale")};
    if (kind == "student_t" || kind == "student")
      return StudentTTarget{j.at("mode").get<Vector>(), detail::matrix_from_json(j.at("scale"), "scale"),
                            j.at("dof").get<double>()};
    if (kind == "gaussian")
      return GaussianTarget{j.at("mu").get<Vector>(), detail::matrix_from_json(j.at("sigma"), "sigma")};
    throw FormatError("kind", std::nullopt, "unknown target kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("target", std::nullopt, e.what());
  }
}

}  // namespace tailcert
