#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tailcert/audit.hpp"
#include "tailcert/error.hpp"
#include "tailcert/io_util.hpp"
#include "tailcert/numerics.hpp"

namespace tailcert {

// ---------------------------------------------------------------------------
// Heavy-tailed reference targets
// ---------------------------------------------------------------------------

struct StudentTTarget {
  Vector mode;
  Matrix scale;
  double dof = 1.0;
};

/// Multivariate Cauchy = Student-t with one degree of freedom.
struct CauchyTarget {
  Vector mode;
  Matrix scale;
};

struct GaussianTarget {
  Vector mu;
  Matrix sigma;
};

using TargetSpec = std::variant<CauchyTarget, StudentTTarget, GaussianTarget>;

inline std::string_view target_kind(const TargetSpec& t) {
  if (std::holds_alternative<CauchyTarget>(t)) return "cauchy";
  if (std::holds_alternative<StudentTTarget>(t)) return "student_t";
  return "gaussian";
}

/// Student-t draws mode + A g / √(w / dof) with A = cholesky(scale),
/// g ~ N(0, I), w ~ χ²_dof. Gaussian draws mu + A g.
inline SampleSet sample_target(const TargetSpec& spec, RngStream& rng, std::size_t n) {
  if (n == 0) throw DomainError("sample_target: n must be >= 1");
  Vector loc;
  Matrix sc;
  std::optional<double> dof;
  std::visit(
      [&](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, CauchyTarget>) {
          loc = t.mode;
          sc = t.scale;
          dof = 1.0;
        } else if constexpr (std::is_same_v<T, StudentTTarget>) {
          loc = t.mode;
          sc = t.scale;
          dof = t.dof;
        } else {
          loc = t.mu;
          sc = t.sigma;
        }
      },
      spec);
  if (loc.empty() || sc.rows() != loc.size() || !sc.square())
    throw ShapeError("sample_target: location/scale dimension mismatch");
  if (dof && !(*dof > 0.0)) throw DomainError("sample_target: dof must be > 0");
  const Matrix a = cholesky(sc);
  const std::size_t d = loc.size();
  SampleSet out;
  out.p = d;
  out.provenance = std::string(target_kind(spec)) + " target";
  out.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vector g = rng.normal_vector(d);
    Vector x = lower_triangular_multiply(a, g);
    double mult = 1.0;
    if (dof) {
      double w = rng.chi_squared(*dof);
      // χ² draws can round to zero for small dof; redraw rather than divide by zero.
      while (!(w > 0.0)) w = rng.chi_squared(*dof);
      mult = 1.0 / std::sqrt(w / *dof);
    }
    for (std::size_t k = 0; k < d; ++k) x[k] = loc[k] + mult * x[k];
    out.samples.push_back(std::move(x));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace detail {

/// Splits one CSV line on commas with minimal double-quote support.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(std::move(cur));
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.erase(f.begin());
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.pop_back();
  }
  return out;
}

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    if (end == std::string::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  // Strip UTF-8 BOM.
  if (!lines.empty() && lines[0].rfind("\xEF\xBB\xBF", 0) == 0) lines[0].erase(0, 3);
  return lines;
}

inline bool is_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
    if (s[i] < '0' || s[i] > '9') return false;
  const int month = (s[5] - '0') * 10 + (s[6] - '0');
  const int day = (s[8] - '0') * 10 + (s[9] - '0');
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

}  // namespace detail

/// Writes the header dim_0,…,dim_{p−1} then one row per sample.
inline std::string sample_set_to_csv(const SampleSet& s) {
  s.validate();
  std::string out;
  for (std::size_t k = 0; k < s.p; ++k) {
    if (k) out += ',';
    out += "dim_" + std::to_string(k);
  }
  out += '\n';
  for (const Vector& x : s.samples) {
    for (std::size_t k = 0; k < s.p; ++k) {
      if (k) out += ',';
      out += format_double(x[k]);
    }
    out += '\n';
  }
  return out;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  std::filesystem::path p = csv;
  p += ".meta.json";
  return p;
}

/// CSV plus sidecar JSON {provenance, seed, spec}.
inline void write_sample_set(const SampleSet& s, const std::filesystem::path& path,
                             const nlohmann::json& metadata) {
  write_file_atomic(path, sample_set_to_csv(s));
  nlohmann::json meta = metadata;
  if (!meta.contains("provenance")) meta["provenance"] = s.provenance;
  write_file_atomic(sidecar_path(path), meta.dump(2) + "\n");
}

inline SampleSet read_sample_set(const std::filesystem::path& path) {
  const std::string file = path.string();
  const auto lines = detail::split_lines(read_text_file(path));
  if (lines.empty()) throw IngestError(file, 1, "empty file");
  const auto header = detail::split_csv_line(lines[0]);
  for (std::size_t k = 0; k < header.size(); ++k)
    if (header[k] != "dim_" + std::to_string(k))
      throw IngestError(file, 1, "expected header column 'dim_" + std::to_string(k) + "'");
  SampleSet s;
  s.p = header.size();
  s.provenance = file;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    if (lines[row].empty() || lines[row] == "\r") continue;
    const auto fields = detail::split_csv_line(lines[row]);
    if (fields.size() != s.p)
      throw IngestError(file, row + 1, "expected " + std::to_string(s.p) + " fields");
    Vector x(s.p);
    for (std::size_t k = 0; k < s.p; ++k) {
      const auto v = parse_double(fields[k]);
      if (!v || !std::isfinite(*v))
        throw IngestError(file, row + 1, "unparseable number '" + fields[k] + "'");
      x[k] = *v;
    }
    s.samples.push_back(std::move(x));
  }
  if (s.samples.empty()) throw IngestError(file, 1, "no data rows");
  return s;
}

// ---------------------------------------------------------------------------
// Financial returns
// ---------------------------------------------------------------------------

struct PriceSeries {
  std::vector<std::string> dates;
  std::vector<std::vector<double>> closes;  // one series per instrument
};

enum class ReturnKind { simple, log };

inline std::string_view to_string(ReturnKind k) { return k == ReturnKind::simple ? "simple" : "log"; }

struct IngestResult {
  SampleSet samples;
  PriceSeries prices;
  ReturnKind kind = ReturnKind::simple;
};

/// Reads one (date, close) series. Dates must be ISO-8601 and strictly increasing.
inline std::pair<std::vector<std::string>, std::vector<double>> read_price_csv(
    const std::filesystem::path& path, std::string_view date_column, std::string_view price_column) {
  const std::string file = path.string();
  const auto lines = detail::split_lines(read_text_file(path));
  if (lines.empty()) throw IngestError(file, 1, "empty file");
  const auto header = detail::split_csv_line(lines[0]);
  std::optional<std::size_t> date_idx, price_idx;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == date_column) date_idx = k;
    if (header[k] == price_column) price_idx = k;
  }
  if (!date_idx) throw IngestError(file, 1, "missing date column '" + std::string(date_column) + "'");
  if (!price_idx) throw IngestError(file, 1, "missing price column '" + std::string(price_column) + "'");
  std::vector<std::string> dates;
  std::vector<double> closes;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    if (lines[row].empty() || lines[row] == "\r") continue;
    const auto fields = detail::split_csv_line(lines[row]);
    if (fields.size() <= std::max(*date_idx, *price_idx))
      throw IngestError(file, row + 1, "too few fields");
    const std::string& date = fields[*date_idx];
    if (!detail::is_iso_date(date)) throw IngestError(file, row + 1, "invalid date '" + date + "'");
    if (!dates.empty() && !(dates.back() < date))
      throw IngestError(file, row + 1, "dates must be strictly increasing");
    const auto price = parse_double(fields[*price_idx]);
    if (!price || !std::isfinite(*price))
      throw IngestError(file, row + 1, "unparseable price '" + fields[*price_idx] + "'");
    if (!(*price > 0.0)) throw IngestError(file, row + 1, "nonpositive price");
    dates.push_back(date);
    closes.push_back(*price);
  }
  return {std::move(dates), std::move(closes)};
}

/// Inner-joins the series on date and converts closes to daily returns in
/// basis points: (c_t / c_{t−1} − 1)·10⁴, or ln(c_t / c_{t−1})·10⁴ for log returns.
inline IngestResult ingest_returns(const std::vector<std::filesystem::path>& csv_paths,
                                   std::string_view price_column, std::string_view date_column,
                                   ReturnKind kind = ReturnKind::simple) {
  if (csv_paths.empty()) throw DomainError("ingest_returns: no input files");
  std::vector<std::map<std::string, double>> by_date;
  std::vector<std::string> first_dates;
  for (std::size_t f = 0; f < csv_paths.size(); ++f) {
    auto [dates, closes] = read_price_csv(csv_paths[f], date_column, price_column);
    if (f == 0) first_dates = dates;
    std::map<std::string, double> m;
    for (std::size_t i = 0; i < dates.size(); ++i) m.emplace(dates[i], closes[i]);
    by_date.push_back(std::move(m));
  }
  IngestResult out;
  out.kind = kind;
  out.prices.closes.resize(csv_paths.size());
  for (const std::string& d : first_dates) {
    bool everywhere = true;
    for (const auto& m : by_date) everywhere = everywhere && m.count(d) > 0;
    if (!everywhere) continue;
    out.prices.dates.push_back(d);
    for (std::size_t f = 0; f < by_date.size(); ++f) out.prices.closes[f].push_back(by_date[f].at(d));
  }
  const std::size_t joined = out.prices.dates.size();
  if (joined < 2)
    throw IngestError(csv_paths.front().string(), 1,
                      "date intersection too small (" + std::to_string(joined) + " rows)");
  out.samples.p = csv_paths.size();
  out.samples.provenance = std::string("daily ") + std::string(to_string(kind)) +
                           " returns in basis points";
  for (std::size_t t = 1; t < joined; ++t) {
    Vector r(out.samples.p);
    for (std::size_t f = 0; f < out.samples.p; ++f) {
      const double ratio = out.prices.closes[f][t] / out.prices.closes[f][t - 1];
      r[f] = kind == ReturnKind::simple ? (ratio - 1.0) * 1e4 : std::log(ratio) * 1e4;
    }
    out.samples.samples.push_back(std::move(r));
  }
  return out;
}

}  // namespace tailcert
