#pragma once

// Command-line front end. `run` takes the arguments after the program name.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tailcert/audit.hpp"
#include "tailcert/certificates.hpp"
#include "tailcert/data_io.hpp"
#include "tailcert/diffusion.hpp"
#include "tailcert/error.hpp"
#include "tailcert/io_util.hpp"
#include "tailcert/latents.hpp"
#include "tailcert/network.hpp"
#include "tailcert/network_io.hpp"
#include "tailcert/specs.hpp"

namespace tailcert::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitStatus : int { kOk = 0, kUsage = 1, kDataError = 2, kViolation = 3 };

inline constexpr const char* kGrammar = R"(usage: tailcert <command> [options]

  certify --model <net.json> (--latent <spec> | --spec-file <latent.json>)
          [--mode tight|paper] [--p-override P] [--cheeger X] [--strict-cheeger]
          [--C c] [--C6 c] [--tol t] --out <cert.json>
  certify-diffusion --model <noise_net.json> --schedule T,beta_start,beta_end
          [--mode tight|paper] [--p-override P] [--C c] [--tol t] --out <cert.json>
  sample (--latent <spec> | --spec-file <latent.json> | --target <spec> |
          --target-file <target.json> | --chain <noise_net.json> --schedule T,b0,b1)
          --n N --seed S --out <samples.csv>
  push --model <net.json> (--latent <spec> | --spec-file <latent.json>)
          --n N --seed S --out <samples.csv>
  audit --samples <samples.csv> --cert <cert.json> [--directions axes+K]
          [--grid t0:t1:steps] [--centering mean|median] [--seed S] [--delta d]
          [--hill-k k] --out-json <report.json> --out-csv <report.csv>
          [--out-survival <survival.csv>]
  ingest-returns --csv a.csv [--csv b.csv ...] --date-col D --price-col P
          [--log-returns] --out <returns.csv>
  init-network (--widths w0,w1,...,wL | --identity D) [--activation A]
          [--output-activation A] [--weight-scale s] [--seed S] --out <net.json>
  replay --manifest <run.manifest.json>

  Every command except replay also accepts --manifest <path>; the default is
  <primary output>.manifest.json.

latent specs: gaussian:d=D[,sigma=I|s][,mu=m]  slc:d=D[,sigma=..][,gamma=g]
              cube:d=D[,half=h]  ball:d=D[,r=R]  sphere:d=D[,r=R]
target specs: cauchy:d=D[,scale=..][,mode=m]  student:d=D,dof=v  gaussian:d=D
exit status:  0 ok, 1 usage error, 2 data error, 3 certificate violation
)";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& what) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = parse_double(item);
    if (!v || !(*v >= 1.0) || *v != std::floor(*v))
      throw UsageError(what + ": '" + item + "' is not a positive integer");
    out.push_back(static_cast<std::size_t>(*v));
  }
  return out;
}

inline std::vector<double> parse_real_list(const std::string& text, char sep, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    const auto v = parse_double(item);
    if (!v || !std::isfinite(*v)) throw UsageError(what + ": '" + item + "' is not a number");
    out.push_back(*v);
  }
  return out;
}

inline Schedule parse_schedule(const std::string& text) {
  const auto v = parse_real_list(text, ',', "--schedule");
  if (v.size() != 3 || !(v[0] >= 1.0) || v[0] != std::floor(v[0]))
    throw UsageError("--schedule expects T,beta_start,beta_end");
  try {
    return linear_schedule(static_cast<std::size_t>(v[0]), v[1], v[2]);
  } catch (const DomainError& e) {
    throw UsageError(std::string("--schedule: ") + e.what());
  }
}

inline std::size_t parse_directions(const std::string& text) {
  if (text == "axes") return 0;
  if (text.rfind("axes+", 0) == 0) {
    const auto v = parse_double(text.substr(5));
    if (v && *v >= 0.0 && *v == std::floor(*v)) return static_cast<std::size_t>(*v);
  }
  throw UsageError("--directions expects axes or axes+K");
}

inline std::vector<double> parse_grid(const std::string& text) {
  const auto v = parse_real_list(text, ':', "--grid");
  if (v.size() != 3 || !(v[2] >= 1.0) || v[2] != std::floor(v[2]))
    throw UsageError("--grid expects t0:t1:steps");
  try {
    return linear_grid(v[0], v[1], static_cast<std::size_t>(v[2]));
  } catch (const DomainError& e) {
    throw UsageError(std::string("--grid: ") + e.what());
  }
}

template <typename F>
auto as_usage(const char* flag, F&& f) {
  try {
    return f();
  } catch (const DomainError& e) {
    throw UsageError(std::string(flag) + ": " + e.what());
  }
}

inline ConstantMode mode_from_flag(const std::string& s) { return parse_mode(s); }

}  // namespace detail

/// All option storage for one invocation.
struct Options {
  std::string model, latent, spec_file, target, target_file, chain, schedule;
  std::string mode = "tight";
  std::size_t p_override = 0;
  double cheeger = 0.0;
  bool strict_cheeger = false;
  double C = 2.0, C6 = 1.0, tol = 1e-9;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string out, out_json, out_csv, out_survival, manifest;
  std::string samples, cert;
  std::string directions = "axes+8";
  std::string grid;
  std::string centering = "mean";
  double delta = 0.01;
  std::size_t hill_k = 0;
  std::vector<std::string> csv;
  std::string date_col, price_col;
  bool log_returns = false;
  std::string widths;
  std::size_t identity = 0;
  std::string activation = "relu", output_activation = "identity";
  double weight_scale = 1.0;
  std::string replay_manifest;
};

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(const std::vector<std::string>& args, int depth = 0) {
    CLI::App app{"Tail certificates for push-forward generative models", "tailcert"};
    app.require_subcommand(1);
    build(app);
    try {
      std::vector<std::string> reversed(args.rbegin(), args.rend());
      app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e, out_, err_);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e, out_, err_);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e, out_, err_);
    } catch (const CLI::ParseError& e) {
      err_ << "error: " << e.what() << "\n\n" << kGrammar;
      return kUsage;
    }
    CLI::App* sub = app.get_subcommands().front();
    started_ = detail::utc_now();
    try {
      return dispatch(*sub, depth);
    } catch (const UsageError& e) {
      err_ << "error: " << e.what() << "\n\n" << kGrammar;
      return kUsage;
    } catch (const Error& e) {
      err_ << "error: " << e.what() << "\n";
      return kDataError;
    } catch (const nlohmann::json::exception& e) {
      err_ << "error: malformed JSON: " << e.what() << "\n";
      return kDataError;
    } catch (const std::exception& e) {
      err_ << "error: " << e.what() << "\n";
      return kDataError;
    }
  }

 private:
  std::ostream& out_;
  std::ostream& err_;
  Options o_;
  std::set<std::string> flags_;
  std::string started_;

  void flag(CLI::App* s, const std::string& name, bool& target, const std::string& help) {
    s->add_flag("--" + name, target, help);
    flags_.insert(name);
  }

  static void add_manifest(CLI::App* s, Options& o) {
    s->add_option("--manifest", o.manifest, "manifest output path");
  }

  static void add_latent(CLI::App* s, Options& o) {
    auto* a = s->add_option("--latent", o.latent, "latent spec");
    auto* b = s->add_option("--spec-file", o.spec_file, "latent spec as JSON");
    a->excludes(b);
  }

  void build(CLI::App& app) {
    Options& o = o_;
    {
      auto* s = app.add_subcommand("certify", "certify a feed-forward model under a latent");
      s->add_option("--model", o.model, "network JSON")->required();
      add_latent(s, o);
      s->add_option("--mode", o.mode, "tight|paper")->check(CLI::IsMember({"tight", "paper", "paper_form"}))
          ->capture_default_str();
      s->add_option("--p-override", o.p_override, "dimension in the paper-form inflation")
          ->check(CLI::PositiveNumber);
      s->add_option("--cheeger", o.cheeger, "Cheeger constant")->check(CLI::PositiveNumber);
      flag(s, "strict-cheeger", o.strict_cheeger, "refuse the heuristic default Cheeger constant");
      s->add_option("--C", o.C, "paper-form absolute constant")->check(CLI::PositiveNumber)->capture_default_str();
      s->add_option("--C6", o.C6, "log-concave constant")->check(CLI::PositiveNumber)->capture_default_str();
      s->add_option("--tol", o.tol, "power iteration tolerance")->check(CLI::PositiveNumber)->capture_default_str();
      s->add_option("--out", o.out, "certificate JSON")->required();
      add_manifest(s, o);
    }
    {
      auto* s = app.add_subcommand("certify-diffusion", "certify a DDPM sampling chain");
      s->add_option("--model", o.model, "noise network JSON (input p+1, output p)")->required();
      s->add_option("--schedule", o.schedule, "T,beta_start,beta_end")->required();
      s->add_option("--mode", o.mode, "tight|paper")->check(CLI::IsMember({"tight", "paper", "paper_form"}))
          ->capture_default_str();
      s->add_option("--p-override", o.p_override, "dimension in the paper-form inflation")
          ->check(CLI::PositiveNumber);
      s->add_option("--C", o.C, "paper-form absolute constant")->check(CLI::PositiveNumber)->capture_default_str();
      s->add_option("--tol", o.tol, "power iteration tolerance")->check(CLI::PositiveNumber)->capture_default_str();
      s->add_option("--out", o.out, "certificate JSON")->required();
      add_manifest(s, o);
    }
    {
      auto* s = app.add_subcommand("sample", "draw latent, target or chain samples");
      add_latent(s, o);
      s->add_option("--target", o.target, "target spec");
      s->add_option("--target-file", o.target_file, "target spec as JSON");
      s->add_option("--chain", o.chain, "noise network JSON");
      s->add_option("--schedule", o.schedule, "T,beta_start,beta_end (with --chain)");
      s->add_option("--n", o.n, "sample count")->required()->check(CLI::Range(std::size_t{1}, std::size_t{1} << 40));
      s->add_option("--seed", o.seed, "seed")->required();
      s->add_option("--out", o.out, "samples CSV")->required();
      add_manifest(s, o);
    }
    {
      auto* s = app.add_subcommand("push", "push latent draws through a model");
      s->add_option("--model", o.model, "network JSON")->required();
      add_latent(s, o);
      s->add_option("--n", o.n, "sample count")->required()->check(CLI::Range(std::size_t{1}, std::size_t{1} << 40));
      s->add_option("--seed", o.seed, "seed")->required();
      s->add_option("--out", o.out, "samples CSV")->required();
      add_manifest(s, o);
    }
    {
      auto* s = app.add_subcommand("audit", "compare samples to a certificate");
      s->add_option("--samples", o.samples, "samples CSV")->required();
      s->add_option("--cert", o.cert, "certificate JSON")->required();
      s->add_option("--directions", o.directions, "axes or axes+K")->capture_default_str();
      s->add_option("--grid", o.grid, "t0:t1:steps");
      s->add_option("--centering", o.centering, "mean|median")->check(CLI::IsMember({"mean", "median"}))
          ->capture_default_str();
      s->add_option("--seed", o.seed, "seed for random directions")->capture_default_str();
      s->add_option("--delta", o.delta, "max-growth confidence level")->capture_default_str();
      s->add_option("--hill-k", o.hill_k, "Hill order statistic count")->check(CLI::PositiveNumber);
      s->add_option("--out-json", o.out_json, "report JSON")->required();
      s->add_option("--out-csv", o.out_csv, "report CSV")->required();
      s->add_option("--out-survival", o.out_survival, "log-log survival CSV of magnitudes");
      add_manifest(s, o);
    }
    {
      auto* s = app.add_subcommand("ingest-returns", "turn price CSVs into daily return samples");
      s->add_option("--csv", o.csv, "price CSV (repeatable)")->required();
      s->add_option("--date-col", o.date_col, "date column name")->required();
      s->add_option("--price-col", o.price_col, "price column name")->required();
      flag(s, "log-returns", o.log_returns, "log returns instead of simple returns");
      s->add_option("--out", o.out, "returns CSV")->required();
      add_manifest(s, o);
    }
    {
      auto* s = app.add_subcommand("init-network", "write a random or identity network");
      auto* w = s->add_option("--widths", o.widths, "comma-separated layer widths");
      auto* id = s->add_option("--identity", o.identity, "identity map of dimension D")
                     ->check(CLI::PositiveNumber);
      w->excludes(id);
      s->add_option("--activation", o.activation, "hidden activation")->capture_default_str();
      s->add_option("--output-activation", o.output_activation, "output activation")->capture_default_str();
      s->add_option("--weight-scale", o.weight_scale, "weight scale")->capture_default_str();
      s->add_option("--seed", o.seed, "seed")->capture_default_str();
      s->add_option("--out", o.out, "network JSON")->required();
      add_manifest(s, o);
    }
    {
      auto* s = app.add_subcommand("replay", "rerun a command from its manifest");
      s->add_option("--manifest", o.replay_manifest, "manifest JSON")->required();
    }
  }

  // -------------------------------------------------------------------------

  nlohmann::json resolved_config(const CLI::App& sub) const {
    nlohmann::json cfg = nlohmann::json::object();
    for (const CLI::Option* opt : sub.get_options()) {
      if (opt->get_lnames().empty()) continue;
      const std::string name = opt->get_lnames().front();
      if (name == "help") continue;
      if (flags_.count(name)) {
        cfg[name] = opt->count() > 0;
      } else if (opt->count() > 1) {
        cfg[name] = opt->results();
      } else if (opt->count() == 1) {
        cfg[name] = opt->results().front();
      } else if (!opt->get_default_str().empty()) {
        cfg[name] = opt->get_default_str();
      }
    }
    return cfg;
  }

  void write_manifest(const CLI::App& sub, const std::string& primary, const nlohmann::json& derived,
                      bool has_seed) const {
    const nlohmann::json cfg = resolved_config(sub);
    std::vector<std::string> argv{sub.get_name()};
    for (const auto& [k, v] : cfg.items()) {
      if (v.is_boolean()) {
        if (v.get<bool>()) argv.push_back("--" + k);
      } else if (v.is_array()) {
        for (const auto& e : v) {
          argv.push_back("--" + k);
          argv.push_back(e.get<std::string>());
        }
      } else {
        argv.push_back("--" + k);
        argv.push_back(v.get<std::string>());
      }
    }
    nlohmann::json m = {{"tool_version", kToolVersion},
                        {"command", sub.get_name()},
                        {"resolved_config", cfg},
                        {"derived", derived},
                        {"rng_algorithm", RngStream::kAlgorithm},
                        {"timestamps", {{"started_utc", started_}, {"finished_utc", detail::utc_now()}}},
                        {"argv", argv}};
    m["seed"] = has_seed ? nlohmann::json(o_.seed) : nlohmann::json();
    const std::string path = o_.manifest.empty() ? primary + ".manifest.json" : o_.manifest;
    write_file_atomic(path, m.dump(2) + "\n");
  }

  int dispatch(const CLI::App& sub, int depth) {
    const std::string cmd = sub.get_name();
    if (cmd == "certify") return certify(sub);
    if (cmd == "certify-diffusion") return certify_diffusion_cmd(sub);
    if (cmd == "sample") return sample_cmd(sub);
    if (cmd == "push") return push_cmd(sub);
    if (cmd == "audit") return audit_cmd(sub);
    if (cmd == "ingest-returns") return ingest_cmd(sub);
    if (cmd == "init-network") return init_network_cmd(sub);
    return replay_cmd(depth);
  }

  LatentSpec resolve_latent() const {
    if (!o_.spec_file.empty()) return latent_from_json(nlohmann::json::parse(read_text_file(o_.spec_file)));
    if (o_.latent.empty()) throw UsageError("one of --latent or --spec-file is required");
    return detail::as_usage("--latent", [&] { return parse_latent(o_.latent); });
  }

  nlohmann::json latent_echo() const {
    if (!o_.spec_file.empty()) return {{"spec_file", o_.spec_file}, {"spec", latent_to_json(resolve_latent())}};
    return {{"spec", o_.latent}};
  }

  CertifyOptions certify_options() const {
    CertifyOptions c;
    c.C = o_.C;
    c.C6 = o_.C6;
    if (o_.p_override > 0) c.p_override = o_.p_override;
    return c;
  }

  int certify(const CLI::App& sub) {
    const FeedForwardNetwork net = load_network(o_.model);
    const LatentSpec latent = resolve_latent();
    if (latent_dim(latent) != net.input_dim())
      throw ShapeError("latent dimension " + std::to_string(latent_dim(latent)) +
                           " does not match network input dimension " + std::to_string(net.input_dim()),
                       0);
    LatentParamOptions lpo;
    if (o_.cheeger > 0.0) lpo.cheeger_override = o_.cheeger;
    lpo.allow_default_cheeger = !o_.strict_cheeger;
    const CertificateParams params = certificate_params(latent, lpo);
    const LipschitzBound lip = certified_lipschitz(net, o_.tol);
    const TailCertificate cert = certify_for_latent(latent, lip, params, net.output_dim(),
                                                    detail::mode_from_flag(o_.mode), certify_options());
    write_file_atomic(o_.out, certificate_to_json(cert).dump(2) + "\n");
    write_manifest(sub, o_.out, {{"lipschitz", lip.value}, {"latent", latent_echo()}}, false);
    out_ << "certificate " << to_string(cert.family) << " scale=" << format_double(cert.scale)
         << " L=" << format_double(lip.value) << " -> " << o_.out << "\n";
    return kOk;
  }

  int certify_diffusion_cmd(const CLI::App& sub) {
    const Schedule schedule = detail::parse_schedule(o_.schedule);
    const DiffusionChain chain(schedule, load_network(o_.model));
    const LipschitzBound lip = certified_lipschitz(chain.noise_net(), o_.tol);
    const TailCertificate cert =
        certify_diffusion(chain, lip, detail::mode_from_flag(o_.mode), certify_options());
    write_file_atomic(o_.out, certificate_to_json(cert).dump(2) + "\n");
    write_manifest(sub, o_.out, {{"schedule", schedule_to_json(schedule)}, {"noise_net_lipschitz", lip.value}},
                   false);
    out_ << "certificate sub_gaussian scale=" << format_double(cert.scale)
         << " L=" << format_double(cert.provenance.lipschitz) << " -> " << o_.out << "\n";
    return kOk;
  }

  void emit_samples(const CLI::App& sub, const SampleSet& s, nlohmann::json spec) {
    nlohmann::json meta = {{"provenance", s.provenance},
                           {"seed", o_.seed},
                           {"rng_algorithm", RngStream::kAlgorithm},
                           {"spec", spec},
                           {"n", s.n()},
                           {"p", s.p}};
    write_sample_set(s, o_.out, meta);
    write_manifest(sub, o_.out, {{"spec", spec}}, true);
    out_ << "wrote " << s.n() << " samples (p=" << s.p << ") -> " << o_.out << "\n";
  }

  int sample_cmd(const CLI::App& sub) {
    const int sources = (!o_.latent.empty() || !o_.spec_file.empty()) + !o_.target.empty() +
                        !o_.target_file.empty() + !o_.chain.empty();
    if (sources != 1)
      throw UsageError("sample needs exactly one of --latent/--spec-file, --target/--target-file, --chain");
    if (!o_.chain.empty() != !o_.schedule.empty()) throw UsageError("--chain and --schedule go together");
    SampleSet s;
    nlohmann::json spec;
    if (!o_.chain.empty()) {
      const Schedule schedule = detail::parse_schedule(o_.schedule);
      const DiffusionChain chain(schedule, load_network(o_.chain));
      RngStream rng(o_.seed, 3);
      s.p = chain.p();
      s.samples = sample_chain(chain, rng, o_.n);
      s.provenance = "diffusion chain " + o_.chain;
      spec = {{"chain", o_.chain}, {"schedule", schedule_to_json(schedule)}};
    } else if (!o_.target.empty() || !o_.target_file.empty()) {
      const TargetSpec t = !o_.target_file.empty()
                               ? target_from_json(nlohmann::json::parse(read_text_file(o_.target_file)))
                               : detail::as_usage("--target", [&] { return parse_target(o_.target); });
      RngStream rng(o_.seed, 2);
      s = sample_target(t, rng, o_.n);
      spec = o_.target_file.empty() ? nlohmann::json(o_.target) : nlohmann::json(o_.target_file);
    } else {
      const LatentSpec latent = resolve_latent();
      RngStream rng(o_.seed, 1);
      s.p = latent_dim(latent);
      s.samples = sample(latent, rng, o_.n);
      s.provenance = "latent " + std::string(latent_kind(latent));
      spec = latent_echo();
    }
    emit_samples(sub, s, spec);
    return kOk;
  }

  int push_cmd(const CLI::App& sub) {
    const FeedForwardNetwork net = load_network(o_.model);
    const LatentSpec latent = resolve_latent();
    if (latent_dim(latent) != net.input_dim())
      throw ShapeError("latent dimension " + std::to_string(latent_dim(latent)) +
                           " does not match network input dimension " + std::to_string(net.input_dim()),
                       0);
    const LatentSampler sampler(latent);
    RngStream rng(o_.seed, 4);
    SampleSet s;
    s.p = net.output_dim();
    s.samples.reserve(o_.n);
    for (std::size_t i = 0; i < o_.n; ++i) s.samples.push_back(net.forward(sampler.draw(rng)));
    s.provenance = "push-forward of " + std::string(latent_kind(latent)) + " latent through " + o_.model;
    nlohmann::json spec = latent_echo();
    spec["model"] = o_.model;
    emit_samples(sub, s, spec);
    return kOk;
  }

  int audit_cmd(const CLI::App& sub) {
    const SampleSet s = read_sample_set(o_.samples);
    const TailCertificate cert = certificate_from_json(nlohmann::json::parse(read_text_file(o_.cert)));
    if (cert.p != s.p)
      throw ShapeError("certificate p = " + std::to_string(cert.p) + " but samples have p = " +
                       std::to_string(s.p));
    const std::size_t k_random = detail::parse_directions(o_.directions);
    const std::vector<double> grid = o_.grid.empty() ? default_grid(cert, s.n()) : detail::parse_grid(o_.grid);
    if (!(o_.delta > 0.0 && o_.delta < 1.0)) throw UsageError("--delta must be in (0, 1)");
    const Centering centering = parse_centering(o_.centering);
    RngStream rng(o_.seed, 5);
    const std::vector<Vector> dirs = direction_panel(s.p, k_random, rng);
    std::optional<std::size_t> hill_k;
    if (o_.hill_k > 0) hill_k = o_.hill_k;

    nlohmann::json per_dir = nlohmann::json::array();
    std::string csv = "direction,t,empirical_exceedance,certificate_bound\n";
    bool consistent = true;
    bool underpowered = true;
    bool growth_all = true;
    std::optional<std::size_t> first_bad;
    for (std::size_t d = 0; d < dirs.size(); ++d) {
      const EmpiricalTailReport r = compare_to_certificate(s, dirs[d], cert, grid, SlackRule{}, centering, hill_k);
      nlohmann::json j = report_to_json(r);
      j["index"] = d;
      j["label"] = d < s.p ? "axis_" + std::to_string(d) : "random_" + std::to_string(d - s.p);
      if (cert.family == TailFamily::sub_gaussian) {
        const MaxGrowthResult g = max_growth_check(s, dirs[d], cert, o_.delta, centering);
        j["max_growth"] = max_growth_to_json(g);
        growth_all = growth_all && g.pass;
      } else {
        j["max_growth"] = nullptr;
      }
      per_dir.push_back(std::move(j));
      if (!r.verdict.consistent && !first_bad) first_bad = d;
      consistent = consistent && r.verdict.consistent;
      underpowered = underpowered && r.verdict.underpowered;
      for (std::size_t i = 0; i < grid.size(); ++i)
        csv += std::to_string(d) + "," + format_double(grid[i]) + "," + format_double(r.empirical_exceedance[i]) +
               "," + format_double(r.certificate_bound[i]) + "\n";
    }

    const std::vector<double> mags = magnitudes(s);
    HillSummary mag_hill;
    mag_hill.k = hill_k.value_or(default_hill_k(s.n()));
    if (s.n() >= 2 && mag_hill.k < mags.size()) {
      try {
        mag_hill.index = hill_estimator(mags, mag_hill.k);
      } catch (const DomainError&) {
      }
    }
    nlohmann::json hill_j = {{"k", mag_hill.k}};
    hill_j["index_estimate"] = mag_hill.index ? nlohmann::json(*mag_hill.index) : nlohmann::json();

    nlohmann::json report = {
        {"samples", o_.samples},
        {"n", s.n()},
        {"p", s.p},
        {"certificate", certificate_to_json(cert)},
        {"comparison",
         {{"rule", "empirical > bound + 3*sqrt(bound*(1-bound)/n) at points with bound >= 10/n"},
          {"max_growth", "max |u^T(x - center)| <= quantile(certificate, delta/n)"},
          {"delta", o_.delta},
          {"centering", o_.centering},
          {"note", "slack, floor and union-bound rules are conventions of this tool, not part of the certificate"}}},
        {"directions", per_dir},
        {"magnitude_hill", hill_j},
        {"verdict",
         {{"consistent_with_certificate", consistent},
          {"underpowered", underpowered},
          {"max_growth_pass_all", cert.family == TailFamily::sub_gaussian ? nlohmann::json(growth_all)
                                                                           : nlohmann::json()}}}};
    report["verdict"]["first_violating_direction"] = first_bad ? nlohmann::json(*first_bad) : nlohmann::json();
    write_file_atomic(o_.out_json, report.dump(2) + "\n");
    write_file_atomic(o_.out_csv, csv);
    if (!o_.out_survival.empty()) {
      std::string sc = "log10_t,log10_survival\n";
      for (const auto& [lt, ls] : survival_curve(mags)) sc += format_double(lt) + "," + format_double(ls) + "\n";
      write_file_atomic(o_.out_survival, sc);
    }
    write_manifest(sub, o_.out_json,
                   {{"grid", {{"t0", grid.front()}, {"t1", grid.back()}, {"steps", grid.size()}}},
                    {"n_directions", dirs.size()}},
                   true);
    if (consistent) {
      out_ << "audit: consistent with certificate over " << dirs.size() << " directions"
           << (underpowered ? " (underpowered)" : "") << "\n";
      return kOk;
    }
    const nlohmann::json& v = per_dir[*first_bad]["verdict"]["violation"];
    out_ << "audit: VIOLATION in direction " << *first_bad << " at t=" << format_double(v["t"].get<double>())
         << " (empirical " << format_double(v["empirical"].get<double>()) << " > bound "
         << format_double(v["bound"].get<double>()) << ")\n";
    return kViolation;
  }

  int ingest_cmd(const CLI::App& sub) {
    std::vector<std::filesystem::path> paths(o_.csv.begin(), o_.csv.end());
    const IngestResult r = ingest_returns(paths, o_.price_col, o_.date_col,
                                          o_.log_returns ? ReturnKind::log : ReturnKind::simple);
    nlohmann::json meta = {{"provenance", r.samples.provenance},
                           {"return_kind", std::string(to_string(r.kind))},
                           {"units", "basis points"},
                           {"files", o_.csv},
                           {"date_column", o_.date_col},
                           {"price_column", o_.price_col},
                           {"first_date", r.prices.dates.front()},
                           {"last_date", r.prices.dates.back()},
                           {"joined_rows", r.prices.dates.size()},
                           {"n", r.samples.n()},
                           {"p", r.samples.p}};
    write_sample_set(r.samples, o_.out, meta);
    write_manifest(sub, o_.out, {{"joined_rows", r.prices.dates.size()}}, false);
    out_ << "wrote " << r.samples.n() << " returns (p=" << r.samples.p << ") -> " << o_.out << "\n";
    return kOk;
  }

  int init_network_cmd(const CLI::App& sub) {
    FeedForwardNetwork net = [&] {
      if (o_.identity > 0) return linear_network(Matrix::identity(o_.identity));
      if (o_.widths.empty()) throw UsageError("init-network needs --widths or --identity");
      const auto widths = detail::parse_size_list(o_.widths, "--widths");
      if (widths.size() < 2) throw UsageError("--widths needs at least two entries");
      const Activation hidden = detail::as_usage("--activation", [&] { return Activation::parse(o_.activation); });
      const Activation last =
          detail::as_usage("--output-activation", [&] { return Activation::parse(o_.output_activation); });
      std::vector<Activation> acts(widths.size() - 1, hidden);
      acts.back() = last;
      RngStream rng(o_.seed, 6);
      return random_network(rng, widths, acts, o_.weight_scale);
    }();
    save_network(net, o_.out);
    write_manifest(sub, o_.out, nlohmann::json::object(), o_.identity == 0);
    out_ << "wrote network " << net.input_dim() << "->" << net.output_dim() << " (" << net.depth()
         << " layers) -> " << o_.out << "\n";
    return kOk;
  }

  int replay_cmd(int depth) {
    if (depth > 0) throw UsageError("replay cannot replay a replay");
    const nlohmann::json m = nlohmann::json::parse(read_text_file(o_.replay_manifest));
    if (!m.contains("argv") || !m["argv"].is_array())
      throw FormatError("argv", std::nullopt, "manifest has no argv array");
    const std::string version = m.value("tool_version", std::string());
    if (version != kToolVersion)
      err_ << "warning: manifest written by version " << version << ", this is " << kToolVersion << "\n";
    const auto argv = m["argv"].get<std::vector<std::string>>();
    Runner inner(out_, err_);
    return inner.run(argv, depth + 1);
  }
};

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Runner r(out, err);
  return r.run(args);
}

}  // namespace tailcert::cli
