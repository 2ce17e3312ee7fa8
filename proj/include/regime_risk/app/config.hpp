#pragma once

// Run configuration: one JSON file with sections chain, ou, claim, risk,
// grids, simulate, mc and output. Input paths are resolved against the
// directory holding the configuration file.

#include "regime_risk/entropic_risk.hpp"
#include "regime_risk/errors.hpp"
#include "regime_risk/instruments.hpp"
#include "regime_risk/ou_model.hpp"
#include "regime_risk/regime_chain.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace regime_risk::app {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

/// FNV-1a, 64 bit. Stable across platforms, used for provenance only.
inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

struct ChainSpec {
  std::string kind;  // "generator" or "transition"
  double dt_years = 0.0;
  std::vector<std::vector<double>> matrix;
};

struct RiskSettings {
  double gamma = 1.0;
  double horizon_days = 50.0;
  double s_days = 0.0;
  std::size_t start_state = 0;
  std::optional<double> x_s;  // defaults to the conditional mean of X_s given x0
};

struct Grids {
  std::vector<double> gamma;
  std::vector<double> horizon_days;
  std::vector<double> yield;
  std::size_t time_steps = 25;
};

struct SimulateSettings {
  std::size_t steps = 252;
  std::string start_date = "2019-09-30";
  std::optional<GibsonSchwartzParams> yield;
};

struct RunConfig {
  fs::path path;
  std::string hash;
  ChainSpec chain_spec;
  std::optional<Generator> generator;
  OUParams ou;
  std::string ou_source;
  Claim claim = LinearSpotClaim{};
  std::string claim_type;
  RiskSettings risk;
  Grids grids;
  SimulateSettings simulate;
  MCSettings mc;
  fs::path output_dir = "out";
  double days_per_year = kTradingDaysPerYear;

  const Generator& chain() const { return *generator; }
  std::size_t states() const { return generator->size(); }
  double years(double days) const { return days / days_per_year; }
};

namespace detail {

inline const json& section(const json& root, const char* name) {
  if (!root.contains(name) || !root.at(name).is_object())
    throw ConfigError(std::string("missing section '") + name + "'");
  return root.at(name);
}

template <class T>
T field(const json& obj, const char* sec, const char* name) {
  if (!obj.contains(name)) throw ConfigError(std::string(sec) + "." + name + " is required");
  try {
    return obj.at(name).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(sec) + "." + name + ": " + e.what());
  }
}

template <class T>
T field_or(const json& obj, const char* sec, const char* name, T fallback) {
  if (!obj.contains(name)) return fallback;
  return field<T>(obj, sec, name);
}

inline fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + p.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline GibsonSchwartzParams parse_gibson_schwartz(const json& j, const char* sec) {
  GibsonSchwartzParams p;
  p.kappa = field<double>(j, sec, "kappa");
  p.y_bar = field<double>(j, sec, "y_bar");
  p.sigma_y = field_or<double>(j, sec, "sigma_y", 0.0);
  p.rho = field_or<double>(j, sec, "rho", 0.0);
  p.lambda_y = field_or<double>(j, sec, "lambda_y", 0.0);
  p.y0 = field_or<double>(j, sec, "y0", p.y_bar);
  p.check();
  return p;
}

inline void parse_chain(const json& root, RunConfig& cfg) {
  const auto& c = section(root, "chain");
  cfg.chain_spec.kind = field<std::string>(c, "chain", "kind");
  cfg.chain_spec.matrix = field<std::vector<std::vector<double>>>(c, "chain", "matrix");
  if (cfg.chain_spec.kind == "generator") {
    cfg.generator = validate_generator(cfg.chain_spec.matrix);
  } else if (cfg.chain_spec.kind == "transition") {
    double dt = 0.0;
    if (c.contains("dt_days"))
      dt = field<double>(c, "chain", "dt_days") / cfg.days_per_year;
    else
      dt = field<double>(c, "chain", "dt");
    cfg.chain_spec.dt_years = dt;
    cfg.generator = from_transition(make_transition(cfg.chain_spec.matrix, dt));
  } else {
    throw ConfigError("chain.kind must be 'generator' or 'transition', got '" + cfg.chain_spec.kind + "'");
  }
}

inline OUParams parse_params_file(const fs::path& p) {
  const auto text = read_file(p);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("'" + p.string() + "': " + e.what());
  }
  return OUParams{field<double>(j, "params_file", "alpha"), field<double>(j, "params_file", "mu"),
                  field<double>(j, "params_file", "sigma"), field<double>(j, "params_file", "x0")};
}

inline void parse_ou(const json& root, const fs::path& base, RunConfig& cfg) {
  const auto& o = section(root, "ou");
  if (o.contains("params_file")) {
    const auto p = resolve(base, field<std::string>(o, "ou", "params_file"));
    if (!fs::exists(p)) throw ConfigError("ou.params_file '" + p.string() + "' does not exist");
    cfg.ou = parse_params_file(p);
    cfg.ou_source = "params_file:" + p.filename().string();
  } else if (o.contains("calibrate_from")) {
    const auto p = resolve(base, field<std::string>(o, "ou", "calibrate_from"));
    if (!fs::exists(p)) throw ConfigError("ou.calibrate_from '" + p.string() + "' does not exist");
    const double dt = field_or<double>(o, "ou", "dt", 1.0 / cfg.days_per_year);
    cfg.ou = calibrate(read_price_csv(p.string(), dt)).params;
    cfg.ou_source = "calibrated:" + p.filename().string();
  } else {
    cfg.ou = OUParams{field<double>(o, "ou", "alpha"), field<double>(o, "ou", "mu"),
                      field<double>(o, "ou", "sigma"), field<double>(o, "ou", "x0")};
    cfg.ou_source = "explicit";
  }
  cfg.ou.check();
}

inline void parse_claim(const json& root, RunConfig& cfg) {
  const auto& c = section(root, "claim");
  cfg.claim_type = field<std::string>(c, "claim", "type");
  const auto delta = field<std::vector<double>>(c, "claim", "delta");
  if (delta.size() != cfg.states()) {
    std::ostringstream os;
    os << "claim.delta has " << delta.size() << " entries, chain has " << cfg.states() << " states";
    throw ConfigError(os.str());
  }
  if (cfg.claim_type == "linear") {
    cfg.claim = LinearSpotClaim{delta};
  } else if (cfg.claim_type == "future") {
    FutureClaim f;
    f.delta = delta;
    f.r = field_or<double>(c, "claim", "r", 0.0);
    f.y = field_or<double>(c, "claim", "y", 0.0);
    f.carry_cost = field_or<double>(c, "claim", "carry_cost", 0.0);
    f.maturity = cfg.years(cfg.risk.horizon_days);
    f.check();
    cfg.claim = f;
  } else if (cfg.claim_type == "swap") {
    SwapClaim s;
    s.delta = delta;
    s.rates = field<std::vector<double>>(c, "claim", "rates");
    s.period = cfg.years(field_or<double>(c, "claim", "period_days", 21.0));
    s.carry_cost = field_or<double>(c, "claim", "carry_cost", 0.0);
    const json y = c.contains("yield") ? c.at("yield") : json::object();
    const auto kind = field_or<std::string>(y, "claim.yield", "type", "constant");
    if (kind == "constant") {
      s.yield = ConstantYield{field_or<double>(y, "claim.yield", "r", 0.0),
                              field_or<double>(y, "claim.yield", "y", 0.0)};
    } else if (kind == "gibson_schwartz") {
      s.yield = parse_gibson_schwartz(y, "claim.yield");
    } else {
      throw ConfigError("claim.yield.type must be 'constant' or 'gibson_schwartz'");
    }
    s.check();
    cfg.claim = s;
  } else {
    throw ConfigError("claim.type must be 'linear', 'future' or 'swap', got '" + cfg.claim_type + "'");
  }
}

inline void require_nonempty(const std::vector<double>& v, const char* name) {
  if (v.empty()) throw ConfigError(std::string("grids.") + name + " must not be empty");
}

}  // namespace detail

/// Parses and validates a configuration. Everything that can be checked
/// without running a command is checked here.
inline RunConfig load_config(const fs::path& path) {
  using namespace detail;
  RunConfig cfg;
  cfg.path = path;
  const auto text = read_file(path);
  cfg.hash = hex64(fnv1a(text));
  json root;
  try {
    root = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ConfigError("'" + path.string() + "': " + e.what());
  }
  const fs::path base = path.parent_path();

  if (root.contains("output")) {
    const auto& o = root.at("output");
    cfg.output_dir = field_or<std::string>(o, "output", "dir", "out");
    cfg.days_per_year = field_or<double>(o, "output", "days_per_year", kTradingDaysPerYear);
    if (!(cfg.days_per_year > 0.0)) throw ConfigError("output.days_per_year must be positive");
  }

  try {
    parse_chain(root, cfg);
    parse_ou(root, base, cfg);

    if (root.contains("risk")) {
      const auto& r = root.at("risk");
      cfg.risk.gamma = field_or<double>(r, "risk", "gamma", 1.0);
      cfg.risk.horizon_days = field_or<double>(r, "risk", "horizon_days", 50.0);
      cfg.risk.s_days = field_or<double>(r, "risk", "s_days", 0.0);
      cfg.risk.start_state = field_or<std::size_t>(r, "risk", "start_state", 0);
      if (r.contains("x_s")) cfg.risk.x_s = field<double>(r, "risk", "x_s");
    }
    if (!(cfg.risk.gamma > 0.0)) throw ConfigError("risk.gamma must be positive");
    if (!(cfg.risk.s_days >= 0.0 && cfg.risk.s_days < cfg.risk.horizon_days))
      throw ConfigError("risk needs 0 <= s_days < horizon_days");
    if (cfg.risk.start_state >= cfg.states()) throw ConfigError("risk.start_state outside the chain");

    parse_claim(root, cfg);

    const json g = root.contains("grids") ? root.at("grids") : json::object();
    cfg.grids.gamma = field_or<std::vector<double>>(g, "grids", "gamma", {cfg.risk.gamma});
    cfg.grids.horizon_days =
        field_or<std::vector<double>>(g, "grids", "horizon_days", {cfg.risk.horizon_days});
    cfg.grids.yield = field_or<std::vector<double>>(g, "grids", "yield", {0.0});
    cfg.grids.time_steps = field_or<std::size_t>(g, "grids", "time_steps", 25);
    require_nonempty(cfg.grids.gamma, "gamma");
    require_nonempty(cfg.grids.horizon_days, "horizon_days");
    require_nonempty(cfg.grids.yield, "yield");
    for (double v : cfg.grids.gamma)
      if (!(v > 0.0)) throw ConfigError("grids.gamma values must be positive");
    for (double v : cfg.grids.horizon_days)
      if (!(v > cfg.risk.s_days)) throw ConfigError("grids.horizon_days values must exceed risk.s_days");
    if (cfg.grids.time_steps < 1) throw ConfigError("grids.time_steps must be at least 1");

    if (root.contains("simulate")) {
      const auto& s = root.at("simulate");
      cfg.simulate.steps = field_or<std::size_t>(s, "simulate", "steps", 252);
      cfg.simulate.start_date = field_or<std::string>(s, "simulate", "start_date", "2019-09-30");
      if (s.contains("yield")) cfg.simulate.yield = parse_gibson_schwartz(s.at("yield"), "simulate.yield");
      regime_risk::detail::parse_iso_date(cfg.simulate.start_date, 0);
    }
    if (cfg.simulate.steps < 1) throw ConfigError("simulate.steps must be at least 1");

    if (root.contains("mc")) {
      const auto& m = root.at("mc");
      cfg.mc.n_paths = field_or<std::size_t>(m, "mc", "n_paths", 100000);
      cfg.mc.seed = field_or<std::uint64_t>(m, "mc", "seed", 0);
      cfg.mc.threads = field_or<unsigned>(m, "mc", "threads", 0);
    }
    if (cfg.mc.n_paths < 2) throw ConfigError("mc.n_paths must be at least 2");
  } catch (const ConfigError&) {
    throw;
  } catch (const RiskError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

}  // namespace regime_risk::app
