#pragma once

// The five CLI commands as library functions. Each returns its result and
// writes CSV/JSON files under the configured output directory; outputs are
// a pure function of (config, input files, seed).

#include "regime_risk/app/config.hpp"
#include "regime_risk/app/output.hpp"
#include "regime_risk/entropic_risk.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace regime_risk::app {

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

// Left-aligned console column; always at least one trailing space.
inline std::string cell(const std::string& s, std::size_t width = 16) {
  return s + std::string(s.size() < width ? width - s.size() : 1, ' ');
}

inline double observed_spot(const RunConfig& cfg) {
  if (cfg.risk.x_s) return *cfg.risk.x_s;
  return conditional_law(cfg.ou, cfg.ou.x0, 0.0, cfg.years(cfg.risk.s_days)).mean;
}

inline RiskQuery make_query(const RunConfig& cfg, double gamma, double horizon_days) {
  return RiskQuery{gamma, cfg.years(cfg.risk.s_days), cfg.years(horizon_days), observed_spot(cfg)};
}

/// The configured claim with its maturity moved to `T` (futures only).
inline Claim claim_at_horizon(const Claim& claim, double T) {
  if (const auto* f = std::get_if<FutureClaim>(&claim)) {
    FutureClaim out = *f;
    out.maturity = T;
    return out;
  }
  return claim;
}

inline std::optional<RiskVector> closed_risk(const RunConfig& cfg, const Claim& claim,
                                             const RiskQuery& q) {
  if (const auto* lin = std::get_if<LinearSpotClaim>(&claim))
    return spot_risk_closed(cfg.ou, cfg.chain(), *lin, q);
  if (const auto* fut = std::get_if<FutureClaim>(&claim))
    return future_risk_closed(cfg.ou, cfg.chain(), *fut, q);
  return std::nullopt;
}

inline std::vector<double> effective_loadings(const Claim& claim, const RiskQuery& q) {
  if (const auto* lin = std::get_if<LinearSpotClaim>(&claim)) return lin->delta;
  return future_effective_loadings(std::get<FutureClaim>(claim), q);
}

/// Independent evaluation for the report's oracle column. One regime: the
/// Gaussian certainty equivalent d m - d^2 v / (2 gamma). Several regimes:
/// the mixture over terminal regimes weighted by distribution_at(e_i).
inline std::vector<double> oracle_risk(const RunConfig& cfg, const Claim& claim,
                                       const RiskQuery& q) {
  const auto d = effective_loadings(claim, q);
  const auto law = conditional_law(cfg.ou, q.x_s, q.s, q.T);
  const auto n = cfg.states();
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = d[0] * law.mean - d[0] * d[0] * law.variance / (2.0 * q.gamma);
    return out;
  }
  std::vector<double> log_terms(n);
  for (std::size_t j = 0; j < n; ++j)
    log_terms[j] = -d[j] * law.mean / q.gamma + d[j] * d[j] * law.variance / (2.0 * q.gamma * q.gamma);
  const double top = *std::max_element(log_terms.begin(), log_terms.end());
  for (std::size_t i = 0; i < n; ++i) {
    Vector e_i = Vector::Zero(static_cast<Eigen::Index>(n));
    e_i(static_cast<Eigen::Index>(i)) = 1.0;
    const Vector p = distribution_at(cfg.chain(), e_i, q.T - q.s);
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      acc += p(static_cast<Eigen::Index>(j)) * std::exp(log_terms[j] - top);
    out[i] = -q.gamma * (top + std::log(acc));
  }
  return out;
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

inline Calibration cmd_calibrate(const fs::path& csv_path, double dt, const fs::path& out_dir,
                                 std::ostream& log, const CalibrationOptions& options = {}) {
  const auto text = detail::read_file(csv_path);
  std::istringstream in(text);
  const auto series = read_price_csv(in, dt);
  const auto fit = calibrate(series, options);

  Provenance prov{"calibrate", hex64(fnv1a(text)), 0, 1.0 / dt, {{"input", csv_path.filename().string()}}};
  json j = {
      {"alpha", fit.params.alpha},
      {"mu", fit.params.mu},
      {"sigma", fit.params.sigma},
      {"x0", fit.params.x0},
      {"std_errors", {{"alpha", fit.std_errors.alpha}, {"mu", fit.std_errors.mu}, {"sigma", fit.std_errors.sigma}}},
      {"ar1", {{"slope", fit.slope}, {"intercept", fit.intercept}, {"residual_variance", fit.residual_variance}}},
      {"dt", dt},
      {"n_obs", fit.n_obs},
      {"unit_root_stat", json_num(fit.unit_root_stat)},
      {"provenance", prov.to_json()},
  };
  write_json(out_dir / "ou_params.json", j);

  log << "OU calibration from " << csv_path.filename().string() << " (" << fit.n_obs
      << " observations, dt = " << num(dt) << " years)\n";
  log << "  alpha = " << num(fit.params.alpha) << "  (se " << num(fit.std_errors.alpha) << ")\n";
  log << "  mu    = " << num(fit.params.mu) << "  (se " << num(fit.std_errors.mu) << ")\n";
  log << "  sigma = " << num(fit.params.sigma) << "  (se " << num(fit.std_errors.sigma) << ")\n";
  log << "  x0    = " << num(fit.params.x0) << "\n";
  log << "  unit-root statistic = " << num(fit.unit_root_stat) << " (5% critical value -2.86)\n";
  log << "wrote " << (out_dir / "ou_params.json").string() << "\n";
  return fit;
}

// ---------------------------------------------------------------------------
// risk
// ---------------------------------------------------------------------------

struct RiskRow {
  std::size_t state = 0;
  std::optional<double> closed;
  std::optional<double> lambda;
  std::optional<double> oracle;
  std::optional<MCEstimate> mc;
  std::optional<double> z;
};

struct RiskReport {
  std::string claim_type;
  RiskQuery query;
  std::vector<RiskRow> rows;
};

inline RiskReport cmd_risk(const RunConfig& cfg, bool with_mc, std::ostream& log) {
  const auto q = make_query(cfg, cfg.risk.gamma, cfg.risk.horizon_days);
  const Claim claim = claim_at_horizon(cfg.claim, q.T);
  const bool is_swap = std::holds_alternative<SwapClaim>(claim);
  const bool run_mc = with_mc || is_swap;

  RiskReport report{cfg.claim_type, q, {}};
  const auto closed = closed_risk(cfg, claim, q);
  std::vector<double> oracle;
  if (closed) oracle = oracle_risk(cfg, claim, q);
  std::optional<MCRiskVector> mc;
  if (run_mc) mc = claim_risk_mc(cfg.ou, cfg.chain(), claim, q, cfg.mc);

  for (std::size_t i = 0; i < cfg.states(); ++i) {
    RiskRow row;
    row.state = i;
    if (closed) {
      row.closed = closed->risk(i);
      row.lambda = closed->lambda[i];
      row.oracle = oracle[i];
    }
    if (mc) {
      row.mc = (*mc)[i];
      if (closed) row.z = z_score(closed->risk(i), (*mc)[i]);
    }
    report.rows.push_back(row);
  }

  auto prov = Provenance::of("risk", cfg);
  prov.extra = {{"claim", cfg.claim_type}, {"gamma", num(q.gamma)}, {"s_years", num(q.s)},
                {"T_years", num(q.T)}, {"x_s", num(q.x_s)}};
  if (run_mc) prov.extra.emplace_back("n_paths", std::to_string(cfg.mc.n_paths));

  auto opt = [](const std::optional<double>& v) { return v ? num(*v) : std::string{}; };
  CsvTable table({"state", "risk_closed", "lambda", "oracle", "risk_mc", "std_error", "z_score"});
  json rows = json::array();
  for (const auto& r : report.rows) {
    table.add_row({std::to_string(r.state), opt(r.closed), opt(r.lambda), opt(r.oracle),
                   r.mc ? num(r.mc->value) : "", r.mc ? num(r.mc->std_error) : "", opt(r.z)});
    json jr = {{"state", r.state}};
    if (r.closed) {
      jr["risk_closed"] = json_num(*r.closed);
      jr["lambda"] = json_num(*r.lambda);
      jr["oracle"] = json_num(*r.oracle);
    }
    if (r.mc) {
      jr["risk_mc"] = json_num(r.mc->value);
      jr["std_error"] = json_num(r.mc->std_error);
    }
    if (r.z) jr["z_score"] = json_num(*r.z);
    rows.push_back(jr);
  }
  write_file(cfg.output_dir / "risk.csv", table.render(prov));
  write_json(cfg.output_dir / "risk.json", {{"provenance", prov.to_json()}, {"rows", rows}});

  log << "Entropic risk of the " << cfg.claim_type << " claim, gamma = " << num(q.gamma)
      << ", s = " << num(q.s) << ", T = " << num(q.T) << " years, x_s = " << num(q.x_s) << "\n";
  log << cell("state", 7) << cell("closed") << cell("oracle") << cell("mc") << cell("std_error") << "z\n";
  for (const auto& r : report.rows) {
    log << cell(std::to_string(r.state), 7) << cell(r.closed ? num(*r.closed) : "n/a")
        << cell(r.oracle ? num(*r.oracle) : "n/a") << cell(r.mc ? num(r.mc->value) : "-")
        << cell(r.mc ? num(r.mc->std_error) : "-") << (r.z ? num(*r.z) : "-") << "\n";
  }
  return report;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepTable {
  std::vector<double> horizons_days;  // row labels
  std::vector<double> gammas;         // column labels
  std::vector<std::vector<double>> cells;
  // Last horizon minus first; percent change relative to |first|. Empty
  // when there is a single horizon.
  std::vector<double> variation_abs;
  std::vector<double> variation_pct;
  std::vector<std::vector<MCEstimate>> mc;  // same shape as cells when requested
  std::vector<std::vector<double>> z;
  std::size_t flagged = 0;                  // cells with |z| > 3
};

inline SweepTable cmd_sweep(const RunConfig& cfg, bool with_mc, std::ostream& log) {
  if (std::holds_alternative<SwapClaim>(cfg.claim))
    throw ConfigError("sweep supports linear and future claims; use 'risk' for swaps");
  SweepTable t;
  t.horizons_days = cfg.grids.horizon_days;
  t.gammas = cfg.grids.gamma;
  const auto z0 = cfg.risk.start_state;
  for (double h : t.horizons_days) {
    std::vector<double> row;
    std::vector<MCEstimate> mc_row;
    std::vector<double> z_row;
    for (double g : t.gammas) {
      const auto q = make_query(cfg, g, h);
      const Claim claim = claim_at_horizon(cfg.claim, q.T);
      const double value = closed_risk(cfg, claim, q)->risk(z0);
      row.push_back(value);
      if (with_mc) {
        const auto est = claim_risk_mc(cfg.ou, cfg.chain(), claim, q, cfg.mc)[z0];
        mc_row.push_back(est);
        z_row.push_back(z_score(value, est));
        if (std::abs(z_row.back()) > 3.0) ++t.flagged;
      }
    }
    t.cells.push_back(row);
    if (with_mc) {
      t.mc.push_back(mc_row);
      t.z.push_back(z_row);
    }
  }
  if (t.horizons_days.size() > 1) {
    const auto& first = t.cells.front();
    const auto& last = t.cells.back();
    for (std::size_t c = 0; c < t.gammas.size(); ++c) {
      t.variation_abs.push_back(last[c] - first[c]);
      t.variation_pct.push_back(100.0 * (last[c] - first[c]) / std::abs(first[c]));
    }
  }

  auto prov = Provenance::of("sweep", cfg);
  prov.extra = {{"claim", cfg.claim_type}, {"start_state", std::to_string(z0)},
                {"s_days", num(cfg.risk.s_days)}, {"x_s", num(observed_spot(cfg))},
                {"variation_pct", "100*(last-first)/|first|"}};
  if (with_mc) prov.extra.emplace_back("n_paths", std::to_string(cfg.mc.n_paths));

  std::vector<std::string> header{"horizon_days"};
  for (double g : t.gammas) header.push_back("gamma=" + num(g));
  CsvTable wide(header);
  for (std::size_t r = 0; r < t.horizons_days.size(); ++r) {
    std::vector<std::string> row{num(t.horizons_days[r])};
    for (double v : t.cells[r]) row.push_back(num(v));
    wide.add_row(row);
  }
  std::vector<std::string> abs_row{"variation_abs"};
  std::vector<std::string> pct_row{"variation_pct"};
  for (std::size_t c = 0; c < t.gammas.size(); ++c) {
    abs_row.push_back(t.variation_abs.empty() ? "" : num(t.variation_abs[c]));
    pct_row.push_back(t.variation_pct.empty() ? "" : num(t.variation_pct[c]));
  }
  wide.add_row(abs_row);
  wide.add_row(pct_row);

  std::vector<std::string> long_header{"horizon_days", "gamma", "risk"};
  if (with_mc) long_header.insert(long_header.end(), {"risk_mc", "std_error", "z_score", "flag"});
  CsvTable longt(long_header);
  json cells = json::array();
  for (std::size_t r = 0; r < t.horizons_days.size(); ++r) {
    for (std::size_t c = 0; c < t.gammas.size(); ++c) {
      std::vector<std::string> row{num(t.horizons_days[r]), num(t.gammas[c]), num(t.cells[r][c])};
      json jc = {{"horizon_days", t.horizons_days[r]}, {"gamma", t.gammas[c]}, {"risk", json_num(t.cells[r][c])}};
      if (with_mc) {
        const auto& e = t.mc[r][c];
        const bool flag = std::abs(t.z[r][c]) > 3.0;
        row.insert(row.end(), {num(e.value), num(e.std_error), num(t.z[r][c]), flag ? "1" : "0"});
        jc["risk_mc"] = json_num(e.value);
        jc["std_error"] = json_num(e.std_error);
        jc["z_score"] = json_num(t.z[r][c]);
        jc["flag"] = flag;
      }
      longt.add_row(row);
      cells.push_back(jc);
    }
  }
  write_file(cfg.output_dir / "sweep.csv", wide.render(prov));
  write_file(cfg.output_dir / "sweep_long.csv", longt.render(prov));
  json variation = {{"abs", json::array()}, {"pct", json::array()}};
  for (double v : t.variation_abs) variation["abs"].push_back(json_num(v));
  for (double v : t.variation_pct) variation["pct"].push_back(json_num(v));
  write_json(cfg.output_dir / "sweep.json", {{"provenance", prov.to_json()},
                                             {"horizons_days", t.horizons_days},
                                             {"gammas", t.gammas},
                                             {"cells", cells},
                                             {"variation", variation}});

  log << "Entropic risk of the " << cfg.claim_type << " claim in state " << z0
      << " (rows: horizon in days, columns: gamma)\n";
  log << cell("horizon");
  for (double g : t.gammas) log << cell("g=" + num(g));
  log << "\n";
  for (std::size_t r = 0; r < t.horizons_days.size(); ++r) {
    log << cell(num(t.horizons_days[r]));
    for (double v : t.cells[r]) log << cell(num(v));
    log << "\n";
  }
  if (!t.variation_pct.empty()) {
    log << cell("variation (%)");
    for (double v : t.variation_pct) log << cell(num(v));
    log << "\n";
  }
  if (with_mc) log << t.flagged << " cell(s) with |z| > 3 against Monte Carlo\n";
  return t;
}

// ---------------------------------------------------------------------------
// yield-sweep
// ---------------------------------------------------------------------------

struct YieldSweep {
  std::vector<double> times;   // observation times s, years
  std::vector<double> yields;
  std::vector<std::vector<double>> risk;  // [yield][time]
  std::vector<double> spread;             // max - min across yields, per time
};

/// Future risk in the start regime as the observation time s runs from 0
/// towards maturity, one curve per yield level. The spot observed at s is
/// its conditional mean given x0.
inline YieldSweep cmd_yield_sweep(const RunConfig& cfg, std::ostream& log) {
  if (std::holds_alternative<SwapClaim>(cfg.claim))
    throw ConfigError("yield-sweep needs a linear or future claim");
  const double T = cfg.years(cfg.risk.horizon_days);
  double r = 0.0;
  std::vector<double> delta;
  if (const auto* f = std::get_if<FutureClaim>(&cfg.claim)) {
    r = f->r;
    delta = f->delta;
  } else {
    delta = std::get<LinearSpotClaim>(cfg.claim).delta;
  }

  YieldSweep ys;
  ys.yields = cfg.grids.yield;
  const auto steps = cfg.grids.time_steps;
  for (std::size_t k = 0; k < steps; ++k) ys.times.push_back(T * static_cast<double>(k) / static_cast<double>(steps));

  for (double y : ys.yields) {
    FutureClaim fc{delta, r, y, T, 0.0};
    std::vector<double> curve;
    for (double s : ys.times) {
      const double x_s = conditional_law(cfg.ou, cfg.ou.x0, 0.0, s).mean;
      const RiskQuery q{cfg.risk.gamma, s, T, x_s};
      curve.push_back(future_risk_closed(cfg.ou, cfg.chain(), fc, q).risk(cfg.risk.start_state));
    }
    ys.risk.push_back(curve);
  }
  for (std::size_t k = 0; k < ys.times.size(); ++k) {
    double lo = ys.risk[0][k];
    double hi = lo;
    for (const auto& curve : ys.risk) {
      lo = std::min(lo, curve[k]);
      hi = std::max(hi, curve[k]);
    }
    ys.spread.push_back(hi - lo);
  }

  auto prov = Provenance::of("yield-sweep", cfg);
  prov.extra = {{"claim", "future"}, {"r", num(r)}, {"gamma", num(cfg.risk.gamma)},
                {"maturity_days", num(cfg.risk.horizon_days)},
                {"start_state", std::to_string(cfg.risk.start_state)}};

  CsvTable longt({"t_days", "t_years", "yield", "risk"});
  CsvTable spread({"t_days", "t_years", "min_risk", "max_risk", "spread"});
  json curves = json::array();
  for (std::size_t i = 0; i < ys.yields.size(); ++i) {
    json c = {{"yield", ys.yields[i]}, {"label", num(ys.yields[i])}, {"risk", json::array()}};
    for (std::size_t k = 0; k < ys.times.size(); ++k) {
      longt.add_row({num(ys.times[k] * cfg.days_per_year), num(ys.times[k]), num(ys.yields[i]),
                     num(ys.risk[i][k])});
      c["risk"].push_back(json_num(ys.risk[i][k]));
    }
    curves.push_back(c);
  }
  for (std::size_t k = 0; k < ys.times.size(); ++k) {
    double lo = ys.risk[0][k];
    double hi = lo;
    for (const auto& curve : ys.risk) {
      lo = std::min(lo, curve[k]);
      hi = std::max(hi, curve[k]);
    }
    spread.add_row({num(ys.times[k] * cfg.days_per_year), num(ys.times[k]), num(lo), num(hi),
                    num(ys.spread[k])});
  }
  write_file(cfg.output_dir / "yield_sweep.csv", longt.render(prov));
  write_file(cfg.output_dir / "yield_spread.csv", spread.render(prov));
  write_json(cfg.output_dir / "yield_sweep.json", {{"provenance", prov.to_json()},
                                                   {"t_years", ys.times},
                                                   {"curves", curves},
                                                   {"spread", ys.spread}});

  log << "Future risk over time for " << ys.yields.size() << " yield level(s), maturity "
      << num(cfg.risk.horizon_days) << " days\n";
  log << "  spread across yields at t=0: " << num(ys.spread.front())
      << ", at final time: " << num(ys.spread.back()) << "\n";
  return ys;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct Simulation {
  std::vector<double> times;
  std::vector<double> spots;
  std::vector<std::size_t> regimes;
  std::vector<double> yields;  // empty without a yield model
};

namespace detail {

// Business days (Mon-Fri) starting at `start` or the next business day.
inline std::vector<std::string> business_days(const std::string& start, std::size_t count) {
  using namespace std::chrono;
  sys_days day{regime_risk::detail::parse_iso_date(start, 0)};
  std::vector<std::string> out;
  while (out.size() < count) {
    const weekday wd{day};
    if (wd != Saturday && wd != Sunday) {
      const year_month_day ymd{day};
      char buf[16];
      std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                    static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
      out.emplace_back(buf);
    }
    day += days{1};
  }
  return out;
}

}  // namespace detail

inline Simulation cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  Simulation sim;
  sim.times = daily_grid(cfg.simulate.steps, cfg.days_per_year);

  std::optional<GibsonSchwartzParams> yield_model = cfg.simulate.yield;
  if (!yield_model)
    if (const auto* s = std::get_if<SwapClaim>(&cfg.claim))
      if (const auto* gs = std::get_if<GibsonSchwartzParams>(&s->yield)) yield_model = *gs;

  auto spot_rng = Stream::derive(cfg.mc.seed, 0x5107, 0);
  if (yield_model) {
    auto joint = simulate_spot_yield_path(cfg.ou, *yield_model, sim.times, spot_rng, cfg.ou.x0,
                                          yield_model->y0);
    sim.spots = std::move(joint.spots);
    sim.yields = std::move(joint.yields);
  } else {
    sim.spots = simulate_path(cfg.ou, sim.times, spot_rng);
  }
  auto chain_rng = Stream::derive(cfg.mc.seed, 0x5107, 1);
  const auto path = sample_path(cfg.chain(), cfg.risk.start_state, sim.times.back(), chain_rng);
  for (double t : sim.times) sim.regimes.push_back(path.state_at(t));

  auto prov = Provenance::of("simulate", cfg);
  prov.extra = {{"steps", std::to_string(cfg.simulate.steps)},
                {"start_state", std::to_string(cfg.risk.start_state)}};

  std::vector<std::string> header{"step", "t_years", "spot", "regime"};
  if (!sim.yields.empty()) header.push_back("yield");
  CsvTable paths(header);
  for (std::size_t k = 0; k < sim.times.size(); ++k) {
    std::vector<std::string> row{std::to_string(k), num(sim.times[k]), num(sim.spots[k]),
                                 std::to_string(sim.regimes[k])};
    if (!sim.yields.empty()) row.push_back(num(sim.yields[k]));
    paths.add_row(row);
  }
  write_file(cfg.output_dir / "paths.csv", paths.render(prov));
  json j = {{"provenance", prov.to_json()},
            {"t_years", sim.times},
            {"spot", sim.spots},
            {"regime", sim.regimes},
            {"regime_jumps", {{"times", path.times}, {"states", path.states}}}};
  if (!sim.yields.empty()) j["yield"] = sim.yields;
  write_json(cfg.output_dir / "paths.json", j);

  // Calendar-dated copy in the calibration input format when prices stay positive.
  const bool positive = std::all_of(sim.spots.begin(), sim.spots.end(), [](double x) { return x > 0.0; });
  if (positive) {
    const auto dates = detail::business_days(cfg.simulate.start_date, sim.spots.size());
    std::string csv = "date,price\r\n";
    for (std::size_t k = 0; k < sim.spots.size(); ++k) csv += dates[k] + "," + num(sim.spots[k]) + "\r\n";
    write_file(cfg.output_dir / "prices.csv", csv);
  }

  log << "Simulated " << cfg.simulate.steps << " steps; spot in [" << num(*std::min_element(sim.spots.begin(), sim.spots.end()))
      << ", " << num(*std::max_element(sim.spots.begin(), sim.spots.end())) << "], "
      << path.times.size() - 1 << " regime switch(es)\n";
  if (!positive) log << "prices.csv not written: the simulated spot went non-positive\n";
  return sim;
}

}  // namespace regime_risk::app
