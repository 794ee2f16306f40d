#include "lampshuffler/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "lampshuffler/analysis.hpp"
#include "lampshuffler/bfs.hpp"
#include "lampshuffler/constructions.hpp"
#include "lampshuffler/measure.hpp"
#include "lampshuffler/walk.hpp"

namespace lampshuffler {

namespace {

std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : sep) + s;
  return out;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : cols_(header.size()) { line(header); }
  template <class... T>
  void row(const T&... cells) {
    std::vector<std::string> v{cell(cells)...};
    if (v.size() != cols_) throw std::logic_error("csv row width mismatch");
    line(v);
  }
  const std::string& str() const { return out_; }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(bool b) { return b ? "1" : "0"; }
  static std::string cell(double d) { return num(d); }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I i) {
    return std::to_string(i);
  }
  void line(const std::vector<std::string>& v) {
    std::vector<std::string> q;
    for (const auto& c : v) {
      if (c.find_first_of(",\"") == std::string::npos) {
        q.push_back(c);
        continue;
      }
      std::string e = "\"";
      for (char ch : c) e += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      q.push_back(e + "\"");
    }
    out_ += join(q, ",") + "\n";
  }
  std::size_t cols_;
  std::string out_;
};

// ---------------------------------------------------------------------------
// Config handling

struct Field {
  enum Kind { Count, Real, Text, Bool, Window, List, Object, Rational } kind;
  json fallback;
};

using Schema = std::map<std::string, Field>;

const std::map<std::string, Schema>& schemas() {
  static const std::map<std::string, Schema> s = [] {
    const Field seed{Field::Count, 1};
    std::map<std::string, Schema> m;
    m["simulate"] = {{"seed", seed},
                     {"group", {Field::Object, {{"kind", "Z"}}}},
                     {"measure", {Field::Object, {{"name", "simple_std"}}}},
                     {"steps", {Field::Count, 10000}},
                     {"traj", {Field::Count, 10}},
                     {"window", {Field::Window, json::array({-5, 5})}},
                     {"radius", {Field::Count, 3}},
                     {"snapshots", {Field::Bool, false}},
                     {"perm_cap", {Field::Count, 10000}},
                     {"upper_proxy", {Field::Bool, false}}};
    m["stabilize"] = {{"seed", seed},
                      {"measure", {Field::Object, {{"name", "drifted_std"}}}},
                      {"steps", {Field::Count, 1000000}},
                      {"traj", {Field::Count, 100}},
                      {"window", {Field::Window, json::array({-5, 5})}},
                      {"stable_after", {Field::Count, 0}},
                      {"bc_site", {Field::Real, 0}},
                      {"bc_ns", {Field::List, json::array({10000, 100000})}}};
    m["counterexample"] = {{"seed", seed},
                           {"steps", {Field::Count, std::uint64_t{1} << 20}},
                           {"traj", {Field::Count, 100}},
                           {"kmin", {Field::Count, 10}},
                           {"kmax", {Field::Count, 19}},
                           {"tail_draws", {Field::Count, 1000000}},
                           {"tail_ns", {Field::List, json::array({2, 10, 100})}},
                           {"series_terms", {Field::Count, 1000000}}};
    m["drift"] = {{"seed", seed},
                  {"measure", {Field::Object, {{"name", "simple_std"}}}},
                  {"nmin", {Field::Count, 1024}},
                  {"nmax", {Field::Count, 131072}},
                  {"traj", {Field::Count, 200}},
                  {"upper_proxy", {Field::Bool, true}}};
    m["entropy"] = {{"seed", seed},
                    {"group", {Field::Object, {{"kind", "Z"}}}},
                    {"measure", {Field::Object, {{"name", "simple_std"}}}},
                    {"exact_nmax", {Field::Count, 6}},
                    {"plugin_ns", {Field::List, json::array({64, 256, 1024})}},
                    {"samples", {Field::Count, 20000}}};
    m["confine"] = {{"seed", seed},
                    {"measure", {Field::Object, {{"name", "drifted_std"}}}},
                    {"epsilon", {Field::Real, 0.1}},
                    {"n", {Field::Count, 100000}},
                    {"traj", {Field::Count, 200}},
                    {"pilot_steps", {Field::Count, 100000}},
                    {"c1", {Field::Real, 0}},
                    {"d", {Field::Real, 0}}};
    m["recurrent-z"] = {{"seed", seed},
                        {"measure", {Field::Object, {{"name", "simple_std"}}}},
                        {"ns", {Field::List, json::array({100, 1000, 10000, 100000})}},
                        {"traj", {Field::Count, 400}}};
    m["recurrent-z2"] = {{"seed", seed},
                         {"group", {Field::Object, {{"kind", "Zd"}, {"d", 2}}}},
                         {"measure", {Field::Object, {{"name", "simple_std"}}}},
                         {"ns", {Field::List, json::array({1000, 10000, 100000, 1000000})}},
                         {"traj", {Field::Count, 20}}};
    m["qi-check"] = {{"seed", seed}, {"d", {Field::Count, 1}}, {"m", {Field::Count, 2}}, {"radius", {Field::Count, 6}}};
    m["k-example"] = {{"seed", seed},
                      {"M", {Field::Count, 3}},
                      {"bias", {Field::Rational, "3/4"}},
                      {"steps", {Field::Count, 20000}},
                      {"traj", {Field::Count, 2}},
                      {"window", {Field::Window, json::array({0, 50})}},
                      {"radius", {Field::Count, 9}}};
    m["free-example"] = {{"seed", seed},
                         {"k", {Field::Count, 2}},
                         {"steps", {Field::Count, 100000}},
                         {"traj", {Field::Count, 50}},
                         {"ray", {Field::Count, 20}}};
    m["bfs"] = {{"seed", seed},
                {"gens", {Field::Text, "std"}},
                {"M", {Field::Count, 3}},
                {"radius", {Field::Count, 6}},
                {"budget", {Field::Count, kDefaultBfsBudget}}};
    return m;
  }();
  return s;
}

bool integral_number(const json& v) {
  if (v.is_number_unsigned()) return true;
  if (v.is_number_integer()) return v.get<std::int64_t>() >= 0;
  if (v.is_number_float()) {
    const double d = v.get<double>();
    return d >= 0 && d == std::floor(d) && d < 1.8e19;
  }
  return false;
}

std::uint64_t count(const json& c, const char* key) {
  const json& v = c.at(key);
  if (v.is_number_float()) return static_cast<std::uint64_t>(v.get<double>());
  return v.get<std::uint64_t>();
}

std::vector<std::uint64_t> counts(const json& c, const char* key) {
  std::vector<std::uint64_t> out;
  for (const auto& v : c.at(key)) out.push_back(v.is_number_float() ? static_cast<std::uint64_t>(v.get<double>()) : v.get<std::uint64_t>());
  return out;
}

json meta(const std::string& command, const json& config) {
  return {{"command", command},
          {"configHash", config_hash(config)},
          {"seed", config.at("seed")},
          {"toolVersion", kToolVersion},
          {"params", config}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

CommandResult finish(const std::string& command, const json& config, json m, std::vector<Artifact> csvs,
                     std::optional<double> gate, bool verdict, std::string summary) {
  CommandResult r;
  // Every CSV carries the identifying triple as a comment line.
  const std::string tag = "# configHash=" + config_hash(config) + " seed=" + config.at("seed").dump() +
                          " toolVersion=" + kToolVersion + "\n";
  for (auto& a : csvs) {
    a.content = tag + a.content;
    r.files.push_back(std::move(a));
  }
  if (gate) m["gateValue"] = *gate;
  m["verdict"] = verdict;
  r.files.push_back({command + ".json", dump(m)});
  r.gate_value = gate;
  r.verdict = verdict;
  r.summary = std::move(summary);
  return r;
}

std::vector<IntLine::Point> window_sites(const json& w) {
  std::vector<std::int64_t> out;
  for (std::int64_t x = w[0].get<std::int64_t>(); x <= w[1].get<std::int64_t>(); ++x) out.push_back(x);
  return out;
}

// ---------------------------------------------------------------------------
// Commands

template <class G>
CommandResult simulate_on(const G& g, const json& c, unsigned threads) {
  const auto m = measure_from_json(g, c.at("measure"));
  WalkOptions opt;
  opt.steps = count(c, "steps");
  opt.upper_proxy = c.at("upper_proxy").get<bool>() && std::is_same_v<G, IntLine>;
  opt.keep_perm = c.at("snapshots").get<bool>();
  opt.perm_cap = count(c, "perm_cap");
  opt.keep_final_perm = false;
  SiteWindow<G> window;
  if constexpr (std::is_same_v<G, IntLine>) {
    window = SiteWindow<G>::interval(c["window"][0].get<std::int64_t>(), c["window"][1].get<std::int64_t>());
  } else {
    window.radius = count(c, "radius");
  }
  const WalkEngine<G> engine(m, window, opt);
  const std::uint64_t seed = count(c, "seed");
  auto reps = parallel_map<TrajectoryReport<G>>(count(c, "traj"), threads,
                                                [&](std::size_t i) { return engine.run(trajectory_rng(seed, i)); });
  Csv csv({"seed", "n", "pos", "disp", "range", "minPos", "maxPos", "inQn"});
  std::string jsonl;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const auto& r = reps[i];
    for (const auto& p : r.series) {
      std::string lo, hi;
      if constexpr (std::is_same_v<G, IntLine>) {
        lo = std::to_string(r.min_pos);
        hi = std::to_string(r.max_pos);
      }
      csv.row(i, p.n, g.to_json(p.pos).dump(), p.disp, p.range, lo, hi, std::string());
      if (opt.keep_perm) {
        json s = {{"traj", i}, {"n", p.n}, {"pos", g.to_json(p.pos)}, {"disp", p.disp}, {"range", p.range}};
        if (p.perm) s["perm"] = element_to_json(g, Element<G>{*p.perm, p.pos})["perm"];
        jsonl += s.dump() + "\n";
      }
    }
  }
  std::vector<Artifact> files{{"simulate.csv", csv.str()}};
  if (opt.keep_perm) files.push_back({"snapshots.jsonl", jsonl});
  json md = meta("simulate", c);
  md["measure"] = measure_to_json(m);
  return finish("simulate", c, md, std::move(files), std::nullopt, true,
                "simulated " + std::to_string(reps.size()) + " trajectories");
}

CommandResult cmd_simulate(const json& c, unsigned threads) {
  const auto d = BaseGroupDescriptor::from_json(c.at("group"));
  switch (d.kind) {
    case GroupKind::Z:
      return simulate_on(IntLine{}, c, threads);
    case GroupKind::Zd:
      return simulate_on(Lattice(d.d), c, threads);
    case GroupKind::Free:
      return simulate_on(FreeGroup(d.k), c, threads);
  }
  throw ConfigError({"group: unsupported kind"});
}

CommandResult cmd_stabilize(const json& c, unsigned threads) {
  const IntLine z;
  const auto m = measure_from_json(z, c.at("measure"));
  WalkOptions opt;
  opt.steps = count(c, "steps");
  opt.snapshot_ratio = 2.0;
  opt.keep_final_perm = false;
  opt.track_range = false;
  opt.change_log_cap = 1u << 16;
  const auto w = c.at("window");
  const WalkEngine<IntLine> engine(m, SiteWindow<IntLine>::interval(w[0].get<std::int64_t>(), w[1].get<std::int64_t>()), opt);
  const std::uint64_t seed = count(c, "seed");
  auto reps = parallel_map<TrajectoryReport<IntLine>>(count(c, "traj"), threads,
                                                      [&](std::size_t i) { return engine.run(trajectory_rng(seed, i)); });
  std::uint64_t stable_after = count(c, "stable_after");
  if (stable_after == 0) stable_after = opt.steps / 10;
  Csv csv({"traj", "site", "value", "lastChange", "changes"});
  std::uint64_t stable_runs = 0;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    bool stable = true;
    for (const auto& r : reps[i].stabilization) {
      csv.row(i, r.site, r.value, r.last_change, r.changes);
      if (r.last_change >= stable_after) stable = false;
    }
    stable_runs += stable;
  }
  const auto bc_ns = counts(c, "bc_ns");
  const auto bc = borel_cantelli_sum(reps, static_cast<std::int64_t>(c.at("bc_site").get<double>()), bc_ns);
  Csv bcsv({"N", "partialSum", "bandLo", "bandHi", "windowFreq", "wilsonLo", "wilsonHi"});
  for (const auto& p : bc) bcsv.row(p.n, p.partial_sum, p.band_lo, p.band_hi, p.window_freq, p.window_band.lo, p.window_band.hi);
  const double frac = static_cast<double>(stable_runs) / static_cast<double>(reps.size());
  json md = meta("stabilize", c);
  md["stableAfter"] = stable_after;
  md["stableRuns"] = stable_runs;
  md["stableFraction"] = frac;
  if (bc.size() >= 2) md["bcIncrease"] = bc.back().partial_sum - bc.front().partial_sum;
  return finish("stabilize", c, md, {{"stabilize.csv", csv.str()}, {"stabilize_bc.csv", bcsv.str()}}, frac, true,
                "stable in " + std::to_string(stable_runs) + "/" + std::to_string(reps.size()) + " runs after step " +
                    std::to_string(stable_after));
}

CommandResult cmd_counterexample(const json& c, unsigned threads) {
  const auto m = counterexample_measure();
  WalkOptions opt;
  opt.steps = count(c, "steps");
  opt.snapshot_ratio = 2.0;
  opt.keep_final_perm = false;
  opt.track_range = false;
  opt.change_log_cap = 1u << 16;
  const WalkEngine<IntLine> engine(m, SiteWindow<IntLine>::interval(0, 0), opt);
  const std::uint64_t seed = count(c, "seed");
  auto reps = parallel_map<TrajectoryReport<IntLine>>(count(c, "traj"), threads,
                                                      [&](std::size_t i) { return engine.run(trajectory_rng(seed, i)); });
  const auto kmin = count(c, "kmin"), kmax = count(c, "kmax");
  Csv csv({"traj", "changes", "lastChange", "windowsHit", "allWindows"});
  std::uint64_t full = 0;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const auto& rec = reps[i].stabilization.front();
    std::uint64_t hit = 0;
    for (auto k = kmin; k <= kmax; ++k) hit += rec.dyadic[k] > 0;
    const bool all = hit == kmax - kmin + 1;
    full += all;
    csv.row(i, rec.changes, rec.last_change, hit, all);
  }
  std::vector<std::uint64_t> ns;
  for (auto k = kmin; k <= kmax + 1; ++k) ns.push_back(std::uint64_t{1} << k);
  const auto bc = borel_cantelli_sum(reps, std::int64_t{0}, ns);
  Csv bcsv({"N", "partialSum", "bandLo", "bandHi", "windowFreq", "wilsonLo", "wilsonHi"});
  double min_gain = INFINITY;
  for (std::size_t j = 0; j < bc.size(); ++j) {
    const auto& p = bc[j];
    bcsv.row(p.n, p.partial_sum, p.band_lo, p.band_hi, p.window_freq, p.window_band.lo, p.window_band.hi);
    if (j > 0) min_gain = std::min(min_gain, p.partial_sum - bc[j - 1].partial_sum);
  }
  // Tail law of the r_N sampler.
  const auto draws = count(c, "tail_draws");
  const auto tail_ns = counts(c, "tail_ns");
  std::vector<std::uint64_t> at_least(tail_ns.size(), 0);
  CounterRng rng(PhiloxKey{seed, ~std::uint64_t{0}});
  for (std::uint64_t i = 0; i < draws; ++i) {
    const auto n = sample_tail_index(rng);
    for (std::size_t j = 0; j < tail_ns.size(); ++j) at_least[j] += n >= tail_ns[j];
  }
  Csv tcsv({"n", "empirical", "expected", "stderr", "zscore"});
  double worst_z = 0;
  for (std::size_t j = 0; j < tail_ns.size(); ++j) {
    const double p = 1.0 / static_cast<double>(tail_ns[j]);
    const double e = static_cast<double>(at_least[j]) / static_cast<double>(draws);
    const double se = std::sqrt(p * (1 - p) / static_cast<double>(draws));
    const double zs = (e - p) / se;
    worst_z = std::max(worst_z, std::fabs(zs));
    tcsv.row(tail_ns[j], e, p, se, zs);
  }
  const auto terms = count(c, "series_terms");
  const auto m1 = moment(m, Rational(1), terms);
  const auto mh = moment(m, Rational(1, 2), terms);
  const auto sm = support_moment(m, Rational(1), terms);
  const double frac = static_cast<double>(full) / static_cast<double>(reps.size());
  json md = meta("counterexample", c);
  md["allWindowsRuns"] = full;
  md["allWindowsFraction"] = frac;
  md["minGainPerDoubling"] = min_gain;
  md["tailWorstZ"] = worst_z;
  md["moment1"] = {{"finite", m1.finite}, {"partialSumLower", static_cast<double>(m1.partial_sum)},
                   {"partialSum3n", static_cast<double>(m1.partial_sum_3n)}, {"terms", m1.series_terms}};
  md["momentHalf"] = {{"finite", mh.finite}, {"partialSumLower", static_cast<double>(mh.partial_sum)},
                      {"partialSum3n", static_cast<double>(mh.partial_sum_3n)}};
  md["supportMoment1"] = {{"finite", sm.finite}, {"partialSum", static_cast<double>(sm.partial_sum)}};
  return finish("counterexample", c, md,
                {{"counterexample.csv", csv.str()}, {"counterexample_bc.csv", bcsv.str()}, {"counterexample_tail.csv", tcsv.str()}},
                frac, true,
                "site 0 changed in every window k=" + std::to_string(kmin) + ".." + std::to_string(kmax) + " in " +
                    std::to_string(full) + "/" + std::to_string(reps.size()) + " runs");
}

CommandResult cmd_drift(const json& c, unsigned threads) {
  const IntLine z;
  const auto m = measure_from_json(z, c.at("measure"));
  WalkOptions opt;
  opt.steps = count(c, "nmax");
  opt.upper_proxy = c.at("upper_proxy").get<bool>();
  opt.track_range = false;
  opt.keep_final_perm = false;
  const WalkEngine<IntLine> engine(m, {}, opt);
  const std::uint64_t seed = count(c, "seed");
  auto reps = parallel_map<TrajectoryReport<IntLine>>(count(c, "traj"), threads,
                                                      [&](std::size_t i) { return engine.run(trajectory_rng(seed, i)); });
  const auto lo = count(c, "nmin"), hi = count(c, "nmax");
  const auto lower = drift_exponent(reps, DriftProxy::Lower, lo, hi);
  std::optional<SlopeFit> upper;
  if (opt.upper_proxy) upper = drift_exponent(reps, DriftProxy::Upper, lo, hi);
  Csv csv({"n", "meanLower", "meanUpper"});
  for (std::size_t j = 0; j < lower.points.size(); ++j) {
    csv.row(lower.points[j].n, lower.points[j].mean, upper ? num(upper->points[j].mean) : std::string());
  }
  json md = meta("drift", c);
  md["slopeLower"] = lower.slope;
  md["stderrLower"] = lower.stderr_slope;
  if (upper) {
    md["slopeUpper"] = upper->slope;
    md["stderrUpper"] = upper->stderr_slope;
  }
  return finish("drift", c, md, {{"drift.csv", csv.str()}}, lower.slope, true,
                "lower-proxy slope " + num(lower.slope) + (upper ? ", upper-proxy slope " + num(upper->slope) : ""));
}

template <class G>
CommandResult entropy_on(const G& g, const json& c, unsigned threads) {
  const auto m = measure_from_json(g, c.at("measure"));
  const auto rows = exact_entropy(m, count(c, "exact_nmax"));
  Csv csv({"n", "entropy", "perStep", "method", "support", "samples", "biasNote"});
  for (const auto& r : rows) csv.row(r.n, r.entropy, r.entropy / static_cast<double>(r.n), "exact", r.support, "", "");
  const std::uint64_t seed = count(c, "seed");
  std::vector<double> per_step;
  for (auto n : counts(c, "plugin_ns")) {
    const auto r = plugin_entropy(m, n, count(c, "samples"), seed, threads);
    per_step.push_back(r.entropy / static_cast<double>(n));
    csv.row(r.n, r.entropy, per_step.back(), "plugin", r.support, *r.samples, *r.bias_note);
  }
  const auto bad = subadditivity_violations(rows);
  bool decreasing = true;
  for (std::size_t i = 1; i < per_step.size(); ++i) decreasing = decreasing && per_step[i] < per_step[i - 1];
  json md = meta("entropy", c);
  md["subadditivityViolations"] = bad.size();
  md["pluginPerStepDecreasing"] = decreasing;
  md["note"] = "plug-in rows are biased low; biasNote = (support - 1) / (2 samples)";
  const double gate = rows.empty() ? 0 : rows.back().entropy / static_cast<double>(rows.back().n);
  return finish("entropy", c, md, {{"entropy.csv", csv.str()}}, gate, bad.empty(),
                std::to_string(rows.size()) + " exact rows, " + std::to_string(bad.size()) + " subadditivity violations");
}

CommandResult cmd_entropy(const json& c, unsigned threads) {
  const auto d = BaseGroupDescriptor::from_json(c.at("group"));
  switch (d.kind) {
    case GroupKind::Z:
      return entropy_on(IntLine{}, c, threads);
    case GroupKind::Zd:
      return entropy_on(Lattice(d.d), c, threads);
    case GroupKind::Free:
      return entropy_on(FreeGroup(d.k), c, threads);
  }
  throw ConfigError({"group: unsupported kind"});
}

CommandResult cmd_confine(const json& c, unsigned threads) {
  const IntLine z;
  const auto m = measure_from_json(z, c.at("measure"));
  const std::uint64_t seed = count(c, "seed");
  const double eps = c.at("epsilon").get<double>();
  const std::uint64_t n = count(c, "n");
  double c1 = c.at("c1").get<double>();
  double d = c.at("d").get<double>();
  json pilot = json::object();
  if (c1 <= 0 || d <= 0) {
    WalkOptions po;
    po.steps = count(c, "pilot_steps");
    po.track_range = false;
    po.keep_final_perm = false;
    const auto r = run_walk(m, {}, po, CounterRng(PhiloxKey{seed, ~std::uint64_t{0}}));
    const double steps = static_cast<double>(po.steps);
    if (c1 <= 0) c1 = static_cast<double>(r.final_pos) / steps;
    if (d <= 0) d = 2 * static_cast<double>(r.series.back().increment_disp) / steps;
    pilot = {{"steps", po.steps}, {"c1", c1}, {"d", d}};
  }
  if (!(c1 > 0)) throw AnalysisError("pilot drift C1 = " + num(c1) + " is not positive; confinement needs a positive drift");
  const double d_prime = 4 * d / (c1 + 2 * eps);
  WalkOptions opt;
  opt.steps = 2 * n;
  opt.checkpoints = {n};
  opt.track_range = false;
  opt.keep_final_perm = false;
  opt.snapshot_ratio = 2.0;
  const WalkEngine<IntLine> engine(m, {}, opt);
  auto checks = parallel_map<ConfinementCheck>(count(c, "traj"), threads, [&](std::size_t i) {
    return check_confinement(engine.run(trajectory_rng(seed, i)), eps, c1, d, d_prime, n);
  });
  Csv csv({"traj", "n", "posInBand", "tailIdentity", "headStable", "windowDispOK", "inQn", "windowDisp", "windowBound"});
  std::uint64_t in = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const auto& k = checks[i];
    in += k.in_qn;
    csv.row(i, k.n, k.pos_in_band, k.tail_identity, k.head_stable, k.window_disp_ok, k.in_qn, k.window_disp, k.window_bound);
  }
  const auto bound = qn_size_bound({eps, c1, d_prime, n});
  const double frac = static_cast<double>(in) / static_cast<double>(checks.size());
  json md = meta("confine", c);
  md["pilot"] = pilot;
  md["c1"] = c1;
  md["d"] = d;
  md["dPrime"] = d_prime;
  md["epsTilde"] = 4 * eps / (c1 + 2 * eps);
  md["inQnFraction"] = frac;
  md["qn"] = {{"rounding", "e = floor(epsilon n), balls = floor(dPrime e)"},
              {"e", bound.e},
              {"balls", bound.balls},
              {"boxes", bound.boxes},
              {"logOverN", bound.log_over_n},
              {"limit", qn_log_limit(eps, d_prime)},
              {"fittedC2", bound.log_over_n / eps}};
  return finish("confine", c, md, {{"confine.csv", csv.str()}}, frac, true,
                "inQn in " + std::to_string(in) + "/" + std::to_string(checks.size()) + " runs");
}

CommandResult cmd_recurrent_z(const json& c, unsigned threads) {
  const IntLine z;
  const auto m = measure_from_json(z, c.at("measure"));
  const std::uint64_t seed = count(c, "seed");
  Csv csv({"n", "empirical", "stderr", "bound", "lambda", "pass", "logAn"});
  std::uint64_t passed = 0;
  const auto ns = counts(c, "ns");
  for (auto n : ns) {
    const auto r = maximal_inequality_check(m, n, count(c, "traj"), seed, threads);
    passed += r.pass;
    csv.row(n, r.empirical, r.stderr_empirical, r.bound, r.lambda, r.pass, r.log_an);
  }
  json md = meta("recurrent-z", c);
  md["passed"] = passed;
  const double frac = static_cast<double>(passed) / static_cast<double>(ns.size());
  return finish("recurrent-z", c, md, {{"recurrent-z.csv", csv.str()}}, frac, true,
                std::to_string(passed) + "/" + std::to_string(ns.size()) + " n values within the Kolmogorov bound");
}

CommandResult cmd_recurrent_z2(const json& c, unsigned threads) {
  const auto d = BaseGroupDescriptor::from_json(c.at("group"));
  if (d.kind != GroupKind::Zd) throw AnalysisError("recurrent-z2 needs a Zd group");
  const Lattice lat(d.d);
  const auto m = measure_from_json(lat, c.at("measure"));
  const auto pts = range_asymptotics(m, counts(c, "ns"), count(c, "traj"), count(c, "seed"), threads);
  Csv csv({"n", "meanRange", "statistic", "stderr"});
  for (const auto& p : pts) csv.row(p.n, p.mean_range, p.statistic, p.stderr_statistic);
  double change = 0;
  if (pts.size() >= 2) {
    const double a = pts[pts.size() - 2].statistic, b = pts.back().statistic;
    change = std::fabs(b - a) / a;
  }
  json md = meta("recurrent-z2", c);
  md["relativeChangeLastTwo"] = change;
  return finish("recurrent-z2", c, md, {{"recurrent-z2.csv", csv.str()}}, change, pts.back().statistic > 0,
                "R_n log n / n = " + num(pts.back().statistic) + ", relative change " + num(change));
}

CommandResult cmd_qi_check(const json& c, unsigned) {
  const auto r = qi_constants(static_cast<int>(count(c, "d")), static_cast<int>(count(c, "m")),
                              static_cast<unsigned>(count(c, "radius")));
  Csv csv({"d", "m", "radius", "ballSize", "maxRatio", "paperC", "boundViolations", "trivialViolations", "injective",
           "cosetsPreserved"});
  csv.row(count(c, "d"), count(c, "m"), r.radius, r.ball_size, r.max_ratio, r.qi_c, r.bound_violations,
          r.trivial_violations, r.injective, r.cosets_preserved);
  const bool ok = r.max_ratio <= r.qi_c && r.bound_violations == 0 && r.trivial_violations == 0 && r.injective &&
                  r.cosets_preserved;
  json md = meta("qi-check", c);
  md["maxRatio"] = r.max_ratio;
  md["paperC"] = r.qi_c;
  return finish("qi-check", c, md, {{"qi-check.csv", csv.str()}}, r.max_ratio, ok,
                "maxRatio " + num(r.max_ratio) + " vs C = " + num(r.qi_c));
}

CommandResult cmd_k_example(const json& c, unsigned threads) {
  const IntLine z;
  const int mm = static_cast<int>(count(c, "M"));
  const auto m = sigma_measure(mm, parse_rational(c.at("bias").get<std::string>()));
  WalkOptions opt;
  opt.steps = count(c, "steps");
  opt.track_range = false;
  opt.keep_final_perm = false;
  opt.snapshot_ratio = 2.0;
  const auto sites = window_sites(c.at("window"));
  const WalkEngine<IntLine> engine(m, SiteWindow<IntLine>{sites, std::nullopt}, opt);
  const std::uint64_t seed = count(c, "seed");
  auto reps = parallel_map<TrajectoryReport<IntLine>>(count(c, "traj"), threads,
                                                      [&](std::size_t i) { return engine.run(trajectory_rng(seed, i)); });
  const Rational drift = projection_moments(m).mean[0];
  const std::int64_t expected_shift = drift > 0 ? mm : -mm;
  Csv csv({"traj", "site", "value", "lastChange", "matchesShift"});
  std::uint64_t mismatches = 0, disagreements = 0;
  bool positions_ok = true;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    for (const auto& r : reps[i].stabilization) {
      const bool ok = r.value == r.site + expected_shift;
      mismatches += !ok;
      csv.row(i, r.site, r.value, r.last_change, ok);
    }
    if (reps[i].final_pos % (mm + 1) != 0) positions_ok = false;
    if (i > 0) disagreements += limit_compare(z, reps[0], reps[i], std::span<const std::int64_t>(sites)).disagree;
  }
  const auto gate = k_growth_gate(mm, 3, static_cast<unsigned>(count(c, "radius")) - 1);
  const auto std_sizes = ball_growth(z, standard_generators(z), 6);
  const double std_ratio = min_growth_ratio(std_sizes, 2, 5);
  Csv gcsv({"n", "ballK", "ballStd"});
  for (std::size_t n = 0; n < gate.sizes.size(); ++n) {
    gcsv.row(n, gate.sizes[n], n < std_sizes.size() ? std::to_string(std_sizes[n]) : std::string());
  }
  json md = meta("k-example", c);
  md["expectedShift"] = expected_shift;
  md["mismatches"] = mismatches;
  md["disagreements"] = disagreements;
  md["positionsDivisible"] = positions_ok;
  md["growth"] = {{"increments", gate.increments}, {"maxIncrement", gate.max_increment}, {"bound", gate.bound},
                  {"pass", gate.pass}, {"stdMinRatio", std_ratio}};
  const bool ok = mismatches == 0 && disagreements == 0 && positions_ok && gate.pass && std_ratio >= 1.5;
  return finish("k-example", c, md, {{"k-example.csv", csv.str()}, {"k-growth.csv", gcsv.str()}},
                static_cast<double>(mismatches + disagreements), ok,
                std::to_string(mismatches) + " sites off x+" + std::to_string(expected_shift) + ", " +
                    std::to_string(disagreements) + " disagreements, growth increment <= " + std::to_string(gate.max_increment));
}

CommandResult cmd_free_example(const json& c, unsigned threads) {
  const FreeGroup g(static_cast<int>(count(c, "k")));
  const auto m = free_delta(g.rank);
  const auto ray = count(c, "ray");
  WalkOptions opt;
  opt.steps = count(c, "steps");
  opt.track_range = false;
  opt.keep_final_perm = false;
  opt.snapshot_ratio = 2.0;
  opt.path_prefix = ray + 2;
  SiteWindow<FreeGroup> w;
  w.radius = ray + 1;
  const WalkEngine<FreeGroup> engine(m, w, opt);
  const std::uint64_t seed = count(c, "seed");
  auto checks = parallel_map<RayCheck>(count(c, "traj"), threads, [&](std::size_t i) {
    return free_ray_check(engine.run(trajectory_rng(seed, i)), ray);
  });
  Csv csv({"traj", "rayOk", "identityUnreached", "firstFailure"});
  std::uint64_t good = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const auto& k = checks[i];
    good += k.ray_ok && k.identity_unreached;
    csv.row(i, k.ray_ok, k.identity_unreached, k.ray_ok ? std::string() : std::to_string(k.first_failure));
  }
  const double frac = static_cast<double>(good) / static_cast<double>(checks.size());
  json md = meta("free-example", c);
  md["passFraction"] = frac;
  return finish("free-example", c, md, {{"free-example.csv", csv.str()}}, frac, true,
                "ray and preimage checks pass in " + std::to_string(good) + "/" + std::to_string(checks.size()) + " runs");
}

CommandResult cmd_bfs(const json& c, unsigned) {
  const IntLine z;
  const std::string which = c.at("gens").get<std::string>();
  const auto radius = static_cast<unsigned>(count(c, "radius"));
  GeneratingSet<IntLine> gens;
  if (which == "std") {
    gens = standard_generators(z);
  } else if (which == "K") {
    gens = k_subgroup_gens(static_cast<int>(count(c, "M")));
  } else {
    throw ConfigError({"gens: expected \"std\" or \"K\", got \"" + which + "\""});
  }
  const auto ball = bfs_ball(z, gens, radius, count(c, "budget"));
  const auto sizes = ball.ball_sizes();
  std::uint64_t violations = 0;
  if (which == "std") {
    for (const auto& [e, dist] : ball.distance) {
      const auto lo = length_lower(z, e);
      const auto up = length_upper(e).length;
      if (lo > dist || dist > up || e.perm.support_size() > 2 * std::uint64_t{dist}) ++violations;
    }
  }
  Csv csv({"radius", "sphere", "ball"});
  for (std::size_t r = 0; r < sizes.size(); ++r) csv.row(r, ball.sphere_sizes[r], sizes[r]);
  json md = meta("bfs", c);
  md["sandwichViolations"] = violations;
  return finish("bfs", c, md, {{"bfs.csv", csv.str()}}, static_cast<double>(sizes.back()), violations == 0,
                "|B(" + std::to_string(radius) + ")| = " + std::to_string(sizes.back()) + ", " +
                    std::to_string(violations) + " sandwich violations");
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> p)
    : std::invalid_argument("invalid configuration: " + join(p, "; ")), problems(std::move(p)) {}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [k, s] : schemas()) v.push_back(k);
    return v;
  }();
  return names;
}

json normalize_config(const std::string& command, const json& config) {
  auto it = schemas().find(command);
  if (it == schemas().end()) throw ConfigError({"unknown command '" + command + "'"});
  if (!config.is_object()) throw ConfigError({"config must be a JSON object"});
  std::vector<std::string> problems;
  json out = json::object();
  for (const auto& [key, v] : config.items()) {
    if (!it->second.count(key)) problems.push_back(key + ": not a parameter of " + command);
  }
  for (const auto& [key, field] : it->second) {
    const json v = config.contains(key) ? config.at(key) : field.fallback;
    auto bad = [&](const std::string& why) { problems.push_back(key + ": " + why + " (got " + v.dump() + ")"); };
    switch (field.kind) {
      case Field::Count:
        if (!integral_number(v)) bad("expected a non-negative integer");
        else if (key != "seed" && key != "stable_after" && key != "kmin" && count(json{{key, v}}, key.c_str()) == 0 &&
                 key != "radius")
          bad("must be positive");
        break;
      case Field::Real:
        if (!v.is_number()) bad("expected a number");
        else if (key == "epsilon" && !(v.get<double>() > 0)) bad("must be positive");
        else if ((key == "c1" || key == "d") && v.get<double>() < 0) bad("must be non-negative");
        break;
      case Field::Text:
        if (!v.is_string()) bad("expected a string");
        break;
      case Field::Bool:
        if (!v.is_boolean()) bad("expected true or false");
        break;
      case Field::Window:
        if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer() ||
            v[0].get<std::int64_t>() > v[1].get<std::int64_t>())
          bad("expected [lo, hi] with lo <= hi");
        break;
      case Field::List:
        if (!v.is_array() || v.empty()) {
          bad("expected a non-empty list of positive integers");
        } else {
          for (const auto& x : v) {
            if (!integral_number(x) || (x.is_number_float() ? x.get<double>() == 0 : x.get<std::uint64_t>() == 0)) {
              bad("expected a non-empty list of positive integers");
              break;
            }
          }
        }
        break;
      case Field::Object:
        if (!v.is_object()) bad("expected a JSON object");
        break;
      case Field::Rational:
        try {
          const Rational r = parse_rational(v.get<std::string>());
          if (r <= 0 || r >= 1) bad("must lie strictly between 0 and 1");
        } catch (const std::exception&) {
          bad("expected a rational such as \"3/4\"");
        }
        break;
    }
    out[key] = v;
    if (field.kind == Field::Count && integral_number(v)) out[key] = count(out, key.c_str());
    if (field.kind == Field::List && v.is_array()) {
      json canon = json::array();
      for (const auto& x : v) canon.push_back(integral_number(x) ? json(count(json{{"x", x}}, "x")) : x);
      out[key] = canon;
    }
  }
  if (command == "counterexample" && problems.empty() && count(out, "kmin") > count(out, "kmax")) {
    problems.push_back("kmin: must not exceed kmax");
  }
  if (command == "counterexample" && problems.empty() && count(out, "kmax") > 62) problems.push_back("kmax: at most 62");
  if (command == "drift" && problems.empty() && count(out, "nmin") >= count(out, "nmax")) {
    problems.push_back("nmin: must be below nmax");
  }
  if (command == "k-example" && problems.empty() && count(out, "radius") < 4) problems.push_back("radius: at least 4");
  if (command == "stabilize" && problems.empty()) {
    for (auto n : counts(out, "bc_ns")) {
      if (n > count(out, "steps")) problems.push_back("bc_ns: " + std::to_string(n) + " exceeds steps");
    }
  }
  if (!problems.empty()) throw ConfigError(problems);
  // Group-dependent validation happens by construction.
  try {
    if (out.contains("group")) BaseGroupDescriptor::from_json(out.at("group"));
  } catch (const std::exception& e) {
    throw ConfigError({std::string("group: ") + e.what()});
  }
  if (out.contains("measure")) {
    try {
      const auto g = out.contains("group") ? BaseGroupDescriptor::from_json(out.at("group")) : BaseGroupDescriptor{};
      const json& mj = out.at("measure");
      switch (g.kind) {
        case GroupKind::Z: measure_from_json(IntLine{}, mj); break;
        case GroupKind::Zd: measure_from_json(Lattice(g.d), mj); break;
        case GroupKind::Free: measure_from_json(FreeGroup(g.k), mj); break;
      }
    } catch (const std::exception& e) {
      throw ConfigError({std::string("measure: ") + e.what()});
    }
  }
  return out;
}

std::string config_hash(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

CommandResult run_command(const std::string& command, const json& config, unsigned threads) {
  const json c = normalize_config(command, config);
  static const std::map<std::string, std::function<CommandResult(const json&, unsigned)>> table = {
      {"simulate", cmd_simulate},
      {"stabilize", cmd_stabilize},
      {"counterexample", cmd_counterexample},
      {"drift", cmd_drift},
      {"entropy", cmd_entropy},
      {"confine", cmd_confine},
      {"recurrent-z", cmd_recurrent_z},
      {"recurrent-z2", cmd_recurrent_z2},
      {"qi-check", cmd_qi_check},
      {"k-example", cmd_k_example},
      {"free-example", cmd_free_example},
      {"bfs", cmd_bfs}};
  return table.at(command)(c, threads);
}

std::vector<std::string> parameter_names(const std::string& command) {
  auto it = schemas().find(command);
  if (it == schemas().end()) throw ConfigError({"unknown command '" + command + "'"});
  std::vector<std::string> out;
  for (const auto& [k, f] : it->second) out.push_back(k);
  return out;
}

json parse_override(const std::string& command, const std::string& key, const std::string& value) {
  const auto& schema = schemas().at(command);
  auto it = schema.find(key);
  if (it == schema.end()) throw ConfigError({key + ": not a parameter of " + command});
  try {
    switch (it->second.kind) {
      case Field::Count:
        return parse_count(value);
      case Field::Real: {
        std::size_t used = 0;
        const double d = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return d;
      }
      case Field::Text:
      case Field::Rational:
        return value;
      case Field::Bool:
        if (value == "true" || value == "1") return true;
        if (value == "false" || value == "0") return false;
        throw std::invalid_argument(value);
      case Field::Window: {
        const auto [lo, hi] = parse_window(value);
        return json::array({lo, hi});
      }
      case Field::List: {
        json arr = json::array();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) arr.push_back(parse_count(item));
        return arr;
      }
      case Field::Object:
        if (key == "measure") {
          if (!value.empty() && value.front() == '{') return json::parse(value);
          return json{{"name", value}};
        }
        if (key == "group") {
          if (!value.empty() && value.front() == '{') return json::parse(value);
          if (value == "Z") return json{{"kind", "Z"}};
          const auto colon = value.find(':');
          const std::string kind = value.substr(0, colon);
          const int n = colon == std::string::npos ? 0 : std::stoi(value.substr(colon + 1));
          if (kind == "Zd") return json{{"kind", "Zd"}, {"d", n}};
          if (kind == "Free") return json{{"kind", "Free"}, {"k", n}};
          throw std::invalid_argument(value);
        }
        return json::parse(value);
    }
  } catch (const std::exception&) {
  }
  throw ConfigError({key + ": cannot parse '" + value + "'"});
}

std::pair<std::int64_t, std::int64_t> parse_window(const std::string& s) {
  const auto dots = s.find("..");
  if (dots == std::string::npos) throw ConfigError({"window: expected LO..HI, got '" + s + "'"});
  try {
    std::size_t used = 0;
    const std::int64_t lo = std::stoll(s.substr(0, dots), &used);
    if (used != dots) throw std::invalid_argument(s);
    const std::string rest = s.substr(dots + 2);
    const std::int64_t hi = std::stoll(rest, &used);
    if (used != rest.size()) throw std::invalid_argument(s);
    if (lo > hi) throw std::invalid_argument(s);
    return {lo, hi};
  } catch (const std::exception&) {
    throw ConfigError({"window: expected LO..HI with LO <= HI, got '" + s + "'"});
  }
}

std::uint64_t parse_count(const std::string& s) {
  try {
    const auto caret = s.find('^');
    if (caret != std::string::npos) {
      const auto base = std::stoull(s.substr(0, caret));
      const auto e = std::stoull(s.substr(caret + 1));
      std::uint64_t r = 1;
      for (std::uint64_t i = 0; i < e; ++i) {
        if (__builtin_mul_overflow(r, base, &r)) throw std::out_of_range(s);
      }
      return r;
    }
    std::size_t used = 0;
    const long double v = std::stold(s, &used);
    if (used != s.size() || v < 0 || v != std::floor(v) || v > 1.8e19L) throw std::invalid_argument(s);
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw ConfigError({"expected a non-negative integer such as 1000, 1e6 or 2^20, got '" + s + "'"});
  }
}

}  // namespace lampshuffler
