#include "crowdscore/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace crowdscore {

double Scenario::delta() const {
  if (kind != Kind::kEquallySpaced)
    throw InvalidConfigError("scenario: delta() only applies to equally spaced qualities");
  return 2.0 / (n - 1);
}

double Scenario::noise_std() const {
  return kind == Kind::kEquallySpaced ? delta() / ratio : 1.0;
}

QualityPrior Scenario::quality_prior() const {
  if (kind == Kind::kEquallySpaced) return QualityPrior::equally_spaced(n, -1.0, 1.0);
  return QualityPrior::gaussian(n, 0.0, ratio * noise_std());
}

std::string Scenario::name() const {
  std::ostringstream out;
  if (kind == Kind::kEquallySpaced)
    out << "equally_spaced(n=" << n << ", delta/sigma=" << ratio << ")";
  else
    out << "gaussian(n=" << n << ", sigma_a/sigma=" << ratio << ")";
  return out.str();
}

void Scenario::validate() const {
  if (n < 2) throw InvalidConfigError("scenario: n must be >= 2");
  if (!(ratio > 0.0)) throw InvalidConfigError("scenario: ratio must be > 0");
}

Scenario Scenario::parse(const std::string& text) {
  Scenario s;
  const auto c1 = text.find(':');
  const auto c2 = text.find(':', c1 == std::string::npos ? c1 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw InvalidConfigError("scenario must be kind:N:ratio, got '" + text + "'");
  const std::string kind = text.substr(0, c1);
  if (kind == "equally_spaced") s.kind = Kind::kEquallySpaced;
  else if (kind == "gaussian") s.kind = Kind::kGaussian;
  else throw InvalidConfigError("unknown scenario kind '" + kind + "'");
  try {
    size_t pos = 0;
    s.n = std::stoi(text.substr(c1 + 1, c2 - c1 - 1), &pos);
    s.ratio = std::stod(text.substr(c2 + 1), &pos);
  } catch (const std::exception&) {
    throw InvalidConfigError("scenario must be kind:N:ratio, got '" + text + "'");
  }
  s.validate();
  return s;
}

void ExperimentConfig::validate() const {
  scenario.validate();
  workers.validate();
  if (trials < 1) throw InvalidConfigError("trials must be >= 1");
  if (sweep.empty()) throw InvalidConfigError("policy.pi_th sweep must not be empty");
  for (double v : sweep)
    if (!(v >= 0.0 && v < 1.0))
      throw InvalidConfigError("policy.pi_th values must lie in [0, 1)");
  for (size_t i = 1; i < sweep.size(); ++i)
    if (!(sweep[i] < sweep[i - 1]))
      throw InvalidConfigError("policy.pi_th sweep must be strictly descending");
  const bool bounded = algo.policy.bounded();
  for (double v : sweep) {
    if (v == 0.0 && !bounded)
      throw InvalidConfigError("policy.pi_th = 0 needs a bounded budget to terminate");
    if (v == 0.0 && algo.eliminates())
      throw InvalidConfigError("policy.pi_th = 0 is incompatible with eliminating variants");
  }
  AlgorithmSpec probe = algo;
  probe.policy.pi_th_a = sweep.front();
  probe.policy.pi_th_e = sweep.front();
  probe.validate(scenario.n);
}

// --- config text -----------------------------------------------------------

void ConfigText::set(const std::string& key, const std::string& value) {
  values[key] = value;
  lines[key] = -1;
}

ConfigText ConfigText::parse(const std::string& text, const std::string& origin) {
  ConfigText out;
  out.origin = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidConfigError(origin + ":" + std::to_string(lineno) +
                               ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw InvalidConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    out.values[key] = value;
    out.lines[key] = lineno;
  }
  return out;
}

ConfigText ConfigText::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfigError(path + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

namespace {

class ConfigReader {
 public:
  explicit ConfigReader(const ConfigText& text) : text_(text) {}

  bool has(const std::string& key) const { return text_.values.count(key) != 0; }

  std::string raw(const std::string& key) const {
    auto it = text_.values.find(key);
    if (it == text_.values.end()) fail(key, "missing required key");
    used_.insert(key);
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? raw(key) : fallback;
  }

  double get_double(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return parse_double(key, raw(key));
  }

  long get_long(const std::string& key, long fallback) const {
    if (!has(key)) return fallback;
    const std::string v = raw(key);
    try {
      size_t pos = 0;
      const long out = std::stol(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      fail(key, "expected an integer, got '" + v + "'");
    }
    return fallback;
  }

  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const std::string v = raw(key);
    try {
      size_t pos = 0;
      const unsigned long long out = std::stoull(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      fail(key, "expected an unsigned integer, got '" + v + "'");
    }
    return fallback;
  }

  std::vector<double> get_double_list(const std::string& key) const {
    std::vector<double> out;
    std::string v = raw(key);
    std::replace(v.begin(), v.end(), ',', ' ');
    std::istringstream in(v);
    std::string tok;
    while (in >> tok) out.push_back(parse_double(key, tok));
    if (out.empty()) fail(key, "expected a list of numbers");
    return out;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    auto it = text_.lines.find(key);
    const std::string where =
        it != text_.lines.end() && it->second > 0 ? ":" + std::to_string(it->second) : "";
    throw InvalidConfigError(text_.origin + where + ": field '" + key + "': " + message);
  }

  void check_unknown(const std::vector<std::string>& known) const {
    for (const auto& [key, value] : text_.values) {
      (void)value;
      if (std::find(known.begin(), known.end(), key) == known.end())
        fail(key, "unknown key");
    }
  }

 private:
  double parse_double(const std::string& key, const std::string& v) const {
    try {
      size_t pos = 0;
      const double out = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      fail(key, "expected a number, got '" + v + "'");
    }
    return 0.0;
  }

  const ConfigText& text_;
  mutable std::set<std::string> used_;
};

const std::vector<std::string> kKnownKeys = {
    "scenario.kind",      "scenario.n",          "scenario.ratio",
    "algo.variant",       "algo.bias_mode",      "algo.uniform_evals",
    "algo.tournament_group", "algo.majority_workers",
    "policy.pi_th",       "policy.k",            "policy.randomized_ties",
    "workers.o_max",      "workers.bias_over_sigma", "workers.bias_mean",
    "workers.variance_spread", "workers.supply",
    "quantizer.kind",     "quantizer.levels",    "quantizer.dist",
    "quantizer.gamma",    "quantizer.lo",        "quantizer.hi",
    "quantizer.grid",
    "trials",             "seed",                "output",
};

Variant parse_variant(const ConfigReader& r, const std::string& key, const std::string& v) {
  if (v == "gke") return Variant::kGKE;
  if (v == "gka") return Variant::kGKA;
  if (v == "gra") return Variant::kGRA;
  if (v == "bgka") return Variant::kBGKA;
  if (v == "bgra") return Variant::kBGRA;
  if (v == "uniform") return Variant::kUniform;
  if (v == "genie") return Variant::kGenieAided;
  if (v == "tournament") return Variant::kTournament;
  if (v == "majority") return Variant::kMajority;
  r.fail(key, "unknown algorithm variant '" + v + "'");
}

}  // namespace

ExperimentConfig build_experiment(const ConfigText& text) {
  ConfigReader r(text);
  r.check_unknown(kKnownKeys);
  ExperimentConfig cfg;

  const std::string kind = r.get_string("scenario.kind", "equally_spaced");
  if (kind == "equally_spaced") cfg.scenario.kind = Scenario::Kind::kEquallySpaced;
  else if (kind == "gaussian") cfg.scenario.kind = Scenario::Kind::kGaussian;
  else r.fail("scenario.kind", "expected 'equally_spaced' or 'gaussian'");
  cfg.scenario.n = static_cast<int>(r.get_long("scenario.n", 16));
  cfg.scenario.ratio = r.get_double("scenario.ratio", 2.0);
  cfg.scenario.validate();

  cfg.algo.variant = parse_variant(r, "algo.variant", r.get_string("algo.variant", "gka"));
  const std::string bias_mode = r.get_string("algo.bias_mode", "none");
  if (bias_mode == "none") cfg.algo.bias_mode = BiasMode::kNone;
  else if (bias_mode == "estimate") cfg.algo.bias_mode = BiasMode::kEstimate;
  else if (bias_mode == "ignore") cfg.algo.bias_mode = BiasMode::kIgnore;
  else r.fail("algo.bias_mode", "expected none, estimate or ignore");
  cfg.algo.uniform_evals = static_cast<int>(r.get_long("algo.uniform_evals", 1));
  cfg.algo.tournament_group = static_cast<int>(r.get_long("algo.tournament_group", 2));
  cfg.algo.majority_workers = static_cast<int>(r.get_long("algo.majority_workers", 1));

  cfg.sweep = r.get_double_list("policy.pi_th");
  if (r.has("policy.k")) {
    const double k = r.get_double("policy.k", 0.0);
    if (!(k > 0.0)) r.fail("policy.k", "normalized budget must be > 0");
    cfg.algo.policy.m_max = static_cast<long>(std::llround(k * cfg.scenario.n));
  }
  cfg.algo.policy.randomized_ties = r.get_long("policy.randomized_ties", 0) != 0;

  const double sigma = cfg.scenario.noise_std();
  cfg.workers.noise_std = sigma;
  cfg.workers.bias_std = r.get_double("workers.bias_over_sigma", 0.0) * sigma;
  cfg.workers.bias_mean = r.get_double("workers.bias_mean", 0.0);
  cfg.workers.variance_spread = r.get_double("workers.variance_spread", 0.0);
  cfg.workers.o_max = static_cast<int>(r.get_long("workers.o_max", cfg.scenario.n));
  const long supply = r.get_long("workers.supply", 0);
  if (supply > 0) cfg.workers.supply = static_cast<int>(supply);

  const std::string qkind = r.get_string("quantizer.kind", "none");
  if (qkind != "none") {
    if (qkind != "uniform" && qkind != "lloyd")
      r.fail("quantizer.kind", "expected none, uniform or lloyd");
    const int levels = static_cast<int>(r.get_long("quantizer.levels", 8));
    const std::string dist = r.get_string("quantizer.dist", "III");
    AnswerDist blend = AnswerDist::kWeighted;
    if (dist == "I") blend = AnswerDist::kGeneric;
    else if (dist == "II") blend = AnswerDist::kTopOnly;
    else if (dist == "III") blend = AnswerDist::kWeighted;
    else r.fail("quantizer.dist", "expected I, II or III");
    std::optional<double> lo, hi;
    if (r.has("quantizer.lo")) lo = r.get_double("quantizer.lo", 0.0);
    if (r.has("quantizer.hi")) hi = r.get_double("quantizer.hi", 0.0);
    cfg.algo.quantizer = design_scenario_quantizer(
        cfg.scenario, levels, qkind == "uniform", blend, r.get_double("quantizer.gamma", 0.5),
        cfg.workers.bias_std / sigma, lo, hi,
        static_cast<int>(r.get_long("quantizer.grid", 8192)));
  }

  cfg.trials = static_cast<int>(r.get_long("trials", 1000));
  cfg.master_seed = r.get_seed("seed", 1);
  cfg.output = r.get_string("output", "");

  cfg.validate();
  return cfg;
}

QuantizerSpec design_scenario_quantizer(const Scenario& scenario, int levels, bool uniform,
                                        AnswerDist dist, double gamma, double bias_over_sigma,
                                        std::optional<double> lo, std::optional<double> hi,
                                        int grid_points) {
  scenario.validate();
  const double sigma = scenario.noise_std();
  const double bias_std = bias_over_sigma * sigma;
  if (uniform) {
    double ulo, uhi;
    if (scenario.kind == Scenario::Kind::kEquallySpaced) {
      ulo = -1.0 - 2.0 * sigma;
      uhi = 1.0 + 2.0 * sigma;
    } else {
      const double sa = scenario.ratio * sigma;
      const double spread = 4.0 * std::sqrt(sa * sa + bias_std * bias_std + sigma * sigma);
      ulo = -spread;
      uhi = spread;
    }
    return uniform_design(lo.value_or(ulo), hi.value_or(uhi), levels);
  }
  AnswerDensityConfig dc;
  dc.dist = dist;
  dc.gamma = gamma;
  dc.n_objects = scenario.n;
  dc.noise_std = std::sqrt(sigma * sigma + bias_std * bias_std);
  dc.grid_points = grid_points;
  if (scenario.kind == Scenario::Kind::kEquallySpaced) {
    std::vector<double> lattice(static_cast<size_t>(scenario.n));
    for (int i = 0; i < scenario.n; ++i)
      lattice[static_cast<size_t>(i)] = -1.0 + scenario.delta() * i;
    dc.quality = std::move(lattice);
  } else {
    dc.quality = ScalarPrior::gaussian(0.0, scenario.ratio * sigma);
  }
  return lloyd_design(answer_density(dc), levels).spec;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  return build_experiment(ConfigText::load(path));
}

ExperimentConfig ExperimentConfig::from_text(const std::string& text, const std::string& origin) {
  return build_experiment(ConfigText::parse(text, origin));
}

// --- experiment execution ---------------------------------------------------

WilsonInterval wilson_interval(long successes, long n) {
  if (n <= 0) return {0.0, 1.0};
  const double z = 1.959963984540054;  // 97.5% normal quantile
  const double z2 = z * z;
  const double phat = static_cast<double>(successes) / static_cast<double>(n);
  const double denom = 1.0 + z2 / static_cast<double>(n);
  const double center = (phat + z2 / (2.0 * static_cast<double>(n))) / denom;
  const double half =
      z * std::sqrt(phat * (1.0 - phat) / static_cast<double>(n) +
                    z2 / (4.0 * static_cast<double>(n) * static_cast<double>(n))) /
      denom;
  WilsonInterval out{std::max(0.0, center - half), std::min(1.0, center + half)};
  if (successes == 0) out.lo = 0.0;
  if (successes == n) out.hi = 1.0;
  return out;
}

int harness_thread_count() {
  if (const char* env = std::getenv("CROWDSCORE_THREADS")) {
    const int k = std::atoi(env);
    if (k >= 1) return k;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

struct TrialOutcome {
  bool ok = false;
  bool correct = false;
  long m_total = 0;
  int rounds = 0;
  StopReason reason = StopReason::kNone;
  std::string error;
};

TrialOutcome run_single(const ExperimentConfig& cfg, const AlgorithmSpec& algo,
                        std::uint64_t seed) {
  TrialOutcome out;
  try {
    const ProblemInstance inst = sample_instance(cfg.scenario.quality_prior(), cfg.workers, seed);
    const TrialResult res = run_trial(algo, inst);
    out.ok = true;
    out.correct = res.correct;
    out.m_total = res.m_total;
    out.rounds = res.rounds;
    out.reason = res.stop_reason;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

SweepRow aggregate(const ExperimentConfig& cfg, double pi_th,
                   const std::vector<TrialOutcome>& outcomes) {
  SweepRow row;
  row.pi_th = pi_th;
  row.trials = static_cast<int>(outcomes.size());
  for (const TrialOutcome& t : outcomes) {
    if (!t.ok) {
      row.error = t.error;
      return row;
    }
  }
  long wrong = 0;
  double m_sum = 0.0, rounds_sum = 0.0;
  for (const TrialOutcome& t : outcomes) {
    wrong += t.correct ? 0 : 1;
    m_sum += static_cast<double>(t.m_total);
    rounds_sum += t.rounds;
    switch (t.reason) {
      case StopReason::kBudget: ++row.stop_budget; break;
      case StopReason::kSingleton: ++row.stop_singleton; break;
      case StopReason::kAccuracy: ++row.stop_accuracy; break;
      case StopReason::kStall: ++row.stop_stall; break;
      case StopReason::kNone: break;
    }
  }
  const auto n = static_cast<double>(outcomes.size());
  row.p_e = static_cast<double>(wrong) / n;
  const WilsonInterval ci = wilson_interval(wrong, static_cast<long>(outcomes.size()));
  row.p_e_lo = ci.lo;
  row.p_e_hi = ci.hi;
  row.p_e_ci95 = ci.halfwidth();
  const double m_mean = m_sum / n;
  double var = 0.0;
  for (const TrialOutcome& t : outcomes) {
    const double d = static_cast<double>(t.m_total) - m_mean;
    var += d * d;
  }
  var = outcomes.size() > 1 ? var / (n - 1.0) : 0.0;
  row.m_bar_per_n = m_mean / cfg.scenario.n;
  row.m_bar_ci95 = 1.959963984540054 * std::sqrt(var / n) / cfg.scenario.n;
  row.rounds_mean = rounds_sum / n;
  return row;
}

}  // namespace

SweepResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  SweepResult result;
  const int threads = harness_thread_count();

  for (size_t s = 0; s < cfg.sweep.size(); ++s) {
    const double pi_th = cfg.sweep[s];
    AlgorithmSpec algo = cfg.algo;
    algo.policy.pi_th_a = pi_th;
    algo.policy.pi_th_e = pi_th;

    std::vector<TrialOutcome> outcomes(static_cast<size_t>(cfg.trials));
    auto run_range = [&](std::atomic<int>& next) {
      for (;;) {
        const int t = next.fetch_add(1);
        if (t >= cfg.trials) break;
        const std::uint64_t seed =
            derive_seed(cfg.master_seed, kTrialStream, static_cast<std::uint64_t>(s),
                        static_cast<std::uint64_t>(t));
        outcomes[static_cast<size_t>(t)] = run_single(cfg, algo, seed);
      }
    };

    if (threads <= 1 || cfg.trials < 4) {
      std::atomic<int> next{0};
      run_range(next);
    } else {
      std::atomic<int> next{0};
      std::vector<std::thread> pool;
      const int k = std::min(threads, cfg.trials);
      pool.reserve(static_cast<size_t>(k));
      for (int i = 0; i < k; ++i) pool.emplace_back([&] { run_range(next); });
      for (std::thread& th : pool) th.join();
    }

    result.rows.push_back(aggregate(cfg, pi_th, outcomes));
  }
  return result;
}

std::string SweepResult::to_csv() const {
  std::ostringstream out;
  out << "pi_th,trials,p_e,p_e_ci95,m_bar_per_n,m_bar_ci95,rounds_mean,"
         "stop_budget,stop_singleton,stop_accuracy,stop_stall\n";
  char buf[512];
  for (const SweepRow& row : rows) {
    if (!row.error.empty()) {
      std::snprintf(buf, sizeof(buf), "# pi_th=%.10g error: ", row.pi_th);
      out << buf << row.error << '\n';
      continue;
    }
    std::snprintf(buf, sizeof(buf), "%.10g,%d,%.8g,%.8g,%.8g,%.8g,%.8g,%ld,%ld,%ld,%ld\n",
                  row.pi_th, row.trials, row.p_e, row.p_e_ci95, row.m_bar_per_n, row.m_bar_ci95,
                  row.rounds_mean, row.stop_budget, row.stop_singleton, row.stop_accuracy,
                  row.stop_stall);
    out << buf;
  }
  return out.str();
}

std::vector<std::array<double, 3>> threshold_profile(const ExperimentConfig& cfg) {
  if (!cfg.algo.policy.bounded())
    throw InvalidConfigError("threshold_profile needs a bounded algorithm variant");
  const SweepResult result = run_experiment(cfg);
  std::vector<std::array<double, 3>> rows;
  double prev_m = -kInf;
  double prev_ci = 0.0;
  for (const SweepRow& row : result.rows) {
    if (!row.error.empty())
      throw std::runtime_error("threshold_profile: sweep point failed: " + row.error);
    // The sweep descends in pi_th, so the spent budget may only grow, up to
    // statistical slack.
    if (row.m_bar_per_n + row.m_bar_ci95 + prev_ci < prev_m)
      throw std::runtime_error("threshold_profile: budget not monotone across the sweep");
    prev_m = row.m_bar_per_n;
    prev_ci = row.m_bar_ci95;
    rows.push_back({row.pi_th, row.p_e, row.m_bar_per_n});
  }
  return rows;
}

}  // namespace crowdscore
