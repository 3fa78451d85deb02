#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <locale>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tuma/channel.hpp"
#include "tuma/codebooks.hpp"
#include "tuma/decoders.hpp"
#include "tuma/denoiser.hpp"
#include "tuma/metrics.hpp"
#include "tuma/rng.hpp"
#include "tuma/scenario.hpp"
#include "tuma/types.hpp"

namespace tuma {

// ---------------------------------------------------------------------------
// Interrupt flag and worker pool
// ---------------------------------------------------------------------------

inline std::atomic<bool>& interrupt_flag() {
  static std::atomic<bool> flag{false};
  return flag;
}

inline void request_interrupt() noexcept { interrupt_flag().store(true); }
inline bool interrupt_requested() noexcept { return interrupt_flag().load(); }

/// Worker count: hardware concurrency, capped by TUMA_THREADS when set.
inline int worker_count() {
  int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("TUMA_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) workers = std::min(workers, cap);
  }
  return workers;
}

/// Runs task(i) for i in [0, count) on a small pool. Stops handing out new
/// indices once an interrupt is requested; returns how many tasks ran.
inline int parallel_for(int count, const std::function<void(int)>& task, int workers = worker_count()) {
  std::atomic<int> next{0};
  std::atomic<int> done{0};
  const auto worker = [&] {
    for (;;) {
      if (interrupt_requested()) return;
      const int i = next.fetch_add(1);
      if (i >= count) return;
      task(i);
      done.fetch_add(1);
    }
  };
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  return done.load();
}

// ---------------------------------------------------------------------------
// Trials
// ---------------------------------------------------------------------------

/// Immutable per-configuration state shared by all trials.
struct TrialContext {
  SystemConfig config;
  QuantCodebook quantizer;
  CommCodebook codebook;
  CountPrior prior;
  double power = 1.0;
  NoiseMode noise = NoiseMode::gaussian;

  static TrialContext make(const SystemConfig& config, NoiseMode noise = NoiseMode::gaussian) {
    config.validate();
    const int m = config.codebook_size();
    return TrialContext{config,
                        QuantCodebook(m),
                        CommCodebook::hadamard(config.n, m),
                        CountPrior::uniform_model(config.ka, config.ma, m),
                        snr_from_db(config.snr_db),
                        noise};
  }
};

struct TrialResult {
  int trial = 0;
  Algorithm decoder = Algorithm::amp;
  double tv = 0.0;
  double wp = 0.0;
  double distortion = 0.0;
  int iterations_run = 0;
  double wall_seconds = 0.0;
  bool diverged = false;
  bool zero_fallback = false;
  MultiplicityVector k;
  MultiplicityVector k_hat;
};

/// One pass of the pipeline on the stream (seed, trial). The scene and the
/// noise depend only on the trial index, so all decoders see the same
/// realization for a given trial.
inline TrialResult run_trial(const TrialContext& ctx, Algorithm decoder, int trial_index) {
  const auto start = std::chrono::steady_clock::now();
  const auto& cfg = ctx.config;
  Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(trial_index));

  const TargetStates states = draw_targets(rng, cfg.ma);
  const SensorAssignment assignment = assign_sensors(rng, cfg.ka, cfg.ma);
  const DiscreteMeasure truth = true_type(states, assignment);
  TrialResult res;
  res.trial = trial_index;
  res.decoder = decoder;
  res.k = true_multiplicity(assignment, states, ctx.quantizer);
  const ReceivedSignal rx = transmit(ctx.codebook, res.k, ctx.power, rng, ctx.noise);

  DecoderOptions opts;
  opts.algorithm = decoder;
  opts.max_iters = cfg.max_iters;
  DecoderReport report;
  try {
    report = decode(rx.y, ctx.codebook, ctx.power, ctx.prior, opts);
  } catch (const DivergenceError& e) {
    report = e.last_report();
    res.diverged = true;
  }
  res.k_hat = repaired_estimate(report, &res.zero_fallback);
  res.iterations_run = report.iterations_run;
  res.tv = total_variation(res.k, res.k_hat);
  res.wp = wasserstein(truth, estimated_type(res.k_hat, ctx.quantizer), cfg.p_order).distance;
  res.distortion = quantization_distortion(truth, res.k, ctx.quantizer, cfg.p_order);
  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

/// Runs trials 0..trials-1 in parallel; results are indexed by trial.
/// Fewer results come back if an interrupt arrives.
inline std::vector<TrialResult> run_trials(const TrialContext& ctx, Algorithm decoder, int trials,
                                           int workers = worker_count()) {
  std::vector<TrialResult> results(static_cast<std::size_t>(trials));
  std::vector<char> filled(static_cast<std::size_t>(trials), 0);
  parallel_for(
      trials,
      [&](int i) {
        results[static_cast<std::size_t>(i)] = run_trial(ctx, decoder, i);
        filled[static_cast<std::size_t>(i)] = 1;
      },
      workers);
  std::vector<TrialResult> out;
  out.reserve(results.size());
  for (std::size_t i = 0; i < results.size(); ++i)
    if (filled[i]) out.push_back(std::move(results[i]));
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

enum class SweepParam { none, ma, bits, n };

inline std::string_view to_string(SweepParam p) {
  switch (p) {
    case SweepParam::none: return "none";
    case SweepParam::ma: return "ma";
    case SweepParam::bits: return "bits";
    case SweepParam::n: return "n";
  }
  return "?";
}

inline SweepParam parse_sweep_param(std::string_view name) {
  if (name == "none") return SweepParam::none;
  if (name == "ma") return SweepParam::ma;
  if (name == "bits") return SweepParam::bits;
  if (name == "n") return SweepParam::n;
  throw ConfigError("unknown sweep parameter: " + std::string(name));
}

struct SweepSpec {
  SystemConfig base;
  SweepParam param = SweepParam::none;
  std::vector<double> values;
  std::vector<Algorithm> decoders{Algorithm::amp};
  std::string output_path;  // empty: no file

  SystemConfig config_for(double value) const {
    SystemConfig c = base;
    const int iv = static_cast<int>(std::lround(value));
    switch (param) {
      case SweepParam::none: break;
      case SweepParam::ma: c.ma = iv; break;
      case SweepParam::bits: c.bits = iv; break;
      case SweepParam::n: c.n = iv; break;
    }
    return c;
  }

  void validate() const {
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    if (decoders.empty()) throw ConfigError("sweep needs at least one decoder");
    for (double v : values) {
      if (param != SweepParam::none && std::abs(v - std::round(v)) > 0) throw ConfigError("sweep values must be integers");
      config_for(v).validate();
    }
  }
};

struct SweepRow {
  SweepParam param = SweepParam::none;
  double value = 0.0;
  Algorithm decoder = Algorithm::amp;
  SystemConfig config;
  int trials = 0;
  double tv_mean = 0.0, tv_se = 0.0;
  double wp_mean = 0.0, wp_se = 0.0;
  double distortion_mean = 0.0, distortion_se = 0.0;
  int diverged_count = 0;
};

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  if (xs.empty()) return out;
  const double count = static_cast<double>(xs.size());
  for (double x : xs) out.mean += x;
  out.mean /= count;
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.se = std::sqrt(ss / (count - 1.0) / count);
  return out;
}

inline SweepRow summarize(const std::vector<TrialResult>& results, SweepParam param, double value,
                          Algorithm decoder, const SystemConfig& config) {
  SweepRow row;
  row.param = param;
  row.value = value;
  row.decoder = decoder;
  row.config = config;
  row.trials = static_cast<int>(results.size());
  std::vector<double> tv, wp, dist;
  for (const auto& r : results) {
    tv.push_back(r.tv);
    wp.push_back(r.wp);
    dist.push_back(r.distortion);
    row.diverged_count += r.diverged ? 1 : 0;
  }
  const auto t = mean_se(tv), w = mean_se(wp), d = mean_se(dist);
  row.tv_mean = t.mean;
  row.tv_se = t.se;
  row.wp_mean = w.mean;
  row.wp_se = w.se;
  row.distortion_mean = d.mean;
  row.distortion_se = d.se;
  return row;
}

inline constexpr const char* kCsvHeader =
    "sweep_param,value,decoder,n,ka,ma,bits,snr_db,trials,tv_mean,tv_se,wp_mean,wp_se,"
    "distortion_mean,diverged_count";

inline std::string csv_line(const SweepRow& row) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(10);
  const auto& c = row.config;
  os << to_string(row.param) << ',' << row.value << ',' << to_string(row.decoder) << ',' << c.n
     << ',' << c.ka << ',' << c.ma << ',' << c.bits << ',' << c.snr_db << ',' << row.trials << ','
     << row.tv_mean << ',' << row.tv_se << ',' << row.wp_mean << ',' << row.wp_se << ','
     << row.distortion_mean << ',' << row.diverged_count;
  return os.str();
}

/// Runs every (value, decoder) cell of the sweep. Each finished row is
/// written to `csv` (when given) and flushed before the next one starts.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec, std::ostream* csv = nullptr,
                                       int workers = worker_count()) {
  spec.validate();
  std::vector<SweepRow> rows;
  if (csv != nullptr) *csv << kCsvHeader << '\n' << std::flush;
  for (double value : spec.values) {
    const SystemConfig cfg = spec.config_for(value);
    const TrialContext ctx = TrialContext::make(cfg);
    for (Algorithm dec : spec.decoders) {
      const auto results = run_trials(ctx, dec, cfg.trials, workers);
      if (results.empty()) return rows;
      rows.push_back(summarize(results, spec.param, value, dec, cfg));
      if (csv != nullptr) *csv << csv_line(rows.back()) << '\n' << std::flush;
      if (interrupt_requested()) return rows;
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Config files: `key = value` lines, `#` starts a comment.
// ---------------------------------------------------------------------------

using KeyValues = std::map<std::string, std::string>;

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline KeyValues parse_key_values(std::istream& in) {
  KeyValues out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    std::replace(key.begin(), key.end(), '-', '_');
    out[key] = value;
  }
  return out;
}

inline KeyValues load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_key_values(in);
}

inline std::vector<double> parse_value_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  ss.imbue(std::locale::classic());
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    // a..b expands to the integers a, a+1, ..., b
    if (const auto dots = item.find(".."); dots != std::string::npos) {
      const int lo = std::stoi(item.substr(0, dots));
      const int hi = std::stoi(item.substr(dots + 2));
      for (int v = lo; v <= hi; ++v) out.push_back(v);
      continue;
    }
    out.push_back(std::stod(item));
  }
  return out;
}

/// Applies known keys onto `cfg`; unknown keys are an error.
inline void apply_system_keys(const KeyValues& kv, SystemConfig& cfg,
                              const std::vector<std::string>& extra_keys = {}) {
  for (const auto& [key, value] : kv) {
    try {
      if (key == "n") cfg.n = std::stoi(value);
      else if (key == "ka") cfg.ka = std::stoi(value);
      else if (key == "ma") cfg.ma = std::stoi(value);
      else if (key == "bits") cfg.bits = std::stoi(value);
      else if (key == "snr_db") cfg.snr_db = std::stod(value);
      else if (key == "p_order") cfg.p_order = std::stod(value);
      else if (key == "max_iters") cfg.max_iters = std::stoi(value);
      else if (key == "trials") cfg.trials = std::stoi(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (std::find(extra_keys.begin(), extra_keys.end(), key) == extra_keys.end())
        throw ConfigError("unknown config key: " + key);
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const ConfigError*>(&e) != nullptr) throw;
      throw ConfigError("bad value for " + key + ": " + value);
    }
  }
}

}  // namespace tuma
