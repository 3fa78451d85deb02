#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tuma/harness.hpp"
#include "tuma/testing/checks.hpp"

namespace {

extern "C" void on_sigint(int) { tuma::request_interrupt(); }

// Flags shared by `run` and `sweep`. Unset flags stay empty so that values
// from a config file survive unless the command line names them.
struct CommonFlags {
  std::optional<int> n, ka, ma, bits, trials, max_iters;
  std::optional<double> snr_db, p_order;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> decoders;
  std::string config_path;
  std::string out_path;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--n", f.n, "channel uses");
  cmd->add_option("--ka", f.ka, "active sensors");
  cmd->add_option("--ma", f.ma, "targets");
  cmd->add_option("--bits", f.bits, "log2 of the codebook size");
  cmd->add_option("--snr-db", f.snr_db, "per-channel-use power in dB");
  cmd->add_option("--p", f.p_order, "Wasserstein order");
  cmd->add_option("--max-iters", f.max_iters, "decoder iteration budget");
  cmd->add_option("--trials", f.trials, "Monte Carlo trials per cell");
  cmd->add_option("--seed", f.seed, "base RNG seed");
  cmd->add_option("--decoder,--decoders", f.decoders, "comma-separated list of amp, scalar_amp, ep");
  cmd->add_option("--config", f.config_path, "key = value config file (flags override it)");
  cmd->add_option("--out", f.out_path, "CSV output path (default: stdout)");
  cmd->add_option("--threads", f.threads, "worker threads (default: hardware, capped by TUMA_THREADS)");
}

std::vector<tuma::Algorithm> parse_decoders(const std::string& text) {
  std::vector<tuma::Algorithm> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = tuma::trim(item);
    if (!item.empty()) out.push_back(tuma::parse_algorithm(item));
  }
  if (out.empty()) throw tuma::ConfigError("no decoder given");
  return out;
}

// Loads the config file, then lays explicit flags on top.
struct Resolved {
  tuma::SystemConfig config;
  tuma::KeyValues file;
  std::vector<tuma::Algorithm> decoders{tuma::Algorithm::amp};
  bool trials_given = false;
};

Resolved resolve(const CommonFlags& f, const std::vector<std::string>& extra_keys) {
  Resolved r;
  if (!f.config_path.empty()) {
    r.file = tuma::load_key_values(f.config_path);
    std::vector<std::string> allowed = extra_keys;
    allowed.insert(allowed.end(), {"decoder", "decoders", "out"});
    tuma::apply_system_keys(r.file, r.config, allowed);
    r.trials_given = r.file.count("trials") > 0;
    for (const char* key : {"decoder", "decoders"})
      if (auto it = r.file.find(key); it != r.file.end()) r.decoders = parse_decoders(it->second);
  }
  auto& c = r.config;
  if (f.n) c.n = *f.n;
  if (f.ka) c.ka = *f.ka;
  if (f.ma) c.ma = *f.ma;
  if (f.bits) c.bits = *f.bits;
  if (f.snr_db) c.snr_db = *f.snr_db;
  if (f.p_order) c.p_order = *f.p_order;
  if (f.max_iters) c.max_iters = *f.max_iters;
  if (f.trials) {
    c.trials = *f.trials;
    r.trials_given = true;
  }
  if (f.seed) c.seed = *f.seed;
  if (f.decoders) r.decoders = parse_decoders(*f.decoders);
  return r;
}

std::string output_path(const CommonFlags& f, const tuma::KeyValues& file) {
  if (!f.out_path.empty()) return f.out_path;
  if (auto it = file.find("out"); it != file.end()) return it->second;
  return {};
}

int execute(const tuma::SweepSpec& spec, const std::string& out_path, int threads) {
  std::ofstream file;
  std::ostream* csv = &std::cout;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw tuma::ConfigError("cannot write " + out_path);
    csv = &file;
  }
  const int workers = threads > 0 ? threads : tuma::worker_count();
  const auto rows = tuma::run_sweep(spec, csv, workers);
  const std::size_t expected = spec.values.size() * spec.decoders.size();
  for (const auto& row : rows) {
    std::cerr << tuma::to_string(row.decoder) << ' ' << tuma::to_string(row.param) << '=' << row.value
              << ": tv " << row.tv_mean << " +- " << row.tv_se << ", w" << row.config.p_order << ' '
              << row.wp_mean << " +- " << row.wp_se << ", distortion " << row.distortion_mean;
    if (row.diverged_count > 0) std::cerr << ", diverged " << row.diverged_count;
    std::cerr << '\n';
  }
  if (tuma::interrupt_requested()) {
    std::cerr << "interrupted after " << rows.size() << " of " << expected << " rows\n";
    return 130;
  }
  return 0;
}

int run_selftest() {
  int failures = 0;
  for (const auto& check : tuma::testing::all_checks()) {
    if (!check.fast) continue;
    const auto r = check.run();
    std::cout << (r.pass ? "PASS" : "FAIL") << " [" << r.id << "] " << r.name << ": " << r.detail << '\n';
    failures += r.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Type-based unsourced multiple access simulator"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "simulate a single configuration");
  add_common(run, run_flags);

  CommonFlags sweep_flags;
  std::string param_name, values_text;
  auto* sweep = app.add_subcommand("sweep", "sweep one parameter over a list of values");
  add_common(sweep, sweep_flags);
  sweep->add_option("--param", param_name, "ma, bits or n");
  sweep->add_option("--values", values_text, "comma list; a..b expands to integers");

  app.add_subcommand("selftest", "run the oracle checks");

  CLI11_PARSE(app, argc, argv);
  std::signal(SIGINT, on_sigint);

  try {
    if (app.got_subcommand("selftest")) return run_selftest();

    if (app.got_subcommand("run")) {
      const Resolved r = resolve(run_flags, {});
      tuma::SweepSpec spec;
      spec.base = r.config;
      spec.values = {0};
      spec.decoders = r.decoders;
      return execute(spec, output_path(run_flags, r.file), run_flags.threads);
    }

    Resolved r = resolve(sweep_flags, {"param", "values"});
    if (param_name.empty())
      if (auto it = r.file.find("param"); it != r.file.end()) param_name = it->second;
    if (values_text.empty())
      if (auto it = r.file.find("values"); it != r.file.end()) values_text = it->second;
    if (param_name.empty()) throw tuma::ConfigError("sweep needs --param");
    if (values_text.empty()) throw tuma::ConfigError("sweep needs --values");

    tuma::SweepSpec spec;
    spec.param = tuma::parse_sweep_param(param_name);
    spec.values = tuma::parse_value_list(values_text);
    spec.decoders = r.decoders;
    if (!r.trials_given) r.config.trials = spec.param == tuma::SweepParam::bits ? 100 : 200;
    spec.base = r.config;
    return execute(spec, output_path(sweep_flags, r.file), sweep_flags.threads);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
