#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "tuma/harness.hpp"

using namespace tuma;

namespace {

SystemConfig small_config() {
  SystemConfig c;
  c.n = 64;
  c.ka = 10;
  c.ma = 5;
  c.bits = 7;
  c.snr_db = -5.0;
  c.trials = 20;
  c.seed = 3;
  return c;
}

void expect_same(const TrialResult& a, const TrialResult& b) {
  EXPECT_EQ(a.trial, b.trial);
  EXPECT_EQ(a.k, b.k);
  EXPECT_EQ(a.k_hat, b.k_hat);
  EXPECT_EQ(a.tv, b.tv);
  EXPECT_EQ(a.wp, b.wp);
  EXPECT_EQ(a.distortion, b.distortion);
  EXPECT_EQ(a.iterations_run, b.iterations_run);
}

}  // namespace

TEST(Trial, RerunIsIdentical) {
  const auto ctx = TrialContext::make(small_config());
  for (auto a : {Algorithm::amp, Algorithm::scalar_amp, Algorithm::ep})
    expect_same(run_trial(ctx, a, 4), run_trial(ctx, a, 4));
}

TEST(Trial, MetricsInRange) {
  const auto ctx = TrialContext::make(small_config());
  for (int i = 0; i < 20; ++i) {
    const auto r = run_trial(ctx, Algorithm::amp, i);
    EXPECT_GE(r.tv, 0.0);
    EXPECT_LE(r.tv, 1.0);
    EXPECT_GE(r.wp, 0.0);
    EXPECT_GE(r.distortion, 0.0);
    EXPECT_EQ(total_count(r.k), 10);
  }
}

TEST(Trial, NoiselessOrthogonalRecoversAndMatchesDistortion) {
  SystemConfig c = small_config();
  c.n = 128;
  const auto ctx = TrialContext::make(c, NoiseMode::noiseless);
  for (int i = 0; i < 10; ++i) {
    const auto r = run_trial(ctx, Algorithm::amp, i);
    EXPECT_EQ(r.tv, 0.0);
    EXPECT_NEAR(r.wp, r.distortion, 1e-12);
  }
}

TEST(Trial, SingleSensorHighSnrIsCentroidDistance) {
  SystemConfig c;
  c.n = 64;
  c.ka = 1;
  c.ma = 1;
  c.bits = 4;
  c.snr_db = 20.0;
  const auto ctx = TrialContext::make(c);
  for (int i = 0; i < 10; ++i) {
    const auto r = run_trial(ctx, Algorithm::amp, i);
    EXPECT_EQ(r.tv, 0.0);
    EXPECT_NEAR(r.wp, r.distortion, 1e-12);
    Rng rng = Rng::stream(c.seed, static_cast<std::uint64_t>(i));
    const Point p = draw_targets(rng, 1)[0];
    EXPECT_NEAR(r.wp, distance(p, ctx.quantizer.centroid(ctx.quantizer.quantize(p))), 1e-12);
  }
}

TEST(Trials, IndependentOfWorkerCount) {
  const auto ctx = TrialContext::make(small_config());
  const auto serial = run_trials(ctx, Algorithm::amp, 16, 1);
  const auto parallel = run_trials(ctx, Algorithm::amp, 16, 4);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) expect_same(serial[i], parallel[i]);
}

TEST(Trials, OrderOfExecutionDoesNotMatter) {
  const auto ctx = TrialContext::make(small_config());
  std::vector<TrialResult> backwards;
  for (int i = 11; i >= 0; --i) backwards.push_back(run_trial(ctx, Algorithm::scalar_amp, i));
  std::sort(backwards.begin(), backwards.end(), [](auto& a, auto& b) { return a.trial < b.trial; });
  const auto forward = run_trials(ctx, Algorithm::scalar_amp, 12, 1);
  for (std::size_t i = 0; i < forward.size(); ++i) expect_same(forward[i], backwards[i]);
}

TEST(Trials, DecodersShareTheRealization) {
  const auto ctx = TrialContext::make(small_config());
  EXPECT_EQ(run_trial(ctx, Algorithm::amp, 2).k, run_trial(ctx, Algorithm::ep, 2).k);
}

TEST(Summary, StandardErrorShrinksWithTrials) {
  SystemConfig c = small_config();
  c.snr_db = -12.0;
  const auto ctx = TrialContext::make(c);
  const auto r100 = summarize(run_trials(ctx, Algorithm::amp, 100), SweepParam::none, 0, Algorithm::amp, c);
  const auto r400 = summarize(run_trials(ctx, Algorithm::amp, 400), SweepParam::none, 0, Algorithm::amp, c);
  const double ratio = r100.wp_se / r400.wp_se;
  EXPECT_GT(ratio, 1.5);
  EXPECT_LT(ratio, 2.7);
}

TEST(Summary, MeanAndStandardError) {
  const auto ms = mean_se({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(ms.mean, 2.5);
  EXPECT_NEAR(ms.se, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
  EXPECT_EQ(mean_se({}).mean, 0.0);
  EXPECT_EQ(mean_se({7.0}).se, 0.0);
}

TEST(Sweep, SingleValueEqualsTrialAverage) {
  SweepSpec spec;
  spec.base = small_config();
  spec.values = {0};
  const auto rows = run_sweep(spec, nullptr, 1);
  ASSERT_EQ(rows.size(), 1u);
  const auto direct = run_trials(TrialContext::make(spec.base), Algorithm::amp, spec.base.trials, 1);
  double tv = 0.0;
  for (const auto& r : direct) tv += r.tv;
  EXPECT_NEAR(rows[0].tv_mean, tv / direct.size(), 1e-15);
}

TEST(Sweep, CsvHasHeaderAndOneRowPerCell) {
  SweepSpec spec;
  spec.base = small_config();
  spec.base.trials = 4;
  spec.param = SweepParam::ma;
  spec.values = {2, 4};
  spec.decoders = {Algorithm::amp, Algorithm::scalar_amp};
  std::ostringstream out;
  const auto rows = run_sweep(spec, &out, 1);
  EXPECT_EQ(rows.size(), 4u);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kCsvHeader);
  int count = 0;
  while (std::getline(in, line)) {
    ++count;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 14) << line;
    EXPECT_EQ(line.rfind("ma,", 0), 0u);
  }
  EXPECT_EQ(count, 4);
  EXPECT_EQ(rows[2].config.ma, 4);
  EXPECT_EQ(rows[3].decoder, Algorithm::scalar_amp);
}

TEST(Sweep, CsvUsesDotDecimalSeparator) {
  SweepRow row;
  row.tv_mean = 0.125;
  row.config.snr_db = -12.5;
  const auto line = csv_line(row);
  EXPECT_NE(line.find("-12.5"), std::string::npos);
  EXPECT_NE(line.find("0.125"), std::string::npos);
}

TEST(Sweep, ValidatesSpec) {
  SweepSpec spec;
  spec.base = small_config();
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.param = SweepParam::bits;
  spec.values = {3.5};
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.values = {0};
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(Sweep, StopsOnInterrupt) {
  SweepSpec spec;
  spec.base = small_config();
  spec.base.trials = 2;
  spec.param = SweepParam::ma;
  spec.values = {2, 3, 4};
  request_interrupt();
  const auto rows = run_sweep(spec, nullptr, 1);
  interrupt_flag().store(false);
  EXPECT_LT(rows.size(), 3u);
}

TEST(Config, ParsesKeyValueText) {
  std::istringstream in(
      "# comment line\n"
      "n = 500   # trailing comment\n"
      "snr-db=-27\n"
      "\n"
      "  bits = 12\n");
  const auto kv = parse_key_values(in);
  EXPECT_EQ(kv.at("n"), "500");
  EXPECT_EQ(kv.at("snr_db"), "-27");
  SystemConfig c;
  apply_system_keys(kv, c);
  EXPECT_EQ(c.n, 500);
  EXPECT_EQ(c.bits, 12);
  EXPECT_DOUBLE_EQ(c.snr_db, -27.0);
}

TEST(Config, RejectsMalformedInput) {
  std::istringstream missing("n 500\n");
  EXPECT_THROW(parse_key_values(missing), ConfigError);
  SystemConfig c;
  EXPECT_THROW(apply_system_keys({{"colour", "red"}}, c), ConfigError);
  EXPECT_THROW(apply_system_keys({{"n", "many"}}, c), ConfigError);
  EXPECT_NO_THROW(apply_system_keys({{"decoder", "ep"}}, c, {"decoder"}));
}

TEST(Config, ValueListsAndRanges) {
  EXPECT_EQ(parse_value_list("10,25, 50"), (std::vector<double>{10, 25, 50}));
  EXPECT_EQ(parse_value_list("6..9"), (std::vector<double>{6, 7, 8, 9}));
  EXPECT_EQ(parse_value_list("1,4..5"), (std::vector<double>{1, 4, 5}));
}

TEST(Params, SweepParamNames) {
  EXPECT_EQ(parse_sweep_param("ma"), SweepParam::ma);
  EXPECT_EQ(parse_sweep_param("bits"), SweepParam::bits);
  EXPECT_EQ(parse_sweep_param("n"), SweepParam::n);
  EXPECT_THROW(parse_sweep_param("ka"), ConfigError);
}

TEST(Workers, ParallelForVisitsEveryIndexOnce) {
  std::vector<int> hits(1000, 0);
  parallel_for(1000, [&](int i) { ++hits[i]; }, 4);
  EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 1000);
}
