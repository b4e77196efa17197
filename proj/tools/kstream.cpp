// kstream command line: run the anonymization pipeline between two endpoints,
// or drive the benchmark harness.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kstream/kstream.hpp"

namespace fs = std::filesystem;
using namespace kstream;

namespace {

std::chrono::duration<double> parse_duration(const std::string& text) {
  std::size_t pos = 0;
  double v = std::stod(text, &pos);
  std::string unit = text.substr(pos);
  if (unit.empty() || unit == "s") return std::chrono::duration<double>(v);
  if (unit == "ms") return std::chrono::duration<double>(v / 1000.0);
  if (unit == "m" || unit == "min") return std::chrono::duration<double>(v * 60.0);
  throw CLI::ValidationError("--duration", "unknown unit '" + unit + "'");
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  body(out);
}

int cmd_run(const std::string& config_path, const std::string& in, const std::string& out,
            bool decode, const std::string& dump_path, const std::string& report_path,
            std::size_t queue_capacity) {
  const Config cfg = load_config_file(config_path);
  const Endpoint ingress = parse_endpoint(in, Direction::Ingress);
  const Endpoint egress = parse_endpoint(out, Direction::Egress);

  RunReport report;
  try {
    auto source = open_source(ingress);
    auto sink = open_sink(egress);
    PipelineOptions opts;
    opts.queue_capacity = queue_capacity;
    opts.processor.decode_categories = decode;
    if (!dump_path.empty()) {
      opts.on_finish = [&](const Processor& proc) {
        write_file(dump_path, [&](std::ostream& os) { proc.dictionary().dump(os); });
      };
    }
    report = run_pipeline(*source, *sink, cfg, std::move(opts));
  } catch (const IoError& e) {
    report.status = RunStatus::IoError;
    report.error = e.what();
  }

  const std::string doc = to_json(report).dump(2);
  if (!report_path.empty()) {
    write_file(report_path, [&](std::ostream& os) { os << doc << '\n'; });
  } else {
    std::cerr << doc << '\n';
  }
  if (!report.ok()) {
    std::cerr << "kstream: " << report.error << '\n';
    return report.status == RunStatus::ConfigError ? 2 : 3;
  }
  return 0;
}

int cmd_bench_delay(const std::vector<double>& rates, std::uint64_t count,
                    const std::string& config_path, const std::string& out_dir, std::uint32_t reps,
                    const bench::Synthetic& synthetic) {
  const Config cfg = load_config_file(config_path);
  fs::create_directories(out_dir);
  auto runs = bench::bench_delay(rates, count, cfg, reps, synthetic);

  std::map<std::uint32_t, std::vector<bench::DelayRow>> per_rep;
  for (const auto& r : runs) per_rep[r.rep].push_back({r.rate, r.stats});
  for (const auto& [rep, rows] : per_rep) {
    write_file(fs::path(out_dir) / ("delay_rep" + std::to_string(rep) + ".csv"),
               [&](std::ostream& os) { bench::write_delay_csv(os, rows); });
  }

  std::printf("%10s %4s %10s %10s %10s %10s %8s\n", "rate", "rep", "median_s", "p25_s", "p75_s",
              "mean_s", "n");
  for (const auto& r : runs) {
    std::printf("%10.1f %4u %10.4f %10.4f %10.4f %10.4f %8zu\n", r.rate, r.rep, r.stats.median,
                r.stats.p25, r.stats.p75, r.stats.mean, r.stats.n);
  }
  // delay.csv pools every repetition's samples per rate.
  std::vector<bench::DelayRow> pooled;
  for (double rate : rates) {
    std::vector<double> all;
    for (const auto& r : runs) {
      if (r.rate == rate) all.insert(all.end(), r.samples.begin(), r.samples.end());
    }
    pooled.push_back({rate, bench::delay_stats(std::move(all))});
  }
  write_file(fs::path(out_dir) / "delay.csv",
             [&](std::ostream& os) { bench::write_delay_csv(os, pooled); });
  return 0;
}

int cmd_bench_throughput(const std::string& duration_text, const std::string& config_path,
                         bool baseline, const std::string& out_dir, std::size_t window,
                         const bench::Synthetic& synthetic) {
  const Config cfg = load_config_file(config_path);
  const auto duration = parse_duration(duration_text);
  fs::create_directories(out_dir);

  auto anon = bench::bench_throughput(cfg, true, duration, window, std::nullopt, synthetic);
  write_file(fs::path(out_dir) / "throughput_anonymized.csv",
             [&](std::ostream& os) { bench::write_throughput_csv(os, anon.series); });
  std::printf("anonymized: mean %.1f msgs/s, peak %llu msgs/s\n", anon.series.mean(),
              static_cast<unsigned long long>(anon.series.peak()));
  if (baseline) {
    auto base = bench::bench_throughput(cfg, false, duration, window, std::nullopt, synthetic);
    write_file(fs::path(out_dir) / "throughput_baseline.csv",
               [&](std::ostream& os) { bench::write_throughput_csv(os, base.series); });
    std::printf("baseline:   mean %.1f msgs/s, peak %llu msgs/s\n", base.series.mean(),
                static_cast<unsigned long long>(base.series.peak()));
    const double ratio = base.series.mean() > 0 ? anon.series.mean() / base.series.mean() : 0.0;
    std::printf("ratio anonymized/baseline: %.3f\n", ratio);
  }
  return 0;
}

int cmd_bench_gen(const bench::Synthetic& synthetic, std::uint64_t count, const std::string& out) {
  auto lines = bench::generate_events(bench::EmulatorSpec{synthetic, 0, count, std::nullopt});
  write_file(out, [&](std::ostream& os) {
    for (const auto& l : lines) os << l << '\n';
  });
  return 0;
}

void add_synthetic_options(CLI::App* app, bench::Synthetic& s) {
  app->add_option("--seed", s.seed, "Generator seed");
  app->add_option("--stations", s.n_stations, "Number of charging stations");
  app->add_option("--vendors", s.n_vendors, "Number of station vendors");
  app->add_option("--persons", s.n_persons, "Number of distinct persons");
  app->add_option("--models", s.n_models, "Number of vehicle models");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming k_s-anonymization pipeline"};
  app.require_subcommand(1);

  std::string config_path, in = "stdin", out = "stdout", dump_path, report_path;
  bool decode = false;
  std::size_t queue_capacity = 10000;
  auto* run = app.add_subcommand("run", "Anonymize a record stream");
  run->add_option("--config", config_path, "Configuration file")->required();
  run->add_option("--in", in, "Ingress endpoint: stdin | file:<path> | tcp-listen:<host>:<port> | tcp:<host>:<port>");
  run->add_option("--out", out, "Egress endpoint: stdout | file:<path> | tcp-listen:<host>:<port> | tcp:<host>:<port>");
  run->add_flag("--decode-categories", decode, "Publish category names instead of ids");
  run->add_option("--dump-categories", dump_path, "Write the category dictionary at shutdown");
  run->add_option("--report", report_path, "Write the run report here instead of stderr");
  run->add_option("--queue-capacity", queue_capacity, "Bound of the engine queues")
      ->check(CLI::PositiveNumber);

  auto* bench_cmd = app.add_subcommand("bench", "Benchmark harness");
  bench_cmd->require_subcommand(1);

  std::vector<double> rates{15, 30, 60};
  std::uint64_t count = 300;
  std::uint32_t reps = 1;
  std::string out_dir = "bench-out";
  bench::Synthetic synthetic;
  auto* delay = bench_cmd->add_subcommand("delay", "Per-message delay across message rates");
  delay->add_option("--rates", rates, "Messages per second")->delimiter(',');
  delay->add_option("--count", count, "Messages per run");
  delay->add_option("--config", config_path, "Configuration file")->required();
  delay->add_option("--out-dir", out_dir, "Directory for CSV tables");
  delay->add_option("--reps", reps, "Repetitions per rate")->check(CLI::PositiveNumber);
  add_synthetic_options(delay, synthetic);

  std::string duration_text = "60s";
  bool baseline = false;
  std::size_t window = 10;
  auto* thr = bench_cmd->add_subcommand("throughput", "Unpaced throughput");
  thr->add_option("--duration", duration_text, "Run length, e.g. 60s");
  thr->add_option("--config", config_path, "Configuration file")->required();
  thr->add_flag("--baseline", baseline, "Also run with the anonymization stage bypassed");
  thr->add_option("--out-dir", out_dir, "Directory for CSV tables");
  thr->add_option("--window", window, "Moving-average window in seconds")->check(CLI::PositiveNumber);
  add_synthetic_options(thr, synthetic);

  std::string gen_out = "events.ndjson";
  auto* gen = bench_cmd->add_subcommand("gen", "Write synthetic charging events");
  gen->add_option("--count", count, "Number of records");
  gen->add_option("--out", gen_out, "Output file");
  add_synthetic_options(gen, synthetic);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      return cmd_run(config_path, in, out, decode, dump_path, report_path, queue_capacity);
    }
    if (*delay) return cmd_bench_delay(rates, count, config_path, out_dir, reps, synthetic);
    if (*thr) return cmd_bench_throughput(duration_text, config_path, baseline, out_dir, window, synthetic);
    if (*gen) return cmd_bench_gen(synthetic, count, gen_out);
  } catch (const ConfigError& e) {
    std::cerr << "kstream: configuration error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "kstream: configuration error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "kstream: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    std::cerr << "kstream: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
