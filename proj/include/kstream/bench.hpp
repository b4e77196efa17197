#pragma once

// Desk-scale benchmark harness: a charging-event emulator, per-message delay
// statistics across message rates, and throughput series with and without
// the anonymization stage.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "kstream/config.hpp"
#include "kstream/errors.hpp"
#include "kstream/pipeline.hpp"
#include "kstream/record.hpp"
#include "kstream/transport.hpp"

namespace kstream::bench {

struct CsvFile {
  std::string path;
};

struct Synthetic {
  std::uint32_t n_stations = 20;
  std::uint32_t n_vendors = 4;
  std::uint32_t n_persons = 25;
  std::uint32_t n_models = 6;
  std::uint64_t seed = 1;
};

struct EmulatorSpec {
  std::variant<Synthetic, CsvFile> source = Synthetic{};
  double rate = 0;  // messages per second, 0 = as fast as possible
  std::optional<std::uint64_t> count;  // nullopt: unbounded, stop on `duration`
  std::optional<std::chrono::duration<double>> duration;
};

// Synthetic charging events. Every person drives one fixed vehicle model and
// every station belongs to one vendor, as in an enriched charging log.
class SyntheticEvents {
 public:
  explicit SyntheticEvents(const Synthetic& s) : spec_(s), rng_(s.seed) {
    if (s.n_stations == 0 || s.n_vendors == 0 || s.n_persons == 0 || s.n_models == 0) {
      throw ConfigError("synthetic generator needs at least one of each entity");
    }
    for (std::uint32_t st = 0; st < s.n_stations; ++st) station_vendor_.push_back(draw(s.n_vendors));
    for (std::uint32_t p = 0; p < s.n_persons; ++p) person_model_.push_back(draw(s.n_models));
  }

  std::string next() {
    const auto station = draw(spec_.n_stations);
    const auto person = draw(spec_.n_persons);
    // Right-skewed positive energy, 1..~61 kWh.
    const double u = uniform();
    const double kwh = std::round((1.0 + 60.0 * u * u) * 1000.0) / 1000.0;
    Json doc = Json::object();
    doc["station_id"] = station;
    doc["vendor_id"] = station_vendor_[station];
    doc["person_id"] = person;
    doc["vehicle_model"] = model_name(person_model_[person]);
    doc["energy_kwh"] = kwh;
    doc["timestamp"] = kEpoch + 37 * index_++;
    return doc.dump();
  }

  static std::string model_name(std::uint32_t m) {
    static const char* const kNames[] = {"e-tron 55", "Model 3", "ID.3", "Leaf", "Ioniq 5",
                                         "Zoe", "Kona", "i3", "Taycan", "EQC"};
    constexpr std::uint32_t n = sizeof kNames / sizeof kNames[0];
    if (m < n) return kNames[m];
    return "model-" + std::to_string(m);
  }

 private:
  static constexpr std::int64_t kEpoch = 1577836800;  // 2020-01-01T00:00:00Z

  // Derived from raw engine bits so streams match across standard libraries.
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  std::uint32_t draw(std::uint32_t n) {
    return static_cast<std::uint32_t>(uniform() * n) % n;
  }

  Synthetic spec_;
  std::mt19937_64 rng_;
  std::vector<std::uint32_t> station_vendor_;
  std::vector<std::uint32_t> person_model_;
  std::int64_t index_ = 0;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

inline std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace detail

// Turns a CSV table with a header row into ingress records. Cells that parse
// fully as finite numbers become numbers; everything else stays text.
inline std::vector<std::string> load_csv_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) return {};
  auto header = detail::split_csv_line(line);
  std::vector<std::string> records;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto cells = detail::split_csv_line(line);
    Json doc = Json::object();
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) {
      if (auto d = detail::parse_double(cells[i])) {
        doc[header[i]] = number_to_json(*d);
      } else {
        doc[header[i]] = cells[i];
      }
    }
    records.push_back(doc.dump());
  }
  return records;
}

// Emits records at a fixed rate, message i due at start + i / rate.
class EmulatorSource final : public LineSource {
 public:
  explicit EmulatorSource(const EmulatorSpec& spec) : spec_(spec) {
    if (const auto* csv = std::get_if<CsvFile>(&spec.source)) {
      rows_ = load_csv_records(csv->path);
      if (rows_.empty()) throw IoError("'" + csv->path + "' holds no records");
    } else {
      synthetic_.emplace(std::get<Synthetic>(spec.source));
    }
  }

  std::optional<std::string> next() override {
    if (stopped_) return std::nullopt;
    if (spec_.count && emitted_ >= *spec_.count) return std::nullopt;
    const auto now = Clock::now();
    if (emitted_ == 0) start_ = now;
    if (spec_.duration && now - start_ >= *spec_.duration) return std::nullopt;
    if (spec_.rate > 0) {
      auto due = start_ + std::chrono::duration_cast<Clock::duration>(
                              std::chrono::duration<double>(static_cast<double>(emitted_) / spec_.rate));
      std::this_thread::sleep_until(due);
    }
    std::string line = synthetic_ ? synthetic_->next() : rows_[emitted_ % rows_.size()];
    ++emitted_;
    return line;
  }

  void interrupt() override { stopped_ = true; }
  std::uint64_t emitted() const noexcept { return emitted_; }

 private:
  EmulatorSpec spec_;
  std::optional<SyntheticEvents> synthetic_;
  std::vector<std::string> rows_;
  std::uint64_t emitted_ = 0;
  Clock::time_point start_{};
  std::atomic<bool> stopped_{false};
};

// Records the emulator would send, without pacing.
inline std::vector<std::string> generate_events(const EmulatorSpec& spec) {
  EmulatorSpec unpaced = spec;
  unpaced.rate = 0;
  EmulatorSource src(unpaced);
  std::vector<std::string> out;
  while (auto line = src.next()) out.push_back(std::move(*line));
  return out;
}

// Linear interpolation between closest ranks over sorted data, p in [0, 1].
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return 0.0;
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Box-plot summary of per-message delays, in seconds.
struct DelayStats {
  std::size_t n = 0;
  double median = 0;
  double p25 = 0;
  double p75 = 0;
  double lo_whisker = 0;  // smallest sample >= p25 - 1.5 IQR
  double hi_whisker = 0;  // largest sample <= p75 + 1.5 IQR
  double mean = 0;
  std::vector<double> outliers;

  friend bool operator==(const DelayStats&, const DelayStats&) = default;
};

inline DelayStats delay_stats(std::vector<double> samples) {
  DelayStats s;
  s.n = samples.size();
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  s.p25 = quantile_sorted(samples, 0.25);
  s.median = quantile_sorted(samples, 0.5);
  s.p75 = quantile_sorted(samples, 0.75);
  const double iqr = s.p75 - s.p25;
  const double lo_fence = s.p25 - 1.5 * iqr;
  const double hi_fence = s.p75 + 1.5 * iqr;
  s.lo_whisker = *std::lower_bound(samples.begin(), samples.end(), lo_fence);
  s.hi_whisker = *std::prev(std::upper_bound(samples.begin(), samples.end(), hi_fence));
  double sum = 0;
  for (double x : samples) {
    sum += x;
    if (x < lo_fence || x > hi_fence) s.outliers.push_back(x);
  }
  s.mean = sum / static_cast<double>(samples.size());
  return s;
}

struct ThroughputSeries {
  std::vector<std::uint64_t> counts;  // processed messages per second
  std::vector<double> window_avg;     // trailing moving average
  std::size_t window_seconds = 10;

  double mean() const {
    if (counts.empty()) return 0.0;
    double total = 0;
    for (auto c : counts) total += static_cast<double>(c);
    return total / static_cast<double>(counts.size());
  }
  std::uint64_t peak() const {
    return counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
  }
};

// Buckets event offsets (seconds since start) into `seconds` one-second
// slots; late events land in the last slot.
inline ThroughputSeries throughput_series(const std::vector<double>& offsets, std::size_t seconds,
                                          std::size_t window_seconds) {
  ThroughputSeries s;
  s.window_seconds = std::max<std::size_t>(1, window_seconds);
  if (seconds == 0) return s;
  s.counts.assign(seconds, 0);
  for (double t : offsets) {
    auto slot = t <= 0 ? std::size_t{0} : static_cast<std::size_t>(t);
    ++s.counts[std::min(slot, seconds - 1)];
  }
  double running = 0;
  for (std::size_t i = 0; i < seconds; ++i) {
    running += static_cast<double>(s.counts[i]);
    if (i >= s.window_seconds) running -= static_cast<double>(s.counts[i - s.window_seconds]);
    s.window_avg.push_back(running / static_cast<double>(std::min(i + 1, s.window_seconds)));
  }
  return s;
}

struct DelayRun {
  double rate = 0;
  std::uint32_t rep = 0;
  DelayStats stats;
  std::vector<double> samples;  // seconds, egress order
  RunReport report;
  std::size_t suppressed = 0;
};

// One full pipeline run per (rate, repetition), emulator feeding the engine
// and a discarding egress; delays are engine ingress to engine release.
inline std::vector<DelayRun> bench_delay(const std::vector<double>& rates, std::uint64_t count,
                                         const Config& cfg, std::uint32_t reps = 1,
                                         Synthetic synthetic = {}) {
  if (rates.empty()) throw ConfigError("bench delay needs at least one rate");
  std::vector<DelayRun> runs;
  for (std::uint32_t rep = 0; rep < reps; ++rep) {
    for (double rate : rates) {
      Synthetic s = synthetic;
      s.seed = synthetic.seed + rep;
      EmulatorSource src(EmulatorSpec{s, rate, count, std::nullopt});
      struct NullSink final : LineSink {
        void write(std::string_view) override {}
      } sink;
      std::vector<double> delays;
      std::size_t suppressed = 0;
      PipelineOptions opts;
      opts.on_egress = [&](const EgressItem& item) {
        delays.push_back(std::chrono::duration<double>(item.release - item.arrival).count());
        suppressed += item.suppressed ? 1 : 0;
      };
      RunReport report = run_pipeline(src, sink, cfg, std::move(opts));
      if (!report.ok()) throw Error("bench delay run failed: " + report.error);
      auto stats = delay_stats(delays);
      runs.push_back(DelayRun{rate, rep, std::move(stats), std::move(delays), report, suppressed});
    }
  }
  return runs;
}

struct ThroughputRun {
  ThroughputSeries series;
  RunReport report;
};

// Unpaced run for `duration` (or `count` messages). With anonymize=false the
// engine stage is bypassed and only the reduction rules apply.
inline ThroughputRun bench_throughput(const Config& cfg, bool anonymize,
                                      std::chrono::duration<double> duration,
                                      std::size_t window_seconds = 10,
                                      std::optional<std::uint64_t> count = std::nullopt,
                                      Synthetic synthetic = {}) {
  EmulatorSource src(EmulatorSpec{synthetic, 0, count, duration});
  struct NullSink final : LineSink {
    void write(std::string_view) override {}
  } sink;
  std::vector<double> offsets;
  const auto started = Clock::now();
  Clock::time_point last_arrival = started;
  PipelineOptions opts;
  opts.processor.anonymize = anonymize;
  opts.on_egress = [&](const EgressItem& item) {
    offsets.push_back(std::chrono::duration<double>(item.release - started).count());
    last_arrival = std::max(last_arrival, item.arrival);
  };
  RunReport report = run_pipeline(src, sink, cfg, std::move(opts));
  if (!report.ok()) throw Error("bench throughput run failed: " + report.error);
  std::size_t seconds = 0;
  if (src.emitted() > 0) {
    double span = count ? std::chrono::duration<double>(last_arrival - started).count()
                        : duration.count();
    seconds = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span)));
  }
  return ThroughputRun{throughput_series(offsets, seconds, window_seconds), report};
}

// ---- plot-ready CSV ----

struct DelayRow {
  double rate = 0;
  DelayStats stats;
};

inline const char* kDelayCsvHeader = "rate,median,p25,p75,lo_whisker,hi_whisker,mean,n_outliers";
inline const char* kThroughputCsvHeader = "second,count,window_avg";

inline void write_delay_csv(std::ostream& out, const std::vector<DelayRow>& rows) {
  using detail::format_double;
  out << kDelayCsvHeader << '\n';
  for (const auto& r : rows) {
    const auto& s = r.stats;
    out << format_double(r.rate) << ',' << format_double(s.median) << ',' << format_double(s.p25)
        << ',' << format_double(s.p75) << ',' << format_double(s.lo_whisker) << ','
        << format_double(s.hi_whisker) << ',' << format_double(s.mean) << ','
        << s.outliers.size() << '\n';
  }
}

// Reads back what write_delay_csv produced. Outlier values are not in the
// table, only their count, so `outliers` comes back as that many zeros.
inline std::vector<DelayRow> read_delay_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kDelayCsvHeader) throw ParseError("bad delay table header");
  std::vector<DelayRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != 8) throw ParseError("delay table row needs 8 columns");
    std::vector<double> v;
    for (const auto& c : cells) {
      auto d = detail::parse_double(c);
      if (!d) throw ParseError("bad number '" + c + "'");
      v.push_back(*d);
    }
    DelayRow r;
    r.rate = v[0];
    r.stats.median = v[1];
    r.stats.p25 = v[2];
    r.stats.p75 = v[3];
    r.stats.lo_whisker = v[4];
    r.stats.hi_whisker = v[5];
    r.stats.mean = v[6];
    r.stats.outliers.assign(static_cast<std::size_t>(v[7]), 0.0);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline void write_throughput_csv(std::ostream& out, const ThroughputSeries& s) {
  out << kThroughputCsvHeader << '\n';
  for (std::size_t i = 0; i < s.counts.size(); ++i) {
    out << i << ',' << s.counts[i] << ',' << detail::format_double(s.window_avg[i]) << '\n';
  }
}

inline ThroughputSeries read_throughput_csv(std::istream& in, std::size_t window_seconds) {
  std::string line;
  if (!std::getline(in, line) || line != kThroughputCsvHeader) {
    throw ParseError("bad throughput table header");
  }
  ThroughputSeries s;
  s.window_seconds = window_seconds;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != 3) throw ParseError("throughput table row needs 3 columns");
    auto count = detail::parse_double(cells[1]);
    auto avg = detail::parse_double(cells[2]);
    if (!count || !avg) throw ParseError("bad throughput row '" + line + "'");
    s.counts.push_back(static_cast<std::uint64_t>(*count));
    s.window_avg.push_back(*avg);
  }
  return s;
}

}  // namespace kstream::bench
