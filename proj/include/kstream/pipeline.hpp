#pragma once

// Ingress -> reduction -> categorization -> anonymization -> egress.
//
// run_pipeline wires three activities together: an ingress reader that
// parses records, the engine loop (sole owner of all anonymization state) and
// an egress writer in the calling thread. They talk through two bounded
// queues, so a slow consumer stalls the reader rather than losing records.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "kstream/bounded_queue.hpp"
#include "kstream/castle.hpp"
#include "kstream/categorizer.hpp"
#include "kstream/config.hpp"
#include "kstream/egress.hpp"
#include "kstream/record.hpp"
#include "kstream/reduction.hpp"
#include "kstream/transport.hpp"

namespace kstream {

struct StageCounts {
  std::uint64_t filter_dropped = 0;
  std::uint64_t type_dropped = 0;
  std::uint64_t released = 0;
  std::uint64_t suppressed = 0;
};

struct ProcessorOptions {
  bool anonymize = true;  // false: reduction only, records leave as-is
  bool decode_categories = false;
};

// The synchronous stage chain behind the engine loop.
class Processor {
 public:
  explicit Processor(Config cfg, ProcessorOptions opts = {})
      : cfg_(std::move(cfg)), opts_(opts) {
    if (opts_.anonymize) engine_.emplace(cfg_.anonymization);
  }

  // Throws ConfigError when a categorized attribute carries a number.
  std::vector<ReleasedTuple> process(Message msg) {
    auto outcome = apply_pipeline(std::move(msg), cfg_.reduction);
    if (!outcome.passed()) {
      if (outcome.drop().reason == DropReason::TypeMismatch) {
        ++counts_.type_dropped;
      } else {
        ++counts_.filter_dropped;
      }
      return {};
    }
    Message reduced = std::move(outcome).message();
    if (!engine_) {
      ++counts_.released;
      ReleasedTuple pass;
      pass.message = std::move(reduced);
      pass.release_time = Clock::now();
      return tally(std::vector<ReleasedTuple>{std::move(pass)});
    }
    try {
      reduced = encode(std::move(reduced), dict_, cfg_.anonymization.non_categorized_attributes);
    } catch (const TypeMismatch& e) {
      throw ConfigError(e.what());
    }
    try {
      return tally(engine_->ingest(std::move(reduced)));
    } catch (const TypeMismatch&) {
      ++counts_.type_dropped;
      return {};
    }
  }

  std::vector<ReleasedTuple> flush() {
    if (!engine_) return {};
    return tally(engine_->flush());
  }

  std::string format(const ReleasedTuple& r) const {
    if (!engine_) return format_message(r.message);
    return format_release(r, cfg_.anonymization, opts_.decode_categories ? &dict_ : nullptr);
  }

  const StageCounts& counts() const noexcept { return counts_; }
  const CategoryDictionary& dictionary() const noexcept { return dict_; }
  const CastleEngine* engine() const noexcept { return engine_ ? &*engine_ : nullptr; }
  const Config& config() const noexcept { return cfg_; }

 private:
  std::vector<ReleasedTuple> tally(std::vector<ReleasedTuple> out) {
    if (engine_) {
      counts_.released += out.size();
      for (const auto& r : out) counts_.suppressed += r.suppressed ? 1 : 0;
    }
    return out;
  }

  Config cfg_;
  ProcessorOptions opts_;
  CategoryDictionary dict_;
  std::optional<CastleEngine> engine_;
  StageCounts counts_;
};

struct EgressItem {
  std::string line;
  std::uint64_t seq = 0;
  bool suppressed = false;
  Clock::time_point arrival{};
  Clock::time_point release{};
};

enum class RunStatus { Ok, IoError, ConfigError };

struct RunReport {
  RunStatus status = RunStatus::Ok;
  std::string error;

  std::uint64_t ingested = 0;
  std::uint64_t parse_dropped = 0;
  std::uint64_t filter_dropped = 0;
  std::uint64_t type_dropped = 0;
  std::uint64_t released = 0;
  std::uint64_t suppressed = 0;
  std::uint64_t written = 0;

  double elapsed_seconds = 0;
  double mean_delay_seconds = 0;
  double max_delay_seconds = 0;

  bool ok() const noexcept { return status == RunStatus::Ok; }
  bool conserved() const noexcept {
    return ingested == parse_dropped + filter_dropped + type_dropped + released;
  }
};

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Ok: return "ok";
    case RunStatus::IoError: return "io_error";
    case RunStatus::ConfigError: return "config_error";
  }
  return "unknown";
}

inline Json to_json(const RunReport& r) {
  Json j = Json::object();
  j["status"] = to_string(r.status);
  if (!r.error.empty()) j["error"] = r.error;
  j["ingested"] = r.ingested;
  j["parse_dropped"] = r.parse_dropped;
  j["filter_dropped"] = r.filter_dropped;
  j["type_dropped"] = r.type_dropped;
  j["released"] = r.released;
  j["suppressed"] = r.suppressed;
  j["written"] = r.written;
  j["elapsed_seconds"] = r.elapsed_seconds;
  j["mean_delay_seconds"] = r.mean_delay_seconds;
  j["max_delay_seconds"] = r.max_delay_seconds;
  return j;
}

struct PipelineOptions {
  std::size_t queue_capacity = 10000;
  ProcessorOptions processor;
  // Called from the writer after each record has been handed to the sink.
  std::function<void(const EgressItem&)> on_egress;
  // Called once, from the engine loop, after the final flush.
  std::function<void(const Processor&)> on_finish;
};

inline RunReport run_pipeline(LineSource& source, LineSink& sink, const Config& cfg,
                              PipelineOptions opts = {}) {
  RunReport report;
  BoundedQueue<Message> inbound(opts.queue_capacity);
  BoundedQueue<EgressItem> outbound(opts.queue_capacity);
  std::atomic<bool> stop{false};

  std::string reader_error;
  std::string engine_error;
  RunStatus engine_status = RunStatus::Ok;
  StageCounts stage;

  auto abort_all = [&] {
    stop = true;
    source.interrupt();
    inbound.close();
    outbound.close();
  };

  const auto started = Clock::now();

  std::thread reader([&] {
    std::uint64_t seq = 0;
    try {
      while (!stop) {
        auto line = source.next();
        if (!line) break;
        ++report.ingested;
        try {
          Message msg = parse_message(*line, seq++, Clock::now());
          if (!inbound.push(std::move(msg))) break;
        } catch (const ParseError&) {
          ++report.parse_dropped;
        }
      }
    } catch (const IoError& e) {
      reader_error = e.what();
      abort_all();
    }
    inbound.close();
  });

  std::thread engine([&] {
    try {
      Processor proc(cfg, opts.processor);
      auto forward = [&](std::vector<ReleasedTuple> released) {
        for (auto& r : released) {
          EgressItem item{proc.format(r), r.message.seq, r.suppressed, r.message.arrival_time,
                          r.release_time};
          if (!outbound.push(std::move(item))) return false;
        }
        return true;
      };
      bool open = true;
      while (auto msg = inbound.pop()) {
        if (!forward(proc.process(std::move(*msg)))) {
          open = false;
          break;
        }
      }
      if (open && !stop) forward(proc.flush());
      stage = proc.counts();
      if (opts.on_finish) opts.on_finish(proc);
    } catch (const ConfigError& e) {
      engine_error = e.what();
      engine_status = RunStatus::ConfigError;
      abort_all();
    }
    outbound.close();
  });

  std::string writer_error;
  double delay_sum = 0;
  try {
    while (auto item = outbound.pop()) {
      sink.write(item->line);
      if (outbound.empty()) sink.flush();
      ++report.written;
      double delay = std::chrono::duration<double>(item->release - item->arrival).count();
      delay_sum += delay;
      report.max_delay_seconds = std::max(report.max_delay_seconds, delay);
      if (opts.on_egress) opts.on_egress(*item);
    }
    sink.flush();
  } catch (const IoError& e) {
    writer_error = e.what();
    abort_all();
  }

  reader.join();
  engine.join();

  report.elapsed_seconds = std::chrono::duration<double>(Clock::now() - started).count();
  report.filter_dropped = stage.filter_dropped;
  report.type_dropped = stage.type_dropped;
  report.released = stage.released;
  report.suppressed = stage.suppressed;
  if (report.written > 0) report.mean_delay_seconds = delay_sum / static_cast<double>(report.written);

  if (engine_status != RunStatus::Ok) {
    report.status = engine_status;
    report.error = engine_error;
  } else if (!reader_error.empty() || !writer_error.empty()) {
    report.status = RunStatus::IoError;
    report.error = !writer_error.empty() ? writer_error : reader_error;
  }
  return report;
}

}  // namespace kstream
