#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ser/audio.hpp"
#include "ser/errors.hpp"

// Monitoring side of the system: an append-only log of recognized emotions,
// daily aggregation with change-frequency statistics, advisory flags and a
// report export for a medical-provider consumer. Flags are suggestions routed
// into the report, never autonomous actions.

namespace ser::analyzer {

using audio::EmotionLabel;
using audio::kNumEmotions;

struct EmotionEvent {
  int64_t timestamp = 0;  // UTC seconds since the epoch
  EmotionLabel label = EmotionLabel::Neutral;
  double confidence = 0.0;  // in [0, 1]
  std::string request_id;   // opaque; no tabs or newlines
};

/// "YYYY-MM-DDTHH:MM:SSZ" <-> UTC epoch seconds.
std::string format_timestamp(int64_t epoch_seconds);
int64_t parse_timestamp(const std::string& text);

/// "YYYY-MM-DD" -> epoch seconds of that UTC midnight.
int64_t parse_date(const std::string& date);
std::string format_date(int64_t epoch_seconds);

/// Append-only, line-delimited persistent log:
/// timestamp<TAB>label_code<TAB>confidence<TAB>request_id
/// Timestamps are monotone non-decreasing within one file. Single writer;
/// readers see a prefix-consistent file.
class EventLog {
 public:
  /// Opens (creating if absent) and validates the existing content.
  static EventLog open(const std::string& path);

  /// Durable once returned. Throws on out-of-order timestamps or malformed
  /// events; the log is left unchanged in that case.
  void record(const EmotionEvent& event);

  std::vector<EmotionEvent> read_all() const;

  size_t size() const { return count_; }
  const std::string& path() const { return path_; }

 private:
  EventLog(std::string path, int64_t last, size_t count)
      : path_(std::move(path)), last_timestamp_(last), count_(count) {}
  std::string path_;
  int64_t last_timestamp_;
  size_t count_;
};

struct AdvisoryConfig {
  double fear_share = 0.5;       // R1 fires above this share
  size_t fear_min_events = 3;    // with at least this many events
  double volatility_ratio = 0.7; // R2: change_count / events above this
  size_t volatility_min_events = 10;
};

struct AdvisoryFlag {
  std::string rule;      // "fear-dominant-day" | "high-volatility" | "sadness-persistent"
  std::string evidence;  // the numbers that triggered the rule

  bool operator==(const AdvisoryFlag&) const = default;
};

struct EmotionReport {
  std::string period_start;  // inclusive date
  std::string period_end;    // inclusive date
  std::array<int64_t, kNumEmotions> counts{};
  int64_t events = 0;
  int64_t change_count = 0;  // adjacent label transitions within the period
  std::optional<EmotionLabel> dominant;  // argmax count, ties to the lower code
  std::vector<AdvisoryFlag> flags;

  bool operator==(const EmotionReport&) const = default;
};

/// Rule evaluation over one period's aggregates.
std::vector<AdvisoryFlag> advisory_flags(const std::array<int64_t, kNumEmotions>& counts,
                                         int64_t events, int64_t change_count,
                                         std::optional<EmotionLabel> dominant,
                                         const AdvisoryConfig& cfg = {});

/// Events falling on the given UTC day. An empty day yields an empty report.
EmotionReport daily_report(const std::vector<EmotionEvent>& events, const std::string& date,
                           const AdvisoryConfig& cfg = {});

/// Same aggregation over an inclusive date range.
EmotionReport range_report(const std::vector<EmotionEvent>& events, const std::string& from_date,
                           const std::string& to_date, const AdvisoryConfig& cfg = {});

/// Deterministic serialization. `format` is "text" (summary table) or
/// "machine" (line-delimited key-value records); anything else is an error.
std::string export_report(const EmotionReport& report, const std::string& format);

/// Inverse of the machine format.
EmotionReport parse_report_machine(const std::string& text);

}  // namespace ser::analyzer
