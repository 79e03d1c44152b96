#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ser/analyzer.hpp"
#include "ser/rng.hpp"

namespace analyzer = ser::analyzer;
namespace fs = std::filesystem;
using analyzer::EmotionEvent;
using analyzer::EmotionLabel;

namespace {

struct TempDir {
  fs::path path;
  TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

EmotionEvent event(int64_t ts, EmotionLabel label, double conf = 0.9,
                   const std::string& id = "r") {
  return {ts, label, conf, id};
}

std::vector<EmotionEvent> events_on_day(const std::string& date,
                                        const std::vector<EmotionLabel>& labels) {
  const int64_t base = analyzer::parse_date(date);
  std::vector<EmotionEvent> out;
  for (size_t i = 0; i < labels.size(); ++i) {
    out.push_back(event(base + 60 * static_cast<int64_t>(i + 1), labels[i]));
  }
  return out;
}

}  // namespace

TEST_CASE("timestamp round trip and parsing") {
  CHECK(analyzer::format_timestamp(0) == "1970-01-01T00:00:00Z");
  CHECK(analyzer::parse_timestamp("1970-01-01T00:00:00Z") == 0);
  CHECK(analyzer::parse_timestamp("2026-08-08T12:34:56Z") ==
        analyzer::parse_date("2026-08-08") + 12 * 3600 + 34 * 60 + 56);

  ser::Rng rng(91);
  for (int trial = 0; trial < 200; ++trial) {
    const int64_t ts = static_cast<int64_t>(rng.below(4102444800ull));  // up to year 2100
    CHECK(analyzer::parse_timestamp(analyzer::format_timestamp(ts)) == ts);
  }

  CHECK_THROWS_AS(analyzer::parse_timestamp("2026-08-08 12:34:56"), ser::ParseError);
  CHECK_THROWS_AS(analyzer::parse_timestamp("2026-13-08T00:00:00Z"), ser::ParseError);
  CHECK_THROWS_AS(analyzer::parse_date("08/08/2026"), ser::ParseError);
}

TEST_CASE("event log: append, ordering, round trip") {
  TempDir dir("ser_analyzer_log");
  const std::string path = (dir.path / "events.log").string();

  auto log = analyzer::EventLog::open(path);
  CHECK(log.size() == 0);
  log.record(event(1000, EmotionLabel::Happiness, 0.75, "req-1"));
  CHECK(log.size() == 1);
  auto events = log.read_all();
  REQUIRE(events.size() == 1);
  CHECK(events[0].timestamp == 1000);
  CHECK(events[0].label == EmotionLabel::Happiness);
  CHECK(events[0].confidence == 0.75);
  CHECK(events[0].request_id == "req-1");

  // equal timestamps allowed, earlier ones rejected with the log unchanged
  log.record(event(1000, EmotionLabel::Fear));
  CHECK_THROWS_AS(log.record(event(999, EmotionLabel::Fear)), ser::ValueError);
  CHECK(log.read_all().size() == 2);

  // malformed events rejected
  CHECK_THROWS_AS(log.record(event(2000, EmotionLabel::Fear, 1.5)), ser::ValueError);
  CHECK_THROWS_AS(log.record({2000, EmotionLabel::Fear, 0.5, "tab\tin id"}), ser::ValueError);
  CHECK(log.read_all().size() == 2);

  // reopening recovers the tail position and keeps appending
  auto reopened = analyzer::EventLog::open(path);
  CHECK(reopened.size() == 2);
  CHECK_THROWS_AS(reopened.record(event(500, EmotionLabel::Anger)), ser::ValueError);
  reopened.record(event(1500, EmotionLabel::Anger));
  CHECK(reopened.read_all().size() == 3);
}

TEST_CASE("event log 1000-append round trip is lossless") {
  TempDir dir("ser_analyzer_bulk");
  const std::string path = (dir.path / "events.log").string();
  auto log = analyzer::EventLog::open(path);

  ser::Rng rng(92);
  std::vector<EmotionEvent> written;
  int64_t ts = 1754600000;
  for (int i = 0; i < 1000; ++i) {
    ts += static_cast<int64_t>(rng.below(1000));
    EmotionEvent e{ts, ser::audio::label_from_code(static_cast<int>(rng.below(7))),
                   rng.uniform01(), "req-" + std::to_string(i)};
    log.record(e);
    written.push_back(e);
  }
  auto events = analyzer::EventLog::open(path).read_all();
  REQUIRE(events.size() == written.size());
  for (size_t i = 0; i < events.size(); ++i) {
    CHECK(events[i].timestamp == written[i].timestamp);
    CHECK(events[i].label == written[i].label);
    CHECK(events[i].confidence == written[i].confidence);  // bit-exact via %.17g
    CHECK(events[i].request_id == written[i].request_id);
  }
}

TEST_CASE("daily_report counts, changes, dominant") {
  // empty day
  auto empty = analyzer::daily_report({}, "2026-08-08");
  CHECK(empty.events == 0);
  CHECK(empty.change_count == 0);
  CHECK_FALSE(empty.dominant.has_value());
  CHECK(empty.flags.empty());

  // happy, happy, sad -> one change, happiness dominant
  auto events = events_on_day("2026-08-08", {EmotionLabel::Happiness, EmotionLabel::Happiness,
                                             EmotionLabel::Sadness});
  auto report = analyzer::daily_report(events, "2026-08-08");
  CHECK(report.events == 3);
  CHECK(report.change_count == 1);
  CHECK(report.counts[static_cast<int>(EmotionLabel::Happiness)] == 2);
  CHECK(report.counts[static_cast<int>(EmotionLabel::Sadness)] == 1);
  REQUIRE(report.dominant.has_value());
  CHECK(*report.dominant == EmotionLabel::Happiness);

  // ties break to the lower class code
  auto tie = analyzer::daily_report(
      events_on_day("2026-08-08", {EmotionLabel::Sadness, EmotionLabel::Anger}), "2026-08-08");
  CHECK(*tie.dominant == EmotionLabel::Anger);

  // fear x3 raises the seek-help rule
  auto fear = analyzer::daily_report(
      events_on_day("2026-08-08", {EmotionLabel::Fear, EmotionLabel::Fear, EmotionLabel::Fear}),
      "2026-08-08");
  REQUIRE(fear.flags.size() == 1);
  CHECK(fear.flags[0].rule == "fear-dominant-day");
  CHECK(fear.flags[0].evidence.find("seek-help") != std::string::npos);

  // events outside the day are filtered out
  auto other_day = events_on_day("2026-08-09", {EmotionLabel::Fear});
  auto merged = events;
  merged.insert(merged.end(), other_day.begin(), other_day.end());
  auto filtered = analyzer::daily_report(merged, "2026-08-08");
  CHECK(filtered.events == 3);
}

TEST_CASE("change_count matches a brute-force recount and ignores confidence") {
  ser::Rng rng(93);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<EmotionLabel> labels;
    const size_t n = 1 + rng.below(60);
    for (size_t i = 0; i < n; ++i) {
      labels.push_back(ser::audio::label_from_code(static_cast<int>(rng.below(7))));
    }
    auto events = events_on_day("2026-08-08", labels);
    for (auto& e : events) e.confidence = rng.uniform01();  // must not matter
    int64_t expected = 0;
    for (size_t i = 1; i < labels.size(); ++i) {
      if (labels[i] != labels[i - 1]) ++expected;
    }
    auto report = analyzer::daily_report(events, "2026-08-08");
    CHECK(report.change_count == expected);
    CHECK(report.change_count <= std::max<int64_t>(0, report.events - 1));
    int64_t total = 0;
    for (auto c : report.counts) total += c;
    CHECK(total == report.events);
  }
}

TEST_CASE("advisory rules fire exactly on their documented thresholds") {
  using L = EmotionLabel;
  auto flags_for = [](const std::vector<L>& labels) {
    return analyzer::daily_report(events_on_day("2026-08-08", labels), "2026-08-08").flags;
  };
  auto has_rule = [](const std::vector<analyzer::AdvisoryFlag>& flags, const char* rule) {
    for (const auto& f : flags) {
      if (f.rule == rule) return true;
    }
    return false;
  };

  // R1 boundary: share must exceed 0.5 strictly
  CHECK_FALSE(has_rule(flags_for({L::Fear, L::Fear, L::Fear, L::Anger, L::Anger, L::Anger}),
                       "fear-dominant-day"));  // 3/6 == 0.5
  CHECK(has_rule(flags_for({L::Fear, L::Fear, L::Fear, L::Fear, L::Anger, L::Anger, L::Anger}),
                 "fear-dominant-day"));  // 4/7 > 0.5
  CHECK(has_rule(flags_for({L::Fear, L::Fear, L::Fear, L::Fear, L::Anger, L::Anger}),
                 "fear-dominant-day"));  // 4/6 > 0.5
  // below minimum support: two fearful events raise nothing
  CHECK_FALSE(has_rule(flags_for({L::Fear, L::Fear}), "fear-dominant-day"));

  // R2: alternating labels over 12 events -> 11/12 > 0.7
  std::vector<L> alternating;
  for (int i = 0; i < 12; ++i) alternating.push_back(i % 2 ? L::Anger : L::Happiness);
  CHECK(has_rule(flags_for(alternating), "high-volatility"));
  // 9 events alternating: below minimum support
  std::vector<L> nine(alternating.begin(), alternating.begin() + 9);
  CHECK_FALSE(has_rule(flags_for(nine), "high-volatility"));
  // 12 events, 8 changes: 8/12 < 0.7
  std::vector<L> calm = {L::Anger, L::Anger, L::Happiness, L::Anger,    L::Anger, L::Happiness,
                         L::Anger, L::Anger, L::Happiness, L::Happiness, L::Anger, L::Anger};
  CHECK_FALSE(has_rule(flags_for(calm), "high-volatility"));

  // R3: sadness dominant
  CHECK(has_rule(flags_for({L::Sadness, L::Sadness, L::Anger}), "sadness-persistent"));
  CHECK_FALSE(has_rule(flags_for({L::Sadness, L::Anger, L::Anger}), "sadness-persistent"));
}

TEST_CASE("range report sums the daily reports") {
  std::vector<EmotionEvent> all;
  const char* days[3] = {"2026-08-06", "2026-08-07", "2026-08-08"};
  ser::Rng rng(94);
  for (const char* day : days) {
    std::vector<EmotionLabel> labels;
    for (size_t i = 0; i < 5 + rng.below(5); ++i) {
      labels.push_back(ser::audio::label_from_code(static_cast<int>(rng.below(7))));
    }
    auto day_events = events_on_day(day, labels);
    all.insert(all.end(), day_events.begin(), day_events.end());
  }
  auto range = analyzer::range_report(all, "2026-08-06", "2026-08-08");
  std::array<int64_t, 7> summed{};
  int64_t events_total = 0;
  for (const char* day : days) {
    auto daily = analyzer::daily_report(all, day);
    for (size_t c = 0; c < 7; ++c) summed[c] += daily.counts[c];
    events_total += daily.events;
  }
  CHECK(range.events == events_total);
  for (size_t c = 0; c < 7; ++c) CHECK(range.counts[c] == summed[c]);
}

TEST_CASE("export formats: schema-complete empty report, machine round trip, bad format") {
  auto empty = analyzer::daily_report({}, "2026-08-08");
  const std::string text = analyzer::export_report(empty, "text");
  CHECK(text.find("events        0") != std::string::npos);
  CHECK(text.find("neutral") != std::string::npos);
  const std::string machine = analyzer::export_report(empty, "machine");
  CHECK(machine.find("count.anger\t0") != std::string::npos);
  CHECK(machine.find("dominant\tnone") != std::string::npos);

  auto events = events_on_day(
      "2026-08-08", {EmotionLabel::Fear, EmotionLabel::Fear, EmotionLabel::Fear,
                     EmotionLabel::Sadness, EmotionLabel::Fear, EmotionLabel::Fear});
  auto report = analyzer::daily_report(events, "2026-08-08");
  REQUIRE_FALSE(report.flags.empty());
  auto parsed = analyzer::parse_report_machine(analyzer::export_report(report, "machine"));
  CHECK(parsed == report);
  auto empty_parsed = analyzer::parse_report_machine(analyzer::export_report(empty, "machine"));
  CHECK(empty_parsed == empty);

  CHECK_THROWS_AS(analyzer::export_report(empty, "xml"), ser::ValueError);
}
