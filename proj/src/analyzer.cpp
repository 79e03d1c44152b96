#include "ser/analyzer.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ser::analyzer {

namespace {

constexpr int64_t kSecondsPerDay = 86400;

// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 +
                       static_cast<unsigned>(d) - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int64_t yy = static_cast<int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

bool valid_civil(int y, int mo, int d, int h, int mi, int s) {
  if (mo < 1 || mo > 12 || d < 1 || d > 31) return false;
  if (h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 59) return false;
  (void)y;
  return true;
}

}  // namespace

std::string format_timestamp(int64_t epoch_seconds) {
  int64_t days = epoch_seconds / kSecondsPerDay;
  int64_t rem = epoch_seconds % kSecondsPerDay;
  if (rem < 0) {
    rem += kSecondsPerDay;
    days -= 1;
  }
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02" PRId64 ":%02" PRId64 ":%02" PRId64 "Z", y, m,
                d, rem / 3600, (rem / 60) % 60, rem % 60);
  return buf;
}

int64_t parse_timestamp(const std::string& text) {
  int y, mo, d, h, mi, s;
  char zone = 0;
  if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c", &y, &mo, &d, &h, &mi, &s, &zone) != 7 ||
      zone != 'Z' || !valid_civil(y, mo, d, h, mi, s)) {
    throw ParseError("timestamp '" + text + "' is not YYYY-MM-DDTHH:MM:SSZ");
  }
  return days_from_civil(y, mo, d) * kSecondsPerDay + h * 3600 + mi * 60 + s;
}

int64_t parse_date(const std::string& date) {
  int y, mo, d;
  if (std::sscanf(date.c_str(), "%4d-%2d-%2d", &y, &mo, &d) != 3 || date.size() != 10 ||
      !valid_civil(y, mo, d, 0, 0, 0)) {
    throw ParseError("date '" + date + "' is not YYYY-MM-DD");
  }
  return days_from_civil(y, mo, d) * kSecondsPerDay;
}

std::string format_date(int64_t epoch_seconds) {
  return format_timestamp(epoch_seconds).substr(0, 10);
}

EventLog EventLog::open(const std::string& path) {
  int64_t last = INT64_MIN;
  size_t count = 0;
  std::ifstream in(path);
  if (in) {
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::istringstream row(line);
      std::string ts;
      if (!std::getline(row, ts, '\t')) {
        throw ParseError(path + ":" + std::to_string(lineno) + ": malformed event line");
      }
      const int64_t t = parse_timestamp(ts);
      if (t < last) {
        throw ParseError(path + ":" + std::to_string(lineno) + ": timestamps out of order");
      }
      last = t;
      ++count;
    }
  } else {
    std::ofstream create(path, std::ios::app);
    if (!create) throw IoError("cannot create event log: " + path);
  }
  return EventLog(path, last, count);
}

void EventLog::record(const EmotionEvent& event) {
  if (event.confidence < 0.0 || event.confidence > 1.0 || !std::isfinite(event.confidence)) {
    throw ValueError("event confidence " + std::to_string(event.confidence) +
                     " outside [0, 1]");
  }
  if (event.request_id.find_first_of("\t\n\r") != std::string::npos) {
    throw ValueError("event request_id must not contain tabs or newlines");
  }
  if (count_ > 0 && event.timestamp < last_timestamp_) {
    throw ValueError("event timestamp " + format_timestamp(event.timestamp) +
                     " earlier than the last logged " + format_timestamp(last_timestamp_));
  }
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw IoError("cannot append to event log: " + path_);
  char conf[32];
  std::snprintf(conf, sizeof(conf), "%.17g", event.confidence);
  out << format_timestamp(event.timestamp) << "\t" << static_cast<int>(event.label) << "\t" << conf
      << "\t" << event.request_id << "\n";
  out.flush();
  if (!out) throw IoError("append failed: " + path_);
  last_timestamp_ = event.timestamp;
  ++count_;
}

std::vector<EmotionEvent> EventLog::read_all() const {
  std::ifstream in(path_);
  if (!in) throw IoError("cannot open event log: " + path_);
  std::vector<EmotionEvent> events;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string ts, code, conf, req;
    if (!std::getline(row, ts, '\t') || !std::getline(row, code, '\t') ||
        !std::getline(row, conf, '\t')) {
      throw ParseError(path_ + ":" + std::to_string(lineno) + ": malformed event line");
    }
    std::getline(row, req, '\t');
    EmotionEvent e;
    e.timestamp = parse_timestamp(ts);
    e.label = audio::label_from_code(std::stoi(code));
    e.confidence = std::stod(conf);
    e.request_id = req;
    events.push_back(std::move(e));
  }
  return events;
}

std::vector<AdvisoryFlag> advisory_flags(const std::array<int64_t, kNumEmotions>& counts,
                                         int64_t events, int64_t change_count,
                                         std::optional<EmotionLabel> dominant,
                                         const AdvisoryConfig& cfg) {
  std::vector<AdvisoryFlag> flags;
  if (events >= static_cast<int64_t>(cfg.fear_min_events)) {
    const int64_t fear = counts[static_cast<size_t>(EmotionLabel::Fear)];
    const double share = static_cast<double>(fear) / static_cast<double>(events);
    if (share > cfg.fear_share) {
      char buf[128];
      std::snprintf(buf, sizeof(buf),
                    "fear share %" PRId64 "/%" PRId64 " = %.3f exceeds %.3f; seek-help suggestion",
                    fear, events, share, cfg.fear_share);
      flags.push_back({"fear-dominant-day", buf});
    }
  }
  if (events >= static_cast<int64_t>(cfg.volatility_min_events)) {
    const double ratio = static_cast<double>(change_count) / static_cast<double>(events);
    if (ratio > cfg.volatility_ratio) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%" PRId64 " changes over %" PRId64 " events = %.3f exceeds %.3f",
                    change_count, events, ratio, cfg.volatility_ratio);
      flags.push_back({"high-volatility", buf});
    }
  }
  if (dominant && *dominant == EmotionLabel::Sadness) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "sadness is the dominant emotion (%" PRId64 " of %" PRId64 " events)",
                  counts[static_cast<size_t>(EmotionLabel::Sadness)], events);
    flags.push_back({"sadness-persistent", buf});
  }
  return flags;
}

EmotionReport range_report(const std::vector<EmotionEvent>& events, const std::string& from_date,
                           const std::string& to_date, const AdvisoryConfig& cfg) {
  const int64_t begin = parse_date(from_date);
  const int64_t end = parse_date(to_date) + kSecondsPerDay;  // inclusive end date
  if (end <= begin) throw ValueError("report range end before start");

  EmotionReport report;
  report.period_start = from_date;
  report.period_end = to_date;
  std::optional<EmotionLabel> prev;
  for (const auto& e : events) {
    if (e.timestamp < begin || e.timestamp >= end) continue;
    report.counts[static_cast<size_t>(e.label)] += 1;
    report.events += 1;
    if (prev && *prev != e.label) report.change_count += 1;
    prev = e.label;
  }
  if (report.events > 0) {
    size_t best = 0;
    for (size_t c = 1; c < kNumEmotions; ++c) {
      if (report.counts[c] > report.counts[best]) best = c;  // ties keep the lower code
    }
    report.dominant = static_cast<EmotionLabel>(static_cast<int>(best));
  }
  report.flags = advisory_flags(report.counts, report.events, report.change_count,
                                report.dominant, cfg);
  return report;
}

EmotionReport daily_report(const std::vector<EmotionEvent>& events, const std::string& date,
                           const AdvisoryConfig& cfg) {
  return range_report(events, date, date, cfg);
}

std::string export_report(const EmotionReport& report, const std::string& format) {
  if (format == "machine") {
    std::ostringstream out;
    out << "period.start\t" << report.period_start << "\n";
    out << "period.end\t" << report.period_end << "\n";
    for (size_t c = 0; c < kNumEmotions; ++c) {
      out << "count." << audio::label_name(static_cast<EmotionLabel>(static_cast<int>(c))) << "\t"
          << report.counts[c] << "\n";
    }
    out << "events\t" << report.events << "\n";
    out << "change_count\t" << report.change_count << "\n";
    out << "dominant\t" << (report.dominant ? audio::label_name(*report.dominant) : "none") << "\n";
    out << "flags\t" << report.flags.size() << "\n";
    for (size_t i = 0; i < report.flags.size(); ++i) {
      out << "flag." << i << ".rule\t" << report.flags[i].rule << "\n";
      out << "flag." << i << ".evidence\t" << report.flags[i].evidence << "\n";
    }
    return out.str();
  }
  if (format == "text") {
    std::ostringstream out;
    out << "Emotion report " << report.period_start;
    if (report.period_end != report.period_start) out << " .. " << report.period_end;
    out << "\n\n";
    out << "events        " << report.events << "\n";
    out << "changes       " << report.change_count << "\n";
    out << "dominant      " << (report.dominant ? audio::label_name(*report.dominant) : "none")
        << "\n\n";
    for (size_t c = 0; c < kNumEmotions; ++c) {
      char buf[48];
      std::snprintf(buf, sizeof(buf), "%-12s %8" PRId64 "\n",
                    audio::label_name(static_cast<EmotionLabel>(static_cast<int>(c))),
                    report.counts[c]);
      out << buf;
    }
    if (report.flags.empty()) {
      out << "\nno advisory flags\n";
    } else {
      out << "\nadvisory flags\n";
      for (const auto& f : report.flags) {
        out << "  [" << f.rule << "] " << f.evidence << "\n";
      }
    }
    return out.str();
  }
  throw ValueError("unknown report format '" + format + "', expected text or machine");
}

EmotionReport parse_report_machine(const std::string& text) {
  EmotionReport report;
  std::istringstream in(text);
  std::string line;
  size_t flag_count = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("machine report line without a tab: " + line);
    const std::string key = line.substr(0, tab);
    const std::string value = line.substr(tab + 1);
    if (key == "period.start") report.period_start = value;
    else if (key == "period.end") report.period_end = value;
    else if (key.rfind("count.", 0) == 0) {
      const EmotionLabel label = audio::label_from_name(key.substr(6));
      report.counts[static_cast<size_t>(label)] = std::stoll(value);
    } else if (key == "events") report.events = std::stoll(value);
    else if (key == "change_count") report.change_count = std::stoll(value);
    else if (key == "dominant") {
      if (value != "none") report.dominant = audio::label_from_name(value);
    } else if (key == "flags") {
      flag_count = static_cast<size_t>(std::stoull(value));
      report.flags.resize(flag_count);
    } else if (key.rfind("flag.", 0) == 0) {
      const size_t dot = key.find('.', 5);
      if (dot == std::string::npos) throw ParseError("bad flag key: " + key);
      const size_t idx = static_cast<size_t>(std::stoull(key.substr(5, dot - 5)));
      if (idx >= report.flags.size()) throw ParseError("flag index out of range: " + key);
      const std::string field = key.substr(dot + 1);
      if (field == "rule") report.flags[idx].rule = value;
      else if (field == "evidence") report.flags[idx].evidence = value;
      else throw ParseError("unknown flag field: " + key);
    } else {
      throw ParseError("unknown machine report key: " + key);
    }
  }
  return report;
}

}  // namespace ser::analyzer
