#include "ser/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "ser/analyzer.hpp"
#include "ser/audio.hpp"
#include "ser/metrics.hpp"
#include "ser/model.hpp"
#include "ser/params_io.hpp"
#include "ser/train.hpp"

namespace fs = std::filesystem;

namespace ser::cli {

namespace {

std::vector<std::string> emotion_names() {
  std::vector<std::string> names;
  for (size_t c = 0; c < audio::kNumEmotions; ++c) {
    names.push_back(audio::label_name(static_cast<audio::EmotionLabel>(static_cast<int>(c))));
  }
  return names;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

/// Evaluation over standardized clips; returns the confusion matrix.
metrics::ConfusionMatrix evaluate_clips(const Model<float>& model,
                                        const std::vector<Sample<float>>& samples) {
  if (samples.empty()) throw ValueError("no samples to evaluate");
  std::vector<int> truth, predicted;
  ModelCache<float> cache;
  for (const auto& s : samples) {
    truth.push_back(s.label);
    model_forward_into(model, s.input, /*train=*/false, nullptr, cache);
    predicted.push_back(static_cast<int>(argmax(cache.probs)));
  }
  return metrics::build_confusion(truth, predicted, model.config.num_classes);
}

template <class S>
std::vector<Sample<S>> standardize_set(const std::vector<audio::AudioClip>& clips,
                                       const std::vector<size_t>& indices, size_t target) {
  std::vector<Sample<S>> out;
  out.reserve(indices.size());
  for (size_t i : indices) {
    out.push_back({audio::standardize_length<S>(clips[i], target),
                   static_cast<int>(*clips[i].label)});
  }
  return out;
}

/// Removes the named outputs; used when a command fails midway.
class OutputGuard {
 public:
  void track(const std::string& path) { paths_.push_back(path); }
  void keep() { paths_.clear(); }
  ~OutputGuard() {
    for (const auto& p : paths_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

 private:
  std::vector<std::string> paths_;
};

template <class S>
int run_training(const ModelConfig& cfg, const TrainOptions& options,
                 const audio::ScanResult& scan, const audio::DatasetSplit& split,
                 std::ostream& out) {
  OutputGuard guard;
  const std::string params_path = (fs::path(options.out_dir) / "model.params").string();
  const std::string log_path = (fs::path(options.out_dir) / "trainlog.tsv").string();
  const std::string manifest_path = (fs::path(options.out_dir) / "manifest.tsv").string();
  const std::string report_txt = (fs::path(options.out_dir) / "report.txt").string();
  const std::string report_kv = (fs::path(options.out_dir) / "report.kv").string();
  for (const auto& p : {params_path, log_path, manifest_path, report_txt, report_kv}) {
    guard.track(p);
  }

  std::vector<audio::ManifestEntry> manifest;
  auto append_entries = [&](const std::vector<size_t>& idx, const char* partition) {
    for (size_t i : idx) {
      manifest.push_back({scan.clips[i].source, *scan.clips[i].label, partition});
    }
  };
  append_entries(split.train, "train");
  append_entries(split.validation, "validation");
  append_entries(split.test, "test");
  audio::write_manifest(manifest_path, manifest);

  auto train_set = standardize_set<S>(scan.clips, split.train, cfg.input_samples);
  auto val_set = standardize_set<S>(scan.clips, split.validation, cfg.input_samples);
  auto test_set = standardize_set<S>(scan.clips, split.test, cfg.input_samples);

  Rng rng(cfg.seed);
  Model<S> model = build_model<S>(cfg, rng);
  out << "training on " << train_set.size() << " clips (" << val_set.size() << " validation, "
      << test_set.size() << " test), " << param_count(cfg) << " parameters\n";

  FitConfig fit_cfg;
  fit_cfg.epochs = options.epochs;
  fit_cfg.batch_size = options.batch_size;
  fit_cfg.seed = cfg.seed;
  TrainRunLog log = fit(model, train_set, val_set, fit_cfg);
  write_train_log(log, log_path);

  Model<float> to_save = convert_model<float>(model);
  save_model(to_save, params_path);

  const auto names = emotion_names();
  metrics::ConfusionMatrix cm = evaluate_clips(to_save, standardize_set<float>(
                                                            scan.clips, split.test, cfg.input_samples));
  write_text_file(report_txt, metrics::render_report_text(cm, names));
  write_text_file(report_kv, metrics::render_report_kv(cm, names));

  const auto summary = metrics::overall_summary(cm);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.5f", summary.accuracy_micro);
  out << "test accuracy " << buf << "; outputs in " << options.out_dir << "\n";
  guard.keep();
  return 0;
}

}  // namespace

int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& err) {
  try {
    ModelConfig cfg = load_model_config(options.config_path);
    if (options.seed) cfg.seed = *options.seed;
    if (cfg.num_classes != audio::kNumEmotions) {
      throw ValueError("training on the emotion corpus requires num_classes=7");
    }

    audio::ScanResult scan = audio::scan_dataset(options.data_dir);
    for (const auto& w : scan.warnings) err << "warning: " << w << "\n";
    if (!scan.failures.empty()) {
      err << "warning: " << scan.failures.size() << " file(s) failed to decode\n";
      for (const auto& f : scan.failures) err << "  " << f.path << ": " << f.message << "\n";
    }
    audio::DatasetSplit split = audio::stratified_split(scan.clips, 0.8, 0.2, 0.1, cfg.seed);

    fs::create_directories(options.out_dir);
    if (cfg.precision == "f64") {
      return run_training<double>(cfg, options, scan, split, out);
    }
    return run_training<float>(cfg, options, scan, split, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_evaluate(const std::string& params_path, const std::string& manifest_path,
                 const std::string& partition, const std::optional<std::string>& out_path,
                 std::ostream& out, std::ostream& err) {
  try {
    Model<float> model = load_model(params_path);
    std::vector<audio::ManifestEntry> manifest = audio::read_manifest(manifest_path);

    std::vector<Sample<float>> samples;
    for (const auto& entry : manifest) {
      if (partition != "all" && entry.partition != partition) continue;
      audio::AudioClip clip = audio::load_wav_file(entry.path);
      samples.push_back({audio::standardize_length<float>(clip, model.config.input_samples),
                         static_cast<int>(entry.label)});
    }
    if (samples.empty()) {
      throw ValueError("manifest holds no clips for partition '" + partition + "'");
    }

    metrics::ConfusionMatrix cm = evaluate_clips(model, samples);
    const std::string text = metrics::render_report_text(cm, emotion_names());
    out << text;
    if (out_path) {
      write_text_file(*out_path, text);
      write_text_file(*out_path + ".kv", metrics::render_report_kv(cm, emotion_names()));
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_predict(const std::string& params_path, const std::string& wav_path,
                const std::optional<std::string>& log_path, std::ostream& out, std::ostream& err) {
  try {
    Model<float> model = load_model(params_path);
    audio::AudioClip clip = audio::load_wav_file(wav_path);
    Tensor<float> input = audio::standardize_length<float>(clip, model.config.input_samples);
    Tensor<float> probs = model_predict(model, input);
    const size_t label = argmax(probs);

    out << audio::label_name(audio::label_from_code(static_cast<int>(label))) << "\n";
    char buf[64];
    for (size_t c = 0; c < probs.numel(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.6f", static_cast<double>(probs[c]));
      out << audio::label_name(audio::label_from_code(static_cast<int>(c))) << "\t" << buf << "\n";
    }

    if (log_path) {
      analyzer::EventLog log = analyzer::EventLog::open(*log_path);
      analyzer::EmotionEvent event;
      const auto now = std::chrono::system_clock::now();
      event.timestamp = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
      event.label = audio::label_from_code(static_cast<int>(label));
      event.confidence = static_cast<double>(probs[label]);
      std::snprintf(buf, sizeof(buf), "req-%llx",
                    static_cast<unsigned long long>(
                        std::chrono::duration_cast<std::chrono::nanoseconds>(now.time_since_epoch())
                            .count()));
      event.request_id = buf;
      log.record(event);
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_report(const std::string& log_path, const std::string& out_path,
               const std::optional<std::string>& date, std::ostream& out, std::ostream& err) {
  try {
    analyzer::EventLog log = analyzer::EventLog::open(log_path);
    std::vector<analyzer::EmotionEvent> events = log.read_all();

    analyzer::EmotionReport report;
    if (date) {
      report = analyzer::daily_report(events, *date);
    } else if (events.empty()) {
      const std::string today = analyzer::format_date(0);
      report = analyzer::daily_report(events, today);
    } else {
      report = analyzer::range_report(events, analyzer::format_date(events.front().timestamp),
                                      analyzer::format_date(events.back().timestamp));
    }
    write_text_file(out_path, analyzer::export_report(report, "text"));
    write_text_file(out_path + ".kv", analyzer::export_report(report, "machine"));
    out << "report over " << report.events << " event(s) written to " << out_path << " and "
        << out_path << ".kv\n";
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_param_count(const std::string& config_path, std::ostream& out, std::ostream& err) {
  try {
    const ModelConfig cfg = load_model_config(config_path);
    out << param_count(cfg) << "\n";
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ser::cli
