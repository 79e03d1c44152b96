#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace ser::cli {

struct TrainOptions {
  std::string config_path;
  std::string data_dir;
  std::string out_dir;
  std::optional<uint64_t> seed;  // overrides the config seed
  size_t epochs = 20;
  size_t batch_size = 20;
};

/// Scan, split, standardize, build, fit; writes model.params, trainlog.tsv,
/// manifest.tsv and the test-partition report (report.txt / report.kv) under
/// out_dir. Partial outputs are removed on failure.
int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& err);

/// Evaluate a trained model against the clips named in a manifest.
/// `partition` selects "train", "validation", "test" or "all".
int cmd_evaluate(const std::string& params_path, const std::string& manifest_path,
                 const std::string& partition, const std::optional<std::string>& out_path,
                 std::ostream& out, std::ostream& err);

/// Classify one clip; prints the label and the 7-way probability vector.
/// With a log path the recognized emotion is appended as an analyzer event.
int cmd_predict(const std::string& params_path, const std::string& wav_path,
                const std::optional<std::string>& log_path, std::ostream& out, std::ostream& err);

/// Render an analyzer log into both export formats: text to out_path,
/// machine key-value records to out_path + ".kv". Without a date the report
/// covers the log's full day range.
int cmd_report(const std::string& log_path, const std::string& out_path,
               const std::optional<std::string>& date, std::ostream& out, std::ostream& err);

int cmd_param_count(const std::string& config_path, std::ostream& out, std::ostream& err);

}  // namespace ser::cli
