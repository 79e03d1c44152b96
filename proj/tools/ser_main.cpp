#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ser/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Speech emotion recognition: training, evaluation and monitoring pipeline"};
  app.require_subcommand(1);

  ser::cli::TrainOptions train_opts;
  std::optional<uint64_t> seed;
  auto* train = app.add_subcommand("train", "Train a model on a directory of labeled WAV clips");
  train->add_option("--config", train_opts.config_path, "Model config file (key=value)")->required();
  train->add_option("--data", train_opts.data_dir, "Dataset root directory")->required();
  train->add_option("--out", train_opts.out_dir, "Output directory")->required();
  train->add_option("--seed", seed, "Override the config seed");
  train->add_option("--epochs", train_opts.epochs, "Training epochs (default 20)");
  train->add_option("--batch", train_opts.batch_size, "Mini-batch size (default 20)");

  std::string params_path, manifest_path, partition = "all";
  std::optional<std::string> eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a trained model against a manifest");
  evaluate->add_option("--params", params_path, "Model parameter file")->required();
  evaluate->add_option("--manifest", manifest_path, "Split manifest (path\\tlabel\\tpartition)")->required();
  evaluate->add_option("--partition", partition, "train | validation | test | all (default all)");
  evaluate->add_option("--out", eval_out, "Also write the report to this path (+.kv)");

  std::string predict_params, wav_path;
  std::optional<std::string> event_log;
  auto* predict = app.add_subcommand("predict", "Classify a single WAV clip");
  predict->add_option("--params", predict_params, "Model parameter file")->required();
  predict->add_option("--wav", wav_path, "Input clip")->required();
  predict->add_option("--log", event_log, "Append the recognized emotion to this analyzer log");

  std::string report_log, report_out;
  std::optional<std::string> report_date;
  auto* report = app.add_subcommand("report", "Render an analyzer log into both export formats");
  report->add_option("--log", report_log, "Analyzer event log")->required();
  report->add_option("--out", report_out, "Text report path; machine records go to <out>.kv")->required();
  report->add_option("--date", report_date, "Restrict to one UTC day (YYYY-MM-DD)");

  std::string count_config;
  auto* param_count = app.add_subcommand("param-count", "Print the trainable parameter count");
  param_count->add_option("--config", count_config, "Model config file")->required();

  CLI11_PARSE(app, argc, argv);

  if (train->parsed()) {
    train_opts.seed = seed;
    return ser::cli::cmd_train(train_opts, std::cout, std::cerr);
  }
  if (evaluate->parsed()) {
    return ser::cli::cmd_evaluate(params_path, manifest_path, partition, eval_out, std::cout,
                                  std::cerr);
  }
  if (predict->parsed()) {
    return ser::cli::cmd_predict(predict_params, wav_path, event_log, std::cout, std::cerr);
  }
  if (report->parsed()) {
    return ser::cli::cmd_report(report_log, report_out, report_date, std::cout, std::cerr);
  }
  if (param_count->parsed()) {
    return ser::cli::cmd_param_count(count_config, std::cout, std::cerr);
  }
  return 1;
}
