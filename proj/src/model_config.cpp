#include "ser/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ser/errors.hpp"

namespace ser {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

size_t parse_size(const std::string& key, const std::string& value) {
  try {
    long long v = std::stoll(value);
    if (v < 0) throw ValueError(key + " must be nonnegative, got " + value);
    return static_cast<size_t>(v);
  } catch (const ValueError&) {
    throw;
  } catch (const std::exception&) {
    throw ValueError("config key " + key + " expects an integer, got '" + value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ValueError("config key " + key + " expects a number, got '" + value + "'");
  }
}

}  // namespace

ModelConfig parse_model_config(const std::string& text) {
  ModelConfig cfg;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    size_t eq = s.find('=');
    if (eq == std::string::npos) {
      throw ValueError("config line " + std::to_string(lineno) + " is not key=value: '" + s + "'");
    }
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (key == "input_samples") cfg.input_samples = parse_size(key, value);
    else if (key == "conv_kernels") cfg.conv_kernels = parse_size(key, value);
    else if (key == "conv_kernel_size") cfg.conv_kernel_size = parse_size(key, value);
    else if (key == "dropout_rate") cfg.dropout_rate = parse_double(key, value);
    else if (key == "pool_size") cfg.pool_size = parse_size(key, value);
    else if (key == "pool_stride") cfg.pool_stride = parse_size(key, value);
    else if (key == "gru_layers") cfg.gru_layers = parse_size(key, value);
    else if (key == "gru_units") cfg.gru_units = parse_size(key, value);
    else if (key == "gru_steps") cfg.gru_steps = parse_size(key, value);
    else if (key == "dense_units") cfg.dense_units = parse_size(key, value);
    else if (key == "num_classes") cfg.num_classes = parse_size(key, value);
    else if (key == "precision") cfg.precision = value;
    else if (key == "seed") cfg.seed = static_cast<uint64_t>(std::stoull(value));
    else throw ValueError("unknown config key '" + key + "'");
  }
  validate_model_config(cfg);
  return cfg;
}

ModelConfig load_model_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model_config(buf.str());
}

std::string serialize_model_config(const ModelConfig& cfg) {
  std::ostringstream out;
  out << "input_samples=" << cfg.input_samples << "\n";
  out << "conv_kernels=" << cfg.conv_kernels << "\n";
  out << "conv_kernel_size=" << cfg.conv_kernel_size << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", cfg.dropout_rate);
  out << "dropout_rate=" << buf << "\n";
  out << "pool_size=" << cfg.pool_size << "\n";
  out << "pool_stride=" << cfg.pool_stride << "\n";
  out << "gru_layers=" << cfg.gru_layers << "\n";
  out << "gru_units=" << cfg.gru_units << "\n";
  out << "gru_steps=" << cfg.gru_steps << "\n";
  out << "dense_units=" << cfg.dense_units << "\n";
  out << "num_classes=" << cfg.num_classes << "\n";
  out << "precision=" << cfg.precision << "\n";
  out << "seed=" << cfg.seed << "\n";
  return out.str();
}

void validate_model_config(const ModelConfig& cfg) {
  auto positive = [](size_t v, const char* name) {
    if (v == 0) throw ValueError(std::string("config ") + name + " must be positive");
  };
  positive(cfg.input_samples, "input_samples");
  positive(cfg.conv_kernels, "conv_kernels");
  positive(cfg.conv_kernel_size, "conv_kernel_size");
  positive(cfg.pool_size, "pool_size");
  positive(cfg.pool_stride, "pool_stride");
  positive(cfg.gru_layers, "gru_layers");
  positive(cfg.gru_units, "gru_units");
  positive(cfg.gru_steps, "gru_steps");
  positive(cfg.dense_units, "dense_units");
  if (cfg.num_classes < 2) throw ValueError("config num_classes must be >= 2");
  if (!std::isfinite(cfg.dropout_rate) || cfg.dropout_rate < 0.0 || cfg.dropout_rate >= 1.0) {
    throw ValueError("config dropout_rate must be in [0, 1)");
  }
  if (cfg.precision != "f32" && cfg.precision != "f64") {
    throw ValueError("config precision must be f32 or f64, got '" + cfg.precision + "'");
  }
}

}  // namespace ser
