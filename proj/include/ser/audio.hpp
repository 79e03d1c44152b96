#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ser/errors.hpp"
#include "ser/tensor.hpp"

// Raw-waveform ingestion: 16-bit PCM WAV decoding, TESS-style directory
// scanning, filename labeling, length standardization and stratified
// splitting. No feature preprocessing happens here; the model consumes the
// waveform directly.

namespace ser::audio {

/// Emotion classes with stable numeric codes 0-6, matching the confusion
/// matrix indexing everywhere downstream.
enum class EmotionLabel : int {
  Anger = 0,
  Disgust = 1,
  Fear = 2,
  Happiness = 3,
  Surprise = 4,
  Sadness = 5,
  Neutral = 6,
};

inline constexpr size_t kNumEmotions = 7;

const char* label_name(EmotionLabel label);
EmotionLabel label_from_code(int code);  // throws ValueError when out of range
EmotionLabel label_from_name(const std::string& name);

struct AudioClip {
  std::vector<float> samples;  // in [-1, 1]
  uint32_t sample_rate = 0;    // Hz
  std::optional<EmotionLabel> label;
  std::string source;  // path, empty for in-memory clips
};

/// Decode a RIFF/WAVE container holding 16-bit PCM. Multi-channel input is
/// downmixed to mono by the per-frame mean; integer samples map to [-1, 1]
/// via s / 32768.
AudioClip parse_wav(std::span<const uint8_t> bytes);
AudioClip load_wav_file(const std::string& path);

/// Minimal mono 16-bit PCM writer; floats are clamped to [-1, 1] and rounded.
std::vector<uint8_t> encode_wav_pcm16(std::span<const float> samples, uint32_t sample_rate);
void write_wav_pcm16(const std::string& path, std::span<const float> samples,
                     uint32_t sample_rate);

/// Extract the emotion from the final underscore-delimited token of the
/// filename (TESS convention), case-insensitive. Recognized aliases:
/// "ps"/"pleasant_surprise" -> surprise, "angry" -> anger, "sad" -> sadness,
/// "happy" -> happiness; canonical names are accepted too.
EmotionLabel label_from_path(const std::string& path);

struct ScanFailure {
  std::string path;
  std::string message;
};

struct ScanResult {
  std::vector<AudioClip> clips;  // ordered lexicographically by path
  std::vector<ScanFailure> failures;
  std::array<size_t, kNumEmotions> class_counts{};
  std::vector<std::string> warnings;
};

/// Recursively collects .wav files under root_dir, parses and labels each.
/// Per-file failures are recorded, not fatal; a missing directory is.
ScanResult scan_dataset(const std::string& path);

struct DatasetSplit {
  std::vector<size_t> train, validation, test;  // indices into the scanned clip list
  uint64_t seed = 0;
  double train_fraction = 0.8;
  double test_fraction = 0.2;
  double validation_fraction = 0.0;  // share carved out of train, per class
};

/// Per-class shuffle with a seeded generator, then proportional assignment.
/// train_fraction + test_fraction must equal 1; the validation share is taken
/// from each class's train portion afterwards.
DatasetSplit stratified_split(const std::vector<AudioClip>& clips, double train_fraction,
                              double test_fraction, double validation_fraction, uint64_t seed);

/// Fixed-shape model input: longer clips are center-cropped, shorter ones
/// zero-padded symmetrically. Output is [target_samples x 1].
template <class S = float>
Tensor<S> standardize_length(const AudioClip& clip, size_t target_samples) {
  if (target_samples == 0) throw ValueError("standardize_length: target must be >= 1");
  Tensor<S> out({target_samples, 1});
  const size_t len = clip.samples.size();
  if (len >= target_samples) {
    const size_t start = (len - target_samples) / 2;
    for (size_t i = 0; i < target_samples; ++i) {
      out[i] = static_cast<S>(clip.samples[start + i]);
    }
  } else {
    const size_t left = (target_samples - len) / 2;
    for (size_t i = 0; i < len; ++i) out[left + i] = static_cast<S>(clip.samples[i]);
  }
  return out;
}

struct ManifestEntry {
  std::string path;
  EmotionLabel label;
  std::string partition;  // "train" | "validation" | "test"
};

/// Split manifest: one "path<TAB>label<TAB>partition" line per clip.
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::string& path);

}  // namespace ser::audio
