#include "ser/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "ser/rng.hpp"

namespace fs = std::filesystem;

namespace ser::audio {

namespace {

constexpr const char* kLabelNames[kNumEmotions] = {
    "anger", "disgust", "fear", "happiness", "surprise", "sadness", "neutral"};

uint16_t read_u16(const uint8_t* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }

uint32_t read_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

bool fourcc(const uint8_t* p, const char* id) { return std::memcmp(p, id, 4) == 0; }

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

const char* label_name(EmotionLabel label) { return kLabelNames[static_cast<int>(label)]; }

EmotionLabel label_from_code(int code) {
  if (code < 0 || code >= static_cast<int>(kNumEmotions)) {
    throw ValueError("emotion code " + std::to_string(code) + " out of range 0-6");
  }
  return static_cast<EmotionLabel>(code);
}

EmotionLabel label_from_name(const std::string& name) {
  const std::string token = lower(name);
  for (size_t i = 0; i < kNumEmotions; ++i) {
    if (token == kLabelNames[i]) return static_cast<EmotionLabel>(static_cast<int>(i));
  }
  if (token == "ps" || token == "pleasant_surprise") return EmotionLabel::Surprise;
  if (token == "angry") return EmotionLabel::Anger;
  if (token == "sad") return EmotionLabel::Sadness;
  if (token == "happy") return EmotionLabel::Happiness;
  throw LabelError("unrecognized emotion token '" + name + "'");
}

AudioClip parse_wav(std::span<const uint8_t> bytes) {
  if (bytes.size() < 12) throw MalformedHeaderError("WAV shorter than the RIFF header");
  if (!fourcc(bytes.data(), "RIFF")) throw MalformedHeaderError("missing RIFF tag");
  if (!fourcc(bytes.data() + 8, "WAVE")) throw MalformedHeaderError("missing WAVE tag");

  bool have_fmt = false;
  uint16_t format_tag = 0, channels = 0, bits = 0;
  uint32_t sample_rate = 0;
  const uint8_t* data = nullptr;
  uint32_t data_size = 0;

  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const uint8_t* hdr = bytes.data() + pos;
    const uint32_t size = read_u32(hdr + 4);
    pos += 8;
    if (size > bytes.size() - pos) {
      if (fourcc(hdr, "data")) throw TruncatedDataError("data chunk exceeds file size");
      throw TruncatedDataError("chunk exceeds file size");
    }
    if (fourcc(hdr, "fmt ")) {
      if (size < 16) throw MalformedHeaderError("fmt chunk shorter than 16 bytes");
      const uint8_t* f = bytes.data() + pos;
      format_tag = read_u16(f);
      channels = read_u16(f + 2);
      sample_rate = read_u32(f + 4);
      bits = read_u16(f + 14);
      have_fmt = true;
    } else if (fourcc(hdr, "data")) {
      data = bytes.data() + pos;
      data_size = size;
    }
    pos += size + (size & 1);  // chunks are 2-byte aligned
  }

  if (!have_fmt) throw MalformedHeaderError("missing fmt chunk");
  if (format_tag != 1) {
    throw UnsupportedEncodingError("format tag " + std::to_string(format_tag) +
                                   ", only PCM (1) is supported");
  }
  if (bits != 16) {
    throw UnsupportedEncodingError(std::to_string(bits) + "-bit samples, only 16-bit supported");
  }
  if (channels == 0 || sample_rate == 0) throw MalformedHeaderError("fmt declares zero channels or rate");
  if (data == nullptr) throw MalformedHeaderError("missing data chunk");

  const size_t frame_bytes = 2u * channels;
  const size_t frames = data_size / frame_bytes;
  if (frames == 0) throw TruncatedDataError("data chunk holds no complete frame");

  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.resize(frames);
  for (size_t f = 0; f < frames; ++f) {
    float acc = 0;
    for (size_t c = 0; c < channels; ++c) {
      const int16_t s = static_cast<int16_t>(read_u16(data + f * frame_bytes + 2 * c));
      acc += static_cast<float>(s);
    }
    clip.samples[f] = acc / (32768.0f * static_cast<float>(channels));
  }
  return clip;
}

AudioClip load_wav_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open wav file: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  AudioClip clip = parse_wav(bytes);
  clip.source = path;
  return clip;
}

std::vector<uint8_t> encode_wav_pcm16(std::span<const float> samples, uint32_t sample_rate) {
  const uint32_t data_size = static_cast<uint32_t>(samples.size() * 2);
  std::vector<uint8_t> out;
  out.reserve(44 + data_size);
  auto push_u32 = [&out](uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
  };
  auto push_u16 = [&out](uint16_t v) {
    out.push_back(static_cast<uint8_t>(v));
    out.push_back(static_cast<uint8_t>(v >> 8));
  };
  auto push_tag = [&out](const char* tag) { out.insert(out.end(), tag, tag + 4); };

  push_tag("RIFF");
  push_u32(36 + data_size);
  push_tag("WAVE");
  push_tag("fmt ");
  push_u32(16);
  push_u16(1);  // PCM
  push_u16(1);  // mono
  push_u32(sample_rate);
  push_u32(sample_rate * 2);
  push_u16(2);
  push_u16(16);
  push_tag("data");
  push_u32(data_size);
  for (float s : samples) {
    const float clamped = std::clamp(s, -1.0f, 1.0f);
    const long v = std::lround(clamped * 32768.0f);
    push_u16(static_cast<uint16_t>(static_cast<int16_t>(std::clamp(v, -32768L, 32767L))));
  }
  return out;
}

void write_wav_pcm16(const std::string& path, std::span<const float> samples,
                     uint32_t sample_rate) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write wav file: " + path);
  const std::vector<uint8_t> bytes = encode_wav_pcm16(samples, sample_rate);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

EmotionLabel label_from_path(const std::string& path) {
  const std::string stem = fs::path(path).stem().string();
  const size_t last = stem.rfind('_');
  return label_from_name(last == std::string::npos ? stem : stem.substr(last + 1));
}

ScanResult scan_dataset(const std::string& path) {
  if (!fs::exists(path) || !fs::is_directory(path)) {
    throw IoError("dataset directory does not exist: " + path);
  }
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(path)) {
    if (!entry.is_regular_file()) continue;
    if (lower(entry.path().extension().string()) == ".wav") {
      files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());

  ScanResult result;
  for (const auto& file : files) {
    try {
      AudioClip clip = load_wav_file(file);
      clip.label = label_from_path(file);
      result.class_counts[static_cast<size_t>(*clip.label)] += 1;
      result.clips.push_back(std::move(clip));
    } catch (const Error& e) {
      result.failures.push_back({file, e.what()});
    }
  }

  if (result.clips.empty()) {
    result.warnings.push_back("no decodable .wav files under " + path);
  } else {
    const auto [mn, mx] =
        std::minmax_element(result.class_counts.begin(), result.class_counts.end());
    if (*mn != *mx) {
      std::string counts;
      for (size_t i = 0; i < kNumEmotions; ++i) {
        if (i) counts += ", ";
        counts += std::string(kLabelNames[i]) + "=" + std::to_string(result.class_counts[i]);
      }
      result.warnings.push_back("class counts are unbalanced: " + counts);
    }
  }
  return result;
}

DatasetSplit stratified_split(const std::vector<AudioClip>& clips, double train_fraction,
                              double test_fraction, double validation_fraction, uint64_t seed) {
  if (std::abs(train_fraction + test_fraction - 1.0) > 1e-9 || train_fraction < 0 ||
      test_fraction < 0) {
    throw ValueError("split fractions must be nonnegative and sum to 1");
  }
  if (validation_fraction < 0 || validation_fraction >= 1.0) {
    throw ValueError("validation fraction must be in [0, 1)");
  }

  std::array<std::vector<size_t>, kNumEmotions> by_class;
  for (size_t i = 0; i < clips.size(); ++i) {
    if (!clips[i].label) throw ValueError("clip without label at index " + std::to_string(i));
    by_class[static_cast<size_t>(*clips[i].label)].push_back(i);
  }
  for (size_t c = 0; c < kNumEmotions; ++c) {
    if (by_class[c].empty()) {
      throw ValueError(std::string("class '") + kLabelNames[c] + "' has no clips");
    }
  }

  DatasetSplit split;
  split.seed = seed;
  split.train_fraction = train_fraction;
  split.test_fraction = test_fraction;
  split.validation_fraction = validation_fraction;

  Rng rng(seed);
  for (auto& group : by_class) {
    for (size_t i = group.size(); i-- > 1;) {
      std::swap(group[i], group[rng.below(i + 1)]);
    }
    const size_t n = group.size();
    const size_t n_test = static_cast<size_t>(std::llround(test_fraction * static_cast<double>(n)));
    const size_t n_train_total = n - n_test;
    const size_t n_val = static_cast<size_t>(
        std::llround(validation_fraction * static_cast<double>(n_train_total)));
    for (size_t i = 0; i < n; ++i) {
      if (i < n_test) split.test.push_back(group[i]);
      else if (i < n_test + n_val) split.validation.push_back(group[i]);
      else split.train.push_back(group[i]);
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest: " + path);
  for (const auto& e : entries) {
    out << e.path << "\t" << label_name(e.label) << "\t" << e.partition << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  std::vector<ManifestEntry> entries;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const size_t t1 = line.find('\t');
    const size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw ParseError("manifest line " + std::to_string(lineno) + " is not path\\tlabel\\tpartition");
    }
    entries.push_back({line.substr(0, t1), label_from_name(line.substr(t1 + 1, t2 - t1 - 1)),
                       line.substr(t2 + 1)});
  }
  return entries;
}

}  // namespace ser::audio
