#include "ser/params_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "ser/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "model container assumes a little-endian host");

namespace ser {

namespace {

template <class T>
void write_pod(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <class T>
T read_pod(std::ifstream& in, const std::string& what) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw TruncatedDataError("model file ends inside " + what);
  return v;
}

}  // namespace

void save_model(const Model<float>& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file: " + path);
  out.write(kParamsMagic, sizeof(kParamsMagic));
  write_pod(out, kParamsVersion);

  const std::string cfg = serialize_model_config(model.config);
  write_pod(out, static_cast<uint32_t>(cfg.size()));
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));

  uint32_t count = 0;
  model.params.for_each([&count](const std::string&, const Tensor<float>&) { ++count; });
  write_pod(out, count);

  model.params.for_each([&out](const std::string& name, const Tensor<float>& t) {
    write_pod(out, static_cast<uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod(out, static_cast<uint8_t>(t.rank()));
    for (size_t d = 0; d < t.rank(); ++d) write_pod(out, static_cast<uint64_t>(t.extent(d)));
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.numel() * sizeof(float)));
  });
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

Model<float> load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file: " + path);

  char magic[sizeof(kParamsMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kParamsMagic, sizeof(magic)) != 0) {
    throw MalformedHeaderError("not a model file: " + path);
  }
  const uint32_t version = read_pod<uint32_t>(in, "version");
  if (version != kParamsVersion) {
    throw UnsupportedEncodingError("model file version " + std::to_string(version) +
                                   ", expected " + std::to_string(kParamsVersion));
  }

  const uint32_t cfg_len = read_pod<uint32_t>(in, "config length");
  std::string cfg_text(cfg_len, '\0');
  in.read(cfg_text.data(), cfg_len);
  if (!in) throw TruncatedDataError("model file ends inside config snapshot");

  Model<float> model;
  model.config = parse_model_config(cfg_text);
  Rng dummy(0);
  model.params = build_model<float>(model.config, dummy).params;

  const uint32_t count = read_pod<uint32_t>(in, "tensor count");
  uint32_t expected = 0;
  model.params.for_each([&expected](const std::string&, const Tensor<float>&) { ++expected; });
  if (count != expected) {
    throw ParseError("model file holds " + std::to_string(count) + " tensors, config implies " +
                     std::to_string(expected));
  }

  model.params.for_each([&in](const std::string& name, Tensor<float>& t) {
    const uint16_t name_len = read_pod<uint16_t>(in, "tensor name");
    std::string stored(name_len, '\0');
    in.read(stored.data(), name_len);
    if (!in) throw TruncatedDataError("model file ends inside tensor name");
    if (stored != name) {
      throw ParseError("model file tensor '" + stored + "' where '" + name + "' was expected");
    }
    const uint8_t rank = read_pod<uint8_t>(in, "tensor rank");
    if (rank != t.rank()) {
      throw ShapeError("tensor " + name + " has rank " + std::to_string(rank) + ", expected " +
                       std::to_string(t.rank()));
    }
    for (size_t d = 0; d < t.rank(); ++d) {
      const uint64_t extent = read_pod<uint64_t>(in, "tensor extent");
      if (extent != t.extent(d)) {
        throw ShapeError("tensor " + name + " extent " + std::to_string(extent) +
                         " does not match config-implied " + std::to_string(t.extent(d)));
      }
    }
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(float)));
    if (!in) throw TruncatedDataError("model file ends inside tensor " + name);
  });
  return model;
}

}  // namespace ser
