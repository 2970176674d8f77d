#pragma once

#include <cstring>
#include <filesystem>
#include <memory>
#include <string>

#include "sesa/binio.hpp"
#include "sesa/classifiers.hpp"
#include "sesa/errors.hpp"
#include "sesa/pipeline.hpp"

namespace sesa {

inline constexpr char kModelMagic[] = "sesa-pipeline/1";  // 15 bytes on disk
inline constexpr std::uint32_t kModelSchemaVersion = 1;

// A fitted preprocessing pipeline plus the classifier trained on its output.
struct TrainedBundle {
  FittedPipeline pipeline;
  std::unique_ptr<Model> model;
  std::uint64_t seed = 0;
  PipelineConfig pipeline_config;
};

// Container layout: magic, u32 schema version, u32 section count, sections
// (4-byte tag, u64 length, payload), u32 CRC-32 of every preceding byte.
// Unknown sections are skipped so newer writers stay readable.
inline std::vector<std::uint8_t> serialize_bundle(const TrainedBundle& bundle) {
  require(bundle.model != nullptr, errc::fit_error, "bundle has no classifier");
  ByteWriter w;
  w.bytes(kModelMagic, 15);
  w.u32(kModelSchemaVersion);

  ByteWriter pipe;
  bundle.pipeline.serialize(pipe);
  ByteWriter clsf;
  bundle.model->save(clsf);
  ByteWriter meta;
  meta.u64(bundle.seed);
  meta.f64(bundle.pipeline_config.var_threshold);
  meta.f64(bundle.pipeline_config.pca_energy);

  w.u32(3);
  auto section = [&w](const char tag[5], const ByteWriter& body) {
    w.bytes(tag, 4);
    w.u64(body.size());
    w.bytes(body.data().data(), body.size());
  };
  section("PIPE", pipe);
  section("CLSF", clsf);
  section("META", meta);

  w.u32(crc32(w.data()));
  return std::move(w.data());
}

inline TrainedBundle deserialize_bundle(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= 15 + 4 + 4 + 4, errc::parse_error, "model file too short");
  require(std::memcmp(bytes.data(), kModelMagic, 15) == 0, errc::parse_error,
          "not a model file (bad magic)");

  std::uint32_t stored_crc = 0;
  std::memcpy(&stored_crc, bytes.data() + bytes.size() - 4, 4);
  require(stored_crc == crc32(bytes.data(), bytes.size() - 4), errc::integrity_error,
          "model file checksum mismatch");

  ByteReader r(bytes.data() + 15, bytes.size() - 15 - 4);
  std::uint32_t version = r.u32();
  require(version == kModelSchemaVersion, errc::version_error,
          "unsupported model schema version " + std::to_string(version));

  TrainedBundle bundle;
  bool have_pipe = false, have_clsf = false;
  std::uint32_t n_sections = r.u32();
  for (std::uint32_t s = 0; s < n_sections; ++s) {
    char tag[5] = {};
    for (int i = 0; i < 4; ++i) tag[i] = static_cast<char>(r.u8());
    auto len = r.u64();
    require(len <= r.remaining(), errc::integrity_error, "section overruns file");
    ByteReader body(bytes.data() + 15 + r.pos(), len);
    r.skip(len);
    if (std::strcmp(tag, "PIPE") == 0) {
      bundle.pipeline = FittedPipeline::deserialize(body);
      have_pipe = true;
    } else if (std::strcmp(tag, "CLSF") == 0) {
      bundle.model = load_model(body);
      have_clsf = true;
    } else if (std::strcmp(tag, "META") == 0) {
      bundle.seed = body.u64();
      bundle.pipeline_config.var_threshold = body.f64();
      bundle.pipeline_config.pca_energy = body.f64();
    }
  }
  require(r.remaining() == 0, errc::parse_error, "trailing bytes after sections");
  require(have_pipe, errc::parse_error, "model file lacks a pipeline section");
  require(have_clsf, errc::parse_error, "model file lacks a classifier section");
  require(bundle.model->n_features() == bundle.pipeline.out_dim(), errc::parse_error,
          "classifier width does not match pipeline output");
  return bundle;
}

inline void save_bundle(const TrainedBundle& bundle, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_bundle(bundle));
}

inline TrainedBundle load_bundle(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  return deserialize_bundle(bytes);
}

}  // namespace sesa
