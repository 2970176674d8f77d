#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "sesa/audio.hpp"
#include "sesa/dataset.hpp"
#include "sesa/random.hpp"

namespace sesa {

// How many files to generate per class and split.
struct SynthSpec {
  int train_per_class = 40;
  int test_per_class = 10;
  int sample_rate = 16000;
};

namespace detail {

// Per-class signal signatures. Each keeps energy in every 200 ms frame so
// frame-level labels stay meaningful.
inline std::vector<double> synth_gunshot(Rng& rng, std::size_t n, int sr) {
  std::vector<double> x(n, 0.0);
  for (auto& s : x) s = 0.004 * rng.normal();  // faint floor between bursts
  double t = rng.uniform(0.0, 0.04);
  while (t * sr < static_cast<double>(n)) {
    auto start = static_cast<std::size_t>(t * sr);
    double tau = rng.uniform(0.015, 0.040) * sr;  // decay in samples
    double amp = rng.uniform(0.5, 0.9);
    auto burst_len = static_cast<std::size_t>(6.0 * tau);
    for (std::size_t i = 0; i < burst_len && start + i < n; ++i) {
      x[start + i] += amp * std::exp(-static_cast<double>(i) / tau) * rng.normal() * 0.5;
    }
    if (start < n) x[start] = amp;  // sharp attack
    t += rng.uniform(0.12, 0.18);   // bursts denser than one hop
  }
  return x;
}

inline std::vector<double> synth_explosion(Rng& rng, std::size_t n, int sr) {
  std::vector<double> x(n, 0.0);
  double cutoff = rng.uniform(150.0, 300.0);
  double a = std::exp(-6.283185307179586 * cutoff / sr);  // one-pole low-pass
  double tau = rng.uniform(0.4, 0.9) * sr;
  auto boom = static_cast<std::size_t>(rng.uniform(0.05, 0.20) * sr);
  double lp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double env = 0.03;  // sustained rumble
    if (i >= boom) env += 0.9 * std::exp(-static_cast<double>(i - boom) / tau);
    lp = a * lp + (1.0 - a) * rng.normal();
    x[i] = env * lp * 6.0;
    if (x[i] > 0.95) x[i] = 0.95;
    if (x[i] < -0.95) x[i] = -0.95;
  }
  return x;
}

inline std::vector<double> synth_siren(Rng& rng, std::size_t n, int sr) {
  std::vector<double> x(n, 0.0);
  double f0 = rng.uniform(700.0, 1000.0);
  double df = rng.uniform(200.0, 350.0);
  double rate = rng.uniform(2.0, 3.5);  // sweep cycles per second
  double lfo_phase = rng.uniform(0.0, 6.283185307179586);
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double tt = static_cast<double>(i) / sr;
    double f = f0 + df * std::sin(6.283185307179586 * rate * tt + lfo_phase);
    phase += 6.283185307179586 * f / sr;
    x[i] = 0.55 * std::sin(phase) + 0.01 * rng.normal();
  }
  return x;
}

inline std::vector<double> synth_casual(Rng& rng, std::size_t n, int sr) {
  std::vector<double> x(n, 0.0);
  int kind = static_cast<int>(rng.below(3));
  double f1 = rng.uniform(2500.0, 5000.0);
  double f2 = f1 * rng.uniform(1.2, 1.5);
  double am = rng.uniform(1.0, 4.0);
  for (std::size_t i = 0; i < n; ++i) {
    double tt = static_cast<double>(i) / sr;
    double tone = 0.35 * std::sin(6.283185307179586 * f1 * tt);
    if (kind >= 1) tone += 0.2 * std::sin(6.283185307179586 * f2 * tt + 1.0);
    double mod = kind == 2 ? 0.6 + 0.4 * std::sin(6.283185307179586 * am * tt) : 1.0;
    x[i] = mod * tone + 0.05 * rng.normal();
  }
  return x;
}

inline std::vector<double> synth_class(Label label, Rng& rng, std::size_t n, int sr) {
  switch (label) {
    case Label::gunshot: return synth_gunshot(rng, n, sr);
    case Label::explosion: return synth_explosion(rng, n, sr);
    case Label::siren: return synth_siren(rng, n, sr);
    case Label::casual: return synth_casual(rng, n, sr);
  }
  return {};
}

}  // namespace detail

// Deterministic synthetic corpus: dest/{train,test}/{class}/{class}_NNN.wav
// plus a manifest.csv at dest. Same seed, byte-identical output.
inline DatasetManifest synth_corpus(const std::filesystem::path& dest, std::uint64_t seed,
                                    const SynthSpec& spec = {}) {
  namespace fs = std::filesystem;
  require(spec.train_per_class >= 1 && spec.test_per_class >= 1, errc::parameter_error,
          "need at least one file per class and split");
  DatasetManifest m;
  m.root = dest;
  for (int split_i = 0; split_i < 2; ++split_i) {
    Split split = split_i == 0 ? Split::train : Split::test;
    int count = split_i == 0 ? spec.train_per_class : spec.test_per_class;
    for (int class_i = 0; class_i < kNumClasses; ++class_i) {
      auto label = static_cast<Label>(class_i);
      fs::path dir = dest / split_name(split) / label_name(label);
      fs::create_directories(dir);
      for (int k = 0; k < count; ++k) {
        std::uint64_t stream =
            (static_cast<std::uint64_t>(split_i) << 40) |
            (static_cast<std::uint64_t>(class_i) << 32) | static_cast<std::uint64_t>(k);
        Rng rng = Rng::derive(seed, stream);
        double dur = rng.uniform(1.0, 4.0);
        auto n = static_cast<std::size_t>(dur * spec.sample_rate);
        AudioClip clip;
        clip.sample_rate = spec.sample_rate;
        clip.samples = detail::synth_class(label, rng, n, spec.sample_rate);
        char name[64];
        std::snprintf(name, sizeof name, "%s_%03d.wav", label_name(label), k);
        write_file_atomic(dir / name, encode_wav_u8(clip));
        ManifestEntry e;
        e.path = (fs::path(split_name(split)) / label_name(label) / name).generic_string();
        e.split = split;
        e.label = label;
        e.source_id = e.path;
        m.entries.push_back(std::move(e));
      }
    }
  }
  std::sort(m.entries.begin(), m.entries.end(), [](const auto& a, const auto& b) {
    return std::tie(a.split, a.path) < std::tie(b.split, b.path);
  });
  write_manifest_csv(m, dest / "manifest.csv");
  return m;
}

}  // namespace sesa
