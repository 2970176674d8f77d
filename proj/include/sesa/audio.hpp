#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sesa/binio.hpp"
#include "sesa/errors.hpp"
#include "sesa/matrix.hpp"

namespace sesa {

struct AudioClip {
  std::vector<double> samples;  // mono, amplitudes in [-1, 1)
  int sample_rate = 0;          // Hz

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

struct FrameSet {
  RowMatrix frames;  // n_frames x frame_len
  int frame_len = 0;
  int hop = 0;
  int sample_rate = 0;
};

namespace detail {

inline std::uint32_t fourcc(const char* s) {
  return static_cast<std::uint32_t>(static_cast<std::uint8_t>(s[0])) |
         (static_cast<std::uint32_t>(static_cast<std::uint8_t>(s[1])) << 8) |
         (static_cast<std::uint32_t>(static_cast<std::uint8_t>(s[2])) << 16) |
         (static_cast<std::uint32_t>(static_cast<std::uint8_t>(s[3])) << 24);
}

}  // namespace detail

// Decode a RIFF/WAVE byte stream. PCM only (format code 1), u8 or i16
// samples; multi-channel input is averaged to mono. u8 sample s maps to
// (s - 128) / 128, i16 sample s to s / 32768.
inline AudioClip decode_wav(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes.data(), bytes.size());
  try {
    require(bytes.size() >= 12, errc::parse_error, "stream shorter than a RIFF header");
    require(r.u32() == detail::fourcc("RIFF"), errc::parse_error, "missing RIFF tag");
    r.u32();  // declared RIFF size; chunk walk below validates real bounds
    require(r.u32() == detail::fourcc("WAVE"), errc::parse_error, "missing WAVE tag");

    bool have_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const std::uint8_t* data_ptr = nullptr;
    std::uint32_t data_len = 0;

    while (r.remaining() >= 8) {
      std::uint32_t id = r.u32();
      std::uint32_t size = r.u32();
      require(size <= r.remaining(), errc::parse_error, "chunk size exceeds stream");
      std::size_t chunk_start = r.pos();
      if (id == detail::fourcc("fmt ")) {
        require(size >= 16, errc::parse_error, "fmt chunk too small");
        format = r.u16();
        channels = r.u16();
        rate = r.u32();
        r.u32();  // byte rate
        r.u16();  // block align
        bits = r.u16();
        have_fmt = true;
      } else if (id == detail::fourcc("data")) {
        data_ptr = bytes.data() + chunk_start;
        data_len = size;
      }
      r.skip(chunk_start + size - r.pos());
      if (size % 2 == 1 && r.remaining() > 0) r.skip(1);  // chunks are word-aligned
    }

    require(have_fmt, errc::parse_error, "no fmt chunk");
    require(data_ptr != nullptr, errc::parse_error, "no data chunk");
    require(format == 1, errc::unsupported_format,
            "non-PCM format code " + std::to_string(format));
    require(bits == 8 || bits == 16, errc::unsupported_format,
            "unsupported bit depth " + std::to_string(bits));
    require(channels >= 1, errc::parse_error, "zero channels");
    require(rate >= 1, errc::parse_error, "zero sample rate");
    require(data_len > 0, errc::empty_audio, "empty data chunk");

    std::size_t bytes_per_sample = bits / 8;
    std::size_t stride = bytes_per_sample * channels;
    std::size_t n_frames = data_len / stride;
    require(n_frames > 0, errc::empty_audio, "data chunk shorter than one sample frame");

    AudioClip clip;
    clip.sample_rate = static_cast<int>(rate);
    clip.samples.resize(n_frames);
    for (std::size_t i = 0; i < n_frames; ++i) {
      double acc = 0.0;
      const std::uint8_t* p = data_ptr + i * stride;
      for (std::uint16_t c = 0; c < channels; ++c) {
        if (bits == 8) {
          acc += (static_cast<int>(p[c]) - 128) / 128.0;
        } else {
          auto v = static_cast<std::int16_t>(p[2 * c] | (p[2 * c + 1] << 8));
          acc += v / 32768.0;
        }
      }
      clip.samples[i] = acc / channels;
    }
    return clip;
  } catch (const Error& e) {
    if (e.code() == errc::integrity_error)
      raise(errc::parse_error, "truncated WAV stream");
    throw;
  }
}

inline AudioClip decode_wav_file(const std::filesystem::path& path) {
  return decode_wav(read_file_bytes(path));
}

namespace detail {

inline std::vector<std::uint8_t> encode_wav(const AudioClip& clip, int bits) {
  ByteWriter w;
  std::uint32_t n = static_cast<std::uint32_t>(clip.samples.size());
  std::uint32_t bytes_per = bits / 8;
  std::uint32_t data_len = n * bytes_per;
  w.u32(fourcc("RIFF"));
  w.u32(36 + data_len);
  w.u32(fourcc("WAVE"));
  w.u32(fourcc("fmt "));
  w.u32(16);
  w.u16(1);  // PCM
  w.u16(1);  // mono
  w.u32(static_cast<std::uint32_t>(clip.sample_rate));
  w.u32(static_cast<std::uint32_t>(clip.sample_rate) * bytes_per);
  w.u16(static_cast<std::uint16_t>(bytes_per));
  w.u16(static_cast<std::uint16_t>(bits));
  w.u32(fourcc("data"));
  w.u32(data_len);
  for (double s : clip.samples) {
    if (bits == 8) {
      long q = std::lround(s * 128.0 + 128.0);
      w.u8(static_cast<std::uint8_t>(std::clamp(q, 0L, 255L)));
    } else {
      long q = std::lround(s * 32768.0);
      w.u16(static_cast<std::uint16_t>(
          static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L))));
    }
  }
  if (data_len % 2 == 1) w.u8(0);
  return std::move(w.data());
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_wav_u8(const AudioClip& clip) {
  return detail::encode_wav(clip, 8);
}

inline std::vector<std::uint8_t> encode_wav_i16(const AudioClip& clip) {
  return detail::encode_wav(clip, 16);
}

// Linear-interpolation resample. Identity (bit-exact copy) when rates match.
inline AudioClip normalize_rate(const AudioClip& clip, int target_hz) {
  require(target_hz > 0, errc::parameter_error, "target rate must be positive");
  if (clip.sample_rate == target_hz) return clip;  // bit-identical
  if (clip.samples.size() <= 1) {
    // degenerate one-sample (or empty) clips pass through with the new rate
    AudioClip out = clip;
    out.sample_rate = target_hz;
    return out;
  }
  double ratio = static_cast<double>(clip.sample_rate) / target_hz;
  auto n_out = static_cast<std::size_t>(std::max<long long>(
      1, std::llround(static_cast<double>(clip.samples.size()) * target_hz /
                      clip.sample_rate)));
  AudioClip out;
  out.sample_rate = target_hz;
  out.samples.resize(n_out);
  std::size_t last = clip.samples.size() - 1;
  for (std::size_t i = 0; i < n_out; ++i) {
    double pos = i * ratio;
    auto i0 = static_cast<std::size_t>(pos);
    if (i0 >= last) {
      out.samples[i] = clip.samples[last];
      continue;
    }
    double frac = pos - static_cast<double>(i0);
    out.samples[i] = clip.samples[i0] * (1.0 - frac) + clip.samples[i0 + 1] * frac;
  }
  return out;
}

// Slice into frames of frame_len advanced by hop. Frame t starts at t*hop.
// Clips shorter than one frame are zero-padded at the tail into exactly one
// frame; otherwise trailing samples that do not fill a frame are dropped.
inline FrameSet frame_signal(const AudioClip& clip, int frame_len = 3200, int hop = 1600) {
  require(frame_len > 0, errc::parameter_error, "frame_len must be positive");
  require(hop > 0 && hop <= frame_len, errc::parameter_error, "need 0 < hop <= frame_len");
  require(!clip.samples.empty(), errc::empty_audio, "cannot frame an empty clip");

  std::size_t len = clip.samples.size();
  std::size_t n_frames =
      len >= static_cast<std::size_t>(frame_len)
          ? 1 + (len - static_cast<std::size_t>(frame_len)) / static_cast<std::size_t>(hop)
          : 1;

  FrameSet fs;
  fs.frame_len = frame_len;
  fs.hop = hop;
  fs.sample_rate = clip.sample_rate;
  fs.frames = RowMatrix(n_frames, static_cast<std::size_t>(frame_len));
  for (std::size_t t = 0; t < n_frames; ++t) {
    std::size_t begin = t * static_cast<std::size_t>(hop);
    std::size_t count = std::min<std::size_t>(frame_len, len - begin);
    std::copy_n(clip.samples.begin() + static_cast<std::ptrdiff_t>(begin), count,
                fs.frames.row(t));
  }
  return fs;
}

}  // namespace sesa
