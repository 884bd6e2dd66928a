// Copyright 2026 The Augment Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <cstring>

#include "augment/audio_clip.h"
#include "augment/error.h"
#include "augment/hash.h"

namespace augment {
namespace {

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void PutU16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

std::uint32_t GetU32(std::string_view b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[at + i]);
  return v;
}

std::uint16_t GetU16(std::string_view b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<std::uint8_t>(b[at]) |
                                    (static_cast<std::uint8_t>(b[at + 1]) << 8));
}

double DecodeSample(std::string_view b, std::size_t at, int bits, bool is_float) {
  if (is_float) {
    std::uint32_t raw = GetU32(b, at);
    float f;
    std::memcpy(&f, &raw, sizeof f);
    return f;
  }
  switch (bits) {
    case 8:
      return (static_cast<std::uint8_t>(b[at]) - 128) / 128.0;
    case 16:
      return std::max(-1.0, static_cast<std::int16_t>(GetU16(b, at)) / 32767.0);
    case 24: {
      std::int32_t v = static_cast<std::uint8_t>(b[at]) |
                       (static_cast<std::uint8_t>(b[at + 1]) << 8) |
                       (static_cast<std::int8_t>(b[at + 2]) * 65536);
      return v / 8388608.0;
    }
    case 32:
      return static_cast<std::int32_t>(GetU32(b, at)) / 2147483648.0;
    default:
      throw FormatError("wav: unsupported bit depth " + std::to_string(bits));
  }
}

}  // namespace

double MeanPower(const AudioClip& clip) {
  if (clip.samples.empty()) return 0.0;
  double acc = 0.0;
  for (double s : clip.samples) acc += s * s;
  return acc / static_cast<double>(clip.samples.size());
}

double Rms(const AudioClip& clip) { return std::sqrt(MeanPower(clip)); }

bool IsValid(const AudioClip& clip) {
  return clip.sample_rate > 0 &&
         std::all_of(clip.samples.begin(), clip.samples.end(),
                     [](double s) { return std::isfinite(s); });
}

std::string EncodeWav(const AudioClip& clip) {
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(clip.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  PutU32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  PutU32(out, 16);
  PutU16(out, 1);  // PCM
  PutU16(out, 1);  // mono
  PutU32(out, static_cast<std::uint32_t>(clip.sample_rate));
  PutU32(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  PutU16(out, 2);
  PutU16(out, 16);
  out += "data";
  PutU32(out, data_bytes);
  for (double s : clip.samples) {
    const double c = std::clamp(std::isfinite(s) ? s : 0.0, -1.0, 1.0);
    const long code = std::lround(c * 32767.0);
    PutU16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(code)));
  }
  return out;
}

AudioClip DecodeWav(std::string_view b) {
  if (b.size() < 12 || b.substr(0, 4) != "RIFF" || b.substr(8, 4) != "WAVE") {
    throw FormatError("wav: missing RIFF/WAVE header");
  }
  int channels = 0, bits = 0, rate = 0, format = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const std::string_view id = b.substr(pos, 4);
    const std::uint32_t size = GetU32(b, pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > b.size()) {
      throw FormatError("wav: chunk '" + std::string(id) + "' overruns file");
    }
    if (id == "fmt ") {
      if (size < 16) throw FormatError("wav: short fmt chunk");
      format = GetU16(b, body);
      channels = GetU16(b, body + 2);
      rate = static_cast<int>(GetU32(b, body + 4));
      bits = GetU16(b, body + 14);
      if (format == 0xFFFE && size >= 26) format = GetU16(b, body + 24);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw FormatError("wav: data chunk before fmt chunk");
      if (channels <= 0 || rate <= 0) throw FormatError("wav: invalid fmt values");
      const bool is_float = format == 3;
      if (format != 1 && !(is_float && bits == 32)) {
        throw FormatError("wav: unsupported sample format " + std::to_string(format));
      }
      const std::size_t frame = static_cast<std::size_t>(channels) * (bits / 8);
      if (frame == 0) throw FormatError("wav: zero frame size");
      const std::size_t frames = size / frame;
      AudioClip clip;
      clip.sample_rate = rate;
      clip.samples.resize(frames);
      for (std::size_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        for (int c = 0; c < channels; ++c) {
          acc += DecodeSample(b, body + f * frame + c * (bits / 8), bits, is_float);
        }
        clip.samples[f] = acc / channels;
      }
      return clip;
    }
    pos = body + size + (size & 1);
  }
  throw FormatError("wav: no data chunk");
}

void WriteWav(const std::filesystem::path& path, const AudioClip& clip) {
  WriteFileBytes(path, EncodeWav(clip));
}

AudioClip ReadWav(const std::filesystem::path& path) {
  try {
    return DecodeWav(ReadFileBytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

AudioClip Resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0 || clip.sample_rate <= 0) {
    throw Error("resample: sample rates must be positive");
  }
  if (target_rate == clip.sample_rate || clip.samples.empty()) {
    AudioClip out = clip;
    out.sample_rate = target_rate;
    return out;
  }
  const double step = static_cast<double>(clip.sample_rate) / target_rate;
  const auto n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(clip.samples.size()) / step));
  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out);
  const std::size_t last = clip.samples.size() - 1;
  for (std::size_t j = 0; j < n_out; ++j) {
    const double t = j * step;
    const auto i = static_cast<std::size_t>(t);
    if (i >= last) {
      out.samples[j] = clip.samples[last];
    } else {
      const double frac = t - static_cast<double>(i);
      out.samples[j] = clip.samples[i] + frac * (clip.samples[i + 1] - clip.samples[i]);
    }
  }
  return out;
}

}  // namespace augment
