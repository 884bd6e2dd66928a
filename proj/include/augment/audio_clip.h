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

#ifndef AUGMENT_AUDIO_CLIP_H_
#define AUGMENT_AUDIO_CLIP_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace augment {

inline constexpr int kInterchangeSampleRate = 16000;

// Mono audio with amplitudes nominally in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kInterchangeSampleRate;

  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate
                           : 0.0;
  }
  bool operator==(const AudioClip&) const = default;
};

double Rms(const AudioClip& clip);
double MeanPower(const AudioClip& clip);
// True when sample_rate > 0 and every sample is finite.
bool IsValid(const AudioClip& clip);

// 16-bit PCM mono WAV. Samples are clamped to [-1, 1] and rounded to the
// nearest code, so encoding is a pure function of the samples.
std::string EncodeWav(const AudioClip& clip);
// Accepts 8/16/24/32-bit PCM and 32-bit float, any channel count (downmixed
// by averaging). Throws FormatError on malformed input.
AudioClip DecodeWav(std::string_view bytes);

void WriteWav(const std::filesystem::path& path, const AudioClip& clip);
AudioClip ReadWav(const std::filesystem::path& path);

// Linear-interpolation resampling to `target_rate`.
AudioClip Resample(const AudioClip& clip, int target_rate);

}  // namespace augment

#endif  // AUGMENT_AUDIO_CLIP_H_
