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

#ifndef AUGMENT_AUDIOAUG_H_
#define AUGMENT_AUDIOAUG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "augment/audio_clip.h"
#include "augment/rng.h"

namespace augment {

struct SpeedPolicy {
  std::vector<double> factors{0.9, 1.0, 1.1};
  std::vector<double> probabilities{0.40, 0.20, 0.40};
};

struct SnrPolicy {
  double mean_db = 12.50;
  double stddev_db = 17.31;
  double min_db = -10.0;
  double max_db = 40.0;
};

struct AudioPolicy {
  SpeedPolicy speed;
  // Entry i is the probability of mixing in i noise tracks.
  std::vector<double> noise_count_probabilities{0.40, 0.594, 0.003, 0.002, 0.001};
  SnrPolicy snr;
  bool augment_synthetic = true;
  bool augment_real = false;
};

// Empty when the policy is usable.
std::vector<std::string> ValidateAudioPolicy(const AudioPolicy& policy);

// JSON form used by policy files; unknown keys are rejected.
AudioPolicy AudioPolicyFromJson(std::string_view json_text);
std::string AudioPolicyToJson(const AudioPolicy& policy);

struct NoisePlan {
  double speed_factor = 1.0;
  std::vector<std::string> noise_ids;
  std::vector<double> snr_db;            // after clamping, one per noise
  std::vector<double> snr_db_unclamped;  // the raw normal draws

  std::size_t n_noises() const { return noise_ids.size(); }
};

// Time-axis linear-interpolation resampling at an unchanged sample rate.
// Output length is round(n / factor); factor 1 returns the input unchanged.
// Throws Error for non-finite or non-positive factors.
AudioClip ChangeSpeed(const AudioClip& clip, double factor);

struct MixResult {
  AudioClip audio;
  double noise_gain = 0.0;
  double peak_scale = 1.0;  // < 1 when the mix was scaled back into [-1, 1]
};

// Loops or truncates `noise` to the clean length and scales it by
//   g = (rms_clean / rms_noise) * 10^(-snr_db / 20)
// with both RMS values taken over the mixed span. +inf SNR yields the clean
// signal. Throws Error naming `noise_id` when the noise is silent.
MixResult MixNoise(const AudioClip& clean, const AudioClip& noise, double snr_db,
                   std::string_view noise_id = "noise");

// 10 log10(P_clean / P_noise).
double SnrDb(const AudioClip& clean, const AudioClip& noise);

// Draw order: speed factor, noise count, then one SNR per noise, then track
// ids (uniform, without replacement). The count is capped at the pool size.
NoisePlan SamplePlan(const AudioPolicy& policy, std::span<const std::string> noise_ids,
                     std::uint64_t seed);
NoisePlan SamplePlan(const AudioPolicy& policy, std::span<const std::string> noise_ids, Rng& rng);

class NoiseStore {
 public:
  virtual ~NoiseStore() = default;
  // Throws Error naming the id when the track cannot be loaded.
  virtual AudioClip Load(const std::string& id) = 0;
  virtual std::vector<std::string> Ids() const = 0;
};

class MemoryNoiseStore : public NoiseStore {
 public:
  void Add(std::string id, AudioClip clip) { tracks_[std::move(id)] = std::move(clip); }
  AudioClip Load(const std::string& id) override;
  std::vector<std::string> Ids() const override;

 private:
  std::map<std::string, AudioClip> tracks_;
};

struct NoiseTrack {
  std::string id;
  std::filesystem::path path;
  double duration_s = 0.0;
};

// Noise pool manifest: JSONL {id, path, duration}; relative paths resolve
// against the manifest's directory. Thread-safe; decoded tracks are cached.
class ManifestNoiseStore : public NoiseStore {
 public:
  static ManifestNoiseStore Open(const std::filesystem::path& manifest);
  ManifestNoiseStore(const ManifestNoiseStore&) = delete;
  ManifestNoiseStore(ManifestNoiseStore&& other) noexcept;

  AudioClip Load(const std::string& id) override;
  std::vector<std::string> Ids() const override;
  const std::vector<NoiseTrack>& tracks() const { return tracks_; }

 private:
  ManifestNoiseStore() = default;
  std::vector<NoiseTrack> tracks_;
  std::mutex mu_;
  std::map<std::string, AudioClip> loaded_;
};

// Speed change first, then each noise at its SNR relative to the running mix.
AudioClip ApplyPlan(const AudioClip& clip, const NoisePlan& plan, NoiseStore& pool);

}  // namespace augment

#endif  // AUGMENT_AUDIOAUG_H_
