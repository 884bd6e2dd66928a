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

#ifndef AUGMENT_TTSBRIDGE_H_
#define AUGMENT_TTSBRIDGE_H_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "augment/audio_clip.h"
#include "augment/corpus.h"
#include "augment/error.h"
#include "augment/http_retry.h"

namespace augment {

struct VoicePlan {
  std::vector<std::string> voices;
  std::vector<double> speeds;
  std::vector<double> pitches;  // semitone-like shifts

  // 96 voice slots, speeds {0.9, 1.0, 1.1}, pitch shifts {-2, -1, 0, +1, +2}.
  static VoicePlan Default();
  std::size_t Combinations() const { return voices.size() * speeds.size() * pitches.size(); }
};

// Empty when the plan is usable.
std::vector<std::string> ValidateVoicePlan(const VoicePlan& plan);

struct TtsRequest {
  std::string text;
  std::string voice;
  double speed = 1.0;
  double pitch = 0.0;

  bool operator==(const TtsRequest&) const = default;
};

struct VoiceAssignment {
  std::string utterance_id;
  std::string voice;
  double speed = 1.0;
  double pitch = 0.0;
};

// Independent uniform draws per utterance, seeded from (seed, utterance id).
// Throws Error when the voice, speed or pitch list is empty.
std::vector<VoiceAssignment> AssignVoiceParams(const Corpus& utterances, const VoicePlan& plan,
                                               std::uint64_t seed);

// Deterministic pseudo-speech. Each code point becomes a short harmonic (or
// silent) segment whose pitch depends only on the voice and the character;
// speed shortens segments and pitch shifts the base frequency. Output is a
// pure function of the arguments.
AudioClip SynthesizeMock(const TtsRequest& request, std::uint64_t seed);
AudioClip SynthesizeMock(std::string_view text, std::string_view voice, std::uint64_t seed);
double MockBaseFrequency(std::string_view voice);

class TtsError : public Error {
 public:
  using Error::Error;
};

class Synthesizer {
 public:
  virtual ~Synthesizer() = default;
  // Throws TtsError when the backend fails for this request.
  virtual AudioClip Synthesize(const TtsRequest& request) = 0;
};

class MockSynthesizer : public Synthesizer {
 public:
  explicit MockSynthesizer(std::uint64_t seed = 0) : seed_(seed) {}
  AudioClip Synthesize(const TtsRequest& request) override;
  std::size_t calls() const { return calls_.load(); }

 private:
  std::uint64_t seed_;
  std::atomic<std::size_t> calls_{0};
};

// HTTP POST {text, voice, speed, pitch} as JSON; the response body is a WAV
// file. Audio at other rates is resampled to 16 kHz on ingest.
class ExternalSynthesizer : public Synthesizer {
 public:
  ExternalSynthesizer(std::string endpoint, std::chrono::milliseconds timeout = std::chrono::seconds(30),
                      RetryPolicy retry = {});
  AudioClip Synthesize(const TtsRequest& request) override;

 private:
  std::string endpoint_;
  std::chrono::milliseconds timeout_;
  RetryPolicy retry_;
};

// SHA-256 over the canonical JSON form of the request tuple.
std::string CacheKey(const TtsRequest& request);

// Directory of `<key>.wav` plus a `<key>.json` sidecar holding the request
// tuple and the SHA-256 of the WAV bytes. Entries are verified on every read,
// and the first writer of a key wins.
class TtsCache {
 public:
  explicit TtsCache(std::filesystem::path dir);

  std::optional<AudioClip> Get(const TtsRequest& request);
  // Returns false when a valid entry already existed; that entry is kept.
  bool Put(const TtsRequest& request, const AudioClip& clip);

  std::filesystem::path WavPath(const TtsRequest& request) const;
  std::filesystem::path SidecarPath(const TtsRequest& request) const;
  const std::filesystem::path& dir() const { return dir_; }
  std::size_t corrupt_entries() const { return corrupt_.load(); }

 private:
  std::filesystem::path dir_;
  std::atomic<std::size_t> corrupt_{0};
  std::atomic<std::uint64_t> tmp_counter_{0};
};

struct SynthesisItem {
  std::optional<AudioClip> clip;
  std::filesystem::path wav_path;  // cache location when a cache is used
  bool cache_hit = false;
  std::optional<std::string> diagnostic;  // reason the item was dropped
};

struct SynthesisReport {
  std::vector<SynthesisItem> items;  // request order
  std::size_t upstream_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t dropped = 0;
};

// Cache hits skip the backend. Backend failures and invalid audio (empty,
// non-finite) drop the item with a diagnostic.
SynthesisReport SynthesizeBatch(std::span<const TtsRequest> batch, Synthesizer& synthesizer,
                                TtsCache* cache, std::size_t workers = 1);

SynthesisReport SynthesizeExternal(std::span<const TtsRequest> batch, const std::string& endpoint,
                                   TtsCache* cache, std::size_t workers = 1);

}  // namespace augment

#endif  // AUGMENT_TTSBRIDGE_H_
