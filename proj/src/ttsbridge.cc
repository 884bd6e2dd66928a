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

#include "augment/ttsbridge.h"

#include <json.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <thread>

#include "augment/hash.h"
#include "augment/rng.h"

namespace augment {
namespace {

namespace fs = std::filesystem;

struct Segment {
  double seconds;
  double freq_factor;  // 0 for a silent segment
};

// Decodes one code point starting at `i`; invalid bytes map to U+FFFD.
std::uint32_t NextCodePoint(std::string_view s, std::size_t& i) {
  const auto c = static_cast<unsigned char>(s[i]);
  std::size_t extra = c < 0x80 ? 0 : (c & 0xE0) == 0xC0 ? 1 : (c & 0xF0) == 0xE0 ? 2 : (c & 0xF8) == 0xF0 ? 3 : 0;
  if (c >= 0x80 && extra == 0) {
    ++i;
    return 0xFFFD;
  }
  std::uint32_t cp = extra == 0 ? c : c & (0x3F >> extra);
  ++i;
  for (std::size_t k = 0; k < extra && i < s.size(); ++k, ++i) {
    cp = (cp << 6) | (static_cast<unsigned char>(s[i]) & 0x3F);
  }
  return cp;
}

Segment SegmentFor(std::uint32_t cp) {
  if (cp < 0x80) {
    const char c = static_cast<char>(std::tolower(static_cast<int>(cp)));
    if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') {
      return {0.070, 1.0 + 0.06 * (c % 7)};
    }
    if (c >= 'a' && c <= 'z') return {0.050, 1.0 + 0.06 * (c % 7)};
    if (c >= '0' && c <= '9') return {0.060, 1.1 + 0.04 * (c - '0')};
    if (c == ' ' || c == '\t') return {0.030, 0.0};
    return {0.080, 0.0};
  }
  return {0.060, 1.0 + 0.05 * static_cast<double>(cp % 9)};
}

void RequireNonEmpty(const VoicePlan& plan) {
  if (plan.voices.empty()) throw Error("voice plan has no voices");
  if (plan.speeds.empty()) throw Error("voice plan has no speeds");
  if (plan.pitches.empty()) throw Error("voice plan has no pitches");
}

nlohmann::ordered_json RequestJson(const TtsRequest& r) {
  nlohmann::ordered_json j;
  j["text"] = r.text;
  j["voice"] = r.voice;
  j["speed"] = r.speed;
  j["pitch"] = r.pitch;
  return j;
}

}  // namespace

VoicePlan VoicePlan::Default() {
  VoicePlan plan;
  for (int i = 0; i < 96; ++i) {
    char name[8];
    std::snprintf(name, sizeof name, "v%02d", i);
    plan.voices.emplace_back(name);
  }
  plan.speeds = {0.9, 1.0, 1.1};
  plan.pitches = {-2.0, -1.0, 0.0, 1.0, 2.0};
  return plan;
}

std::vector<std::string> ValidateVoicePlan(const VoicePlan& plan) {
  std::vector<std::string> out;
  if (plan.voices.empty()) out.push_back("voice plan has no voices");
  if (plan.speeds.empty()) out.push_back("voice plan has no speeds");
  if (plan.pitches.empty()) out.push_back("voice plan has no pitches");
  for (double s : plan.speeds) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      out.push_back("voice speed multipliers must be positive and finite");
      break;
    }
  }
  for (double p : plan.pitches) {
    if (!std::isfinite(p)) {
      out.push_back("voice pitch shifts must be finite");
      break;
    }
  }
  return out;
}

std::vector<VoiceAssignment> AssignVoiceParams(const Corpus& utterances, const VoicePlan& plan,
                                               std::uint64_t seed) {
  RequireNonEmpty(plan);
  std::vector<VoiceAssignment> out;
  out.reserve(utterances.size());
  for (const auto& u : utterances) {
    Rng rng(DeriveSeed(seed, "voice/" + u.id));
    VoiceAssignment a;
    a.utterance_id = u.id;
    a.voice = plan.voices[rng.UniformIndex(plan.voices.size())];
    a.speed = plan.speeds[rng.UniformIndex(plan.speeds.size())];
    a.pitch = plan.pitches[rng.UniformIndex(plan.pitches.size())];
    out.push_back(std::move(a));
  }
  return out;
}

double MockBaseFrequency(std::string_view voice) {
  const double unit = static_cast<double>(DeriveSeed(0x5eedULL, voice) >> 11) * 0x1.0p-53;
  return 90.0 + 160.0 * unit;
}

AudioClip SynthesizeMock(const TtsRequest& request, std::uint64_t seed) {
  if (!(request.speed > 0.0)) throw TtsError("mock synthesis: speed must be positive");
  const double base = MockBaseFrequency(request.voice) * std::pow(2.0, request.pitch / 12.0);
  const double rate = kInterchangeSampleRate;
  Rng dither(DeriveSeed(seed, request.voice + '\x1f' + request.text));

  AudioClip clip;
  clip.sample_rate = kInterchangeSampleRate;
  std::size_t i = 0;
  while (i < request.text.size()) {
    const Segment seg = SegmentFor(NextCodePoint(request.text, i));
    const auto n = static_cast<std::size_t>(std::llround(seg.seconds / request.speed * rate));
    const double f = base * seg.freq_factor;
    for (std::size_t s = 0; s < std::max<std::size_t>(n, 1); ++s) {
      double v = 0.0;
      if (seg.freq_factor > 0.0) {
        const double t = static_cast<double>(s) / rate;
        const double env = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (s + 0.5) / n);
        const double w = 2.0 * std::numbers::pi * f * t;
        v = 0.3 * env * (std::sin(w) + 0.5 * std::sin(2.0 * w) + 0.25 * std::sin(3.0 * w)) / 1.75;
      }
      v += 0.002 * (2.0 * dither.Uniform() - 1.0);
      clip.samples.push_back(v);
    }
  }
  return clip;
}

AudioClip SynthesizeMock(std::string_view text, std::string_view voice, std::uint64_t seed) {
  return SynthesizeMock(TtsRequest{std::string(text), std::string(voice)}, seed);
}

AudioClip MockSynthesizer::Synthesize(const TtsRequest& request) {
  ++calls_;
  if (Normalize(request.text).empty()) throw TtsError("mock synthesis: empty text");
  return SynthesizeMock(request, seed_);
}

ExternalSynthesizer::ExternalSynthesizer(std::string endpoint, std::chrono::milliseconds timeout,
                                         RetryPolicy retry)
    : endpoint_(std::move(endpoint)), timeout_(timeout), retry_(retry) {}

AudioClip ExternalSynthesizer::Synthesize(const TtsRequest& request) {
  const HttpOutcome http =
      PostWithRetry(endpoint_, RequestJson(request).dump(), "application/json", timeout_, retry_);
  if (!http.ok()) throw TtsError(http.error.value_or("tts request failed"));
  AudioClip clip;
  try {
    clip = DecodeWav(http.body);
  } catch (const FormatError& e) {
    throw TtsError(std::string("tts response is not a WAV file: ") + e.what());
  }
  if (clip.samples.empty()) throw TtsError("tts response has no audio");
  if (clip.sample_rate != kInterchangeSampleRate) clip = Resample(clip, kInterchangeSampleRate);
  return clip;
}

std::string CacheKey(const TtsRequest& request) { return Sha256Hex(RequestJson(request).dump()); }

TtsCache::TtsCache(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

fs::path TtsCache::WavPath(const TtsRequest& request) const {
  return dir_ / (CacheKey(request) + ".wav");
}

fs::path TtsCache::SidecarPath(const TtsRequest& request) const {
  return dir_ / (CacheKey(request) + ".json");
}

std::optional<AudioClip> TtsCache::Get(const TtsRequest& request) {
  const fs::path wav = WavPath(request);
  const fs::path meta = SidecarPath(request);
  std::error_code ec;
  if (!fs::exists(wav, ec) || !fs::exists(meta, ec)) return std::nullopt;
  try {
    const auto sidecar = nlohmann::json::parse(ReadFileBytes(meta));
    const std::string bytes = ReadFileBytes(wav);
    const bool same_request = sidecar.at("text") == request.text &&
                              sidecar.at("voice") == request.voice &&
                              sidecar.at("speed").get<double>() == request.speed &&
                              sidecar.at("pitch").get<double>() == request.pitch &&
                              sidecar.at("key") == CacheKey(request);
    if (same_request && sidecar.at("audio_sha256") == Sha256Hex(bytes)) {
      return DecodeWav(bytes);
    }
  } catch (const std::exception&) {
    // Unreadable entries are treated like hash mismatches below.
  }
  ++corrupt_;
  fs::remove(wav, ec);
  fs::remove(meta, ec);
  return std::nullopt;
}

bool TtsCache::Put(const TtsRequest& request, const AudioClip& clip) {
  if (Get(request)) return false;
  const std::string key = CacheKey(request);
  const std::string bytes = EncodeWav(clip);
  nlohmann::ordered_json sidecar = RequestJson(request);
  sidecar["key"] = key;
  sidecar["audio_sha256"] = Sha256Hex(bytes);
  sidecar["sample_rate"] = clip.sample_rate;
  sidecar["num_samples"] = clip.samples.size();

  const std::string suffix = ".tmp." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) +
                             "." + std::to_string(tmp_counter_.fetch_add(1));
  const fs::path tmp_wav = dir_ / (key + ".wav" + suffix);
  const fs::path tmp_meta = dir_ / (key + ".json" + suffix);
  WriteFileBytes(tmp_wav, bytes);
  WriteFileBytes(tmp_meta, sidecar.dump(2) + "\n");

  // Hard links fail when the target exists, so only one writer commits.
  std::error_code ec_wav, ec_meta, ignored;
  fs::create_hard_link(tmp_wav, dir_ / (key + ".wav"), ec_wav);
  if (!ec_wav) fs::create_hard_link(tmp_meta, dir_ / (key + ".json"), ec_meta);
  fs::remove(tmp_wav, ignored);
  fs::remove(tmp_meta, ignored);
  return !ec_wav && !ec_meta;
}

SynthesisReport SynthesizeBatch(std::span<const TtsRequest> batch, Synthesizer& synthesizer,
                                TtsCache* cache, std::size_t workers) {
  SynthesisReport report;
  report.items.resize(batch.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> calls{0};
  auto work = [&]() {
    for (std::size_t i = next.fetch_add(1); i < batch.size(); i = next.fetch_add(1)) {
      SynthesisItem& item = report.items[i];
      const TtsRequest& req = batch[i];
      if (cache != nullptr) {
        item.wav_path = cache->WavPath(req);
        if (auto hit = cache->Get(req)) {
          item.clip = std::move(hit);
          item.cache_hit = true;
          continue;
        }
      }
      try {
        ++calls;
        AudioClip clip = synthesizer.Synthesize(req);
        if (clip.samples.empty()) throw TtsError("backend returned no audio");
        if (!IsValid(clip)) throw TtsError("backend returned non-finite samples");
        if (clip.sample_rate != kInterchangeSampleRate) clip = Resample(clip, kInterchangeSampleRate);
        if (cache != nullptr) cache->Put(req, clip);
        item.clip = std::move(clip);
      } catch (const std::exception& e) {
        item.diagnostic = e.what();
      }
    }
  };
  const std::size_t n = std::min(std::max<std::size_t>(workers, 1), std::max<std::size_t>(batch.size(), 1));
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < n; ++t) threads.emplace_back(work);
  work();
  for (auto& t : threads) t.join();

  report.upstream_calls = calls.load();
  for (const auto& item : report.items) {
    report.cache_hits += item.cache_hit ? 1 : 0;
    report.dropped += item.clip ? 0 : 1;
  }
  return report;
}

SynthesisReport SynthesizeExternal(std::span<const TtsRequest> batch, const std::string& endpoint,
                                   TtsCache* cache, std::size_t workers) {
  ExternalSynthesizer synth(endpoint);
  return SynthesizeBatch(batch, synth, cache, workers);
}

}  // namespace augment
