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

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <algorithm>
#include <map>
#include <set>

#include "augment/audioaug.h"
#include "augment/error.h"
#include "augment/hash.h"
#include "augment/rng.h"
#include "test_util.h"

using namespace augment;

namespace {

double MeasuredSnr(const AudioClip& clean, const MixResult& m) {
  std::vector<double> c(clean.samples.size()), n(clean.samples.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    c[i] = clean.samples[i] * m.peak_scale;
    n[i] = m.audio.samples[i] - c[i];
  }
  return 10.0 * std::log10(testing::NaivePower(c) / testing::NaivePower(n));
}

AudioClip Square(std::size_t n, std::size_t period, double level) {
  AudioClip c;
  c.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) c.samples[i] = (i / period) % 2 ? level : -level;
  return c;
}

}  // namespace

TEST_CASE("speed change duration law and identity") {
  const AudioClip clip = testing::Tone(300, 16001);
  for (double f : {0.9, 1.0, 1.1}) {
    const AudioClip out = ChangeSpeed(clip, f);
    const double expect = static_cast<double>(clip.samples.size()) / f;
    CHECK(std::abs(static_cast<double>(out.samples.size()) - expect) <= 1.0);
    CHECK(out.sample_rate == clip.sample_rate);
  }
  CHECK(ChangeSpeed(clip, 1.0) == clip);
  CHECK_THROWS_AS(ChangeSpeed(clip, 0.0), Error);
  CHECK_THROWS_AS(ChangeSpeed(clip, -1.0), Error);
  CHECK_THROWS_AS(ChangeSpeed(clip, NAN), Error);
  CHECK(ChangeSpeed(AudioClip{}, 1.1).samples.empty());
}

TEST_CASE("speed change scales the tone frequency") {
  const std::size_t window = 2048;
  const double hz = 500.0;
  const AudioClip clip = testing::Tone(hz, 8000);
  for (double f : {0.9, 1.0, 1.1}) {
    const AudioClip out = ChangeSpeed(clip, f);
    REQUIRE(out.samples.size() >= window);
    const std::vector<double> head(out.samples.begin(), out.samples.begin() + window);
    const double expect_bin = f * hz * window / 16000.0;
    CHECK(std::abs(static_cast<double>(testing::DftPeakBin(head)) - expect_bin) <= 1.0);
  }
}

TEST_CASE("mixing hits the requested snr") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const AudioClip clean = testing::Tone(100 + 40 * trial, 4000 + 37 * trial, 0.05 + 0.004 * trial);
    const AudioClip noise = testing::WhiteNoise(1000 + 53 * trial, 0.01 + 0.01 * (trial % 7), 100 + trial);
    const double snr = -10 + 50 * rng.Uniform();
    const MixResult m = MixNoise(clean, noise, snr);
    CHECK(std::abs(MeasuredSnr(clean, m) - snr) <= 0.1);
    CHECK(m.audio.samples.size() == clean.samples.size());
    for (double s : m.audio.samples) CHECK(std::abs(s) <= 1.0);
  }
}

TEST_CASE("equal power at 0 dB mixes at unit gain") {
  const AudioClip clean = Square(1600, 8, 0.25);
  const AudioClip noise = Square(1600, 3, 0.25);
  const MixResult m = MixNoise(clean, noise, 0.0);
  CHECK(m.noise_gain == 1.0);
  CHECK(m.peak_scale == 1.0);
  for (std::size_t i = 0; i < clean.samples.size(); ++i) {
    CHECK(m.audio.samples[i] == clean.samples[i] + noise.samples[i]);
  }
}

TEST_CASE("mix edge cases") {
  const AudioClip clean = testing::Tone(200, 1000);
  CHECK(MixNoise(clean, testing::WhiteNoise(300, 0.1, 1), INFINITY).audio == clean);
  AudioClip silent;
  silent.samples.assign(100, 0.0);
  try {
    MixNoise(clean, silent, 5.0, "fan");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("fan") != std::string::npos);
  }
  const MixResult loud = MixNoise(testing::Tone(200, 1000, 0.9), testing::WhiteNoise(50, 0.5, 2), -10);
  CHECK(loud.peak_scale < 1.0);
  CHECK(SnrDb(clean, clean) == doctest::Approx(0.0));
}

TEST_CASE("plan sampling frequencies and caps") {
  const AudioPolicy policy;
  const std::vector<std::string> ids{"a", "b", "c", "d", "e"};
  Rng rng(3);
  const int n = 20000;
  std::map<double, int> speed;
  std::map<std::size_t, int> count;
  for (int i = 0; i < n; ++i) {
    const NoisePlan p = SamplePlan(policy, ids, rng);
    ++speed[p.speed_factor];
    ++count[p.n_noises()];
    CHECK(p.snr_db.size() == p.n_noises());
    for (std::size_t k = 0; k < p.n_noises(); ++k) {
      CHECK(p.snr_db[k] >= -10.0);
      CHECK(p.snr_db[k] <= 40.0);
      CHECK(p.snr_db[k] == std::clamp(p.snr_db_unclamped[k], -10.0, 40.0));
    }
    std::set<std::string> distinct(p.noise_ids.begin(), p.noise_ids.end());
    CHECK(distinct.size() == p.noise_ids.size());
  }
  auto within = [&](int observed, double p) {
    return std::abs(observed - n * p) <= 3 * std::sqrt(n * p * (1 - p));
  };
  CHECK(within(speed[0.9], 0.4));
  CHECK(within(speed[1.0], 0.2));
  CHECK(within(speed[1.1], 0.4));
  CHECK(within(count[0], 0.4));
  CHECK(within(count[1], 0.594));

  const std::vector<std::string> one{"only"};
  AudioPolicy many = policy;
  many.noise_count_probabilities = {0, 0, 0, 0, 1};
  CHECK(SamplePlan(many, one, 1).n_noises() == 1);
  CHECK_THROWS_AS(SamplePlan(many, {}, 1), Error);
  AudioPolicy none = policy;
  none.noise_count_probabilities = {1};
  CHECK(SamplePlan(none, {}, 1).n_noises() == 0);
}

TEST_CASE("plan sampling is deterministic per seed") {
  const std::vector<std::string> ids{"a", "b"};
  const NoisePlan a = SamplePlan(AudioPolicy{}, ids, 99);
  const NoisePlan b = SamplePlan(AudioPolicy{}, ids, 99);
  CHECK(a.speed_factor == b.speed_factor);
  CHECK(a.noise_ids == b.noise_ids);
  CHECK(a.snr_db == b.snr_db);
}

TEST_CASE("policy validation and json") {
  AudioPolicy p;
  CHECK(ValidateAudioPolicy(p).empty());
  p.speed.probabilities = {0.5, 0.2, 0.4};
  const auto errs = ValidateAudioPolicy(p);
  REQUIRE(errs.size() == 1);
  CHECK(errs[0].find("speed") != std::string::npos);
  p = AudioPolicy{};
  p.snr.stddev_db = -1;
  CHECK_FALSE(ValidateAudioPolicy(p).empty());
  p = AudioPolicy{};
  p.snr.min_db = 50;
  CHECK_FALSE(ValidateAudioPolicy(p).empty());
  p = AudioPolicy{};
  p.speed.factors = {0.9, -1.0, 1.1};
  CHECK_FALSE(ValidateAudioPolicy(p).empty());

  const AudioPolicy d;
  const AudioPolicy back = AudioPolicyFromJson(AudioPolicyToJson(d));
  CHECK(back.speed.factors == d.speed.factors);
  CHECK(back.noise_count_probabilities == d.noise_count_probabilities);
  CHECK(back.snr.stddev_db == d.snr.stddev_db);
  CHECK_THROWS_AS(AudioPolicyFromJson("{\"speeed\": {}}"), FormatError);
  CHECK_FALSE(ValidateAudioPolicy(AudioPolicyFromJson("{\"speed\": {\"factors\": [1.0], \"probabilities\": [0.5]}}")).empty());
}

TEST_CASE("apply plan identity and determinism") {
  MemoryNoiseStore pool;
  pool.Add("n", testing::WhiteNoise(500, 0.1, 4));
  const AudioClip clip = testing::Tone(330, 3000);
  CHECK(ApplyPlan(clip, NoisePlan{}, pool) == clip);
  NoisePlan plan;
  plan.speed_factor = 1.1;
  plan.noise_ids = {"n", "n"};
  plan.snr_db = {10.0, 20.0};
  plan.snr_db_unclamped = plan.snr_db;
  const AudioClip a = ApplyPlan(clip, plan, pool);
  CHECK(a == ApplyPlan(clip, plan, pool));
  CHECK(a.samples.size() == 2727);
  plan.noise_ids = {"missing"};
  plan.snr_db = {1.0};
  CHECK_THROWS_AS(ApplyPlan(clip, plan, pool), Error);
}

TEST_CASE("golden augmented wav") {
  auto pool = ManifestNoiseStore::Open(testing::Fixture("noise/pool.jsonl"));
  CHECK(pool.Ids() == std::vector<std::string>{"white", "hum", "babble"});
  const AudioClip clip = ReadWav(testing::Fixture("real/r1.wav"));
  NoisePlan plan;
  plan.speed_factor = 0.9;
  plan.noise_ids = {"hum", "white"};
  plan.snr_db = {5.0, 15.0};
  plan.snr_db_unclamped = plan.snr_db;
  const std::string wav = EncodeWav(ApplyPlan(clip, plan, pool));
  const auto golden = testing::Fixture("golden/r1_s09_hum5_white15.wav");
  // Set AUGMENT_REGEN_GOLDEN=1 to rewrite the frozen file after an intended DSP change.
  if (std::getenv("AUGMENT_REGEN_GOLDEN") != nullptr) WriteFileBytes(golden, wav);
  CHECK(wav == ReadFileBytes(golden));
  CHECK(Sha256Hex(wav) == "127e234d17eb13179ee9d6c40784cad3c85d170e47ee6d25feb7c07ccd1f8e64");
}

TEST_CASE("noise manifest errors") {
  const auto dir = testing::ScratchDir("noise_manifest");
  WriteFileBytes(dir / "pool.jsonl", "{\"id\":\"x\",\"path\":\"nope.wav\",\"duration\":1}\n");
  auto pool = ManifestNoiseStore::Open(dir / "pool.jsonl");
  try {
    pool.Load("x");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("x") != std::string::npos);
  }
  WriteFileBytes(dir / "bad.jsonl", "{\"path\":\"a.wav\"}\n");
  CHECK_THROWS_AS(ManifestNoiseStore::Open(dir / "bad.jsonl"), FormatError);
}
