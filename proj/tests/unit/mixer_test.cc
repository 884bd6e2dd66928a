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
#include <set>
#include <sstream>

#include "augment/error.h"
#include "augment/mixer.h"
#include "test_util.h"

using namespace augment;

namespace {

Manifest Entries(EntrySource source, std::size_t n, double duration = 1.0) {
  Manifest m;
  for (std::size_t i = 0; i < n; ++i) {
    m.push_back({std::string(ToString(source)) + "/" + std::to_string(i) + ".wav", "text " + std::to_string(i),
                 duration, source, source == EntrySource::kReal ? "real" : "grammar"});
  }
  return m;
}

}  // namespace

TEST_CASE("manifest jsonl round trip in fixed field order") {
  const Manifest m = Entries(EntrySource::kSynthetic, 2, 0.5);
  std::ostringstream os;
  WriteManifest(os, m);
  CHECK(os.str().starts_with(
      "{\"audio_path\":\"synthetic/0.wav\",\"text\":\"text 0\",\"duration_s\":0.5,\"source\":\"synthetic\",\"origin\":\"grammar\"}\n"));
  CHECK(ParseManifest(os.str()) == m);
  CHECK_THROWS_AS(ParseManifest("{\"audio_path\":\"a\",\"text\":\"\",\"duration_s\":1,\"source\":\"real\"}\n"), FormatError);
  CHECK_THROWS_AS(ParseManifest("{\"audio_path\":\"a\",\"text\":\"t\",\"duration_s\":0,\"source\":\"real\"}\n"), FormatError);
  CHECK_THROWS_AS(ParseManifest("{\"audio_path\":\"a\",\"text\":\"t\",\"duration_s\":1,\"source\":\"fake\"}\n"), FormatError);
  CHECK(LoadManifest(testing::Fixture("real.jsonl")).size() == 3);
}

TEST_CASE("ratio validation names the bound") {
  CHECK(ValidateMixPolicy({0.5, 10, 0}).empty());
  const auto d = ValidateMixPolicy({1.2, 10, 0});
  REQUIRE(d.size() == 1);
  CHECK(d[0].find("[0, 1]") != std::string::npos);
  CHECK_FALSE(ValidateMixPolicy({-0.1, 10, 0}).empty());
  CHECK_FALSE(ValidateMixPolicy({NAN, 10, 0}).empty());
}

TEST_CASE("ratio zero emits only real entries") {
  const Manifest real = Entries(EntrySource::kReal, 7);
  const Manifest syn = Entries(EntrySource::kSynthetic, 5);
  for (const auto& e : MixStreamEntries(real, syn, {0.0, 5000, 3})) CHECK(e.source == EntrySource::kReal);
  CHECK(MixStreamEntries(real, {}, {0.0, 10, 3}).size() == 10);
  CHECK_THROWS_AS(MixStreamEntries(real, {}, {0.1, 10, 3}), Error);
  CHECK_THROWS_AS(MixStreamEntries({}, syn, {0.1, 10, 3}), Error);
}

TEST_CASE("epoch reshuffle law") {
  const Manifest real = Entries(EntrySource::kReal, 13);
  const Manifest syn = Entries(EntrySource::kSynthetic, 7);
  const Manifest stream = MixStreamEntries(real, syn, {0.3, 20000, 11});
  std::vector<std::string> real_sub, syn_sub;
  for (const auto& e : stream) (e.source == EntrySource::kReal ? real_sub : syn_sub).push_back(e.audio_path);
  auto check_epochs = [](const std::vector<std::string>& sub, std::size_t size) {
    for (std::size_t start = 0; start + size <= sub.size(); start += size) {
      std::set<std::string> window(sub.begin() + static_cast<long>(start), sub.begin() + static_cast<long>(start + size));
      CHECK(window.size() == size);
    }
  };
  check_epochs(real_sub, real.size());
  check_epochs(syn_sub, syn.size());

  EpochSampler s(5, 9);
  std::vector<std::size_t> first, second;
  for (int i = 0; i < 5; ++i) first.push_back(s.Next());
  for (int i = 0; i < 5; ++i) second.push_back(s.Next());
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  CHECK(first == std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK(second == first);
}

TEST_CASE("stream prefix determinism") {
  const Manifest real = Entries(EntrySource::kReal, 10);
  const Manifest syn = Entries(EntrySource::kSynthetic, 4);
  const Manifest a = MixStreamEntries(real, syn, {0.5, 300, 21});
  const Manifest b = MixStreamEntries(real, syn, {0.5, 100, 21});
  CHECK(std::equal(b.begin(), b.end(), a.begin()));
  CHECK_FALSE(MixStreamEntries(real, syn, {0.5, 300, 22}) == a);
}

TEST_CASE("budget shares") {
  const Manifest real = Entries(EntrySource::kReal, 1, 3600.0);
  const Manifest syn = Entries(EntrySource::kSynthetic, 1, 3600.0);
  const auto even = ReportBudget(real, syn, {0.5, 10, 0});
  CHECK(even.expected_stream_duration_share == doctest::Approx(0.5));
  CHECK(even.synthetic_duration_share == doctest::Approx(0.5));
  CHECK(even.real.hours == doctest::Approx(1.0));

  const auto large_scale = ReportBudget(Entries(EntrySource::kReal, 1, 146000 * 3600.0),
                                        Entries(EntrySource::kSynthetic, 1, 4000 * 3600.0), {0.1, 10, 0});
  CHECK(large_scale.synthetic_duration_share == doctest::Approx(4000.0 / 150000.0).epsilon(1e-12));
  CHECK(std::abs(large_scale.synthetic_duration_share - 0.0267) < 5e-5);

  const auto none = ReportBudget(real, {}, {0.0, 10, 0});
  CHECK(none.synthetic_duration_share == 0.0);
  CHECK(none.expected_stream_duration_share == 0.0);
  CHECK(none.by_origin.at("real").entries == 1);
}

TEST_CASE("rebasing manifest paths") {
  Manifest m{{"real/a.wav", "t", 1.0, EntrySource::kReal, "real"}, {"/abs/b.wav", "t", 1.0, EntrySource::kReal, "real"}};
  RebasePaths(m, "/data/set", "/data");
  CHECK(m[0].audio_path == "set/real/a.wav");
  CHECK(m[1].audio_path == "/abs/b.wav");
  RebasePaths(m, "/data", "/elsewhere");
  CHECK(m[0].audio_path == "/data/set/real/a.wav");
}
