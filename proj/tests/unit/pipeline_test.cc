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
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <map>

#include "augment/hash.h"
#include "augment/pipeline.h"
#include "test_util.h"

using namespace augment;
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

Json FixtureConfig(const fs::path& out) {
  Json j = Json::parse(ReadFileBytes(testing::Fixture("pipeline.json")));
  j["output_dir"] = out.string();
  j["text"]["factor"] = 2;
  j["mix"]["epoch_len"] = 500;
  return j;
}

PipelineConfig Parse(const Json& j) { return ParsePipelineConfig(j.dump(), testing::Fixture("")); }

bool HasField(const std::vector<Diagnostic>& d, const std::string& field) {
  return std::any_of(d.begin(), d.end(), [&](const Diagnostic& x) { return x.field == field; });
}

std::map<std::string, std::string> DirDigest(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir).generic_string();
    if (rel == "run_meta.json") continue;
    out[rel] = Sha256File(e.path());
  }
  return out;
}

}  // namespace

TEST_CASE("config parsing resolves paths and rejects unknown keys") {
  const auto dir = testing::ScratchDir("pipeline_parse");
  const PipelineConfig c = Parse(FixtureConfig(dir / "out"));
  CHECK(c.seed_corpus == testing::Fixture("") / "seed100.txt");
  CHECK(c.methods.size() == 3);
  CHECK(c.voices.voices.size() == 96);
  CHECK(c.voices.voices[95] == "v95");
  CHECK(c.audio.noise_count_probabilities.size() == 5);
  CHECK(ValidateConfig(c).empty());

  Json bad = FixtureConfig(dir / "out");
  bad["text"]["factr"] = 3;
  CHECK_THROWS_AS(Parse(bad), FormatError);
  CHECK_THROWS_AS(ParsePipelineConfig("{", "."), FormatError);
  Json method = FixtureConfig(dir / "out");
  method["text"]["methods"] = {"grammar", "telepathy"};
  CHECK_THROWS_AS(Parse(method), FormatError);
}

TEST_CASE("validation reports every problem before any output exists") {
  const auto dir = testing::ScratchDir("pipeline_validate");
  Json j = FixtureConfig(dir / "never");
  j["mix"]["ratio"] = 1.2;
  j["text"]["factor"] = 0.5;
  j["text"]["grammar"] = "missing.grammar";
  j["audio"]["policy"]["speed"]["probabilities"] = {0.5, 0.5, 0.5};
  const PipelineConfig c = Parse(j);
  const auto d = ValidateConfig(c);
  CHECK(HasField(d, "mix.ratio"));
  CHECK(HasField(d, "text.factor"));
  CHECK(HasField(d, "text.grammar"));
  CHECK(HasField(d, "audio.policy"));
  for (const auto& x : d) {
    if (x.field == "mix.ratio") CHECK(x.message.find("[0, 1]") != std::string::npos);
  }
  CHECK_THROWS_AS(RunPipeline(c), ConfigError);
  CHECK_FALSE(fs::exists(dir / "never"));

  Json no_real = FixtureConfig(dir / "never");
  no_real["mix"].erase("real_manifest");
  CHECK(HasField(ValidateConfig(Parse(no_real)), "mix.real_manifest"));
}

TEST_CASE("pipeline run conserves counts and is repeatable") {
  const auto dir = testing::ScratchDir("pipeline_run");
  const PipelineConfig c = Parse(FixtureConfig(dir / "out"));
  MockSynthesizer synth(DeriveSeed(c.seed, "mock-tts"));
  const RunReport r = RunPipeline(c, &synth);
  REQUIRE(r.ok());
  REQUIRE(r.stages.size() == 4);
  for (const auto& s : r.stages) CHECK_MESSAGE(s.inputs == s.outputs + s.drops, s.name);
  CHECK(r.Stage("text")->outputs == 200);
  CHECK(r.Stage("tts")->outputs == 200);
  CHECK(synth.calls() == 200);
  CHECK(r.synthesis_calls == 200);
  CHECK(LoadManifest(dir / "out" / "mix.jsonl").size() == 500);
  for (const auto& e : LoadManifest(dir / "out" / "audio.jsonl")) {
    CHECK(fs::exists(dir / "out" / e.audio_path));
    CHECK(e.source == EntrySource::kSynthetic);
  }
  const auto first = DirDigest(dir / "out");

  MockSynthesizer again(DeriveSeed(c.seed, "mock-tts"));
  const RunReport r2 = RunPipeline(c, &again);
  CHECK(r2.ok());
  CHECK(again.calls() == 0);
  CHECK(r2.cache_hits == 200);
  CHECK(r2.Stage("text")->skipped);
  CHECK(DirDigest(dir / "out") == first);
  CHECK(ReportJson(r2) == ReportJson(r));
}

TEST_CASE("results do not depend on worker count") {
  const auto dir = testing::ScratchDir("pipeline_workers");
  Json j = FixtureConfig(dir / "w1");
  j["workers"] = 1;
  CHECK(RunPipeline(Parse(j)).ok());
  j["output_dir"] = (dir / "w4").string();
  j["workers"] = 4;
  CHECK(RunPipeline(Parse(j)).ok());
  CHECK(DirDigest(dir / "w1") == DirDigest(dir / "w4"));
}

TEST_CASE("a stage failure is reported with its stage name") {
  const auto dir = testing::ScratchDir("pipeline_failure");
  WriteFileBytes(dir / "pool.jsonl", "{\"id\":\"ghost\",\"path\":\"ghost.wav\",\"duration\":1}\n");
  Json j = FixtureConfig(dir / "out");
  j["audio"]["noise_pool"] = (dir / "pool.jsonl").string();
  j["audio"]["policy"]["noise_count_probabilities"] = {0.0, 1.0};
  const RunReport r = RunPipeline(Parse(j));
  CHECK_FALSE(r.ok());
  CHECK(r.error_stage == std::optional<std::string>("audio"));
  const Json report = Json::parse(ReadFileBytes(dir / "out" / "report.json"));
  CHECK(report["error"]["stage"] == "audio");
  CHECK(report["stages"].size() == 2);
}

TEST_CASE("audio stage passes through unselected sources") {
  const auto dir = testing::ScratchDir("audio_stage");
  const Manifest real = LoadManifest(testing::Fixture("real.jsonl"));
  MemoryNoiseStore pool;
  StageReport st;
  const Manifest out = RunAudioStage(real, AudioPolicy{}, pool, dir / "audio", testing::Fixture(""), 1, 2, st);
  CHECK(out == real);
  CHECK(st.inputs == 3);
  CHECK(st.outputs == 3);
}
