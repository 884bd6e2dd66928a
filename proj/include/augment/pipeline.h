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

#ifndef AUGMENT_PIPELINE_H_
#define AUGMENT_PIPELINE_H_

// End-to-end orchestration: text augmentation, synthesis, audio
// augmentation and manifest mixing, driven by one JSON config file.
// The file format is described in docs/config.md.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "augment/audioaug.h"
#include "augment/corpus.h"
#include "augment/error.h"
#include "augment/filler.h"
#include "augment/mixer.h"
#include "augment/ttsbridge.h"

namespace augment {

struct PipelineConfig {
  std::filesystem::path seed_corpus;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  // text
  std::vector<AugMethod> methods;
  double factor = 1.0;
  std::filesystem::path grammar;
  int max_depth = 12;
  std::filesystem::path tag_lexicon;  // built-in lexicon when empty
  std::size_t max_rounds = 50;
  RandomMaskConfig random;
  FillBackend backend = FillBackend::kNgram;
  std::string fill_endpoint;
  int ngram_order = 3;
  double smoothing_k = 0.1;
  FillOptions fill;
  std::size_t fill_batch_size = 32;
  std::int64_t fill_timeout_ms = 10000;

  // tts
  std::string tts_backend = "mock";
  std::string tts_endpoint;
  std::filesystem::path tts_cache;  // <output_dir>/tts_cache when empty
  VoicePlan voices = VoicePlan::Default();

  // audio
  AudioPolicy audio;
  std::filesystem::path noise_pool;

  // mix
  std::filesystem::path real_manifest;
  MixPolicy mix;
};

// Relative paths are resolved against `base_dir`. Unknown keys and
// ill-typed values throw FormatError; semantic checks are left to
// ValidateConfig.
PipelineConfig ParsePipelineConfig(std::string_view json_text,
                                   const std::filesystem::path& base_dir);
PipelineConfig LoadPipelineConfig(const std::filesystem::path& path);

struct Diagnostic {
  std::string field;
  std::string message;
};

// Empty iff the config is runnable. Checks path existence and every
// sub-policy.
std::vector<Diagnostic> ValidateConfig(const PipelineConfig& config);

class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

struct StageReport {
  std::string name;
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::size_t drops = 0;
  std::size_t shortfall = 0;
  bool skipped = false;  // outputs reused from an identical earlier run
  double seconds = 0.0;
};

struct RunReport {
  std::vector<StageReport> stages;
  CorpusStats stats_before;
  CorpusStats stats_after;
  std::map<std::string, std::size_t> accepted_by_method;
  std::optional<BudgetReport> budget;
  std::size_t synthesis_calls = 0;
  std::size_t cache_hits = 0;
  std::optional<std::string> error_stage;
  std::optional<std::string> error_message;

  bool ok() const { return !error_stage; }
  const StageReport* Stage(const std::string& name) const;
};

// Deterministic part of the report (no timings, no cache counters).
std::string ReportJson(const RunReport& report);
std::string StatsToJson(const CorpusStats& stats);
std::string BudgetToJson(const BudgetReport& budget);
// Volatile counters: timings, skipped stages, synthesis calls.
std::string RunMetaJson(const RunReport& report);

// Builds the text plan, loading the grammar and tag lexicon it references.
AugPlan MakeAugPlan(const PipelineConfig& config);

// Per-item synthesis with voice assignment. Audio paths in the returned
// manifest are the cache files.
Manifest RunTtsStage(const Corpus& texts, const PipelineConfig& config, Synthesizer& synthesizer,
                     TtsCache& cache, StageReport& report, std::size_t* upstream_calls = nullptr,
                     std::size_t* cache_hits = nullptr);

// Applies a sampled plan per entry and writes the augmented WAVs under
// `audio_dir`. Plans are seeded from (seed, audio file stem), so results do
// not depend on worker count. Relative paths, read and written, are taken
// against `base_dir`. Entries whose source is not selected by the policy
// pass through unchanged.
Manifest RunAudioStage(const Manifest& input, const AudioPolicy& policy, NoiseStore& pool,
                       const std::filesystem::path& audio_dir,
                       const std::filesystem::path& base_dir, std::uint64_t seed,
                       std::size_t workers, StageReport& report);

// Runs every stage in order, writing texts.jsonl, tts.jsonl, audio.jsonl,
// mix.jsonl, report.json and run_meta.json under the output directory.
// Throws ConfigError before touching the filesystem when validation fails;
// stage failures are reported in the returned report (and report.json).
// `synthesizer` overrides the configured backend when non-null.
RunReport RunPipeline(const PipelineConfig& config, Synthesizer* synthesizer = nullptr);

}  // namespace augment

#endif  // AUGMENT_PIPELINE_H_
