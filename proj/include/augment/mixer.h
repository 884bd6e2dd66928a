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

#ifndef AUGMENT_MIXER_H_
#define AUGMENT_MIXER_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "augment/rng.h"

namespace augment {

enum class EntrySource { kReal, kSynthetic };
std::string_view ToString(EntrySource source);
EntrySource ParseEntrySource(std::string_view tag);

struct ManifestEntry {
  std::string audio_path;
  std::string text;
  double duration_s = 0.0;
  EntrySource source = EntrySource::kReal;
  std::string origin;  // text-augmentation method tag

  bool operator==(const ManifestEntry&) const = default;
};

using Manifest = std::vector<ManifestEntry>;

// JSONL {audio_path, text, duration_s, source, origin}. Throws FormatError
// naming the line for malformed records or violated invariants.
Manifest ParseManifest(std::string_view content, std::string_view name = "manifest");
Manifest LoadManifest(const std::filesystem::path& path);
std::string ToJsonl(const ManifestEntry& entry);
void WriteManifest(std::ostream& out, const Manifest& manifest);
void WriteManifest(const std::filesystem::path& path, const Manifest& manifest);

// Rewrites relative audio paths, read against `from`, so that they resolve
// against `to`. Paths that would leave `to` become absolute.
void RebasePaths(Manifest& manifest, const std::filesystem::path& from,
                 const std::filesystem::path& to);

struct MixPolicy {
  double ratio = 0.1;  // expected synthetic fraction of emitted entries
  std::size_t epoch_len = 100000;
  std::uint64_t seed = 0;
};

std::vector<std::string> ValidateMixPolicy(const MixPolicy& policy);

// Cycles through a source in freshly shuffled passes: every entry appears
// once per pass.
class EpochSampler {
 public:
  EpochSampler(std::size_t size, std::uint64_t seed);
  std::size_t Next();

 private:
  void Reshuffle();
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  Rng rng_;
};

// Per slot, picks synthetic with probability `ratio`, else real, then takes
// the next entry from that source's epoch sampler.
class MixStream {
 public:
  MixStream(const Manifest& real, const Manifest& synthetic, const MixPolicy& policy);
  const ManifestEntry& Next();

 private:
  const Manifest& real_;
  const Manifest& synthetic_;
  double ratio_;
  Rng choice_;
  EpochSampler real_sampler_;
  EpochSampler synthetic_sampler_;
};

// Materializes policy.epoch_len slots. Throws Error when real is empty, or
// when ratio > 0 and synthetic is empty.
Manifest MixStreamEntries(const Manifest& real, const Manifest& synthetic, const MixPolicy& policy);

struct SourceBudget {
  std::size_t entries = 0;
  double hours = 0.0;
};

struct BudgetReport {
  SourceBudget real;
  SourceBudget synthetic;
  std::map<std::string, SourceBudget> by_origin;
  double synthetic_entry_share = 0.0;     // in the pooled manifests
  double synthetic_duration_share = 0.0;  // in the pooled manifests
  // Expected share of emitted audio time that is synthetic under the ratio.
  double expected_stream_duration_share = 0.0;
};

BudgetReport ReportBudget(const Manifest& real, const Manifest& synthetic, const MixPolicy& policy);

}  // namespace augment

#endif  // AUGMENT_MIXER_H_
