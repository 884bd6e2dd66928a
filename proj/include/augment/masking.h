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

#ifndef AUGMENT_MASKING_H_
#define AUGMENT_MASKING_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "augment/corpus.h"

namespace augment {

inline constexpr std::string_view kDefaultMaskToken = "<mask>";

enum class MaskStrategy { kRandom, kCustom };
std::string_view ToString(MaskStrategy strategy);
MaskStrategy ParseMaskStrategy(std::string_view tag);

struct MaskedTemplate {
  std::string id;
  std::vector<std::string> tokens;
  std::string parent_id;
  MaskStrategy strategy = MaskStrategy::kRandom;
  std::vector<std::size_t> mask_positions;  // sorted, into `tokens`

  std::string Text() const { return JoinTokens(tokens); }
  bool operator==(const MaskedTemplate&) const = default;
};

// Recomputes mask positions from the tokens.
std::vector<std::size_t> FindMasks(const std::vector<std::string>& tokens,
                                   std::string_view mask_token);

enum class MaskMode { kReplace, kInsert, kMixed };
MaskMode ParseMaskMode(std::string_view tag);

struct RandomMaskConfig {
  // Weight of drawing 1, 2, 3, ... masks per template.
  std::vector<double> mask_count_weights{1.0, 1.0, 1.0};
  MaskMode mode = MaskMode::kReplace;
  std::size_t templates_per_utterance = 4;
  std::string mask_token{kDefaultMaskToken};
};

// Replace mode substitutes distinct tokens (the count is clamped to the
// utterance length); insert mode adds masks at random gaps; mixed mode flips
// a coin per mask. Deterministic for a fixed seed.
std::vector<MaskedTemplate> MaskRandom(const Utterance& u, const RandomMaskConfig& config,
                                       std::uint64_t seed);

enum class PosClass { kNoun, kVerb, kOther };
std::string_view ToString(PosClass tag);

// A tagged unit. Multi-word lexicon entries (compounds such as
// "travel discount") form a single unit whose token holds the words joined
// by single spaces.
struct PosTag {
  std::string token;
  PosClass tag = PosClass::kOther;
};

class PosTagger {
 public:
  virtual ~PosTagger() = default;
  // The concatenated unit tokens must reproduce `tokens` exactly.
  virtual std::vector<PosTag> Tag(std::span<const std::string> tokens) const = 0;
};

// Lexicon lookup (longest multi-word match first, case-insensitive, trailing
// punctuation ignored), then suffix heuristics, then OTHER.
class LexiconTagger : public PosTagger {
 public:
  LexiconTagger() = default;
  // Lines of `word<TAB>TAG`; blank lines and `#` comments are skipped.
  static LexiconTagger Parse(std::string_view content);
  static LexiconTagger Load(const std::filesystem::path& path);
  // Small built-in English lexicon.
  static const LexiconTagger& Default();

  void Add(std::string_view phrase, PosClass tag);
  std::vector<PosTag> Tag(std::span<const std::string> tokens) const override;
  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_map<std::string, PosClass> entries_;
  std::size_t max_words_ = 1;
};

std::vector<PosTag> TagPos(std::span<const std::string> tokens, const PosTagger& tagger);

// One template per NOUN/VERB unit, that unit replaced by a single mask.
// Returns an empty list when no unit qualifies.
std::vector<MaskedTemplate> MaskCustom(const Utterance& u, std::span<const PosTag> tags,
                                       std::string_view mask_token = kDefaultMaskToken);

// JSONL {parent_id, strategy, tokens}.
std::string ToJsonl(const MaskedTemplate& t);
void WriteTemplatesJsonl(std::ostream& out, std::span<const MaskedTemplate> templates);
std::vector<MaskedTemplate> ParseTemplatesJsonl(std::string_view content,
                                                std::string_view mask_token = kDefaultMaskToken);

}  // namespace augment

#endif  // AUGMENT_MASKING_H_
