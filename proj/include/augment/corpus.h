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

#ifndef AUGMENT_CORPUS_H_
#define AUGMENT_CORPUS_H_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace augment {

enum class Source { kSeed, kGrammar, kMaskRandom, kMaskCustom, kExternal };

std::string_view ToString(Source source);
// Throws Error on an unknown tag.
Source ParseSource(std::string_view tag);

// One text line of a corpus. `text` is stored normalized.
struct Utterance {
  std::string id;
  std::string text;
  Source source = Source::kSeed;
  std::optional<std::string> parent_id;

  bool operator==(const Utterance&) const = default;
};

using Corpus = std::vector<Utterance>;

struct NormPolicy {
  bool lowercase = true;
  // Removes ASCII punctuation other than apostrophes. Meant for dedup keys.
  bool strip_punctuation = false;
};

// Lowercases ASCII (per policy), collapses whitespace runs to a single space
// and trims. Idempotent. Non-ASCII bytes pass through untouched.
std::string Normalize(std::string_view text, const NormPolicy& policy = {});

std::vector<std::string> Tokenize(std::string_view normalized_text);
std::string JoinTokens(const std::vector<std::string>& tokens);

bool IsValidUtf8(std::string_view text);

enum class CorpusFormat { kLines, kJsonl };

// Positional ids are `<file name>:<record index>`, counting non-blank records.
// JSONL records must carry "text"; "id", "source" and "parent_id" are kept when
// present. Throws FormatError naming the 1-based line on malformed input.
Corpus LoadCorpus(const std::filesystem::path& path, CorpusFormat format,
                  const NormPolicy& policy = {});
Corpus ParseCorpus(std::string_view content, std::string_view name,
                   CorpusFormat format, const NormPolicy& policy = {});
// Picks kJsonl for *.jsonl, kLines otherwise.
CorpusFormat GuessFormat(const std::filesystem::path& path);

// Fixed field order {id, text, source, parent_id}; one record per line.
std::string ToJsonl(const Utterance& u);
void WriteCorpusJsonl(std::ostream& out, const Corpus& corpus);
void WriteCorpusJsonl(const std::filesystem::path& path, const Corpus& corpus);

struct DedupResult {
  Corpus corpus;
  double drop_rate = 0.0;
  std::size_t dropped = 0;
};

// Keeps the first occurrence of each normalized key; members of `against`
// are dropped as well.
DedupResult Dedup(const Corpus& corpus, const Corpus* against = nullptr,
                  const NormPolicy& key_policy = {});

struct CorpusStats {
  std::size_t num_utterances = 0;
  std::size_t vocab_size = 0;
  double distinct_1 = 0.0;
  double distinct_2 = 0.0;
  double novel_ngram_rate = 0.0;
  double dedup_drop_rate = 0.0;
};

// Mergeable n-gram tallies. Merge is associative and commutative, so corpus
// partitions can be tallied independently.
class StatsAccumulator {
 public:
  void Add(const Utterance& u);
  void Merge(const StatsAccumulator& other);
  // `seed_bigrams` may be null, in which case novel_ngram_rate is 0.
  CorpusStats Finish(const std::unordered_set<std::string>* seed_bigrams) const;

 private:
  std::size_t utterances_ = 0;
  std::size_t unigram_total_ = 0;
  std::size_t bigram_total_ = 0;
  std::unordered_set<std::string> unigrams_;
  std::unordered_set<std::string> bigrams_;
  std::unordered_set<std::string> texts_;
};

std::unordered_set<std::string> BigramSet(const Corpus& corpus);

// distinct_n = unique n-grams / total n-grams over the whole corpus.
// novel_ngram_rate = share of the corpus's distinct bigrams absent from seed.
// dedup_drop_rate = share of utterances whose text repeats an earlier one.
CorpusStats ComputeStats(const Corpus& corpus, const Corpus& seed);

}  // namespace augment

#endif  // AUGMENT_CORPUS_H_
