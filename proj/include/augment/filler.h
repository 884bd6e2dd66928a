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

#ifndef AUGMENT_FILLER_H_
#define AUGMENT_FILLER_H_

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "augment/corpus.h"
#include "augment/grammar.h"
#include "augment/http_retry.h"
#include "augment/masking.h"

namespace augment {

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";

// Fixed-order n-gram model with add-k smoothing:
//   P(w | ctx) = (c(ctx, w) + k) / (c(ctx) + k |V|)
// where V is the training vocabulary plus both boundary markers.
class NgramModel {
 public:
  // Sentences are padded with order-1 <s> markers and one </s>. With
  // `reversed`, each sentence is reversed before padding, which gives the
  // right-to-left model used for right-context scoring.
  static NgramModel Train(const Corpus& seed, int order, double k, bool reversed = false);

  // `context` is the token history, most recent last; only the final
  // order-1 tokens are used and shorter histories are padded with <s>.
  double Prob(std::span<const std::string> context, std::string_view next) const;

  int order() const { return order_; }
  double smoothing() const { return k_; }
  bool reversed() const { return reversed_; }
  // Sorted; includes <s> and </s>.
  const std::vector<std::string>& vocab() const { return vocab_; }

  struct ContextCounts {
    std::size_t total = 0;
    std::unordered_map<std::string, std::size_t> next;
  };
  // Null for unseen contexts.
  const ContextCounts* Lookup(std::span<const std::string> context) const;

 private:
  std::string ContextKey(std::span<const std::string> context) const;

  int order_ = 3;
  double k_ = 0.1;
  bool reversed_ = false;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, ContextCounts> counts_;
};

struct BidirectionalModel {
  NgramModel forward;
  NgramModel backward;
};

// Throws Error on an empty seed or order < 2.
BidirectionalModel TrainNgram(const Corpus& seed, int order = 3, double k = 0.1);

enum class FillBackend { kNgram, kExternal };
std::string_view ToString(FillBackend backend);
FillBackend ParseFillBackend(std::string_view tag);

struct FillCandidate {
  std::vector<std::vector<std::string>> tokens_per_slot;
  double score = 0.0;  // log-probability-like, <= 0
  FillBackend backend = FillBackend::kNgram;
};

struct SlotScore {
  std::string token;
  double score = 0.0;  // forward probability times backward probability
};

// Scores every vocabulary token (boundary markers and the mask excluded) for
// the slot at `position`, best first; ties break on the token text.
std::vector<SlotScore> ScoreSlot(const BidirectionalModel& model,
                                 std::span<const std::string> tokens, std::size_t position,
                                 std::string_view mask_token = kDefaultMaskToken);

struct FillOptions {
  std::size_t top_k = 20;
  double temperature = 1.0;
  std::size_t n_outputs = 3;
  std::string mask_token{kDefaultMaskToken};
};

// Fills the slots left to right, sampling each from the top-k slot scores
// sharpened by 1/temperature. Returns up to n_outputs distinct utterances.
// Throws Error when the template has no mask.
std::vector<Utterance> Fill(const MaskedTemplate& tmpl, const BidirectionalModel& model,
                            const FillOptions& options, std::uint64_t seed);
std::vector<FillCandidate> FillCandidates(const MaskedTemplate& tmpl,
                                          const BidirectionalModel& model,
                                          const FillOptions& options, std::uint64_t seed);

// Splits `filled` into the tokens each mask slot received, keeping the
// template's literal tokens in place; every slot must take at least one
// token. Nullopt when the text does not fit the template.
std::optional<std::vector<std::vector<std::string>>> AlignFill(const MaskedTemplate& tmpl,
                                                               std::string_view filled,
                                                               std::string_view mask_token);

struct ExternalFillConfig {
  std::string endpoint;  // e.g. http://127.0.0.1:8080/fill
  std::size_t batch_size = 32;
  std::size_t n_outputs = 3;
  std::chrono::milliseconds timeout{10000};
  RetryPolicy retry;
  std::size_t max_in_flight = 4;
  std::string mask_token{kDefaultMaskToken};
};

struct FillDiagnostics {
  std::size_t requests = 0;
  std::size_t received = 0;
  std::size_t dropped = 0;
  std::map<std::string, std::size_t> drop_reasons;

  void Drop(const std::string& reason, std::size_t n = 1) {
    dropped += n;
    drop_reasons[reason] += n;
  }
};

struct ExternalFillResult {
  std::vector<Utterance> utterances;  // template order
  FillDiagnostics diagnostics;
  std::optional<std::string> error;   // set when a batch failed after retries
};

// Request body  {"texts": [...], "n_candidates": n, "mask_token": "<mask>"}
// Response body {"results": [[{"text": ..., "score": ...}, ...], ...]}
std::string BuildFillRequest(std::span<const MaskedTemplate> batch, std::size_t n_candidates,
                             std::string_view mask_token);

// Invalid candidates are dropped and counted, never fatal.
ExternalFillResult FillExternal(std::span<const MaskedTemplate> templates,
                                const ExternalFillConfig& config);

enum class AugMethod { kGrammar, kRandom, kCustom };
std::string_view ToString(AugMethod method);
AugMethod ParseAugMethod(std::string_view tag);

struct AugPlan {
  std::vector<AugMethod> methods;
  double factor = 1.0;
  std::uint64_t seed = 0;

  std::size_t max_rounds = 50;
  // Stop after this many consecutive rounds that add nothing.
  std::size_t stall_rounds = 5;

  std::shared_ptr<const Grammar> grammar;
  int max_depth = 12;

  RandomMaskConfig random;
  std::shared_ptr<const PosTagger> tagger;  // default lexicon when null

  FillBackend backend = FillBackend::kNgram;
  int ngram_order = 3;
  double smoothing_k = 0.1;
  FillOptions fill;
  ExternalFillConfig external;
};

struct AugResult {
  Corpus corpus;  // seed first, then accepted augmentations
  std::size_t target = 0;
  std::size_t shortfall = 0;
  std::size_t rounds = 0;
  std::size_t candidates = 0;  // generated texts considered
  std::size_t duplicates = 0;  // rejected as already present
  std::size_t surplus = 0;     // unique but beyond the target
  std::size_t invalid = 0;     // rejected by validation (external backend)
  std::map<AugMethod, std::size_t> accepted;
  std::optional<std::string> error;
};

// floor(factor * seed_size), counting unique utterances with the seed included.
std::size_t AugmentationTarget(std::size_t seed_size, double factor);

AugResult RunTextAugmentation(const Corpus& seed, const AugPlan& plan);

}  // namespace augment

#endif  // AUGMENT_FILLER_H_
