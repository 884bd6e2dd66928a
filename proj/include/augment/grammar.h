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

#ifndef AUGMENT_GRAMMAR_H_
#define AUGMENT_GRAMMAR_H_

// Feature-enhanced context-free grammars: a small rule DSL, a weighted
// top-down sampler and a membership test.
//
// DSL, one statement per line, `#` starts a comment outside quotes:
//
//   @start S
//   S -> "show me" QUANT PICS TIME_PP @2 | "find" PICS
//   NP[num=?n] -> DET[num=?n] N[num=?n]
//   N[num=pl] -> "photos"
//   @lexicon TIME_PP: this tuesday, last weekend, new year's
//
// Quoted strings are terminals (split into tokens on whitespace); bare
// identifiers are nonterminals or lexicon names. `@w` gives an alternative
// weight (default 1). Features are flat `name=value` atoms; values starting
// with `?` are variables scoped to one rule application. A variable is bound
// by the parent's constraint (through the left-hand side) or by the features
// a child synthesizes, left to right. See docs/grammar.md for the EBNF.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "augment/corpus.h"
#include "augment/error.h"
#include "augment/rng.h"

namespace augment {

using FeatureStruct = std::map<std::string, std::string>;

// Succeeds iff no shared key maps to different values.
std::optional<FeatureStruct> Unify(const FeatureStruct& a, const FeatureStruct& b);
std::string ToString(const FeatureStruct& fs);

struct GrammarSymbol {
  bool terminal = false;
  std::string name;                 // nonterminal or lexicon name
  std::vector<std::string> tokens;  // terminal tokens, normalized
  FeatureStruct constraint;
};

struct GrammarRule {
  std::string lhs;
  FeatureStruct lhs_features;
  std::vector<GrammarSymbol> rhs;
  double weight = 1.0;
  int line = 0;
};

class GrammarError : public FormatError {
 public:
  GrammarError(int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

struct Grammar {
  std::vector<GrammarRule> rules;
  std::string start;
  std::map<std::string, std::vector<std::vector<std::string>>> lexicons;

  // Filled in by ParseGrammar.
  std::map<std::string, std::vector<std::size_t>> rules_by_lhs;
  // Fewest expansion levels needed to finish a derivation from a symbol.
  std::map<std::string, int> min_depth;

  bool IsLexicon(const std::string& name) const { return lexicons.contains(name); }
};

// Throws GrammarError (with a line number) on syntax errors, undefined
// nonterminals, duplicate lexicons and nonterminals that cannot terminate.
Grammar ParseGrammar(std::string_view source);
Grammar LoadGrammar(const std::string& path);

struct SampleOptions {
  // 0 selects the default of 50 attempts per requested utterance.
  std::size_t attempt_budget = 0;
};

struct SampleResult {
  Corpus corpus;
  std::size_t attempts = 0;
  std::size_t failed_derivations = 0;
  std::size_t shortfall = 0;  // requested minus produced
};

// One top-down derivation. Returns nullopt when feature constraints leave no
// applicable rule. Never exceeds `max_depth` expansion levels.
std::optional<std::vector<std::string>> SampleDerivation(const Grammar& g, Rng& rng,
                                                         int max_depth);

// Draws derivations until `n` distinct utterances exist or the attempt budget
// runs out. Deterministic for a fixed (grammar, n, seed, max_depth).
SampleResult SampleUtterances(const Grammar& g, std::size_t n, std::uint64_t seed,
                              int max_depth, const SampleOptions& options = {});

// True iff `text` (normalized, whitespace tokenized) is derivable from the
// start symbol, honoring feature constraints and ignoring weights and depth.
bool Membership(const Grammar& g, std::string_view text);

}  // namespace augment

#endif  // AUGMENT_GRAMMAR_H_
