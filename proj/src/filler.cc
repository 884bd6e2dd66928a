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

#include "augment/filler.h"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <unordered_set>

#include "augment/error.h"
#include "augment/rng.h"

namespace augment {
namespace {

bool IsBoundary(std::string_view token) { return token == kBos || token == kEos; }

std::optional<std::vector<std::vector<std::string>>> AlignFrom(
    const std::vector<std::string>& tmpl, const std::vector<std::string>& filled,
    std::string_view mask_token, std::size_t ti, std::size_t fi,
    std::vector<std::vector<std::string>>& slots) {
  if (ti == tmpl.size()) {
    if (fi == filled.size()) return slots;
    return std::nullopt;
  }
  if (tmpl[ti] != mask_token) {
    if (fi < filled.size() && filled[fi] == tmpl[ti]) {
      return AlignFrom(tmpl, filled, mask_token, ti + 1, fi + 1, slots);
    }
    return std::nullopt;
  }
  const std::size_t rest = tmpl.size() - ti - 1;
  for (std::size_t len = 1; fi + len + rest <= filled.size(); ++len) {
    slots.emplace_back(filled.begin() + static_cast<std::ptrdiff_t>(fi),
                       filled.begin() + static_cast<std::ptrdiff_t>(fi + len));
    if (auto done = AlignFrom(tmpl, filled, mask_token, ti + 1, fi + len, slots)) return done;
    slots.pop_back();
  }
  return std::nullopt;
}

Source SourceFor(MaskStrategy strategy) {
  return strategy == MaskStrategy::kRandom ? Source::kMaskRandom : Source::kMaskCustom;
}

struct BatchOutcome {
  std::vector<std::vector<Utterance>> per_template;
  FillDiagnostics diagnostics;
  std::optional<std::string> error;
  bool done = false;
};

BatchOutcome RunBatch(std::span<const MaskedTemplate> batch, const ExternalFillConfig& config) {
  BatchOutcome out;
  out.per_template.resize(batch.size());
  const std::string body = BuildFillRequest(batch, config.n_outputs, config.mask_token);
  const HttpOutcome http =
      PostWithRetry(config.endpoint, body, "application/json", config.timeout, config.retry);
  out.diagnostics.requests += static_cast<std::size_t>(http.attempts);
  if (!http.ok()) {
    out.error = http.error.value_or("fill request failed with HTTP " + std::to_string(http.status));
    return out;
  }
  out.done = true;

  nlohmann::json response;
  try {
    response = nlohmann::json::parse(http.body);
  } catch (const nlohmann::json::parse_error&) {
    out.diagnostics.Drop("malformed_response", batch.size());
    return out;
  }
  if (!response.is_object() || !response.contains("results") || !response["results"].is_array() ||
      response["results"].size() != batch.size()) {
    out.diagnostics.Drop("malformed_response", batch.size());
    return out;
  }
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& tmpl = batch[i];
    const auto& list = response["results"][i];
    if (!list.is_array()) {
      out.diagnostics.Drop("malformed_candidate");
      continue;
    }
    std::unordered_set<std::string> seen;
    for (const auto& cand : list) {
      ++out.diagnostics.received;
      if (!cand.is_object() || !cand.contains("text") || !cand["text"].is_string()) {
        out.diagnostics.Drop("malformed_candidate");
        continue;
      }
      std::string text = Normalize(cand["text"].get<std::string>());
      if (text.empty()) {
        out.diagnostics.Drop("empty");
        continue;
      }
      if (text.find(config.mask_token) != std::string::npos) {
        out.diagnostics.Drop("residual_mask");
        continue;
      }
      if (!AlignFill(tmpl, text, config.mask_token)) {
        out.diagnostics.Drop("misaligned");
        continue;
      }
      if (out.per_template[i].size() >= config.n_outputs || !seen.insert(text).second) continue;
      Utterance u;
      u.id = tmpl.id + "/x" + std::to_string(out.per_template[i].size());
      u.text = std::move(text);
      u.source = SourceFor(tmpl.strategy);
      u.parent_id = tmpl.parent_id;
      out.per_template[i].push_back(std::move(u));
    }
  }
  return out;
}

}  // namespace

NgramModel NgramModel::Train(const Corpus& seed, int order, double k, bool reversed) {
  if (seed.empty()) throw Error("train_ngram: seed corpus is empty");
  if (order < 2) throw Error("train_ngram: order must be at least 2");
  if (!(k > 0.0)) throw Error("train_ngram: smoothing constant must be positive");
  NgramModel m;
  m.order_ = order;
  m.k_ = k;
  m.reversed_ = reversed;
  std::unordered_set<std::string> vocab{std::string(kBos), std::string(kEos)};
  for (const auto& u : seed) {
    auto tokens = Tokenize(u.text);
    if (reversed) std::reverse(tokens.begin(), tokens.end());
    std::vector<std::string> padded(static_cast<std::size_t>(order - 1), std::string(kBos));
    padded.insert(padded.end(), tokens.begin(), tokens.end());
    padded.emplace_back(kEos);
    vocab.insert(tokens.begin(), tokens.end());
    for (std::size_t p = static_cast<std::size_t>(order - 1); p < padded.size(); ++p) {
      std::span<const std::string> ctx(padded.data() + p - (order - 1),
                                       static_cast<std::size_t>(order - 1));
      auto& entry = m.counts_[m.ContextKey(ctx)];
      ++entry.total;
      ++entry.next[padded[p]];
    }
  }
  m.vocab_.assign(vocab.begin(), vocab.end());
  std::sort(m.vocab_.begin(), m.vocab_.end());
  return m;
}

std::string NgramModel::ContextKey(std::span<const std::string> context) const {
  const std::size_t width = static_cast<std::size_t>(order_ - 1);
  std::string key;
  const std::size_t have = std::min(width, context.size());
  for (std::size_t i = have; i < width; ++i) {
    key += kBos;
    key += '\x1f';
  }
  for (std::size_t i = context.size() - have; i < context.size(); ++i) {
    key += context[i];
    key += '\x1f';
  }
  return key;
}

const NgramModel::ContextCounts* NgramModel::Lookup(std::span<const std::string> context) const {
  auto it = counts_.find(ContextKey(context));
  return it == counts_.end() ? nullptr : &it->second;
}

double NgramModel::Prob(std::span<const std::string> context, std::string_view next) const {
  const double v = static_cast<double>(vocab_.size());
  const ContextCounts* entry = Lookup(context);
  if (entry == nullptr) return 1.0 / v;
  double c = 0.0;
  if (auto it = entry->next.find(std::string(next)); it != entry->next.end()) {
    c = static_cast<double>(it->second);
  }
  return (c + k_) / (static_cast<double>(entry->total) + k_ * v);
}

BidirectionalModel TrainNgram(const Corpus& seed, int order, double k) {
  return {NgramModel::Train(seed, order, k, false), NgramModel::Train(seed, order, k, true)};
}

std::string_view ToString(FillBackend backend) {
  return backend == FillBackend::kNgram ? "ngram" : "external";
}

FillBackend ParseFillBackend(std::string_view tag) {
  if (tag == "ngram") return FillBackend::kNgram;
  if (tag == "external") return FillBackend::kExternal;
  throw Error("unknown filler backend '" + std::string(tag) + "'");
}

std::vector<SlotScore> ScoreSlot(const BidirectionalModel& model,
                                 std::span<const std::string> tokens, std::size_t position,
                                 std::string_view mask_token) {
  if (position >= tokens.size()) throw Error("ScoreSlot: position out of range");
  std::span<const std::string> left = tokens.first(position);
  std::vector<std::string> right(tokens.begin() + static_cast<std::ptrdiff_t>(position) + 1,
                                 tokens.end());
  std::reverse(right.begin(), right.end());

  const auto& fwd = model.forward;
  const auto& bwd = model.backward;
  const auto* fctx = fwd.Lookup(left);
  const auto* bctx = bwd.Lookup(right);
  const double fv = static_cast<double>(fwd.vocab().size());
  const double bv = static_cast<double>(bwd.vocab().size());
  auto conditional = [](const NgramModel::ContextCounts* ctx, const std::string& w, double k,
                        double v) {
    if (ctx == nullptr) return 1.0 / v;
    double c = 0.0;
    if (auto it = ctx->next.find(w); it != ctx->next.end()) c = static_cast<double>(it->second);
    return (c + k) / (static_cast<double>(ctx->total) + k * v);
  };

  std::vector<SlotScore> scores;
  scores.reserve(fwd.vocab().size());
  for (const auto& w : fwd.vocab()) {
    if (IsBoundary(w) || w == mask_token) continue;
    scores.push_back({w, conditional(fctx, w, fwd.smoothing(), fv) *
                             conditional(bctx, w, bwd.smoothing(), bv)});
  }
  std::sort(scores.begin(), scores.end(), [](const SlotScore& a, const SlotScore& b) {
    return a.score != b.score ? a.score > b.score : a.token < b.token;
  });
  return scores;
}

std::vector<FillCandidate> FillCandidates(const MaskedTemplate& tmpl,
                                          const BidirectionalModel& model,
                                          const FillOptions& options, std::uint64_t seed) {
  const auto positions = FindMasks(tmpl.tokens, options.mask_token);
  if (positions.empty()) throw Error("fill: template '" + tmpl.id + "' has no mask");
  if (!(options.temperature > 0.0)) throw Error("fill: temperature must be positive");
  if (options.top_k == 0) throw Error("fill: top_k must be at least 1");

  Rng rng(seed);
  std::vector<FillCandidate> out;
  std::unordered_set<std::string> seen;
  for (std::size_t draw = 0; draw < options.n_outputs; ++draw) {
    std::vector<std::string> tokens = tmpl.tokens;
    FillCandidate cand;
    cand.backend = FillBackend::kNgram;
    for (std::size_t pos : positions) {
      auto scores = ScoreSlot(model, tokens, pos, options.mask_token);
      if (scores.empty()) throw Error("fill: model vocabulary has no fillable tokens");
      scores.resize(std::min(scores.size(), options.top_k));
      const double best = std::log(scores.front().score);
      std::vector<double> weights;
      weights.reserve(scores.size());
      for (const auto& s : scores) {
        weights.push_back(std::exp((std::log(s.score) - best) / options.temperature));
      }
      double total = 0.0;
      for (double w : weights) total += w;
      const std::size_t pick = rng.Categorical(weights);
      cand.score += std::log(weights[pick] / total);
      tokens[pos] = scores[pick].token;
      cand.tokens_per_slot.push_back({scores[pick].token});
    }
    if (seen.insert(JoinTokens(tokens)).second) out.push_back(std::move(cand));
  }
  return out;
}

std::vector<Utterance> Fill(const MaskedTemplate& tmpl, const BidirectionalModel& model,
                            const FillOptions& options, std::uint64_t seed) {
  const auto positions = FindMasks(tmpl.tokens, options.mask_token);
  std::vector<Utterance> out;
  for (const auto& cand : FillCandidates(tmpl, model, options, seed)) {
    std::vector<std::string> tokens = tmpl.tokens;
    for (std::size_t s = 0; s < positions.size(); ++s) tokens[positions[s]] = cand.tokens_per_slot[s][0];
    Utterance u;
    u.id = tmpl.id + "/f" + std::to_string(out.size());
    u.text = Normalize(JoinTokens(tokens));
    u.source = SourceFor(tmpl.strategy);
    u.parent_id = tmpl.parent_id;
    out.push_back(std::move(u));
  }
  return out;
}

std::optional<std::vector<std::vector<std::string>>> AlignFill(const MaskedTemplate& tmpl,
                                                               std::string_view filled,
                                                               std::string_view mask_token) {
  std::vector<std::string> tmpl_tokens;
  for (const auto& t : tmpl.tokens) tmpl_tokens.push_back(t == mask_token ? t : Normalize(t));
  const auto filled_tokens = Tokenize(Normalize(filled));
  std::vector<std::vector<std::string>> slots;
  return AlignFrom(tmpl_tokens, filled_tokens, mask_token, 0, 0, slots);
}

std::string BuildFillRequest(std::span<const MaskedTemplate> batch, std::size_t n_candidates,
                             std::string_view mask_token) {
  nlohmann::ordered_json req;
  req["texts"] = nlohmann::ordered_json::array();
  for (const auto& t : batch) req["texts"].push_back(t.Text());
  req["n_candidates"] = n_candidates;
  req["mask_token"] = mask_token;
  return req.dump();
}

ExternalFillResult FillExternal(std::span<const MaskedTemplate> templates,
                                const ExternalFillConfig& config) {
  if (config.batch_size == 0) throw Error("fill_external: batch size must be positive");
  const std::size_t n_batches = (templates.size() + config.batch_size - 1) / config.batch_size;
  std::vector<BatchOutcome> outcomes(n_batches);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto worker = [&]() {
    while (!failed.load()) {
      const std::size_t b = next.fetch_add(1);
      if (b >= n_batches) return;
      const std::size_t begin = b * config.batch_size;
      const std::size_t len = std::min(config.batch_size, templates.size() - begin);
      outcomes[b] = RunBatch(templates.subspan(begin, len), config);
      if (outcomes[b].error) failed.store(true);
    }
  };
  const std::size_t n_threads = std::min(std::max<std::size_t>(1, config.max_in_flight), n_batches);
  std::vector<std::thread> threads;
  for (std::size_t i = 1; i < n_threads; ++i) threads.emplace_back(worker);
  if (n_threads > 0) worker();
  for (auto& t : threads) t.join();

  ExternalFillResult result;
  for (auto& o : outcomes) {
    result.diagnostics.requests += o.diagnostics.requests;
    result.diagnostics.received += o.diagnostics.received;
    for (const auto& [reason, n] : o.diagnostics.drop_reasons) result.diagnostics.Drop(reason, n);
    if (o.error && !result.error) result.error = o.error;
    for (auto& list : o.per_template) {
      for (auto& u : list) result.utterances.push_back(std::move(u));
    }
  }
  return result;
}

std::string_view ToString(AugMethod method) {
  switch (method) {
    case AugMethod::kGrammar: return "grammar";
    case AugMethod::kRandom: return "random";
    case AugMethod::kCustom: return "custom";
  }
  return "grammar";
}

AugMethod ParseAugMethod(std::string_view tag) {
  if (tag == "grammar") return AugMethod::kGrammar;
  if (tag == "random") return AugMethod::kRandom;
  if (tag == "custom") return AugMethod::kCustom;
  throw Error("unknown augmentation method '" + std::string(tag) + "'");
}

std::size_t AugmentationTarget(std::size_t seed_size, double factor) {
  return static_cast<std::size_t>(std::floor(factor * static_cast<double>(seed_size) + 1e-9));
}

AugResult RunTextAugmentation(const Corpus& seed, const AugPlan& plan) {
  if (!(plan.factor >= 1.0)) throw Error("augmentation factor must be at least 1");
  auto has = [&](AugMethod m) {
    return std::find(plan.methods.begin(), plan.methods.end(), m) != plan.methods.end();
  };
  if (has(AugMethod::kGrammar) && !plan.grammar) {
    throw Error("grammar method enabled without a grammar");
  }

  AugResult result;
  result.corpus = Dedup(seed).corpus;
  result.candidates = seed.size();
  result.duplicates = seed.size() - result.corpus.size();
  result.target = AugmentationTarget(result.corpus.size(), plan.factor);

  std::unordered_set<std::string> present;
  for (const auto& u : result.corpus) present.insert(Normalize(u.text));

  const bool need_fill = has(AugMethod::kRandom) || has(AugMethod::kCustom);
  const Corpus seed_set = result.corpus;
  std::optional<BidirectionalModel> model;
  if (need_fill && plan.backend == FillBackend::kNgram && !seed_set.empty()) {
    model = TrainNgram(seed_set, plan.ngram_order, plan.smoothing_k);
  }
  std::vector<MaskedTemplate> custom_templates;
  if (has(AugMethod::kCustom)) {
    const PosTagger& tagger = plan.tagger ? *plan.tagger : LexiconTagger::Default();
    for (const auto& u : seed_set) {
      const auto tokens = Tokenize(u.text);
      for (auto& t : MaskCustom(u, TagPos(tokens, tagger), plan.fill.mask_token)) {
        custom_templates.push_back(std::move(t));
      }
    }
  }

  std::size_t stalled = 0;
  for (std::size_t round = 0; round < plan.max_rounds && result.corpus.size() < result.target &&
                              !plan.methods.empty() && !seed_set.empty();
       ++round) {
    ++result.rounds;
    const std::string tag = "round" + std::to_string(round);
    std::vector<std::vector<Utterance>> per_method;
    std::vector<AugMethod> order;

    std::vector<MaskedTemplate> templates;
    if (has(AugMethod::kRandom)) {
      RandomMaskConfig cfg = plan.random;
      cfg.mask_token = plan.fill.mask_token;
      for (const auto& u : seed_set) {
        auto ts = MaskRandom(u, cfg, DeriveSeed(plan.seed, "mask/" + tag + "/" + u.id));
        for (auto& t : ts) {
          t.id += "@" + tag;
          templates.push_back(std::move(t));
        }
      }
    }
    if (has(AugMethod::kCustom)) {
      for (auto t : custom_templates) {
        t.id += "@" + tag;
        templates.push_back(std::move(t));
      }
    }

    std::vector<Utterance> filled;
    if (!templates.empty()) {
      if (plan.backend == FillBackend::kNgram) {
        for (const auto& t : templates) {
          for (auto& u : Fill(t, *model, plan.fill, DeriveSeed(plan.seed, "fill/" + t.id))) {
            filled.push_back(std::move(u));
          }
        }
      } else {
        ExternalFillConfig cfg = plan.external;
        cfg.n_outputs = plan.fill.n_outputs;
        cfg.mask_token = plan.fill.mask_token;
        auto ext = FillExternal(templates, cfg);
        result.candidates += ext.diagnostics.dropped;
        result.invalid += ext.diagnostics.dropped;
        filled = std::move(ext.utterances);
        if (ext.error) result.error = "fill_external: " + *ext.error;
      }
    }

    for (AugMethod m : plan.methods) {
      std::vector<Utterance> list;
      if (m == AugMethod::kGrammar) {
        const std::size_t need = result.target - result.corpus.size();
        list = SampleUtterances(*plan.grammar, need, DeriveSeed(plan.seed, "grammar/" + tag),
                                plan.max_depth)
                   .corpus;
      } else {
        const Source want = m == AugMethod::kRandom ? Source::kMaskRandom : Source::kMaskCustom;
        for (const auto& u : filled) {
          if (u.source == want) list.push_back(u);
        }
      }
      per_method.push_back(std::move(list));
      order.push_back(m);
    }

    // Round-robin across methods keeps their shares balanced.
    std::size_t added = 0;
    std::size_t longest = 0;
    for (const auto& l : per_method) longest = std::max(longest, l.size());
    for (std::size_t i = 0; i < longest; ++i) {
      for (std::size_t m = 0; m < per_method.size(); ++m) {
        if (i >= per_method[m].size()) continue;
        Utterance u = std::move(per_method[m][i]);
        ++result.candidates;
        if (u.text.empty() || u.text.find(plan.fill.mask_token) != std::string::npos) {
          ++result.invalid;
          continue;
        }
        const std::string key = Normalize(u.text);
        if (present.contains(key)) {
          ++result.duplicates;
          continue;
        }
        if (result.corpus.size() >= result.target) {
          ++result.surplus;
          continue;
        }
        present.insert(key);
        u.id = "aug:" + std::to_string(result.corpus.size());
        result.corpus.push_back(std::move(u));
        ++result.accepted[order[m]];
        ++added;
      }
    }
    if (result.error) break;
    stalled = added == 0 ? stalled + 1 : 0;
    if (stalled >= plan.stall_rounds) break;
  }
  result.shortfall = result.target - result.corpus.size();
  return result;
}

}  // namespace augment
