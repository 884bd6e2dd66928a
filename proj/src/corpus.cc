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

#include "augment/corpus.h"

#include <json.hpp>

#include <cctype>
#include <fstream>
#include <ostream>
#include <sstream>

#include "augment/error.h"
#include "augment/hash.h"

namespace augment {
namespace {

bool IsSpace(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool IsStrippedPunct(unsigned char c) {
  return c < 0x80 && std::ispunct(c) && c != '\'';
}

}  // namespace

std::string_view ToString(Source source) {
  switch (source) {
    case Source::kSeed: return "seed";
    case Source::kGrammar: return "grammar";
    case Source::kMaskRandom: return "mask_random";
    case Source::kMaskCustom: return "mask_custom";
    case Source::kExternal: return "external";
  }
  return "seed";
}

Source ParseSource(std::string_view tag) {
  for (Source s : {Source::kSeed, Source::kGrammar, Source::kMaskRandom,
                   Source::kMaskCustom, Source::kExternal}) {
    if (ToString(s) == tag) return s;
  }
  throw Error("unknown utterance source '" + std::string(tag) + "'");
}

std::string Normalize(std::string_view text, const NormPolicy& policy) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (policy.strip_punctuation && IsStrippedPunct(c)) c = ' ';
    if (IsSpace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    if (policy.lowercase && c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    out.push_back(static_cast<char>(c));
  }
  return out;
}

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && IsSpace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !IsSpace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) tokens.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::string JoinTokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

bool IsValidUtf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra;
    std::uint32_t cp;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong forms, surrogates and out-of-range code points.
    static constexpr std::uint32_t kMin[] = {0, 0x80, 0x800, 0x10000};
    if (cp < kMin[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += extra + 1;
  }
  return true;
}

CorpusFormat GuessFormat(const std::filesystem::path& path) {
  return path.extension() == ".jsonl" ? CorpusFormat::kJsonl : CorpusFormat::kLines;
}

Corpus ParseCorpus(std::string_view content, std::string_view name,
                   CorpusFormat format, const NormPolicy& policy) {
  Corpus corpus;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    const std::string_view line = content.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!IsValidUtf8(line)) {
      throw FormatError(std::string(name) + ": line " + std::to_string(line_no) + ": not valid UTF-8");
    }
    if (Normalize(line).empty()) continue;

    Utterance u;
    u.id = std::string(name) + ":" + std::to_string(corpus.size());
    if (format == CorpusFormat::kLines) {
      u.text = Normalize(line, policy);
    } else {
      const std::string where = std::string(name) + ": line " + std::to_string(line_no);
      nlohmann::json rec;
      try {
        rec = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(where + ": malformed JSON record (" + e.what() + ")");
      }
      if (!rec.is_object() || !rec.contains("text") || !rec["text"].is_string()) {
        throw FormatError(where + ": record has no string field 'text'");
      }
      u.text = Normalize(rec["text"].get<std::string>(), policy);
      if (u.text.empty()) throw FormatError(where + ": empty text");
      if (auto it = rec.find("id"); it != rec.end() && it->is_string()) {
        u.id = it->get<std::string>();
      }
      if (auto it = rec.find("source"); it != rec.end() && it->is_string()) {
        try {
          u.source = ParseSource(it->get<std::string>());
        } catch (const Error& e) {
          throw FormatError(where + ": " + e.what());
        }
      }
      if (auto it = rec.find("parent_id"); it != rec.end() && it->is_string()) {
        u.parent_id = it->get<std::string>();
      }
    }
    corpus.push_back(std::move(u));
  }
  return corpus;
}

Corpus LoadCorpus(const std::filesystem::path& path, CorpusFormat format,
                  const NormPolicy& policy) {
  if (!std::filesystem::exists(path)) {
    throw Error("corpus file not found: " + path.string());
  }
  return ParseCorpus(ReadFileBytes(path), path.filename().string(), format, policy);
}

std::string ToJsonl(const Utterance& u) {
  nlohmann::ordered_json rec;
  rec["id"] = u.id;
  rec["text"] = u.text;
  rec["source"] = ToString(u.source);
  rec["parent_id"] = u.parent_id ? nlohmann::ordered_json(*u.parent_id)
                                 : nlohmann::ordered_json(nullptr);
  return rec.dump();
}

void WriteCorpusJsonl(std::ostream& out, const Corpus& corpus) {
  for (const auto& u : corpus) out << ToJsonl(u) << '\n';
}

void WriteCorpusJsonl(const std::filesystem::path& path, const Corpus& corpus) {
  std::ostringstream buf;
  WriteCorpusJsonl(buf, corpus);
  WriteFileBytes(path, buf.str());
}

DedupResult Dedup(const Corpus& corpus, const Corpus* against,
                  const NormPolicy& key_policy) {
  std::unordered_set<std::string> excluded;
  if (against != nullptr) {
    for (const auto& u : *against) excluded.insert(Normalize(u.text, key_policy));
  }
  std::unordered_set<std::string> seen;
  DedupResult result;
  for (const auto& u : corpus) {
    std::string key = Normalize(u.text, key_policy);
    if (excluded.contains(key) || !seen.insert(std::move(key)).second) {
      ++result.dropped;
      continue;
    }
    result.corpus.push_back(u);
  }
  result.drop_rate = corpus.empty() ? 0.0
                                    : static_cast<double>(result.dropped) / corpus.size();
  return result;
}

void StatsAccumulator::Add(const Utterance& u) {
  const std::string text = Normalize(u.text);
  const auto tokens = Tokenize(text);
  ++utterances_;
  texts_.insert(text);
  unigram_total_ += tokens.size();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    unigrams_.insert(tokens[i]);
    if (i + 1 < tokens.size()) {
      ++bigram_total_;
      bigrams_.insert(tokens[i] + ' ' + tokens[i + 1]);
    }
  }
}

void StatsAccumulator::Merge(const StatsAccumulator& other) {
  utterances_ += other.utterances_;
  unigram_total_ += other.unigram_total_;
  bigram_total_ += other.bigram_total_;
  unigrams_.insert(other.unigrams_.begin(), other.unigrams_.end());
  bigrams_.insert(other.bigrams_.begin(), other.bigrams_.end());
  texts_.insert(other.texts_.begin(), other.texts_.end());
}

CorpusStats StatsAccumulator::Finish(
    const std::unordered_set<std::string>* seed_bigrams) const {
  CorpusStats s;
  if (utterances_ == 0) return s;
  s.num_utterances = utterances_;
  s.vocab_size = unigrams_.size();
  if (unigram_total_ > 0) {
    s.distinct_1 = static_cast<double>(unigrams_.size()) / unigram_total_;
  }
  if (bigram_total_ > 0) {
    s.distinct_2 = static_cast<double>(bigrams_.size()) / bigram_total_;
  }
  if (seed_bigrams != nullptr && !bigrams_.empty()) {
    std::size_t novel = 0;
    for (const auto& b : bigrams_) novel += seed_bigrams->contains(b) ? 0 : 1;
    s.novel_ngram_rate = static_cast<double>(novel) / bigrams_.size();
  }
  s.dedup_drop_rate = 1.0 - static_cast<double>(texts_.size()) / utterances_;
  return s;
}

std::unordered_set<std::string> BigramSet(const Corpus& corpus) {
  std::unordered_set<std::string> out;
  for (const auto& u : corpus) {
    const auto tokens = Tokenize(Normalize(u.text));
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
      out.insert(tokens[i] + ' ' + tokens[i + 1]);
    }
  }
  return out;
}

CorpusStats ComputeStats(const Corpus& corpus, const Corpus& seed) {
  StatsAccumulator acc;
  for (const auto& u : corpus) acc.Add(u);
  const auto seed_bigrams = BigramSet(seed);
  return acc.Finish(&seed_bigrams);
}

}  // namespace augment
