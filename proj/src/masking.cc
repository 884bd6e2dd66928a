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

#include "augment/masking.h"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <ostream>

#include "augment/error.h"
#include "augment/hash.h"
#include "augment/rng.h"

namespace augment {
namespace {

constexpr std::string_view kDefaultLexicon = R"(# function words
a	OTHER
about	OTHER
all	OTHER
also	OTHER
always	OTHER
am	OTHER
an	OTHER
and	OTHER
any	OTHER
anyone	OTHER
anything	OTHER
are	OTHER
as	OTHER
at	OTHER
be	OTHER
been	OTHER
but	OTHER
by	OTHER
can	OTHER
could	OTHER
did	OTHER
do	OTHER
does	OTHER
each	OTHER
every	OTHER
for	OTHER
from	OTHER
had	OTHER
has	OTHER
he	OTHER
her	OTHER
here	OTHER
him	OTHER
his	OTHER
how	OTHER
i	OTHER
if	OTHER
in	OTHER
is	OTHER
it	OTHER
its	OTHER
just	OTHER
last	OTHER
me	OTHER
my	OTHER
next	OTHER
no	OTHER
not	OTHER
of	OTHER
on	OTHER
only	OTHER
or	OTHER
our	OTHER
perhaps	OTHER
please	OTHER
she	OTHER
should	OTHER
so	OTHER
some	OTHER
someone	OTHER
something	OTHER
than	OTHER
that	OTHER
the	OTHER
their	OTHER
them	OTHER
then	OTHER
there	OTHER
these	OTHER
they	OTHER
this	OTHER
those	OTHER
thus	OTHER
to	OTHER
too	OTHER
us	OTHER
very	OTHER
was	OTHER
we	OTHER
well	OTHER
were	OTHER
what	OTHER
when	OTHER
where	OTHER
which	OTHER
who	OTHER
whose	OTHER
why	OTHER
will	OTHER
with	OTHER
would	OTHER
yes	OTHER
you	OTHER
your	OTHER
# verbs
ask	VERB
bring	VERB
buy	VERB
call	VERB
cook	VERB
eat	VERB
find	VERB
get	VERB
give	VERB
go	VERB
have	VERB
help	VERB
keep	VERB
know	VERB
like	VERB
look	VERB
love	VERB
make	VERB
need	VERB
open	VERB
play	VERB
post	VERB
put	VERB
read	VERB
recommend	VERB
search	VERB
see	VERB
sell	VERB
send	VERB
share	VERB
show	VERB
start	VERB
suggest	VERB
take	VERB
tell	VERB
think	VERB
try	VERB
use	VERB
visit	VERB
want	VERB
watch	VERB
write	VERB
# nouns
album	NOUN
answer	NOUN
app	NOUN
beach	NOUN
birthday	NOUN
book	NOUN
breakfast	NOUN
car	NOUN
cat	NOUN
city	NOUN
code	NOUN
day	NOUN
delivery	NOUN
dinner	NOUN
discount	NOUN
dog	NOUN
family	NOUN
food	NOUN
friend	NOUN
game	NOUN
garden	NOUN
group	NOUN
home	NOUN
house	NOUN
idea	NOUN
logo	NOUN
lunch	NOUN
morning	NOUN
movie	NOUN
music	NOUN
night	NOUN
park	NOUN
party	NOUN
people	NOUN
photo	NOUN
pic	NOUN
picture	NOUN
place	NOUN
question	NOUN
recipe	NOUN
restaurant	NOUN
rice	NOUN
school	NOUN
song	NOUN
taste	NOUN
thing	NOUN
time	NOUN
trip	NOUN
vacation	NOUN
video	NOUN
week	NOUN
weekend	NOUN
work	NOUN
year	NOUN
)";

bool IsEdgePunct(unsigned char c) { return c < 0x80 && std::ispunct(c); }

// Lowercased, with leading/trailing ASCII punctuation removed.
std::string LookupKey(std::string_view word) {
  while (!word.empty() && IsEdgePunct(static_cast<unsigned char>(word.front()))) word.remove_prefix(1);
  while (!word.empty() && IsEdgePunct(static_cast<unsigned char>(word.back()))) word.remove_suffix(1);
  return Normalize(word);
}

PosClass SuffixHeuristic(const std::string& word) {
  if (word.empty() || !std::all_of(word.begin(), word.end(), [](unsigned char c) {
        return std::isalpha(c) || c == '\'';
      })) {
    return PosClass::kOther;
  }
  if (word.size() >= 5 && word.ends_with("ing")) return PosClass::kVerb;
  if (word.size() >= 4 && word.ends_with("ed")) return PosClass::kVerb;
  if (word.size() >= 4 && word.ends_with('s') && !word.ends_with("ss") &&
      !word.ends_with("us") && !word.ends_with("is")) {
    return PosClass::kNoun;
  }
  return PosClass::kOther;
}

PosClass ParsePosClass(std::string_view raw) {
  std::string tag(raw);
  for (char& c : tag) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (tag == "NOUN") return PosClass::kNoun;
  if (tag == "VERB") return PosClass::kVerb;
  if (tag == "OTHER") return PosClass::kOther;
  throw FormatError("unknown POS tag '" + std::string(raw) + "'");
}

MaskedTemplate MakeTemplate(std::string id, std::vector<std::string> tokens,
                            const std::string& parent_id, MaskStrategy strategy,
                            std::string_view mask_token) {
  MaskedTemplate t;
  t.id = std::move(id);
  t.mask_positions = FindMasks(tokens, mask_token);
  t.tokens = std::move(tokens);
  t.parent_id = parent_id;
  t.strategy = strategy;
  return t;
}

}  // namespace

std::string_view ToString(MaskStrategy strategy) {
  return strategy == MaskStrategy::kRandom ? "random" : "custom";
}

MaskStrategy ParseMaskStrategy(std::string_view tag) {
  if (tag == "random") return MaskStrategy::kRandom;
  if (tag == "custom") return MaskStrategy::kCustom;
  throw Error("unknown mask strategy '" + std::string(tag) + "'");
}

MaskMode ParseMaskMode(std::string_view tag) {
  if (tag == "replace") return MaskMode::kReplace;
  if (tag == "insert") return MaskMode::kInsert;
  if (tag == "mixed") return MaskMode::kMixed;
  throw Error("unknown mask mode '" + std::string(tag) + "'");
}

std::string_view ToString(PosClass tag) {
  switch (tag) {
    case PosClass::kNoun: return "NOUN";
    case PosClass::kVerb: return "VERB";
    case PosClass::kOther: return "OTHER";
  }
  return "OTHER";
}

std::vector<std::size_t> FindMasks(const std::vector<std::string>& tokens,
                                   std::string_view mask_token) {
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == mask_token) positions.push_back(i);
  }
  return positions;
}

std::vector<MaskedTemplate> MaskRandom(const Utterance& u, const RandomMaskConfig& config,
                                       std::uint64_t seed) {
  const auto base = Tokenize(u.text);
  if (base.empty()) throw Error("MaskRandom: utterance '" + u.id + "' is empty");
  if (config.mask_count_weights.empty()) throw Error("MaskRandom: no mask count weights");
  Rng rng(seed);
  std::vector<MaskedTemplate> out;
  out.reserve(config.templates_per_utterance);
  for (std::size_t t = 0; t < config.templates_per_utterance; ++t) {
    std::size_t k = rng.Categorical(config.mask_count_weights) + 1;
    std::vector<std::string> tokens = base;
    std::vector<std::size_t> open;  // positions still holding original tokens
    for (std::size_t i = 0; i < tokens.size(); ++i) open.push_back(i);

    auto replace_one = [&]() {
      const std::size_t pick = rng.UniformIndex(open.size());
      tokens[open[pick]] = config.mask_token;
      open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
    };
    auto insert_one = [&]() {
      const std::size_t gap = rng.UniformIndex(tokens.size() + 1);
      tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(gap), config.mask_token);
      for (auto& p : open) p += p >= gap ? 1 : 0;
    };

    switch (config.mode) {
      case MaskMode::kReplace:
        k = std::min(k, tokens.size());
        for (std::size_t i = 0; i < k; ++i) replace_one();
        break;
      case MaskMode::kInsert:
        for (std::size_t i = 0; i < k; ++i) insert_one();
        break;
      case MaskMode::kMixed:
        for (std::size_t i = 0; i < k; ++i) {
          if (rng.Bernoulli(0.5) && !open.empty()) {
            replace_one();
          } else {
            insert_one();
          }
        }
        break;
    }
    out.push_back(MakeTemplate(u.id + "/rm" + std::to_string(t), std::move(tokens), u.id,
                               MaskStrategy::kRandom, config.mask_token));
  }
  return out;
}

void LexiconTagger::Add(std::string_view phrase, PosClass tag) {
  const auto words = Tokenize(Normalize(phrase));
  if (words.empty()) return;
  std::vector<std::string> keys;
  for (const auto& w : words) keys.push_back(LookupKey(w));
  entries_[JoinTokens(keys)] = tag;
  max_words_ = std::max(max_words_, words.size());
}

LexiconTagger LexiconTagger::Parse(std::string_view content) {
  LexiconTagger tagger;
  std::size_t begin = 0;
  int line_no = 0;
  while (begin < content.size()) {
    std::size_t end = content.find('\n', begin);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(begin, end - begin);
    begin = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (Normalize(line).empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw FormatError("tag lexicon line " + std::to_string(line_no) +
                        ": expected word<TAB>TAG");
    }
    try {
      tagger.Add(line.substr(0, tab), ParsePosClass(Normalize(line.substr(tab + 1), {.lowercase = false})));
    } catch (const FormatError& e) {
      throw FormatError("tag lexicon line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return tagger;
}

LexiconTagger LexiconTagger::Load(const std::filesystem::path& path) {
  return Parse(ReadFileBytes(path));
}

const LexiconTagger& LexiconTagger::Default() {
  static const LexiconTagger tagger = Parse(kDefaultLexicon);
  return tagger;
}

std::vector<PosTag> LexiconTagger::Tag(std::span<const std::string> tokens) const {
  std::vector<PosTag> tags;
  std::size_t i = 0;
  while (i < tokens.size()) {
    bool matched = false;
    for (std::size_t len = std::min(max_words_, tokens.size() - i); len >= 2; --len) {
      std::vector<std::string> keys;
      for (std::size_t k = 0; k < len; ++k) keys.push_back(LookupKey(tokens[i + k]));
      if (auto it = entries_.find(JoinTokens(keys)); it != entries_.end()) {
        std::vector<std::string> words(tokens.begin() + i, tokens.begin() + i + len);
        tags.push_back({JoinTokens(words), it->second});
        i += len;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    const std::string key = LookupKey(tokens[i]);
    auto it = entries_.find(key);
    tags.push_back({tokens[i], it != entries_.end() ? it->second : SuffixHeuristic(key)});
    ++i;
  }
  return tags;
}

std::vector<PosTag> TagPos(std::span<const std::string> tokens, const PosTagger& tagger) {
  return tagger.Tag(tokens);
}

std::vector<MaskedTemplate> MaskCustom(const Utterance& u, std::span<const PosTag> tags,
                                       std::string_view mask_token) {
  std::vector<std::string> aligned;
  for (const auto& t : tags) {
    for (auto& w : Tokenize(t.token)) aligned.push_back(std::move(w));
  }
  if (aligned != Tokenize(u.text)) {
    throw Error("MaskCustom: tags are not aligned with utterance '" + u.id + "'");
  }
  std::vector<MaskedTemplate> out;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i].tag == PosClass::kOther) continue;
    std::vector<std::string> tokens;
    for (std::size_t j = 0; j < tags.size(); ++j) {
      if (j == i) {
        tokens.emplace_back(mask_token);
      } else {
        for (auto& w : Tokenize(tags[j].token)) tokens.push_back(std::move(w));
      }
    }
    out.push_back(MakeTemplate(u.id + "/cm" + std::to_string(out.size()), std::move(tokens),
                               u.id, MaskStrategy::kCustom, mask_token));
  }
  return out;
}

std::string ToJsonl(const MaskedTemplate& t) {
  nlohmann::ordered_json rec;
  rec["parent_id"] = t.parent_id;
  rec["strategy"] = ToString(t.strategy);
  rec["tokens"] = t.tokens;
  return rec.dump();
}

void WriteTemplatesJsonl(std::ostream& out, std::span<const MaskedTemplate> templates) {
  for (const auto& t : templates) out << ToJsonl(t) << '\n';
}

std::vector<MaskedTemplate> ParseTemplatesJsonl(std::string_view content,
                                                std::string_view mask_token) {
  std::vector<MaskedTemplate> out;
  std::size_t begin = 0;
  int line_no = 0;
  while (begin < content.size()) {
    std::size_t end = content.find('\n', begin);
    if (end == std::string_view::npos) end = content.size();
    const std::string_view line = content.substr(begin, end - begin);
    begin = end + 1;
    ++line_no;
    if (Normalize(line).empty()) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      auto tokens = rec.at("tokens").get<std::vector<std::string>>();
      const auto parent = rec.at("parent_id").get<std::string>();
      auto t = MakeTemplate(parent + "/t" + std::to_string(out.size()), std::move(tokens), parent,
                            ParseMaskStrategy(rec.at("strategy").get<std::string>()), mask_token);
      if (t.mask_positions.empty()) throw Error("template has no mask token");
      out.push_back(std::move(t));
    } catch (const std::exception& e) {
      throw FormatError("templates line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace augment
