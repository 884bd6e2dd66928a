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

#include <set>
#include <sstream>

#include "augment/corpus.h"
#include "augment/error.h"
#include "test_util.h"

using namespace augment;

namespace {

Corpus Texts(std::initializer_list<const char*> texts) {
  Corpus c;
  int i = 0;
  for (const char* t : texts) c.push_back({"c:" + std::to_string(i++), t, Source::kSeed, std::nullopt});
  return c;
}

}  // namespace

TEST_CASE("normalize lowercases and collapses whitespace") {
  CHECK(Normalize("  Show   ME\tPics ") == "show me pics");
  CHECK(Normalize("Please?") == "please?");
  CHECK(Normalize("it's, done!", {.strip_punctuation = true}) == "it's done");
  CHECK(Normalize("") == "");
}

TEST_CASE("parse lines skips blanks and assigns positional ids") {
  const Corpus c = ParseCorpus("hello there\n\n  Second LINE \r\n", "s.txt", CorpusFormat::kLines);
  REQUIRE(c.size() == 2);
  CHECK(c[0].id == "s.txt:0");
  CHECK(c[1].id == "s.txt:1");
  CHECK(c[1].text == "second line");
  CHECK(c[0].source == Source::kSeed);
  CHECK_FALSE(c[0].parent_id);
}

TEST_CASE("invalid utf-8 is reported with the line") {
  const std::string bad = "fine\nbroken \xC3\x28 text\n";
  try {
    ParseCorpus(bad, "x.txt", CorpusFormat::kLines);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("x.txt: line 2") != std::string::npos);
  }
  CHECK(IsValidUtf8("caf\xC3\xA9"));
  CHECK_FALSE(IsValidUtf8("\xE2\x82"));
  CHECK_FALSE(IsValidUtf8("\xC3"));
}

TEST_CASE("jsonl round trip keeps ids and fields in fixed order") {
  Corpus c = Texts({"a b", "c d"});
  c[1].source = Source::kMaskCustom;
  c[1].parent_id = "c:0";
  std::ostringstream os;
  WriteCorpusJsonl(os, c);
  CHECK(os.str() ==
        "{\"id\":\"c:0\",\"text\":\"a b\",\"source\":\"seed\",\"parent_id\":null}\n"
        "{\"id\":\"c:1\",\"text\":\"c d\",\"source\":\"mask_custom\",\"parent_id\":\"c:0\"}\n");
  CHECK(ParseCorpus(os.str(), "r.jsonl", CorpusFormat::kJsonl) == c);
  CHECK_THROWS_AS(ParseCorpus("{\"id\":\"x\"}\n", "r.jsonl", CorpusFormat::kJsonl), FormatError);
  CHECK_THROWS_AS(ParseCorpus("not json\n", "r.jsonl", CorpusFormat::kJsonl), FormatError);
}

TEST_CASE("loading the same file twice is identical") {
  const auto p = testing::Fixture("seed100.txt");
  const Corpus a = LoadCorpus(p, GuessFormat(p));
  const Corpus b = LoadCorpus(p, GuessFormat(p));
  CHECK(a.size() == 100);
  CHECK(a == b);
  CHECK_THROWS_AS(LoadCorpus(testing::Fixture("missing.txt"), CorpusFormat::kLines), Error);
}

TEST_CASE("dedup examples") {
  const auto two = Dedup(Texts({"same line", "same line"}));
  CHECK(two.corpus.size() == 1);
  CHECK(two.drop_rate == doctest::Approx(0.5));

  const Corpus a = Texts({"one", "two"});
  const Corpus b = Texts({"three"});
  const auto disjoint = Dedup(a, &b);
  CHECK(disjoint.corpus == a);
  CHECK(disjoint.drop_rate == 0.0);

  // 10 augmented lines, 4 of which repeat a seed line.
  const Corpus seed = Texts({"s1", "s2", "s3", "s4", "s5"});
  const Corpus aug = Texts({"s1", "n1", "S2", "n2", "n3", "s3 ", "n4", "s4", "n5", "n6"});
  std::set<std::string> seed_set;
  for (const auto& u : seed) seed_set.insert(Normalize(u.text));
  std::size_t oracle = 0;
  for (const auto& u : aug) oracle += seed_set.contains(Normalize(u.text)) ? 0 : 1;
  const auto r = Dedup(aug, &seed);
  CHECK(oracle == 6);
  CHECK(r.corpus.size() == oracle);
  CHECK(r.dropped == 4);
}

TEST_CASE("dedup is idempotent and drop rate stays below one") {
  const Corpus c = Texts({"a", "b", "a", "c", "b", "a"});
  const auto once = Dedup(c);
  const auto twice = Dedup(once.corpus);
  CHECK(twice.corpus == once.corpus);
  CHECK(twice.dropped == 0);
  CHECK(once.drop_rate >= 0.0);
  CHECK(once.drop_rate < 1.0);
  const auto all_same = Dedup(Texts({"x", "x", "x", "x"}));
  CHECK(all_same.drop_rate < 1.0);
}

TEST_CASE("stats examples") {
  const auto s = ComputeStats(Texts({"a b", "a b"}), Texts({"a b"}));
  CHECK(s.distinct_1 == doctest::Approx(0.5));
  CHECK(s.distinct_2 == doctest::Approx(0.5));
  CHECK(s.novel_ngram_rate == 0.0);
  CHECK(s.dedup_drop_rate == doctest::Approx(0.5));

  const auto novel = ComputeStats(Texts({"x y z"}), Texts({"a b"}));
  CHECK(novel.novel_ngram_rate == 1.0);

  const auto single = ComputeStats(Texts({"one two three four"}), {});
  CHECK(single.distinct_1 == 1.0);

  const auto empty = ComputeStats({}, {});
  CHECK(empty.num_utterances == 0);
  CHECK(empty.distinct_1 == 0.0);
  CHECK(empty.distinct_2 == 0.0);
  CHECK(empty.novel_ngram_rate == 0.0);
  CHECK(empty.dedup_drop_rate == 0.0);
}

TEST_CASE("stats merge is partition independent") {
  const Corpus c = LoadCorpus(testing::Fixture("seed100.txt"), CorpusFormat::kLines);
  const auto seed_bigrams = BigramSet(Texts({"show me", "find photos"}));
  StatsAccumulator whole;
  for (const auto& u : c) whole.Add(u);
  StatsAccumulator a, b, d;
  for (std::size_t i = 0; i < c.size(); ++i) (i % 3 == 0 ? a : i % 3 == 1 ? b : d).Add(c[i]);
  StatsAccumulator left = a;
  left.Merge(b);
  left.Merge(d);
  StatsAccumulator right = d;
  right.Merge(b);
  right.Merge(a);
  const auto w = whole.Finish(&seed_bigrams);
  for (const auto& m : {left.Finish(&seed_bigrams), right.Finish(&seed_bigrams)}) {
    CHECK(m.num_utterances == w.num_utterances);
    CHECK(m.vocab_size == w.vocab_size);
    CHECK(m.distinct_1 == w.distinct_1);
    CHECK(m.distinct_2 == w.distinct_2);
    CHECK(m.novel_ngram_rate == w.novel_ngram_rate);
  }
  for (double v : {w.distinct_1, w.distinct_2, w.novel_ngram_rate}) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}
