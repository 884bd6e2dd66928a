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
#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <set>
#include <thread>

#include "augment/filler.h"
#include "augment/grammar.h"
#include "augment/rng.h"
#include "test_util.h"

using namespace augment;
using Json = nlohmann::json;

namespace {

Corpus Three() { return LoadCorpus(testing::Fixture("three.txt"), CorpusFormat::kLines); }

// Raw add-k estimate from padded windows, written without the model's tables.
struct OracleNgram {
  int order;
  double k;
  std::vector<std::vector<std::string>> padded;
  std::set<std::string> vocab;

  OracleNgram(const Corpus& c, int n, double smoothing, bool reversed) : order(n), k(smoothing) {
    vocab = {"<s>", "</s>"};
    for (const auto& u : c) {
      auto t = Tokenize(u.text);
      if (reversed) std::reverse(t.begin(), t.end());
      std::vector<std::string> p(static_cast<std::size_t>(n - 1), "<s>");
      p.insert(p.end(), t.begin(), t.end());
      p.push_back("</s>");
      vocab.insert(t.begin(), t.end());
      padded.push_back(std::move(p));
    }
  }

  double Prob(std::vector<std::string> ctx, const std::string& w) const {
    while (ctx.size() < static_cast<std::size_t>(order - 1)) ctx.insert(ctx.begin(), "<s>");
    ctx.erase(ctx.begin(), ctx.end() - (order - 1));
    double joint = 0, total = 0;
    for (const auto& p : padded) {
      for (std::size_t i = static_cast<std::size_t>(order - 1); i < p.size(); ++i) {
        if (!std::equal(ctx.begin(), ctx.end(), p.begin() + static_cast<long>(i) - (order - 1))) continue;
        ++total;
        joint += p[i] == w;
      }
    }
    const double v = static_cast<double>(vocab.size());
    return total == 0 ? 1.0 / v : (joint + k) / (total + k * v);
  }
};

std::string OracleArgmax(const OracleNgram& fwd, const OracleNgram& bwd, const std::vector<std::string>& tokens,
                         std::size_t pos) {
  std::vector<std::string> left(tokens.begin(), tokens.begin() + static_cast<long>(pos));
  std::vector<std::string> right(tokens.begin() + static_cast<long>(pos) + 1, tokens.end());
  std::reverse(right.begin(), right.end());
  std::string best;
  double best_score = -1;
  for (const auto& w : fwd.vocab) {
    if (w == "<s>" || w == "</s>") continue;
    const double s = fwd.Prob(left, w) * bwd.Prob(right, w);
    if (s > best_score) {
      best_score = s;
      best = w;
    }
  }
  return best;
}

MaskedTemplate Template(const std::string& text, MaskStrategy strategy = MaskStrategy::kRandom) {
  MaskedTemplate t;
  t.id = "t";
  t.parent_id = "p";
  t.strategy = strategy;
  t.tokens = Tokenize(text);
  t.mask_positions = FindMasks(t.tokens, kDefaultMaskToken);
  return t;
}

// Fill-mask protocol stub on an ephemeral port.
class FillServer {
 public:
  using Handler = std::function<void(const Json&, httplib::Response&)>;
  explicit FillServer(Handler h) : handler_(std::move(h)) {
    server_.Post("/fill", [this](const httplib::Request& req, httplib::Response& res) {
      ++calls_;
      handler_(Json::parse(req.body), res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FillServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/fill"; }
  int calls() const { return calls_.load(); }

 private:
  Handler handler_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> calls_{0};
};

// Replaces each mask with "w<i>" and returns n candidates with decreasing scores.
void EchoFill(const Json& req, httplib::Response& res) {
  Json results = Json::array();
  const std::string mask = req.at("mask_token");
  for (const auto& t : req.at("texts")) {
    Json list = Json::array();
    for (int c = 0; c < req.at("n_candidates").get<int>(); ++c) {
      std::string s = t.get<std::string>();
      for (auto p = s.find(mask); p != std::string::npos; p = s.find(mask)) {
        s.replace(p, mask.size(), "w" + std::to_string(c));
      }
      list.push_back({{"text", s}, {"score", -0.1 * c}});
    }
    results.push_back(list);
  }
  res.set_content(Json{{"results", results}}.dump(), "application/json");
}

}  // namespace

TEST_CASE("conditional distributions normalize on random contexts") {
  const Corpus seed = LoadCorpus(testing::Fixture("seed100.txt"), CorpusFormat::kLines);
  const auto model = TrainNgram(seed, 3, 0.1);
  Rng rng(5);
  const auto& vocab = model.forward.vocab();
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> ctx;
    if (trial % 2 == 0) {
      const auto& u = seed[rng.UniformIndex(seed.size())];
      auto t = Tokenize(u.text);
      ctx.assign(t.begin(), t.begin() + static_cast<long>(rng.UniformIndex(t.size())));
    } else {
      for (int i = 0; i < 2; ++i) ctx.push_back(vocab[rng.UniformIndex(vocab.size())]);
    }
    for (const NgramModel* m : {&model.forward, &model.backward}) {
      double sum = 0;
      for (const auto& w : m->vocab()) sum += m->Prob(ctx, w);
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("add-k probabilities match hand counts") {
  const auto m = NgramModel::Train(Three(), 3, 0.1);
  // vocab: 11 word types plus two markers
  CHECK(m.vocab().size() == 13);
  // "<s> <s>" is followed by the, the, a
  CHECK(m.Prob(std::vector<std::string>{}, "the") == doctest::Approx((2 + 0.1) / (3 + 1.3)));
  CHECK(m.Prob(std::vector<std::string>{"the", "cat"}, "sat") == doctest::Approx((1 + 0.1) / (1 + 1.3)));
  CHECK(m.Prob(std::vector<std::string>{"zebra", "cat"}, "sat") == doctest::Approx(1.0 / 13));
  const OracleNgram oracle(Three(), 3, 0.1, false);
  for (const auto& w : m.vocab()) {
    CHECK(m.Prob(std::vector<std::string>{"sat", "on"}, w) == doctest::Approx(oracle.Prob({"sat", "on"}, w)));
  }
  CHECK_THROWS_AS(NgramModel::Train({}, 3, 0.1), Error);
  CHECK_THROWS_AS(NgramModel::Train(Three(), 1, 0.1), Error);
  CHECK_THROWS_AS(NgramModel::Train(Three(), 3, 0.0), Error);
}

TEST_CASE("greedy fill matches the brute-force argmax") {
  const Corpus three = Three();
  const auto model = TrainNgram(three, 3, 0.1);
  const OracleNgram fwd(three, 3, 0.1, false);
  const OracleNgram bwd(three, 3, 0.1, true);
  FillOptions greedy;
  greedy.top_k = 1;
  greedy.n_outputs = 1;
  for (const char* text : {"the <mask> sat on the mat", "the cat <mask> on the rug", "a cat ran to the <mask>",
                           "<mask> dog sat on the rug", "the cat sat <mask> the mat"}) {
    const auto t = Template(text);
    const auto out = Fill(t, model, greedy, 1);
    REQUIRE(out.size() == 1);
    auto tokens = t.tokens;
    tokens[t.mask_positions[0]] = OracleArgmax(fwd, bwd, t.tokens, t.mask_positions[0]);
    CHECK(out[0].text == JoinTokens(tokens));
  }
  // Two slots, filled left to right.
  const auto t = Template("the <mask> sat on the <mask>");
  auto tokens = t.tokens;
  tokens[1] = OracleArgmax(fwd, bwd, tokens, 1);
  tokens[5] = OracleArgmax(fwd, bwd, tokens, 5);
  CHECK(Fill(t, model, greedy, 4)[0].text == JoinTokens(tokens));
}

TEST_CASE("greedy fill ignores the seed") {
  const auto model = TrainNgram(Three(), 3, 0.1);
  FillOptions greedy;
  greedy.top_k = 1;
  const auto t = Template("the <mask> ran to the <mask>");
  const auto a = Fill(t, model, greedy, 1);
  for (std::uint64_t s : {2ull, 99ull, 123456789ull}) CHECK(Fill(t, model, greedy, s) == a);
}

TEST_CASE("sampled fills are valid, unique and deterministic") {
  const auto model = TrainNgram(Three(), 3, 0.1);
  FillOptions opts;
  opts.n_outputs = 8;
  opts.temperature = 2.0;
  const auto t = Template("the <mask> sat on <mask> mat");
  const auto a = Fill(t, model, opts, 7);
  CHECK(a == Fill(t, model, opts, 7));
  CHECK(a.size() <= 8);
  std::set<std::string> texts;
  for (const auto& u : a) {
    CHECK(u.text.find("<mask>") == std::string::npos);
    CHECK(u.text.find("<s>") == std::string::npos);
    CHECK(u.parent_id == std::optional<std::string>("p"));
    texts.insert(u.text);
  }
  CHECK(texts.size() == a.size());
  for (const auto& c : FillCandidates(t, model, opts, 7)) CHECK(c.score <= 0.0);
}

TEST_CASE("align fill splits multi-token slots") {
  const auto t = Template("show <mask> from <mask>");
  const auto slots = AlignFill(t, "show my photos from last summer", "<mask>");
  REQUIRE(slots);
  REQUIRE(slots->size() == 2);
  CHECK((*slots)[0].size() >= 1);
  CHECK_FALSE(AlignFill(t, "find photos from paris", "<mask>"));
  CHECK_FALSE(AlignFill(t, "show from paris", "<mask>"));
}

TEST_CASE("fill request follows the wire protocol") {
  const std::vector<MaskedTemplate> batch{Template("a <mask> b"), Template("<mask> c")};
  const Json req = Json::parse(BuildFillRequest(batch, 3, "<mask>"));
  CHECK(req.at("texts") == Json::array({"a <mask> b", "<mask> c"}));
  CHECK(req.at("n_candidates") == 3);
  CHECK(req.at("mask_token") == "<mask>");
}

TEST_CASE("external fill against a protocol stub") {
  FillServer server(EchoFill);
  std::vector<MaskedTemplate> templates;
  for (int i = 0; i < 10; ++i) {
    auto t = Template("item " + std::to_string(i) + " <mask> end");
    t.id = "t" + std::to_string(i);
    templates.push_back(t);
  }
  ExternalFillConfig cfg;
  cfg.endpoint = server.url();
  cfg.batch_size = 3;
  cfg.n_outputs = 2;
  cfg.max_in_flight = 3;
  const auto r = FillExternal(templates, cfg);
  CHECK_FALSE(r.error);
  CHECK(r.diagnostics.requests == 4);
  CHECK(server.calls() == 4);
  REQUIRE(r.utterances.size() == 20);
  CHECK(r.utterances[0].text == "item 0 w0 end");
  CHECK(r.utterances[1].text == "item 0 w1 end");
  CHECK(r.utterances[19].text == "item 9 w1 end");
  for (const auto& u : r.utterances) CHECK(u.text.find("<mask>") == std::string::npos);
}

TEST_CASE("external fill drops bad candidates without failing") {
  FillServer server([](const Json& req, httplib::Response& res) {
    Json results = Json::array();
    for (std::size_t i = 0; i < req.at("texts").size(); ++i) {
      results.push_back(Json::array({
          {{"text", "keep x end"}, {"score", -0.5}},
          {{"text", "keep <mask> end"}, {"score", -0.6}},
          {{"text", ""}, {"score", -0.7}},
          {{"text", "totally different"}, {"score", -0.8}},
          {{"score", 1.0}},
      }));
    }
    res.set_content(Json{{"results", results}}.dump(), "application/json");
  });
  ExternalFillConfig cfg;
  cfg.endpoint = server.url();
  cfg.n_outputs = 5;
  const std::vector<MaskedTemplate> templates{Template("keep <mask> end")};
  const auto r = FillExternal(templates, cfg);
  CHECK_FALSE(r.error);
  REQUIRE(r.utterances.size() == 1);
  CHECK(r.utterances[0].text == "keep x end");
  CHECK(r.diagnostics.received == 5);
  CHECK(r.diagnostics.dropped == 4);
  CHECK(r.diagnostics.drop_reasons.at("residual_mask") == 1);
  CHECK(r.diagnostics.drop_reasons.at("empty") == 1);
  CHECK(r.diagnostics.drop_reasons.at("misaligned") == 1);
  CHECK(r.diagnostics.drop_reasons.at("malformed_candidate") == 1);
}

TEST_CASE("external fill retries server errors and malformed bodies are dropped") {
  std::atomic<int> seen{0};
  FillServer server([&](const Json& req, httplib::Response& res) {
    if (seen++ < 2) {
      res.status = 503;
      return;
    }
    EchoFill(req, res);
  });
  ExternalFillConfig cfg;
  cfg.endpoint = server.url();
  cfg.retry.initial_backoff = std::chrono::milliseconds(1);
  const std::vector<MaskedTemplate> templates{Template("a <mask>")};
  const auto r = FillExternal(templates, cfg);
  CHECK_FALSE(r.error);
  CHECK(r.diagnostics.requests == 3);
  CHECK(r.utterances.size() == 3);

  FillServer garbage([](const Json&, httplib::Response& res) {
    res.set_content("{\"results\": 5}", "application/json");
  });
  cfg.endpoint = garbage.url();
  const auto g = FillExternal(templates, cfg);
  CHECK(g.utterances.empty());
  CHECK(g.diagnostics.drop_reasons.at("malformed_response") == 1);
}

TEST_CASE("external fill reports an unreachable endpoint") {
  ExternalFillConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1/fill";
  cfg.retry.max_attempts = 2;
  cfg.retry.initial_backoff = std::chrono::milliseconds(1);
  cfg.timeout = std::chrono::milliseconds(200);
  const std::vector<MaskedTemplate> templates{Template("a <mask>")};
  const auto r = FillExternal(templates, cfg);
  CHECK(r.error);
  CHECK(r.utterances.empty());
}

TEST_CASE("augmentation accounting on the fixture seed") {
  const Corpus seed = LoadCorpus(testing::Fixture("seed100.txt"), CorpusFormat::kLines);
  AugPlan plan;
  plan.methods = {AugMethod::kGrammar, AugMethod::kRandom, AugMethod::kCustom};
  plan.factor = 8;
  plan.seed = 1;
  plan.grammar = std::make_shared<Grammar>(LoadGrammar(testing::Fixture("photo.grammar").string()));
  plan.tagger = std::make_shared<LexiconTagger>(LexiconTagger::Load(testing::Fixture("tags.tsv")));
  const auto r = RunTextAugmentation(seed, plan);
  CHECK(r.target == 800);
  CHECK(r.corpus.size() == 800);
  CHECK(r.shortfall == 0);
  std::set<std::string> out;
  for (const auto& u : r.corpus) {
    out.insert(Normalize(u.text));
    CHECK(u.text.find("<mask>") == std::string::npos);
  }
  CHECK(out.size() == 800);
  for (const auto& u : seed) CHECK(out.contains(Normalize(u.text)));
  CHECK(r.candidates == r.corpus.size() + r.duplicates + r.surplus + r.invalid);
  std::size_t accepted = 0;
  for (const auto& [m, n] : r.accepted) accepted += n;
  CHECK(accepted == 700);
}

TEST_CASE("unreachable factor reports a shortfall") {
  const Corpus seed = LoadCorpus(testing::Fixture("three.txt"), CorpusFormat::kLines);
  AugPlan plan;
  plan.methods = {AugMethod::kGrammar};
  plan.factor = 10;
  plan.grammar = std::make_shared<Grammar>(LoadGrammar(testing::Fixture("trivial.grammar").string()));
  plan.max_rounds = 20;
  const auto r = RunTextAugmentation(seed, plan);
  CHECK(r.target == 30);
  CHECK(r.corpus.size() == 4);
  CHECK(r.shortfall == 26);
  CHECK(r.corpus.size() + r.shortfall == r.target);
}

TEST_CASE("photo-search scale target arithmetic") {
  CHECK(AugmentationTarget(3350, 300) == 1005000);
  CHECK(AugmentationTarget(100, 8) == 800);
  CHECK(AugmentationTarget(281000, 8.2) == 2304200);
}
