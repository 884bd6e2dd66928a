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

#include "augment/pipeline.h"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <chrono>
#include <exception>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include "augment/grammar.h"
#include "augment/hash.h"
#include "augment/http_retry.h"
#include "augment/masking.h"

namespace augment {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

void CheckKeys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw FormatError("config: '" + where + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.contains(it.key())) {
      throw FormatError("config: unknown key '" + it.key() + "' in '" + where + "'");
    }
  }
}

fs::path ResolvePath(const Json& j, const char* key, const fs::path& base) {
  if (!j.contains(key)) return {};
  const std::string s = j.at(key).get<std::string>();
  if (s.empty()) return {};
  fs::path p(s);
  return p.is_absolute() ? p : base / p;
}

template <typename F>
void ParallelFor(std::size_t n, std::size_t workers, F&& fn) {
  std::atomic<std::size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr error;
  auto work = [&]() {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(workers, 1), std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::string SafeFileStem(const std::string& s) {
  std::string out;
  for (char c : s) {
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' ? c : '_');
  }
  return out;
}

// Path as stored in manifests: relative to `base` when inside it.
std::string ManifestPath(const fs::path& p, const fs::path& base) {
  if (base.empty()) return p.generic_string();
  const fs::path rel = fs::proximate(p, base);
  const std::string s = rel.generic_string();
  if (!s.empty() && !s.starts_with("..")) return s;
  return fs::absolute(p).generic_string();
}

fs::path ResolveManifestPath(const std::string& stored, const fs::path& base) {
  fs::path p(stored);
  return p.is_absolute() || base.empty() ? p : base / p;
}

std::string FileDigest(const fs::path& p) {
  std::error_code ec;
  if (p.empty() || !fs::exists(p, ec)) return "";
  return Sha256File(p);
}

OrderedJson StatsJson(const CorpusStats& s) {
  OrderedJson j;
  j["num_utterances"] = s.num_utterances;
  j["vocab_size"] = s.vocab_size;
  j["distinct_1"] = s.distinct_1;
  j["distinct_2"] = s.distinct_2;
  j["novel_ngram_rate"] = s.novel_ngram_rate;
  j["dedup_drop_rate"] = s.dedup_drop_rate;
  return j;
}

OrderedJson BudgetJson(const BudgetReport& b) {
  auto src = [](const SourceBudget& s) {
    OrderedJson j;
    j["entries"] = s.entries;
    j["hours"] = s.hours;
    return j;
  };
  OrderedJson j;
  j["real"] = src(b.real);
  j["synthetic"] = src(b.synthetic);
  j["by_origin"] = OrderedJson::object();
  for (const auto& [origin, s] : b.by_origin) j["by_origin"][origin] = src(s);
  j["synthetic_entry_share"] = b.synthetic_entry_share;
  j["synthetic_duration_share"] = b.synthetic_duration_share;
  j["expected_stream_duration_share"] = b.expected_stream_duration_share;
  return j;
}

OrderedJson TextStageConfig(const PipelineConfig& c) {
  OrderedJson j;
  j["methods"] = OrderedJson::array();
  for (auto m : c.methods) j["methods"].push_back(ToString(m));
  j["factor"] = c.factor;
  j["max_depth"] = c.max_depth;
  j["max_rounds"] = c.max_rounds;
  j["mask_count_weights"] = c.random.mask_count_weights;
  j["mask_mode"] = static_cast<int>(c.random.mode);
  j["templates_per_utterance"] = c.random.templates_per_utterance;
  j["backend"] = ToString(c.backend);
  j["endpoint"] = c.fill_endpoint;
  j["order"] = c.ngram_order;
  j["smoothing_k"] = c.smoothing_k;
  j["top_k"] = c.fill.top_k;
  j["temperature"] = c.fill.temperature;
  j["n_outputs"] = c.fill.n_outputs;
  j["mask_token"] = c.fill.mask_token;
  j["seed"] = c.seed;
  j["seed_corpus"] = FileDigest(c.seed_corpus);
  j["grammar"] = FileDigest(c.grammar);
  j["tag_lexicon"] = FileDigest(c.tag_lexicon);
  return j;
}

// Stage-level memo: <output_dir>/stages.json maps stage -> {key, output_sha256}.
class StageLedger {
 public:
  explicit StageLedger(fs::path dir) : path_(dir / "stages.json") {
    std::error_code ec;
    if (fs::exists(path_, ec)) {
      try {
        state_ = OrderedJson::parse(ReadFileBytes(path_));
      } catch (const std::exception&) {
        state_ = OrderedJson::object();
      }
    }
    if (!state_.is_object()) state_ = OrderedJson::object();
  }

  bool Fresh(const std::string& stage, const std::string& key, const fs::path& output) const {
    if (!state_.contains(stage)) return false;
    const auto& s = state_[stage];
    std::error_code ec;
    return s.value("key", "") == key && fs::exists(output, ec) &&
           s.value("output_sha256", "") == Sha256File(output);
  }

  void Record(const std::string& stage, const std::string& key, const fs::path& output) {
    state_[stage]["key"] = key;
    state_[stage]["output_sha256"] = Sha256File(output);
    WriteFileBytes(path_, state_.dump(2) + "\n");
  }

  void Forget(const std::string& stage) { state_.erase(stage); }

 private:
  fs::path path_;
  OrderedJson state_ = OrderedJson::object();
};

using Clock = std::chrono::steady_clock;

double SecondsSince(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

ConfigError::ConfigError(std::vector<Diagnostic> diagnostics)
    : Error([&] {
        std::string msg = "invalid configuration:";
        for (const auto& d : diagnostics) msg += "\n  " + d.field + ": " + d.message;
        return msg;
      }()),
      diagnostics_(std::move(diagnostics)) {}

PipelineConfig ParsePipelineConfig(std::string_view json_text, const fs::path& base_dir) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  PipelineConfig c;
  try {
    CheckKeys(j, {"seed_corpus", "output_dir", "seed", "workers", "text", "tts", "audio", "mix"}, "top level");
    c.seed_corpus = ResolvePath(j, "seed_corpus", base_dir);
    c.output_dir = ResolvePath(j, "output_dir", base_dir);
    c.seed = j.value("seed", c.seed);
    c.workers = j.value("workers", c.workers);

    if (j.contains("text")) {
      const auto& t = j["text"];
      CheckKeys(t, {"methods", "factor", "grammar", "max_depth", "tag_lexicon", "max_rounds",
                    "random_masking", "filler"},
                "text");
      for (const auto& m : t.value("methods", std::vector<std::string>{})) {
        if (m == "all") {
          c.methods = {AugMethod::kGrammar, AugMethod::kRandom, AugMethod::kCustom};
        } else {
          c.methods.push_back(ParseAugMethod(m));
        }
      }
      c.factor = t.value("factor", c.factor);
      c.grammar = ResolvePath(t, "grammar", base_dir);
      c.max_depth = t.value("max_depth", c.max_depth);
      c.tag_lexicon = ResolvePath(t, "tag_lexicon", base_dir);
      c.max_rounds = t.value("max_rounds", c.max_rounds);
      if (t.contains("random_masking")) {
        const auto& r = t["random_masking"];
        CheckKeys(r, {"mask_count_weights", "mode", "templates_per_utterance"}, "text.random_masking");
        c.random.mask_count_weights = r.value("mask_count_weights", c.random.mask_count_weights);
        if (r.contains("mode")) c.random.mode = ParseMaskMode(r["mode"].get<std::string>());
        c.random.templates_per_utterance = r.value("templates_per_utterance", c.random.templates_per_utterance);
      }
      if (t.contains("filler")) {
        const auto& f = t["filler"];
        CheckKeys(f, {"backend", "endpoint", "order", "smoothing_k", "top_k", "temperature", "n_outputs",
                      "mask_token", "batch_size", "timeout_ms"},
                  "text.filler");
        if (f.contains("backend")) c.backend = ParseFillBackend(f["backend"].get<std::string>());
        c.fill_endpoint = f.value("endpoint", c.fill_endpoint);
        c.ngram_order = f.value("order", c.ngram_order);
        c.smoothing_k = f.value("smoothing_k", c.smoothing_k);
        c.fill.top_k = f.value("top_k", c.fill.top_k);
        c.fill.temperature = f.value("temperature", c.fill.temperature);
        c.fill.n_outputs = f.value("n_outputs", c.fill.n_outputs);
        c.fill.mask_token = f.value("mask_token", c.fill.mask_token);
        c.fill_batch_size = f.value("batch_size", c.fill_batch_size);
        c.fill_timeout_ms = f.value("timeout_ms", c.fill_timeout_ms);
      }
    }
    if (j.contains("tts")) {
      const auto& t = j["tts"];
      CheckKeys(t, {"backend", "endpoint", "cache_dir", "voices", "speeds", "pitches"}, "tts");
      c.tts_backend = t.value("backend", c.tts_backend);
      c.tts_endpoint = t.value("endpoint", c.tts_endpoint);
      c.tts_cache = ResolvePath(t, "cache_dir", base_dir);
      if (t.contains("voices")) {
        if (t["voices"].is_number_integer()) {
          const int n = t["voices"].get<int>();
          c.voices.voices.clear();
          for (int i = 0; i < n; ++i) {
            char name[16];
            std::snprintf(name, sizeof name, "v%02d", i);
            c.voices.voices.emplace_back(name);
          }
        } else {
          c.voices.voices = t["voices"].get<std::vector<std::string>>();
        }
      }
      c.voices.speeds = t.value("speeds", c.voices.speeds);
      c.voices.pitches = t.value("pitches", c.voices.pitches);
    }
    if (j.contains("audio")) {
      const auto& a = j["audio"];
      CheckKeys(a, {"policy", "noise_pool"}, "audio");
      c.noise_pool = ResolvePath(a, "noise_pool", base_dir);
      if (a.contains("policy")) c.audio = AudioPolicyFromJson(a["policy"].dump());
    }
    if (j.contains("mix")) {
      const auto& m = j["mix"];
      CheckKeys(m, {"real_manifest", "ratio", "epoch_len"}, "mix");
      c.real_manifest = ResolvePath(m, "real_manifest", base_dir);
      c.mix.ratio = m.value("ratio", c.mix.ratio);
      c.mix.epoch_len = m.value("epoch_len", c.mix.epoch_len);
    }
  } catch (const Json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  c.mix.seed = DeriveSeed(c.seed, "mix");
  return c;
}

PipelineConfig LoadPipelineConfig(const fs::path& path) {
  if (!fs::exists(path)) throw Error("config file not found: " + path.string());
  return ParsePipelineConfig(ReadFileBytes(path), path.parent_path());
}

std::vector<Diagnostic> ValidateConfig(const PipelineConfig& c) {
  std::vector<Diagnostic> out;
  auto add = [&](std::string field, std::string message) {
    out.push_back({std::move(field), std::move(message)});
  };
  auto need_file = [&](const std::string& field, const fs::path& p, bool required) {
    std::error_code ec;
    if (p.empty()) {
      if (required) add(field, "is required");
    } else if (!fs::is_regular_file(p, ec)) {
      add(field, "file not found: " + p.string());
    }
  };
  need_file("seed_corpus", c.seed_corpus, true);
  if (c.output_dir.empty()) add("output_dir", "is required");
  if (c.workers == 0) add("workers", "must be at least 1");

  if (!(c.factor >= 1.0)) add("text.factor", "must be at least 1");
  const bool grammar = std::find(c.methods.begin(), c.methods.end(), AugMethod::kGrammar) != c.methods.end();
  need_file("text.grammar", c.grammar, grammar);
  need_file("text.tag_lexicon", c.tag_lexicon, false);
  if (c.max_depth < 1) add("text.max_depth", "must be at least 1");
  if (c.random.mask_count_weights.empty() ||
      std::any_of(c.random.mask_count_weights.begin(), c.random.mask_count_weights.end(),
                  [](double w) { return !(w >= 0.0); }) ||
      !(std::accumulate(c.random.mask_count_weights.begin(), c.random.mask_count_weights.end(), 0.0) > 0.0)) {
    add("text.random_masking.mask_count_weights", "must be non-negative with a positive sum");
  }
  if (c.ngram_order < 2) add("text.filler.order", "must be at least 2");
  if (!(c.smoothing_k > 0.0)) add("text.filler.smoothing_k", "must be positive");
  if (c.fill.top_k == 0) add("text.filler.top_k", "must be at least 1");
  if (!(c.fill.temperature > 0.0)) add("text.filler.temperature", "must be positive");
  if (c.fill.n_outputs == 0) add("text.filler.n_outputs", "must be at least 1");
  if (c.fill.mask_token.empty()) add("text.filler.mask_token", "must be non-empty");
  if (c.backend == FillBackend::kExternal) {
    if (c.fill_endpoint.empty()) {
      add("text.filler.endpoint", "is required for the external backend");
    } else {
      try {
        ParseEndpoint(c.fill_endpoint);
      } catch (const Error& e) {
        add("text.filler.endpoint", e.what());
      }
    }
    if (c.fill_batch_size == 0) add("text.filler.batch_size", "must be at least 1");
  }

  if (c.tts_backend != "mock" && c.tts_backend != "external") {
    add("tts.backend", "must be 'mock' or 'external'");
  }
  if (c.tts_backend == "external" && c.tts_endpoint.empty()) {
    add("tts.endpoint", "is required for the external backend");
  }
  for (auto& m : ValidateVoicePlan(c.voices)) add("tts", m);

  for (auto& m : ValidateAudioPolicy(c.audio)) add("audio.policy", m);
  need_file("audio.noise_pool", c.noise_pool, false);
  const bool may_add_noise = c.audio.noise_count_probabilities.size() > 1 &&
                             std::any_of(c.audio.noise_count_probabilities.begin() + 1,
                                         c.audio.noise_count_probabilities.end(),
                                         [](double p) { return p > 0.0; });
  if (may_add_noise && c.noise_pool.empty()) {
    add("audio.noise_pool", "is required when the policy can add noise");
  }

  need_file("mix.real_manifest", c.real_manifest, true);
  for (auto& m : ValidateMixPolicy(c.mix)) add("mix.ratio", m);
  return out;
}

const StageReport* RunReport::Stage(const std::string& name) const {
  for (const auto& s : stages) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::string ReportJson(const RunReport& r) {
  OrderedJson j;
  j["stages"] = OrderedJson::array();
  for (const auto& s : r.stages) {
    OrderedJson st;
    st["name"] = s.name;
    st["inputs"] = s.inputs;
    st["outputs"] = s.outputs;
    st["drops"] = s.drops;
    st["shortfall"] = s.shortfall;
    j["stages"].push_back(std::move(st));
  }
  j["corpus_stats"]["before"] = StatsJson(r.stats_before);
  j["corpus_stats"]["after"] = StatsJson(r.stats_after);
  j["accepted_by_method"] = r.accepted_by_method;
  if (r.budget) j["budget"] = BudgetJson(*r.budget);
  if (r.error_stage) {
    j["error"]["stage"] = *r.error_stage;
    j["error"]["message"] = r.error_message.value_or("");
  }
  return j.dump(2) + "\n";
}

std::string StatsToJson(const CorpusStats& stats) { return StatsJson(stats).dump(2) + "\n"; }

std::string BudgetToJson(const BudgetReport& budget) { return BudgetJson(budget).dump(2) + "\n"; }

std::string RunMetaJson(const RunReport& r) {
  OrderedJson j;
  j["synthesis_calls"] = r.synthesis_calls;
  j["cache_hits"] = r.cache_hits;
  j["stages"] = OrderedJson::array();
  for (const auto& s : r.stages) {
    OrderedJson st;
    st["name"] = s.name;
    st["skipped"] = s.skipped;
    st["seconds"] = s.seconds;
    j["stages"].push_back(std::move(st));
  }
  return j.dump(2) + "\n";
}

AugPlan MakeAugPlan(const PipelineConfig& c) {
  AugPlan plan;
  plan.methods = c.methods;
  plan.factor = c.factor;
  plan.seed = DeriveSeed(c.seed, "text");
  plan.max_rounds = c.max_rounds;
  if (!c.grammar.empty()) plan.grammar = std::make_shared<Grammar>(LoadGrammar(c.grammar.string()));
  plan.max_depth = c.max_depth;
  plan.random = c.random;
  if (!c.tag_lexicon.empty()) {
    plan.tagger = std::make_shared<LexiconTagger>(LexiconTagger::Load(c.tag_lexicon));
  }
  plan.backend = c.backend;
  plan.ngram_order = c.ngram_order;
  plan.smoothing_k = c.smoothing_k;
  plan.fill = c.fill;
  plan.external.endpoint = c.fill_endpoint;
  plan.external.batch_size = c.fill_batch_size;
  plan.external.timeout = std::chrono::milliseconds(c.fill_timeout_ms);
  plan.external.max_in_flight = c.workers;
  return plan;
}

Manifest RunTtsStage(const Corpus& texts, const PipelineConfig& c, Synthesizer& synthesizer,
                     TtsCache& cache, StageReport& report, std::size_t* upstream_calls,
                     std::size_t* cache_hits) {
  const auto assignments = AssignVoiceParams(texts, c.voices, DeriveSeed(c.seed, "tts"));
  std::vector<TtsRequest> requests;
  requests.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    requests.push_back({texts[i].text, assignments[i].voice, assignments[i].speed, assignments[i].pitch});
  }
  const auto synth = SynthesizeBatch(requests, synthesizer, &cache, c.workers);
  if (upstream_calls != nullptr) *upstream_calls += synth.upstream_calls;
  if (cache_hits != nullptr) *cache_hits += synth.cache_hits;

  Manifest out;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto& item = synth.items[i];
    if (!item.clip) continue;
    ManifestEntry e;
    e.audio_path = ManifestPath(item.wav_path, c.output_dir);
    e.text = texts[i].text;
    e.duration_s = item.clip->duration_seconds();
    e.source = EntrySource::kSynthetic;
    e.origin = std::string(ToString(texts[i].source));
    out.push_back(std::move(e));
  }
  report.inputs = texts.size();
  report.outputs = out.size();
  report.drops = synth.dropped;
  return out;
}

Manifest RunAudioStage(const Manifest& input, const AudioPolicy& policy, NoiseStore& pool,
                       const fs::path& audio_dir, const fs::path& base_dir, std::uint64_t seed,
                       std::size_t workers, StageReport& report) {
  const auto noise_ids = pool.Ids();
  fs::create_directories(audio_dir);

  // Output names come from the input file stems; collisions get an index.
  std::vector<std::string> stems(input.size());
  std::set<std::string> used;
  for (std::size_t i = 0; i < input.size(); ++i) {
    std::string stem = SafeFileStem(fs::path(input[i].audio_path).stem().string());
    if (!used.insert(stem).second) {
      stem += "-" + std::to_string(i);
      used.insert(stem);
    }
    stems[i] = stem;
  }

  Manifest out(input.size());
  ParallelFor(input.size(), workers, [&](std::size_t i) {
    const ManifestEntry& in = input[i];
    const bool selected = in.source == EntrySource::kSynthetic ? policy.augment_synthetic
                                                               : policy.augment_real;
    if (!selected) {
      out[i] = in;
      return;
    }
    const AudioClip clip = ReadWav(ResolveManifestPath(in.audio_path, base_dir));
    const NoisePlan plan = SamplePlan(policy, noise_ids, DeriveSeed(seed, "audio/" + stems[i]));
    const AudioClip augmented = ApplyPlan(clip, plan, pool);
    const fs::path dest = audio_dir / (stems[i] + ".wav");
    WriteWav(dest, augmented);
    ManifestEntry e = in;
    e.audio_path = ManifestPath(dest, base_dir);
    e.duration_s = augmented.duration_seconds();
    out[i] = std::move(e);
  });
  report.inputs = input.size();
  report.outputs = out.size();
  report.drops = 0;
  return out;
}

RunReport RunPipeline(const PipelineConfig& c, Synthesizer* synthesizer) {
  if (auto diags = ValidateConfig(c); !diags.empty()) throw ConfigError(std::move(diags));

  fs::create_directories(c.output_dir);
  StageLedger ledger(c.output_dir);
  RunReport report;
  const fs::path texts_path = c.output_dir / "texts.jsonl";
  const fs::path tts_path = c.output_dir / "tts.jsonl";
  const fs::path audio_path = c.output_dir / "audio.jsonl";
  const fs::path mix_path = c.output_dir / "mix.jsonl";
  std::string current = "validate";

  auto finish = [&]() {
    WriteFileBytes(c.output_dir / "report.json", ReportJson(report));
    WriteFileBytes(c.output_dir / "run_meta.json", RunMetaJson(report));
    return report;
  };

  try {
    // Text augmentation.
    current = "text";
    {
      StageReport st{.name = "text"};
      const auto t0 = Clock::now();
      const Corpus seed = LoadCorpus(c.seed_corpus, GuessFormat(c.seed_corpus));
      const std::string key = Sha256Hex(TextStageConfig(c).dump());
      Corpus texts;
      if (ledger.Fresh("text", key, texts_path)) {
        texts = LoadCorpus(texts_path, CorpusFormat::kJsonl);
        st.skipped = true;
        // Counts are restored from the previous report for a skipped stage.
        const auto prev = OrderedJson::parse(ReadFileBytes(c.output_dir / "report.json"));
        for (const auto& s : prev.at("stages")) {
          if (s.at("name") == "text") {
            st.inputs = s.at("inputs");
            st.outputs = s.at("outputs");
            st.drops = s.at("drops");
            st.shortfall = s.at("shortfall");
          }
        }
        report.accepted_by_method = prev.at("accepted_by_method").get<std::map<std::string, std::size_t>>();
      } else {
        ledger.Forget("text");
        const AugResult aug = RunTextAugmentation(seed, MakeAugPlan(c));
        texts = aug.corpus;
        st.inputs = aug.candidates;
        st.outputs = aug.corpus.size();
        st.drops = aug.duplicates + aug.surplus + aug.invalid;
        st.shortfall = aug.shortfall;
        for (const auto& [m, n] : aug.accepted) report.accepted_by_method[std::string(ToString(m))] = n;
        if (aug.error) throw Error(*aug.error);
        WriteCorpusJsonl(texts_path, texts);
        ledger.Record("text", key, texts_path);
      }
      report.stats_before = ComputeStats(seed, seed);
      report.stats_after = ComputeStats(texts, seed);
      st.seconds = SecondsSince(t0);
      report.stages.push_back(st);

      // Synthesis; the content-addressed cache makes repeats free.
      current = "tts";
      StageReport tts{.name = "tts"};
      const auto t1 = Clock::now();
      TtsCache cache(c.tts_cache.empty() ? c.output_dir / "tts_cache" : c.tts_cache);
      std::unique_ptr<Synthesizer> owned;
      if (synthesizer == nullptr) {
        if (c.tts_backend == "external") {
          owned = std::make_unique<ExternalSynthesizer>(c.tts_endpoint);
        } else {
          owned = std::make_unique<MockSynthesizer>(DeriveSeed(c.seed, "mock-tts"));
        }
        synthesizer = owned.get();
      }
      const Manifest tts_manifest =
          RunTtsStage(texts, c, *synthesizer, cache, tts, &report.synthesis_calls, &report.cache_hits);
      WriteManifest(tts_path, tts_manifest);
      tts.seconds = SecondsSince(t1);
      report.stages.push_back(tts);
    }

    // Audio augmentation.
    current = "audio";
    {
      StageReport st{.name = "audio"};
      const auto t0 = Clock::now();
      const Manifest tts_manifest = LoadManifest(tts_path);
      OrderedJson key_src;
      key_src["input"] = Sha256File(tts_path);
      key_src["policy"] = AudioPolicyToJson(c.audio);
      key_src["noise_pool"] = FileDigest(c.noise_pool);
      key_src["seed"] = c.seed;
      const std::string key = Sha256Hex(key_src.dump());
      bool fresh = ledger.Fresh("audio", key, audio_path);
      if (fresh) {
        for (const auto& e : LoadManifest(audio_path)) {
          fresh = fresh && fs::exists(ResolveManifestPath(e.audio_path, c.output_dir));
        }
      }
      if (fresh) {
        st.skipped = true;
        st.inputs = st.outputs = tts_manifest.size();
      } else {
        ledger.Forget("audio");
        std::unique_ptr<NoiseStore> pool;
        if (c.noise_pool.empty()) {
          pool = std::make_unique<MemoryNoiseStore>();
        } else {
          pool = std::make_unique<ManifestNoiseStore>(ManifestNoiseStore::Open(c.noise_pool));
        }
        const Manifest augmented = RunAudioStage(tts_manifest, c.audio, *pool, c.output_dir / "audio",
                                                 c.output_dir, DeriveSeed(c.seed, "audio"), c.workers, st);
        WriteManifest(audio_path, augmented);
        ledger.Record("audio", key, audio_path);
      }
      st.seconds = SecondsSince(t0);
      report.stages.push_back(st);
    }

    // Mixing.
    current = "mix";
    {
      StageReport st{.name = "mix"};
      const auto t0 = Clock::now();
      Manifest real = LoadManifest(c.real_manifest);
      RebasePaths(real, c.real_manifest.parent_path(), c.output_dir);
      const Manifest synthetic = LoadManifest(audio_path);
      report.budget = ReportBudget(real, synthetic, c.mix);
      OrderedJson key_src;
      key_src["synthetic"] = Sha256File(audio_path);
      key_src["real"] = Sha256File(c.real_manifest);
      key_src["ratio"] = c.mix.ratio;
      key_src["epoch_len"] = c.mix.epoch_len;
      key_src["seed"] = c.mix.seed;
      const std::string key = Sha256Hex(key_src.dump());
      if (ledger.Fresh("mix", key, mix_path)) {
        st.skipped = true;
      } else {
        ledger.Forget("mix");
        WriteManifest(mix_path, MixStreamEntries(real, synthetic, c.mix));
        ledger.Record("mix", key, mix_path);
      }
      st.inputs = st.outputs = c.mix.epoch_len;
      st.seconds = SecondsSince(t0);
      report.stages.push_back(st);
    }
  } catch (const std::exception& e) {
    report.error_stage = current;
    report.error_message = e.what();
  }
  return finish();
}

}  // namespace augment
