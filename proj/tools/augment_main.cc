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

// Command-line front end: one subcommand per stage plus `run` for the whole
// pipeline. Flags override values read from --config.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>

#include "augment/hash.h"
#include "augment/pipeline.h"

namespace fs = std::filesystem;
using namespace augment;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
};

void AddCommon(CLI::App* app, Common& c, const std::string& out_help) {
  app->add_option("--config", c.config, "pipeline config JSON")->check(CLI::ExistingFile);
  app->add_option("--out", c.out, out_help);
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--workers", c.workers, "worker threads");
}

PipelineConfig BaseConfig(const Common& c) {
  PipelineConfig cfg = c.config.empty() ? PipelineConfig{} : LoadPipelineConfig(c.config);
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.mix.seed = DeriveSeed(cfg.seed, "mix");
  }
  if (c.workers) cfg.workers = *c.workers;
  return cfg;
}

// Fails on diagnostics whose field starts with one of `prefixes`.
void RequireValid(const PipelineConfig& cfg, std::initializer_list<std::string_view> prefixes) {
  std::vector<Diagnostic> relevant;
  for (auto& d : ValidateConfig(cfg)) {
    for (auto p : prefixes) {
      if (d.field.starts_with(p)) {
        relevant.push_back(d);
        break;
      }
    }
  }
  if (!relevant.empty()) throw ConfigError(std::move(relevant));
}

template <typename F>
void WithOutput(const std::string& path, F&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open output file: " + path);
  write(out);
  if (!out) throw Error("failed writing output file: " + path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text and audio data augmentation for speech recognition"};
  app.require_subcommand(1);

  // text
  Common text_c;
  std::string text_in, text_grammar, text_tags, text_backend, text_endpoint;
  std::vector<std::string> text_methods;
  std::optional<double> text_factor;
  std::optional<int> text_depth;
  auto* text = app.add_subcommand("text", "augment a seed corpus");
  AddCommon(text, text_c, "output JSONL (stdout when omitted)");
  text->add_option("--in", text_in, "seed corpus (.txt lines or .jsonl)");
  text->add_option("--methods", text_methods, "grammar, random, custom or all")->delimiter(',');
  text->add_option("--factor", text_factor, "augmentation factor");
  text->add_option("--grammar", text_grammar, "grammar file");
  text->add_option("--max-depth", text_depth, "grammar derivation depth limit");
  text->add_option("--tags", text_tags, "POS lexicon (word<TAB>TAG)");
  text->add_option("--backend", text_backend, "ngram or external");
  text->add_option("--endpoint", text_endpoint, "fill-mask service URL");

  // grammar
  std::string gram_file, gram_out;
  std::size_t gram_count = 10;
  std::uint64_t gram_seed = 0;
  int gram_depth = 12;
  auto* gram = app.add_subcommand("grammar", "sample utterances from a grammar");
  gram->add_option("--grammar", gram_file, "grammar file")->required()->check(CLI::ExistingFile);
  gram->add_option("--count", gram_count, "number of utterances");
  gram->add_option("--seed", gram_seed, "seed");
  gram->add_option("--max-depth", gram_depth, "derivation depth limit");
  gram->add_option("--out", gram_out, "output JSONL (stdout when omitted)");

  // tts
  Common tts_c;
  std::string tts_in, tts_cache, tts_backend, tts_endpoint;
  auto* tts = app.add_subcommand("tts", "synthesize a text corpus");
  AddCommon(tts, tts_c, "output manifest JSONL (stdout when omitted)");
  tts->add_option("--in", tts_in, "text corpus")->required()->check(CLI::ExistingFile);
  tts->add_option("--cache", tts_cache, "cache directory")->required();
  tts->add_option("--backend", tts_backend, "mock or external");
  tts->add_option("--endpoint", tts_endpoint, "TTS service URL");

  // audio
  Common audio_c;
  std::string audio_policy, audio_in, audio_pool, audio_dir;
  auto* audio = app.add_subcommand("audio", "apply speed and noise augmentation to a manifest");
  AddCommon(audio, audio_c, "output manifest JSONL (stdout when omitted)");
  audio->add_option("--policy", audio_policy, "audio policy JSON")->check(CLI::ExistingFile);
  audio->add_option("--in", audio_in, "input manifest")->required()->check(CLI::ExistingFile);
  audio->add_option("--noise-pool", audio_pool, "noise manifest")->check(CLI::ExistingFile);
  audio->add_option("--audio-dir", audio_dir, "directory for augmented WAVs")->required();

  // mix
  Common mix_c;
  std::string mix_real, mix_synth, mix_budget;
  std::optional<double> mix_ratio;
  std::optional<std::size_t> mix_len;
  auto* mix = app.add_subcommand("mix", "interleave real and synthetic manifests");
  AddCommon(mix, mix_c, "output stream manifest (stdout when omitted)");
  mix->add_option("--real", mix_real, "real manifest")->check(CLI::ExistingFile);
  mix->add_option("--synthetic", mix_synth, "synthetic manifest")->required()->check(CLI::ExistingFile);
  mix->add_option("--ratio", mix_ratio, "expected synthetic fraction");
  mix->add_option("--epoch-len", mix_len, "entries to emit");
  mix->add_option("--budget", mix_budget, "write the budget report JSON here");

  // run
  Common run_c;
  auto* run = app.add_subcommand("run", "run the full pipeline");
  AddCommon(run, run_c, "output directory");
  run->get_option("--config")->required();

  // stats
  std::string stats_in, stats_seed;
  auto* stats = app.add_subcommand("stats", "corpus statistics");
  stats->add_option("--in", stats_in, "corpus")->required()->check(CLI::ExistingFile);
  stats->add_option("--seed-corpus", stats_seed, "reference corpus for novelty")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*text) {
      PipelineConfig cfg = BaseConfig(text_c);
      if (!text_in.empty()) cfg.seed_corpus = text_in;
      if (!text_methods.empty()) {
        cfg.methods.clear();
        for (const auto& m : text_methods) {
          if (m == "all") {
            cfg.methods = {AugMethod::kGrammar, AugMethod::kRandom, AugMethod::kCustom};
          } else {
            cfg.methods.push_back(ParseAugMethod(m));
          }
        }
      }
      if (text_factor) cfg.factor = *text_factor;
      if (!text_grammar.empty()) cfg.grammar = text_grammar;
      if (text_depth) cfg.max_depth = *text_depth;
      if (!text_tags.empty()) cfg.tag_lexicon = text_tags;
      if (!text_backend.empty()) cfg.backend = ParseFillBackend(text_backend);
      if (!text_endpoint.empty()) cfg.fill_endpoint = text_endpoint;
      RequireValid(cfg, {"seed_corpus", "workers", "text."});
      const Corpus seed = LoadCorpus(cfg.seed_corpus, GuessFormat(cfg.seed_corpus));
      const AugResult r = RunTextAugmentation(seed, MakeAugPlan(cfg));
      WithOutput(text_c.out, [&](std::ostream& o) { WriteCorpusJsonl(o, r.corpus); });
      std::cerr << "text: " << r.corpus.size() << "/" << r.target << " utterances, shortfall "
                << r.shortfall << ", duplicates " << r.duplicates << ", rounds " << r.rounds << "\n";
      if (r.error) {
        std::cerr << "error: " << *r.error << "\n";
        return 1;
      }
    } else if (*gram) {
      const Grammar g = LoadGrammar(gram_file);
      const SampleResult r = SampleUtterances(g, gram_count, gram_seed, gram_depth);
      WithOutput(gram_out, [&](std::ostream& o) { WriteCorpusJsonl(o, r.corpus); });
      if (r.shortfall > 0) {
        std::cerr << "grammar: " << r.shortfall << " utterances short after " << r.attempts
                  << " attempts\n";
      }
    } else if (*tts) {
      PipelineConfig cfg = BaseConfig(tts_c);
      if (!tts_backend.empty()) cfg.tts_backend = tts_backend;
      if (!tts_endpoint.empty()) cfg.tts_endpoint = tts_endpoint;
      RequireValid(cfg, {"workers", "tts"});
      cfg.output_dir = tts_c.out.empty() ? fs::current_path() : fs::absolute(tts_c.out).parent_path();
      const Corpus texts = LoadCorpus(tts_in, GuessFormat(tts_in));
      TtsCache cache(tts_cache);
      std::unique_ptr<Synthesizer> synth;
      if (cfg.tts_backend == "external") {
        synth = std::make_unique<ExternalSynthesizer>(cfg.tts_endpoint);
      } else {
        synth = std::make_unique<MockSynthesizer>(DeriveSeed(cfg.seed, "mock-tts"));
      }
      StageReport st;
      std::size_t calls = 0, hits = 0;
      const Manifest m = RunTtsStage(texts, cfg, *synth, cache, st, &calls, &hits);
      WithOutput(tts_c.out, [&](std::ostream& o) { WriteManifest(o, m); });
      std::cerr << "tts: " << st.outputs << " clips, " << st.drops << " dropped, " << calls
                << " upstream calls, " << hits << " cache hits\n";
    } else if (*audio) {
      PipelineConfig cfg = BaseConfig(audio_c);
      if (!audio_policy.empty()) cfg.audio = AudioPolicyFromJson(ReadFileBytes(audio_policy));
      if (!audio_pool.empty()) cfg.noise_pool = audio_pool;
      RequireValid(cfg, {"workers", "audio."});
      const Manifest in = LoadManifest(audio_in);
      std::unique_ptr<NoiseStore> pool;
      if (cfg.noise_pool.empty()) {
        pool = std::make_unique<MemoryNoiseStore>();
      } else {
        pool = std::make_unique<ManifestNoiseStore>(ManifestNoiseStore::Open(cfg.noise_pool));
      }
      const fs::path base = fs::absolute(audio_in).parent_path();
      StageReport st;
      const Manifest m = RunAudioStage(in, cfg.audio, *pool, fs::absolute(audio_dir), base,
                                       DeriveSeed(cfg.seed, "audio"), cfg.workers, st);
      WithOutput(audio_c.out, [&](std::ostream& o) { WriteManifest(o, m); });
    } else if (*mix) {
      PipelineConfig cfg = BaseConfig(mix_c);
      if (!mix_real.empty()) cfg.real_manifest = mix_real;
      if (mix_ratio) cfg.mix.ratio = *mix_ratio;
      if (mix_len) cfg.mix.epoch_len = *mix_len;
      RequireValid(cfg, {"mix."});
      const fs::path out_dir = mix_c.out.empty() || mix_c.out == "-" ? fs::current_path()
                                                                      : fs::absolute(mix_c.out).parent_path();
      Manifest real = LoadManifest(cfg.real_manifest);
      RebasePaths(real, fs::absolute(cfg.real_manifest).parent_path(), out_dir);
      Manifest synthetic = LoadManifest(mix_synth);
      RebasePaths(synthetic, fs::absolute(mix_synth).parent_path(), out_dir);
      const Manifest stream = MixStreamEntries(real, synthetic, cfg.mix);
      WithOutput(mix_c.out, [&](std::ostream& o) { WriteManifest(o, stream); });
      const std::string budget = BudgetToJson(ReportBudget(real, synthetic, cfg.mix));
      if (mix_budget.empty()) {
        std::cerr << budget;
      } else {
        WriteFileBytes(mix_budget, budget);
      }
    } else if (*run) {
      PipelineConfig cfg = BaseConfig(run_c);
      if (!run_c.out.empty()) cfg.output_dir = run_c.out;
      const RunReport r = RunPipeline(cfg);
      for (const auto& s : r.stages) {
        std::cerr << s.name << ": " << s.inputs << " in, " << s.outputs << " out, " << s.drops
                  << " dropped" << (s.skipped ? " (unchanged, skipped)" : "") << "\n";
      }
      if (!r.ok()) {
        std::cerr << "error in stage " << *r.error_stage << ": " << r.error_message.value_or("") << "\n";
        return 1;
      }
    } else if (*stats) {
      const Corpus c = LoadCorpus(stats_in, GuessFormat(stats_in));
      const Corpus ref = stats_seed.empty() ? c : LoadCorpus(stats_seed, GuessFormat(stats_seed));
      std::cout << StatsToJson(ComputeStats(c, ref));
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
