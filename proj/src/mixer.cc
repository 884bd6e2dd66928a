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

#include "augment/mixer.h"

#include <json.hpp>

#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "augment/error.h"
#include "augment/hash.h"

namespace augment {

std::string_view ToString(EntrySource source) {
  return source == EntrySource::kReal ? "real" : "synthetic";
}

EntrySource ParseEntrySource(std::string_view tag) {
  if (tag == "real") return EntrySource::kReal;
  if (tag == "synthetic") return EntrySource::kSynthetic;
  throw Error("unknown manifest source '" + std::string(tag) + "'");
}

Manifest ParseManifest(std::string_view content, std::string_view name) {
  Manifest out;
  std::size_t begin = 0;
  int line_no = 0;
  while (begin < content.size()) {
    std::size_t end = content.find('\n', begin);
    if (end == std::string_view::npos) end = content.size();
    const std::string_view line = content.substr(begin, end - begin);
    begin = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      ManifestEntry e;
      e.audio_path = rec.at("audio_path").get<std::string>();
      e.text = rec.at("text").get<std::string>();
      e.duration_s = rec.at("duration_s").get<double>();
      e.source = ParseEntrySource(rec.at("source").get<std::string>());
      e.origin = rec.value("origin", std::string());
      if (!(e.duration_s > 0.0)) throw Error("duration_s must be positive");
      if (e.text.empty()) throw Error("text must be non-empty");
      out.push_back(std::move(e));
    } catch (const std::exception& ex) {
      throw FormatError(std::string(name) + " line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return out;
}

Manifest LoadManifest(const std::filesystem::path& path) {
  return ParseManifest(ReadFileBytes(path), path.string());
}

std::string ToJsonl(const ManifestEntry& e) {
  nlohmann::ordered_json rec;
  rec["audio_path"] = e.audio_path;
  rec["text"] = e.text;
  rec["duration_s"] = e.duration_s;
  rec["source"] = ToString(e.source);
  rec["origin"] = e.origin;
  return rec.dump();
}

void WriteManifest(std::ostream& out, const Manifest& manifest) {
  for (const auto& e : manifest) out << ToJsonl(e) << '\n';
}

void WriteManifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::ostringstream buf;
  WriteManifest(buf, manifest);
  WriteFileBytes(path, buf.str());
}

std::vector<std::string> ValidateMixPolicy(const MixPolicy& policy) {
  std::vector<std::string> out;
  if (!(policy.ratio >= 0.0 && policy.ratio <= 1.0)) {
    std::ostringstream os;
    os << "mix ratio must be in [0, 1], got " << policy.ratio;
    out.push_back(os.str());
  }
  if (policy.epoch_len == 0) out.push_back("mix epoch_len must be positive");
  return out;
}

void RebasePaths(Manifest& manifest, const std::filesystem::path& from,
                 const std::filesystem::path& to) {
  namespace fs = std::filesystem;
  for (auto& e : manifest) {
    fs::path p(e.audio_path);
    if (p.is_absolute()) continue;
    p = fs::absolute(from / p).lexically_normal();
    const std::string rel = p.lexically_relative(fs::absolute(to).lexically_normal()).generic_string();
    e.audio_path = !rel.empty() && !rel.starts_with("..") ? rel : p.generic_string();
  }
}

EpochSampler::EpochSampler(std::size_t size, std::uint64_t seed) : order_(size), rng_(seed) {
  std::iota(order_.begin(), order_.end(), 0);
  Reshuffle();
}

void EpochSampler::Reshuffle() {
  for (std::size_t i = order_.size(); i > 1; --i) {
    std::swap(order_[i - 1], order_[rng_.UniformIndex(i)]);
  }
  cursor_ = 0;
}

std::size_t EpochSampler::Next() {
  if (order_.empty()) throw Error("EpochSampler: empty source");
  if (cursor_ == order_.size()) Reshuffle();
  return order_[cursor_++];
}

MixStream::MixStream(const Manifest& real, const Manifest& synthetic, const MixPolicy& policy)
    : real_(real),
      synthetic_(synthetic),
      ratio_(policy.ratio),
      choice_(DeriveSeed(policy.seed, "mix/choice")),
      real_sampler_(real.size(), DeriveSeed(policy.seed, "mix/real")),
      synthetic_sampler_(synthetic.size(), DeriveSeed(policy.seed, "mix/synthetic")) {
  if (const auto diags = ValidateMixPolicy(policy); !diags.empty()) throw Error(diags.front());
  if (real.empty()) throw Error("mix_stream: real manifest is empty");
  if (policy.ratio > 0.0 && synthetic.empty()) {
    throw Error("mix_stream: ratio > 0 but the synthetic manifest is empty");
  }
}

const ManifestEntry& MixStream::Next() {
  if (choice_.Bernoulli(ratio_)) return synthetic_[synthetic_sampler_.Next()];
  return real_[real_sampler_.Next()];
}

Manifest MixStreamEntries(const Manifest& real, const Manifest& synthetic, const MixPolicy& policy) {
  MixStream stream(real, synthetic, policy);
  Manifest out;
  out.reserve(policy.epoch_len);
  for (std::size_t i = 0; i < policy.epoch_len; ++i) out.push_back(stream.Next());
  return out;
}

BudgetReport ReportBudget(const Manifest& real, const Manifest& synthetic, const MixPolicy& policy) {
  BudgetReport r;
  auto tally = [&](const Manifest& m, SourceBudget& b) {
    for (const auto& e : m) {
      ++b.entries;
      b.hours += e.duration_s / 3600.0;
      auto& o = r.by_origin[e.origin.empty() ? std::string(ToString(e.source)) : e.origin];
      ++o.entries;
      o.hours += e.duration_s / 3600.0;
    }
  };
  tally(real, r.real);
  tally(synthetic, r.synthetic);
  const double entries = static_cast<double>(r.real.entries + r.synthetic.entries);
  const double hours = r.real.hours + r.synthetic.hours;
  if (entries > 0) r.synthetic_entry_share = r.synthetic.entries / entries;
  if (hours > 0) r.synthetic_duration_share = r.synthetic.hours / hours;
  if (r.synthetic.entries > 0) {
    const double mean_syn = r.synthetic.hours / r.synthetic.entries;
    const double mean_real = r.real.entries > 0 ? r.real.hours / r.real.entries : 0.0;
    const double syn = policy.ratio * mean_syn;
    const double total = syn + (1.0 - policy.ratio) * mean_real;
    r.expected_stream_duration_share = total > 0 ? syn / total : 0.0;
  }
  return r;
}

}  // namespace augment
