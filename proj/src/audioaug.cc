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

#include "augment/audioaug.h"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "augment/error.h"
#include "augment/hash.h"

namespace augment {
namespace {

constexpr double kSumTolerance = 1e-12;

double Sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

std::string Fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

void CheckKeys(const nlohmann::json& j, const std::set<std::string>& allowed,
               const std::string& where) {
  if (!j.is_object()) throw FormatError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.contains(it.key())) {
      throw FormatError("unknown key '" + it.key() + "' in " + where);
    }
  }
}

}  // namespace

std::vector<std::string> ValidateAudioPolicy(const AudioPolicy& p) {
  std::vector<std::string> out;
  const auto& sp = p.speed;
  if (sp.factors.empty()) out.push_back("speed factors are empty");
  if (sp.factors.size() != sp.probabilities.size()) {
    out.push_back("speed factors and probabilities differ in length");
  }
  for (double f : sp.factors) {
    if (!(f > 0.0) || !std::isfinite(f)) {
      out.push_back("speed factors must be positive and finite");
      break;
    }
  }
  if (std::any_of(sp.probabilities.begin(), sp.probabilities.end(), [](double x) { return !(x >= 0.0); })) {
    out.push_back("speed probabilities must be non-negative");
  }
  if (std::abs(Sum(sp.probabilities) - 1.0) > kSumTolerance) {
    out.push_back("speed probabilities sum ≠ 1 (got " + Fmt(Sum(sp.probabilities)) + ")");
  }
  const auto& nc = p.noise_count_probabilities;
  if (nc.empty()) out.push_back("noise count probabilities are empty");
  if (std::any_of(nc.begin(), nc.end(), [](double x) { return !(x >= 0.0); })) {
    out.push_back("noise count probabilities must be non-negative");
  }
  if (!nc.empty() && std::abs(Sum(nc) - 1.0) > kSumTolerance) {
    out.push_back("noise count probabilities sum ≠ 1 (got " + Fmt(Sum(nc)) + ")");
  }
  if (!(p.snr.stddev_db >= 0.0) || !std::isfinite(p.snr.mean_db)) {
    out.push_back("snr mean must be finite and stddev non-negative");
  }
  if (!(p.snr.min_db <= p.snr.max_db)) out.push_back("snr min_db must not exceed max_db");
  return out;
}

AudioPolicy AudioPolicyFromJson(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("audio policy: ") + e.what());
  }
  AudioPolicy p;
  try {
    CheckKeys(j, {"speed", "noise_count_probabilities", "snr_db", "apply_to"}, "audio policy");
    if (j.contains("speed")) {
      CheckKeys(j["speed"], {"factors", "probabilities"}, "audio policy speed");
      if (j["speed"].contains("factors")) p.speed.factors = j["speed"]["factors"].get<std::vector<double>>();
      if (j["speed"].contains("probabilities")) {
        p.speed.probabilities = j["speed"]["probabilities"].get<std::vector<double>>();
      }
    }
    if (j.contains("noise_count_probabilities")) {
      p.noise_count_probabilities = j["noise_count_probabilities"].get<std::vector<double>>();
    }
    if (j.contains("snr_db")) {
      const auto& s = j["snr_db"];
      CheckKeys(s, {"mean", "stddev", "min", "max"}, "audio policy snr_db");
      p.snr.mean_db = s.value("mean", p.snr.mean_db);
      p.snr.stddev_db = s.value("stddev", p.snr.stddev_db);
      p.snr.min_db = s.value("min", p.snr.min_db);
      p.snr.max_db = s.value("max", p.snr.max_db);
    }
    if (j.contains("apply_to")) {
      CheckKeys(j["apply_to"], {"synthetic", "real"}, "audio policy apply_to");
      p.augment_synthetic = j["apply_to"].value("synthetic", p.augment_synthetic);
      p.augment_real = j["apply_to"].value("real", p.augment_real);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("audio policy: ") + e.what());
  }
  return p;
}

std::string AudioPolicyToJson(const AudioPolicy& p) {
  nlohmann::ordered_json j;
  j["speed"]["factors"] = p.speed.factors;
  j["speed"]["probabilities"] = p.speed.probabilities;
  j["noise_count_probabilities"] = p.noise_count_probabilities;
  j["snr_db"]["mean"] = p.snr.mean_db;
  j["snr_db"]["stddev"] = p.snr.stddev_db;
  j["snr_db"]["min"] = p.snr.min_db;
  j["snr_db"]["max"] = p.snr.max_db;
  j["apply_to"]["synthetic"] = p.augment_synthetic;
  j["apply_to"]["real"] = p.augment_real;
  return j.dump(2);
}

AudioClip ChangeSpeed(const AudioClip& clip, double factor) {
  if (!std::isfinite(factor)) throw Error("change_speed: factor must be finite");
  if (!(factor > 0.0)) throw Error("change_speed: factor must be positive");
  if (factor == 1.0 || clip.samples.empty()) return clip;
  const auto n_in = clip.samples.size();
  const auto n_out = static_cast<std::size_t>(std::llround(static_cast<double>(n_in) / factor));
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.resize(n_out);
  const std::size_t last = n_in - 1;
  for (std::size_t j = 0; j < n_out; ++j) {
    const double t = static_cast<double>(j) * factor;
    const auto i = static_cast<std::size_t>(t);
    if (i >= last) {
      out.samples[j] = clip.samples[last];
    } else {
      const double frac = t - static_cast<double>(i);
      out.samples[j] = clip.samples[i] + frac * (clip.samples[i + 1] - clip.samples[i]);
    }
  }
  return out;
}

double SnrDb(const AudioClip& clean, const AudioClip& noise) {
  return 10.0 * std::log10(MeanPower(clean) / MeanPower(noise));
}

MixResult MixNoise(const AudioClip& clean, const AudioClip& noise, double snr_db,
                   std::string_view noise_id) {
  if (clean.sample_rate != noise.sample_rate) {
    throw Error("mix_noise: sample rate mismatch for noise '" + std::string(noise_id) + "'");
  }
  const double p_clean = MeanPower(clean);
  if (!(p_clean > 0.0)) throw Error("mix_noise: clean signal has zero power");
  if (noise.samples.empty() || !(MeanPower(noise) > 0.0)) {
    throw Error("mix_noise: noise track '" + std::string(noise_id) + "' is silent");
  }
  if (std::isnan(snr_db)) throw Error("mix_noise: SNR is NaN");

  const std::size_t n = clean.samples.size();
  std::vector<double> fitted(n);
  for (std::size_t i = 0; i < n; ++i) fitted[i] = noise.samples[i % noise.samples.size()];
  double p_noise = 0.0;
  for (double s : fitted) p_noise += s * s;
  p_noise /= static_cast<double>(n);
  if (!(p_noise > 0.0)) {
    throw Error("mix_noise: noise track '" + std::string(noise_id) + "' is silent over the clip");
  }

  MixResult result;
  result.noise_gain = snr_db == INFINITY ? 0.0
                                         : std::sqrt(p_clean / p_noise) * std::pow(10.0, -snr_db / 20.0);
  result.audio.sample_rate = clean.sample_rate;
  result.audio.samples.resize(n);
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = clean.samples[i] + result.noise_gain * fitted[i];
    result.audio.samples[i] = v;
    peak = std::max(peak, std::abs(v));
  }
  if (peak > 1.0) {
    result.peak_scale = 1.0 / peak;
    for (double& v : result.audio.samples) v *= result.peak_scale;
  }
  return result;
}

NoisePlan SamplePlan(const AudioPolicy& policy, std::span<const std::string> noise_ids, Rng& rng) {
  NoisePlan plan;
  plan.speed_factor = policy.speed.factors.at(rng.Categorical(policy.speed.probabilities));
  std::size_t count = rng.Categorical(policy.noise_count_probabilities);
  if (count > 0 && noise_ids.empty()) throw Error("sample_plan: noise pool is empty");
  count = std::min(count, noise_ids.size());
  for (std::size_t i = 0; i < count; ++i) {
    const double raw = rng.Normal(policy.snr.mean_db, policy.snr.stddev_db);
    plan.snr_db_unclamped.push_back(raw);
    plan.snr_db.push_back(std::clamp(raw, policy.snr.min_db, policy.snr.max_db));
  }
  std::vector<std::size_t> order(noise_ids.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.UniformIndex(order.size() - i);
    std::swap(order[i], order[j]);
    plan.noise_ids.push_back(noise_ids[order[i]]);
  }
  return plan;
}

NoisePlan SamplePlan(const AudioPolicy& policy, std::span<const std::string> noise_ids,
                     std::uint64_t seed) {
  Rng rng(seed);
  return SamplePlan(policy, noise_ids, rng);
}

AudioClip MemoryNoiseStore::Load(const std::string& id) {
  auto it = tracks_.find(id);
  if (it == tracks_.end()) throw Error("noise track '" + id + "' not found");
  return it->second;
}

std::vector<std::string> MemoryNoiseStore::Ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, clip] : tracks_) ids.push_back(id);
  return ids;
}

ManifestNoiseStore ManifestNoiseStore::Open(const std::filesystem::path& manifest) {
  const std::string content = ReadFileBytes(manifest);
  ManifestNoiseStore store;
  std::set<std::string> seen;
  std::istringstream in(content);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = manifest.string() + " line " + std::to_string(line_no);
    try {
      const auto rec = nlohmann::json::parse(line);
      NoiseTrack t;
      t.id = rec.at("id").get<std::string>();
      t.path = rec.at("path").get<std::string>();
      if (t.path.is_relative()) t.path = manifest.parent_path() / t.path;
      t.duration_s = rec.value("duration", 0.0);
      if (!seen.insert(t.id).second) throw FormatError("duplicate noise id '" + t.id + "'");
      store.tracks_.push_back(std::move(t));
    } catch (const std::exception& e) {
      throw FormatError(where + ": " + e.what());
    }
  }
  return store;
}

ManifestNoiseStore::ManifestNoiseStore(ManifestNoiseStore&& other) noexcept
    : tracks_(std::move(other.tracks_)), loaded_(std::move(other.loaded_)) {}

AudioClip ManifestNoiseStore::Load(const std::string& id) {
  {
    std::lock_guard lock(mu_);
    if (auto it = loaded_.find(id); it != loaded_.end()) return it->second;
  }
  auto track = std::find_if(tracks_.begin(), tracks_.end(), [&](const NoiseTrack& t) { return t.id == id; });
  if (track == tracks_.end()) throw Error("noise track '" + id + "' is not in the pool manifest");
  AudioClip clip;
  try {
    clip = ReadWav(track->path);
  } catch (const std::exception& e) {
    throw Error("noise track '" + id + "' could not be loaded: " + e.what());
  }
  if (clip.sample_rate != kInterchangeSampleRate) clip = Resample(clip, kInterchangeSampleRate);
  std::lock_guard lock(mu_);
  return loaded_.emplace(id, std::move(clip)).first->second;
}

std::vector<std::string> ManifestNoiseStore::Ids() const {
  std::vector<std::string> ids;
  for (const auto& t : tracks_) ids.push_back(t.id);
  return ids;
}

AudioClip ApplyPlan(const AudioClip& clip, const NoisePlan& plan, NoiseStore& pool) {
  if (plan.snr_db.size() != plan.noise_ids.size()) {
    throw Error("apply_plan: plan has mismatched noise and SNR lists");
  }
  AudioClip current = ChangeSpeed(clip, plan.speed_factor);
  for (std::size_t i = 0; i < plan.noise_ids.size(); ++i) {
    const AudioClip noise = pool.Load(plan.noise_ids[i]);
    current = MixNoise(current, noise, plan.snr_db[i], plan.noise_ids[i]).audio;
  }
  return current;
}

}  // namespace augment
