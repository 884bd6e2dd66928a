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

#include "augment/grammar.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "augment/hash.h"

namespace augment {
namespace {

using Bindings = std::map<std::string, std::string>;

bool IsVariable(const std::string& value) { return !value.empty() && value[0] == '?'; }

bool IsIdentStart(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool IsIdentChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

bool IsValueChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '\'';
}

// Strips a trailing comment, ignoring '#' inside quoted terminals.
std::string_view StripComment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && quoted) {
      ++i;
    } else if (line[i] == '"') {
      quoted = !quoted;
    } else if (line[i] == '#' && !quoted) {
      return line.substr(0, i);
    }
  }
  return line;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

class LineScanner {
 public:
  LineScanner(std::string_view text, int line) : text_(text), line_(line) {}

  void SkipSpace() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool AtEnd() {
    SkipSpace();
    return pos_ >= text_.size();
  }
  char Peek() {
    SkipSpace();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }
  bool Consume(std::string_view token) {
    SkipSpace();
    if (text_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }
  [[noreturn]] void Fail(const std::string& message) const {
    throw GrammarError(line_, message);
  }

  std::string Identifier() {
    SkipSpace();
    if (pos_ >= text_.size() || !IsIdentStart(text_[pos_])) {
      Fail("expected a symbol name near '" + std::string(text_.substr(pos_)) + "'");
    }
    const std::size_t begin = pos_;
    while (pos_ < text_.size() && IsIdentChar(text_[pos_])) ++pos_;
    return std::string(text_.substr(begin, pos_ - begin));
  }

  // Immediately after an identifier, without intervening space.
  FeatureStruct OptionalFeatures() {
    FeatureStruct fs;
    if (pos_ >= text_.size() || text_[pos_] != '[') return fs;
    ++pos_;
    if (Consume("]")) return fs;
    while (true) {
      const std::string key = Identifier();
      if (!Consume("=")) Fail("expected '=' after feature '" + key + "'");
      SkipSpace();
      const std::size_t begin = pos_;
      if (pos_ < text_.size() && text_[pos_] == '?') ++pos_;
      while (pos_ < text_.size() && IsValueChar(text_[pos_])) ++pos_;
      std::string value(text_.substr(begin, pos_ - begin));
      if (value.empty() || value == "?") Fail("missing value for feature '" + key + "'");
      if (!fs.emplace(key, value).second) Fail("feature '" + key + "' given twice");
      if (Consume("]")) return fs;
      if (!Consume(",")) Fail("expected ',' or ']' in feature list");
    }
  }

  std::string Quoted() {
    SkipSpace();
    ++pos_;  // opening quote
    std::string out;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
      out.push_back(text_[pos_++]);
    }
    if (pos_ >= text_.size()) Fail("unterminated terminal string");
    ++pos_;
    return out;
  }

  double Weight() {
    SkipSpace();
    const std::size_t begin = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != '|') {
      ++pos_;
    }
    const std::string spelled(text_.substr(begin, pos_ - begin));
    double w = 0.0;
    try {
      std::size_t used = 0;
      w = std::stod(spelled, &used);
      if (used != spelled.size()) throw std::invalid_argument(spelled);
    } catch (const std::exception&) {
      Fail("invalid weight '@" + spelled + "'");
    }
    if (!(w > 0.0) || !std::isfinite(w)) Fail("weight must be positive, got '@" + spelled + "'");
    return w;
  }

 private:
  std::string_view text_;
  int line_;
  std::size_t pos_ = 0;
};

void ParseRuleLine(std::string_view text, int line, Grammar& g) {
  LineScanner scan(text, line);
  GrammarRule proto;
  proto.line = line;
  proto.lhs = scan.Identifier();
  proto.lhs_features = scan.OptionalFeatures();
  if (!scan.Consume("->")) scan.Fail("expected '->' after '" + proto.lhs + "'");

  GrammarRule rule = proto;
  auto finish_alternative = [&]() {
    if (rule.rhs.empty()) scan.Fail("empty alternative for '" + proto.lhs + "'");
    g.rules.push_back(std::move(rule));
    rule = proto;
  };
  bool weighted = false;
  while (true) {
    if (scan.AtEnd()) {
      finish_alternative();
      return;
    }
    const char c = scan.Peek();
    if (c == '|') {
      scan.Consume("|");
      finish_alternative();
      weighted = false;
    } else if (weighted) {
      scan.Fail("weight must end its alternative");
    } else if (c == '@') {
      scan.Consume("@");
      rule.weight = scan.Weight();
      weighted = true;
    } else if (c == '"') {
      GrammarSymbol sym;
      sym.terminal = true;
      sym.tokens = Tokenize(Normalize(scan.Quoted()));
      if (sym.tokens.empty()) scan.Fail("empty terminal string");
      rule.rhs.push_back(std::move(sym));
    } else {
      GrammarSymbol sym;
      sym.name = scan.Identifier();
      sym.constraint = scan.OptionalFeatures();
      rule.rhs.push_back(std::move(sym));
    }
  }
}

void ParseLexiconLine(std::string_view body, int line, Grammar& g) {
  LineScanner scan(body, line);
  const std::string name = scan.Identifier();
  if (!scan.Consume(":")) scan.Fail("expected ':' after lexicon name '" + name + "'");
  const std::size_t colon = body.find(':');
  std::vector<std::vector<std::string>> phrases;
  std::string_view rest = body.substr(colon + 1);
  while (true) {
    const std::size_t comma = rest.find(',');
    auto phrase = Tokenize(Normalize(Trim(rest.substr(0, comma))));
    if (phrase.empty()) scan.Fail("empty entry in lexicon '" + name + "'");
    phrases.push_back(std::move(phrase));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  if (!g.lexicons.emplace(name, std::move(phrases)).second) {
    scan.Fail("duplicate lexicon '" + name + "'");
  }
}

int ChildDepth(const Grammar& g, const GrammarRule& rule) {
  int depth = 0;
  for (const auto& sym : rule.rhs) {
    if (!sym.terminal) depth = std::max(depth, g.min_depth.at(sym.name));
  }
  return depth;
}

void Validate(Grammar& g, int start_line) {
  if (g.rules.empty()) throw GrammarError(0, "grammar has no rules");
  for (std::size_t i = 0; i < g.rules.size(); ++i) {
    const auto& r = g.rules[i];
    if (g.IsLexicon(r.lhs)) {
      throw GrammarError(r.line, "'" + r.lhs + "' is both a lexicon and a rule");
    }
    g.rules_by_lhs[r.lhs].push_back(i);
  }
  if (g.start.empty()) g.start = g.rules.front().lhs;
  if (!g.rules_by_lhs.contains(g.start)) {
    throw GrammarError(start_line, "start symbol '" + g.start + "' has no rules");
  }
  for (const auto& r : g.rules) {
    for (const auto& sym : r.rhs) {
      if (!sym.terminal && !g.rules_by_lhs.contains(sym.name) && !g.IsLexicon(sym.name)) {
        throw GrammarError(r.line, "undefined nonterminal '" + sym.name + "'");
      }
    }
  }

  // Fixpoint over "can finish a derivation"; min_depth doubles as the
  // productive set.
  for (const auto& [name, phrases] : g.lexicons) g.min_depth[name] = 1;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& r : g.rules) {
      int depth = 0;
      bool ready = true;
      for (const auto& sym : r.rhs) {
        if (sym.terminal) continue;
        auto it = g.min_depth.find(sym.name);
        if (it == g.min_depth.end()) {
          ready = false;
          break;
        }
        depth = std::max(depth, it->second);
      }
      if (!ready) continue;
      auto [it, inserted] = g.min_depth.emplace(r.lhs, depth + 1);
      if (inserted || depth + 1 < it->second) {
        it->second = depth + 1;
        changed = true;
      }
    }
  }
  for (const auto& [lhs, indices] : g.rules_by_lhs) {
    if (!g.min_depth.contains(lhs)) {
      throw GrammarError(g.rules[indices.front()].line,
                         "nonterminal '" + lhs +
                             "' cannot derive a terminal string (cycle without a "
                             "terminating production)");
    }
  }
}

bool BindLhs(const FeatureStruct& lhs, const FeatureStruct& constraint, Bindings& b) {
  for (const auto& [key, value] : lhs) {
    auto it = constraint.find(key);
    if (IsVariable(value)) {
      if (it == constraint.end()) continue;
      auto [bound, inserted] = b.emplace(value, it->second);
      if (!inserted && bound->second != it->second) return false;
    } else if (it != constraint.end() && it->second != value) {
      return false;
    }
  }
  return true;
}

FeatureStruct Resolve(const FeatureStruct& fs, const Bindings& b) {
  FeatureStruct out;
  for (const auto& [key, value] : fs) {
    if (!IsVariable(value)) {
      out.emplace(key, value);
    } else if (auto it = b.find(value); it != b.end()) {
      out.emplace(key, it->second);
    }
  }
  return out;
}

// Binds the variables of a rhs constraint from the child's synthesized features.
bool Absorb(const FeatureStruct& constraint, const FeatureStruct& child, Bindings& b) {
  for (const auto& [key, value] : constraint) {
    if (!IsVariable(value)) continue;
    auto it = child.find(key);
    if (it == child.end()) continue;
    auto [bound, inserted] = b.emplace(value, it->second);
    if (!inserted && bound->second != it->second) return false;
  }
  return true;
}

std::optional<FeatureStruct> Synthesize(const FeatureStruct& constraint,
                                        const GrammarRule& rule, const Bindings& b) {
  return Unify(constraint, Resolve(rule.lhs_features, b));
}

class Sampler {
 public:
  Sampler(const Grammar& g, Rng& rng, int max_depth) : g_(g), rng_(rng), max_depth_(max_depth) {}

  bool Expand(const std::string& name, const FeatureStruct& constraint, int depth,
              std::vector<std::string>& out, FeatureStruct& synthesized) {
    if (auto lex = g_.lexicons.find(name); lex != g_.lexicons.end()) {
      const auto& phrase = lex->second[rng_.UniformIndex(lex->second.size())];
      out.insert(out.end(), phrase.begin(), phrase.end());
      synthesized = constraint;
      return true;
    }
    std::vector<std::size_t> candidates;
    std::vector<double> weights;
    for (std::size_t idx : g_.rules_by_lhs.at(name)) {
      const auto& rule = g_.rules[idx];
      Bindings probe;
      if (depth + ChildDepth(g_, rule) > max_depth_) continue;
      if (!BindLhs(rule.lhs_features, constraint, probe)) continue;
      candidates.push_back(idx);
      weights.push_back(rule.weight);
    }
    if (candidates.empty()) return false;
    const auto& rule = g_.rules[candidates[rng_.Categorical(weights)]];

    Bindings b;
    BindLhs(rule.lhs_features, constraint, b);
    for (const auto& sym : rule.rhs) {
      if (sym.terminal) {
        out.insert(out.end(), sym.tokens.begin(), sym.tokens.end());
        continue;
      }
      FeatureStruct child;
      if (!Expand(sym.name, Resolve(sym.constraint, b), depth + 1, out, child)) return false;
      if (!Absorb(sym.constraint, child, b)) return false;
    }
    auto synth = Synthesize(constraint, rule, b);
    if (!synth) return false;
    synthesized = std::move(*synth);
    return true;
  }

 private:
  const Grammar& g_;
  Rng& rng_;
  int max_depth_;
};

// Memoized top-down recognizer over (symbol, constraint, span) returning the
// feature structures the symbol can synthesize over that span. Unit-rule
// cycles are resolved by iterating to a fixpoint.
class ChartParser {
 public:
  ChartParser(const Grammar& g, std::vector<std::string> tokens)
      : g_(g), tokens_(std::move(tokens)) {}

  bool Accepts() {
    if (tokens_.empty()) return false;
    iteration_ = 1;
    auto results = Parse(g_.start, {}, 0, tokens_.size());
    while (cycle_hit_ && changed_) {
      ++iteration_;
      cycle_hit_ = changed_ = false;
      results = Parse(g_.start, {}, 0, tokens_.size());
    }
    return !results.empty();
  }

 private:
  using ResultSet = std::set<FeatureStruct>;
  struct Entry {
    ResultSet results;
    int iteration = 0;
    bool in_progress = false;
  };

  ResultSet Parse(const std::string& name, const FeatureStruct& constraint, std::size_t i,
                  std::size_t j) {
    const std::string key = name + '\x1f' + ToString(constraint) + '\x1f' +
                            std::to_string(i) + ':' + std::to_string(j);
    Entry& entry = memo_[key];
    if (entry.iteration == iteration_) {
      if (entry.in_progress) cycle_hit_ = true;
      return entry.results;
    }
    entry.iteration = iteration_;
    entry.in_progress = true;
    ResultSet fresh = entry.results;

    if (auto lex = g_.lexicons.find(name); lex != g_.lexicons.end()) {
      for (const auto& phrase : lex->second) {
        if (phrase.size() == j - i && std::equal(phrase.begin(), phrase.end(), tokens_.begin() + i)) {
          fresh.insert(constraint);
          break;
        }
      }
    } else {
      for (std::size_t idx : g_.rules_by_lhs.at(name)) {
        const auto& rule = g_.rules[idx];
        Bindings b;
        if (!BindLhs(rule.lhs_features, constraint, b)) continue;
        std::vector<Bindings> finals;
        MatchRhs(rule, 0, i, j, b, finals);
        for (const auto& fb : finals) {
          if (auto synth = Synthesize(constraint, rule, fb)) fresh.insert(std::move(*synth));
        }
      }
    }

    Entry& done = memo_[key];
    if (fresh.size() != done.results.size()) {
      changed_ = true;
      done.results = std::move(fresh);
    }
    done.in_progress = false;
    return done.results;
  }

  void MatchRhs(const GrammarRule& rule, std::size_t pos, std::size_t m, std::size_t j,
                const Bindings& b, std::vector<Bindings>& out) {
    if (pos == rule.rhs.size()) {
      if (m == j) out.push_back(b);
      return;
    }
    // Every remaining symbol covers at least one token.
    const std::size_t reserve = rule.rhs.size() - pos - 1;
    const auto& sym = rule.rhs[pos];
    if (sym.terminal) {
      const std::size_t len = sym.tokens.size();
      if (m + len + reserve > j) return;
      if (!std::equal(sym.tokens.begin(), sym.tokens.end(), tokens_.begin() + m)) return;
      MatchRhs(rule, pos + 1, m + len, j, b, out);
      return;
    }
    if (m + 1 + reserve > j) return;
    const FeatureStruct child_constraint = Resolve(sym.constraint, b);
    const std::size_t last_end = pos + 1 == rule.rhs.size() ? j : j - reserve;
    const std::size_t first_end = pos + 1 == rule.rhs.size() ? j : m + 1;
    for (std::size_t e = first_end; e <= last_end; ++e) {
      for (const auto& child : Parse(sym.name, child_constraint, m, e)) {
        Bindings next = b;
        if (Absorb(sym.constraint, child, next)) MatchRhs(rule, pos + 1, e, j, next, out);
      }
    }
  }

  const Grammar& g_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, Entry> memo_;
  int iteration_ = 0;
  bool changed_ = false;
  bool cycle_hit_ = false;
};

}  // namespace

GrammarError::GrammarError(int line, const std::string& message)
    : FormatError(line > 0 ? "grammar line " + std::to_string(line) + ": " + message
                           : "grammar: " + message),
      line_(line) {}

std::optional<FeatureStruct> Unify(const FeatureStruct& a, const FeatureStruct& b) {
  FeatureStruct out = a;
  for (const auto& [key, value] : b) {
    auto [it, inserted] = out.emplace(key, value);
    if (!inserted && it->second != value) return std::nullopt;
  }
  return out;
}

std::string ToString(const FeatureStruct& fs) {
  std::string out = "[";
  for (const auto& [key, value] : fs) {
    if (out.size() > 1) out += ',';
    out += key + '=' + value;
  }
  return out + ']';
}

Grammar ParseGrammar(std::string_view source) {
  Grammar g;
  int line_no = 0;
  int start_line = 0;
  std::size_t begin = 0;
  while (begin <= source.size()) {
    std::size_t end = source.find('\n', begin);
    if (end == std::string_view::npos) end = source.size();
    ++line_no;
    const std::string_view line = Trim(StripComment(source.substr(begin, end - begin)));
    begin = end + 1;
    if (line.empty()) continue;
    if (line.starts_with("@start")) {
      LineScanner scan(line.substr(6), line_no);
      if (!g.start.empty()) scan.Fail("start symbol declared twice");
      g.start = scan.Identifier();
      if (!scan.AtEnd()) scan.Fail("unexpected text after start symbol");
      start_line = line_no;
    } else if (line.starts_with("@lexicon")) {
      ParseLexiconLine(line.substr(8), line_no, g);
    } else if (line.front() == '@') {
      throw GrammarError(line_no, "unknown directive '" + std::string(line) + "'");
    } else {
      ParseRuleLine(line, line_no, g);
    }
  }
  Validate(g, start_line);
  return g;
}

Grammar LoadGrammar(const std::string& path) {
  try {
    return ParseGrammar(ReadFileBytes(path));
  } catch (const GrammarError& e) {
    throw GrammarError(e.line(), std::string(e.what()) + " (in " + path + ")");
  }
}

std::optional<std::vector<std::string>> SampleDerivation(const Grammar& g, Rng& rng,
                                                         int max_depth) {
  if (max_depth < 1) throw Error("max_depth must be at least 1");
  Sampler sampler(g, rng, max_depth);
  std::vector<std::string> tokens;
  FeatureStruct synthesized;
  if (!sampler.Expand(g.start, {}, 1, tokens, synthesized)) return std::nullopt;
  return tokens;
}

SampleResult SampleUtterances(const Grammar& g, std::size_t n, std::uint64_t seed,
                              int max_depth, const SampleOptions& options) {
  const std::size_t budget = options.attempt_budget > 0 ? options.attempt_budget : 50 * n;
  Rng rng(seed);
  SampleResult result;
  std::unordered_set<std::string> seen;
  while (result.corpus.size() < n && result.attempts < budget) {
    ++result.attempts;
    auto tokens = SampleDerivation(g, rng, max_depth);
    if (!tokens) {
      ++result.failed_derivations;
      continue;
    }
    std::string text = Normalize(JoinTokens(*tokens));
    if (!seen.insert(text).second) continue;
    Utterance u;
    u.id = "grammar:" + std::to_string(result.corpus.size());
    u.text = std::move(text);
    u.source = Source::kGrammar;
    result.corpus.push_back(std::move(u));
  }
  result.shortfall = n - result.corpus.size();
  return result;
}

bool Membership(const Grammar& g, std::string_view text) {
  ChartParser parser(g, Tokenize(Normalize(text)));
  return parser.Accepts();
}

}  // namespace augment
