#include "protocheck/predicate.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <httplib.h>
#include <openssl/evp.h>

#include <json.hpp>

#include "protocheck/errors.hpp"

namespace protocheck {

using nlohmann::json;

DetectResult detect(std::span<const Utterance> window, std::string_view action,
                    const PredicateBackend& backend) {
  for (std::size_t i = 0; i < window.size(); ++i) {
    bool holds = false;
    try {
      holds = backend.evaluate(window[i].text, action);
    } catch (const PredicateError&) {
      throw;
    } catch (const std::exception& e) {
      throw PredicateError(i, std::string(action), e.what());
    }
    if (holds) return {true, i};
  }
  return {};
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

LexiconBackend::LexiconBackend(Lexicon lexicon) : lexicon_(std::move(lexicon)) {
  for (auto& [label, patterns] : lexicon_) {
    if (patterns.empty()) throw ValidationError("lexicon label '" + label + "' has no patterns");
    for (auto& p : patterns) {
      p = lower(p);
      std::string_view core = p;
      if (!core.empty() && core.front() == '^') core.remove_prefix(1);
      if (!core.empty() && core.back() == '$') core.remove_suffix(1);
      if (core.empty()) throw ValidationError("lexicon label '" + label + "' has an empty pattern");
    }
  }
}

bool LexiconBackend::pattern_matches(std::string_view pattern, std::string_view text) {
  bool at_start = false, at_end = false;
  if (!pattern.empty() && pattern.front() == '^') {
    at_start = true;
    pattern.remove_prefix(1);
  }
  if (!pattern.empty() && pattern.back() == '$') {
    at_end = true;
    pattern.remove_suffix(1);
  }
  const std::string hay = lower(trim(text));
  const std::string needle = lower(pattern);
  if (at_start && at_end) return hay == needle;
  if (at_start) return hay.compare(0, needle.size(), needle) == 0;
  if (at_end) {
    return hay.size() >= needle.size() && hay.compare(hay.size() - needle.size(), needle.size(), needle) == 0;
  }
  return hay.find(needle) != std::string::npos;
}

bool LexiconBackend::evaluate(std::string_view utterance_text, std::string_view action) const {
  auto it = lexicon_.find(action);
  if (it == lexicon_.end()) throw BackendError("lexicon has no label '" + std::string(action) + "'");
  return std::any_of(it->second.begin(), it->second.end(),
                     [&](const std::string& p) { return pattern_matches(p, utterance_text); });
}

bool LexiconBackend::resolves(std::string_view action) const { return lexicon_.find(action) != lexicon_.end(); }

LexiconBackend::Lexicon parse_lexicon(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(0, 0, std::string("lexicon: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("lexicon must be a JSON object");
  LexiconBackend::Lexicon lexicon;
  for (const auto& [label, patterns] : doc.items()) {
    if (!patterns.is_array()) throw ValidationError("lexicon label '" + label + "' must map to an array");
    auto& out = lexicon[label];
    for (const auto& p : patterns) {
      if (!p.is_string()) throw ValidationError("lexicon label '" + label + "' has a non-string pattern");
      out.push_back(p.get<std::string>());
    }
  }
  return lexicon;
}

std::string serialize_lexicon(const LexiconBackend::Lexicon& lexicon) {
  json doc = json::object();
  for (const auto& [label, patterns] : lexicon) doc[label] = patterns;
  return doc.dump(2) + "\n";
}

LexiconBackend::Lexicon builtin_lexicon() {
  return {
      {"ask address",
       {"what is the address", "what's the address", "what is your address", "what's your address",
        "where are you located", "address of the emergency"}},
      {"provide full name / phone number", {"my full name is", "my phone number is"}},
      {"provides name / phone", {"you can call me", "callback number is"}},
      {"follows up on name / phone",
       {"can you spell that", "let me confirm that number", "is that the best number"}},
      {"scene safety info obtained", {"is the scene safe", "are you in a safe place", "the scene is safe"}},
      {"warn caller not to use energized equipment",
       {"do not turn on any lights", "don't use anything electrical", "do not flip any switches"}},
      {"instructs cpr: position patient", {"lay them flat on their back", "get them onto their back"}},
      {"instructs cpr: hand placement", {"heel of your hand", "center of the chest"}},
      {"instructs cpr: push hard and fast", {"push hard and fast", "push down two inches"}},
      {"ask for vehicle description", {"license plate", "what color is the vehicle", "make and model"}},
      {"warn caller not to move hazard", {"do not try to move it", "leave it where it is"}},
      {"ask for patient demographics", {"how old is the patient", "is the patient male or female"}},
  };
}

bool parse_model_reply(std::string_view reply) {
  std::string r = lower(trim(reply));
  if (!r.empty() && (r.back() == '.' || r.back() == '!')) r.pop_back();
  if (r == "yes" || r == "true" || r == "affirmative") return true;
  if (r == "no" || r == "false" || r == "negative") return false;
  throw BackendError("unrecognized model reply '" + std::string(reply) + "'");
}

std::string render_prompt(std::string_view prompt_template, std::string_view action,
                          std::string_view utterance) {
  std::string out;
  std::size_t pos = 0;
  while (pos < prompt_template.size()) {
    if (prompt_template.compare(pos, 8, "{action}") == 0) {
      out += action;
      pos += 8;
    } else if (prompt_template.compare(pos, 11, "{utterance}") == 0) {
      out += utterance;
      pos += 11;
    } else {
      out += prompt_template[pos++];
    }
  }
  return out;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

namespace {

constexpr const char* kCacheFile = "predicate_cache.jsonl";

}  // namespace

PredicateCache::PredicateCache(std::string directory) : directory_(std::move(directory)) {
  namespace fs = std::filesystem;
  fs::create_directories(directory_);
  std::ifstream in(fs::path(directory_) / kCacheFile);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      entries_[j.at("key").get<std::string>()] = j.at("holds").get<bool>();
    } catch (const json::exception&) {
      // A torn final line from an interrupted run is skipped; the entry is
      // simply recomputed.
    }
  }
}

std::string PredicateCache::key(std::string_view prompt_template, std::string_view action,
                                std::string_view utterance) {
  // Length-prefixed so that field boundaries cannot be shifted.
  std::string material;
  for (std::string_view part : {prompt_template, action, utterance}) {
    material += std::to_string(part.size());
    material += ':';
    material += part;
  }
  return sha256_hex(material);
}

std::optional<bool> PredicateCache::find(const std::string& key) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void PredicateCache::store(const std::string& key, std::string_view action, std::string_view utterance,
                           bool holds) {
  std::lock_guard lock(mutex_);
  if (!entries_.emplace(key, holds).second) return;
  if (directory_.empty()) return;
  std::ofstream out(std::filesystem::path(directory_) / kCacheFile, std::ios::app);
  json j = {{"key", key}, {"action", action}, {"utterance", utterance}, {"holds", holds}};
  out << j.dump() << '\n';
}

std::size_t PredicateCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

Transport http_transport(const std::string& endpoint, std::chrono::milliseconds timeout) {
  // Split "http://host:port/path" into the client base and request path.
  const auto scheme_end = endpoint.find("://");
  const auto path_start = endpoint.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string base = path_start == std::string::npos ? endpoint : endpoint.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : endpoint.substr(path_start);
  return [base, path, timeout](const std::string& prompt) -> std::string {
    httplib::Client client(base);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    const json body = {{"prompt", prompt}};
    auto res = client.Post(path, body.dump(), "application/json");
    if (!res) throw BackendError("predicate endpoint unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200) throw BackendError("predicate endpoint returned HTTP " + std::to_string(res->status));
    try {
      return json::parse(res->body).at("text").get<std::string>();
    } catch (const json::exception& e) {
      throw BackendError(std::string("malformed predicate response: ") + e.what());
    }
  };
}

ExternalModelConfig ExternalModelConfig::from_environment() {
  ExternalModelConfig config;
  const char* endpoint = std::getenv("PREDICATE_ENDPOINT");
  if (endpoint == nullptr || *endpoint == '\0') {
    throw ValidationError("external backend requires PREDICATE_ENDPOINT");
  }
  config.endpoint = endpoint;
  if (const char* t = std::getenv("PREDICATE_TIMEOUT_MS"); t != nullptr && *t != '\0') {
    char* end = nullptr;
    const long ms = std::strtol(t, &end, 10);
    if (*end != '\0' || ms <= 0) throw ValidationError("PREDICATE_TIMEOUT_MS must be a positive integer");
    config.timeout = std::chrono::milliseconds(ms);
  }
  if (const char* dir = std::getenv("PREDICATE_CACHE_DIR"); dir != nullptr && *dir != '\0') {
    config.cache_directory = dir;
  }
  return config;
}

ExternalModelBackend::ExternalModelBackend(ExternalModelConfig config)
    : ExternalModelBackend(config, http_transport(config.endpoint, config.timeout)) {}

ExternalModelBackend::ExternalModelBackend(ExternalModelConfig config, Transport transport)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      cache_(config_.cache_directory ? std::make_unique<PredicateCache>(*config_.cache_directory)
                                     : std::make_unique<PredicateCache>()) {}

bool ExternalModelBackend::evaluate(std::string_view utterance_text, std::string_view action) const {
  const std::string key = PredicateCache::key(config_.prompt_template, action, utterance_text);
  if (auto hit = cache_->find(key)) return *hit;

  std::shared_ptr<std::mutex> key_lock;
  {
    std::lock_guard lock(inflight_mutex_);
    auto& slot = key_locks_[key];
    if (!slot) slot = std::make_shared<std::mutex>();
    key_lock = slot;
  }
  std::lock_guard per_key(*key_lock);
  if (auto hit = cache_->find(key)) return *hit;

  {
    std::lock_guard lock(inflight_mutex_);
    ++calls_;
  }
  const std::string reply = transport_(render_prompt(config_.prompt_template, action, utterance_text));
  const bool holds = parse_model_reply(reply);
  cache_->store(key, action, utterance_text, holds);
  return holds;
}

std::size_t ExternalModelBackend::transport_calls() const {
  std::lock_guard lock(inflight_mutex_);
  return calls_;
}

LinkedSet link_requirements(spec::RequirementSet set, std::shared_ptr<const PredicateBackend> backend) {
  if (!backend) throw ValidationError("link_requirements needs a backend");
  std::set<std::string> missing;
  for (const auto& r : set.requirements) {
    for (const auto& a : spec::actions(r.formula)) {
      if (!backend->resolves(a)) missing.insert(a);
    }
  }
  if (!missing.empty()) throw LinkError({missing.begin(), missing.end()});
  return LinkedSet(std::move(set), std::move(backend));
}

}  // namespace protocheck
