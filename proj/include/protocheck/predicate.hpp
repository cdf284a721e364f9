#pragma once

// Atomic DETECT predicate: does some utterance of a window exhibit an action?
// Backends decide one utterance at a time and never see surrounding turns.

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "protocheck/specdsl.hpp"
#include "protocheck/trace.hpp"

namespace protocheck {

class PredicateBackend {
 public:
  virtual ~PredicateBackend() = default;

  // Must be deterministic for identical arguments and safe to call
  // concurrently. Throws BackendError when no boolean can be produced.
  virtual bool evaluate(std::string_view utterance_text, std::string_view action) const = 0;

  // Whether `action` is a label this backend knows how to decide.
  virtual bool resolves(std::string_view action) const = 0;
};

struct DetectResult {
  bool holds = false;
  std::optional<std::size_t> witness;  // position within the evaluated window

  bool operator==(const DetectResult&) const = default;
};

// Holds iff some utterance satisfies the action; the witness is the first.
// Backend failures surface as PredicateError carrying the window position.
DetectResult detect(std::span<const Utterance> window, std::string_view action,
                    const PredicateBackend& backend);

// Case-insensitive pattern matcher. A pattern is a literal substring; a
// leading '^' anchors it to the start of the (trimmed) utterance and a
// trailing '$' to the end.
class LexiconBackend final : public PredicateBackend {
 public:
  using Lexicon = std::map<std::string, std::vector<std::string>, std::less<>>;

  LexiconBackend() = default;
  explicit LexiconBackend(Lexicon lexicon);

  bool evaluate(std::string_view utterance_text, std::string_view action) const override;
  bool resolves(std::string_view action) const override;

  const Lexicon& lexicon() const noexcept { return lexicon_; }

  // True iff `text` matches `pattern` under the rules above.
  static bool pattern_matches(std::string_view pattern, std::string_view text);

 private:
  Lexicon lexicon_;
};

// JSON object mapping action label -> array of patterns.
LexiconBackend::Lexicon parse_lexicon(std::string_view json_text);
std::string serialize_lexicon(const LexiconBackend::Lexicon& lexicon);

// Patterns for every label the built-in templates use.
LexiconBackend::Lexicon builtin_lexicon();

// Accepts yes/true/affirmative and no/false/negative after trimming and
// lowercasing (one trailing '.' or '!' tolerated). Anything else throws
// BackendError.
bool parse_model_reply(std::string_view reply);

// Fills {action} and {utterance} placeholders.
std::string render_prompt(std::string_view prompt_template, std::string_view action,
                          std::string_view utterance);

std::string sha256_hex(std::string_view data);

// Content-addressed store of predicate outcomes, optionally persisted as an
// append-only JSON-lines file inside `directory`.
class PredicateCache {
 public:
  PredicateCache() = default;
  explicit PredicateCache(std::string directory);

  static std::string key(std::string_view prompt_template, std::string_view action,
                         std::string_view utterance);

  std::optional<bool> find(const std::string& key) const;
  void store(const std::string& key, std::string_view action, std::string_view utterance, bool holds);
  std::size_t size() const;
  const std::string& directory() const noexcept { return directory_; }

 private:
  mutable std::mutex mutex_;
  std::string directory_;
  std::unordered_map<std::string, bool> entries_;
};

// Sends a prompt, returns the model's raw reply text.
using Transport = std::function<std::string(const std::string& prompt)>;

// POST {"prompt": ...} to `endpoint`, expect {"text": ...}.
Transport http_transport(const std::string& endpoint, std::chrono::milliseconds timeout);

struct ExternalModelConfig {
  std::string endpoint;
  std::string prompt_template =
      "Does the following utterance from an emergency call perform the action \"{action}\"? "
      "Answer yes or no.\nUtterance: \"{utterance}\"";
  std::chrono::milliseconds timeout{10000};
  std::optional<std::string> cache_directory;

  // Reads PREDICATE_ENDPOINT (required), PREDICATE_TIMEOUT_MS and
  // PREDICATE_CACHE_DIR. Throws ValidationError when the endpoint is unset.
  static ExternalModelConfig from_environment();
};

// Language-model-backed predicate. Identical (template, action, utterance)
// triples reach the transport at most once per cache lifetime, even under
// concurrent callers.
class ExternalModelBackend final : public PredicateBackend {
 public:
  explicit ExternalModelBackend(ExternalModelConfig config);
  ExternalModelBackend(ExternalModelConfig config, Transport transport);

  bool evaluate(std::string_view utterance_text, std::string_view action) const override;
  bool resolves(std::string_view) const override { return true; }

  std::size_t transport_calls() const;
  const PredicateCache& cache() const noexcept { return *cache_; }

 private:
  ExternalModelConfig config_;
  Transport transport_;
  std::unique_ptr<PredicateCache> cache_;
  mutable std::mutex inflight_mutex_;
  mutable std::map<std::string, std::shared_ptr<std::mutex>> key_locks_;
  mutable std::size_t calls_ = 0;
};

// A requirement set whose action labels have all been checked against a
// backend.
class LinkedSet {
 public:
  const spec::RequirementSet& requirements() const noexcept { return set_; }
  const PredicateBackend& backend() const noexcept { return *backend_; }
  std::shared_ptr<const PredicateBackend> backend_ptr() const noexcept { return backend_; }

 private:
  friend LinkedSet link_requirements(spec::RequirementSet set,
                                     std::shared_ptr<const PredicateBackend> backend);
  LinkedSet(spec::RequirementSet set, std::shared_ptr<const PredicateBackend> backend)
      : set_(std::move(set)), backend_(std::move(backend)) {}

  spec::RequirementSet set_;
  std::shared_ptr<const PredicateBackend> backend_;
};

// Throws LinkError listing every unresolvable label.
LinkedSet link_requirements(spec::RequirementSet set, std::shared_ptr<const PredicateBackend> backend);

}  // namespace protocheck
