#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "xlstance/common.hpp"

namespace xlstance {

class TranslationBackend {
public:
    virtual ~TranslationBackend() = default;
    virtual const std::string& name() const = 0;
    virtual bool supports(const std::string& src, const std::string& dst) const = 0;
    // Raw engine call, no cache involved. Throws TranslationError.
    virtual std::string translate_raw(const std::string& text, const std::string& src,
                                      const std::string& dst) = 0;
};

// Checks preconditions, delegates to the backend, and rejects empty
// results. Cache-backed backends do their lookup inside translate_raw,
// so this is the single entry point for all callers.
std::string translate(TranslationBackend& backend, const std::string& text,
                      const std::string& src, const std::string& dst);

// base -> pivot -> base. Callers record both hops in provenance.
std::string round_trip(TranslationBackend& backend, const std::string& text,
                       const std::string& pivot, const std::string& base);

// Translates texts[i] -> out[i] with at most `jobs` concurrent backend
// calls. Output order matches input order regardless of completion order.
std::vector<std::string> translate_many(TranslationBackend& backend,
                                        const std::vector<std::string>& texts,
                                        const std::string& src, const std::string& dst,
                                        unsigned jobs = 1);

// --- deterministic offline mock -------------------------------------------

struct MockNoiseConfig {
    double dropout_prob = 0.10;
    double swap_prob = 0.05;
    double duplicate_prob = 0.03;

    void validate() const;
};

// Tokenwise left-to-right noise pass, seeded by hash(seed, pair, text);
// the language pair acts as the salt, so different pivots perturb
// differently. At least one token always survives. The exact process is
// documented in docs/formats.md and is a replay-stable contract.
std::string mock_translate(const std::string& text, const std::string& src,
                           const std::string& dst, std::uint64_t seed,
                           const MockNoiseConfig& cfg);

class MockBackend : public TranslationBackend {
public:
    // Empty pair set means every pair is supported.
    explicit MockBackend(std::uint64_t seed = 0, MockNoiseConfig cfg = {},
                         std::set<std::pair<std::string, std::string>> pairs = {});

    const std::string& name() const override { return name_; }
    bool supports(const std::string& src, const std::string& dst) const override;
    std::string translate_raw(const std::string& text, const std::string& src,
                              const std::string& dst) override;

private:
    std::string name_ = "mock";
    std::uint64_t seed_;
    MockNoiseConfig cfg_;
    std::set<std::pair<std::string, std::string>> pairs_;
};

// Fixed lookup table; used for recorded translations in tests.
class FixtureBackend : public TranslationBackend {
public:
    explicit FixtureBackend(std::string name = "fixture") : name_(std::move(name)) {}
    void record(const std::string& src, const std::string& dst, const std::string& text,
                const std::string& translation);
    const std::string& name() const override { return name_; }
    bool supports(const std::string& src, const std::string& dst) const override;
    std::string translate_raw(const std::string& text, const std::string& src,
                              const std::string& dst) override;

private:
    std::string name_;
    std::map<std::string, std::string> table_;  // key: src|dst|digest
    std::set<std::pair<std::string, std::string>> pairs_;
};

// --- persistent cache -------------------------------------------------------

struct CacheEntry {
    std::string source_lang;
    std::string target_lang;
    std::uint64_t text_digest = 0;
    std::string source_text;
    std::string translated_text;
    std::string backend_name;
    std::int64_t timestamp = 0;
};

// Append-only JSONL store. Concurrent readers, serialized writer; a put
// is atomic at line granularity. Corrupt lines are skipped with a warning
// at load time, never an abort.
class TranslationCache {
public:
    // Empty path keeps the cache in memory only.
    explicit TranslationCache(std::string path);

    static std::uint64_t digest(std::string_view text) { return fnv1a64(text); }

    std::optional<CacheEntry> get(const std::string& src, const std::string& dst,
                                  std::uint64_t text_digest, const std::string& backend) const;
    void put(const CacheEntry& entry);

    std::size_t size() const;
    std::size_t corrupt_lines_skipped() const { return corrupt_; }
    const std::string& path() const { return path_; }

private:
    static std::string key(const std::string& src, const std::string& dst,
                           std::uint64_t digest, const std::string& backend);
    void load();

    std::string path_;
    std::map<std::string, CacheEntry> entries_;
    std::size_t corrupt_ = 0;
    mutable std::shared_mutex mutex_;
};

// Wraps any backend with a TranslationCache. Same name as the inner
// backend, so cache keys stay tied to the engine that produced them.
class CachedBackend : public TranslationBackend {
public:
    CachedBackend(TranslationBackend& inner, TranslationCache& cache)
        : inner_(inner), cache_(cache) {}

    const std::string& name() const override { return inner_.name(); }
    bool supports(const std::string& src, const std::string& dst) const override {
        return inner_.supports(src, dst);
    }
    std::string translate_raw(const std::string& text, const std::string& src,
                              const std::string& dst) override;

    std::size_t hits() const { return hits_.load(); }
    std::size_t misses() const { return misses_.load(); }

private:
    TranslationBackend& inner_;
    TranslationCache& cache_;
    std::atomic<std::size_t> hits_{0};
    std::atomic<std::size_t> misses_{0};
};

// --- live HTTP client --------------------------------------------------------

// Google-translate-shaped REST client (docs/formats.md has the request
// and response mapping). The repo never requires it: everything runs on
// the mock. Retries transport failures with exponential backoff; a 429
// after the last attempt surfaces as rate_limited so callers can resume
// from cache.
struct HttpBackendConfig {
    std::string endpoint;            // e.g. "http://localhost:8080"
    std::string api_key;             // resolved from config or environment
    std::string path = "/translate";
    std::set<std::pair<std::string, std::string>> pairs;  // empty = all pairs
    int attempts = 3;
    int backoff_initial_ms = 1000;   // doubles per retry
    int timeout_s = 10;
};

class HttpBackend : public TranslationBackend {
public:
    explicit HttpBackend(HttpBackendConfig cfg);
    const std::string& name() const override { return name_; }
    bool supports(const std::string& src, const std::string& dst) const override;
    std::string translate_raw(const std::string& text, const std::string& src,
                              const std::string& dst) override;

private:
    std::string name_ = "http";
    HttpBackendConfig cfg_;
};

}  // namespace xlstance
