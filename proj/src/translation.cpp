#include "xlstance/translation.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <thread>

#include <json.hpp>

namespace xlstance {

using nlohmann::json;

std::string translate(TranslationBackend& backend, const std::string& text,
                      const std::string& src, const std::string& dst) {
    if (text.empty()) throw std::invalid_argument("translate: text must be non-empty");
    if (!backend.supports(src, dst))
        throw TranslationError(TranslationErrorKind::unsupported_pair,
                               "pair " + src + "->" + dst + " unsupported by backend '" +
                                   backend.name() + "'");
    std::string out = backend.translate_raw(text, src, dst);
    if (out.empty())
        throw TranslationError(TranslationErrorKind::empty_result,
                               "backend '" + backend.name() + "' returned an empty translation for pair " +
                                   src + "->" + dst);
    return out;
}

std::string round_trip(TranslationBackend& backend, const std::string& text,
                       const std::string& pivot, const std::string& base) {
    return translate(backend, translate(backend, text, base, pivot), pivot, base);
}

std::vector<std::string> translate_many(TranslationBackend& backend,
                                        const std::vector<std::string>& texts,
                                        const std::string& src, const std::string& dst,
                                        unsigned jobs) {
    std::vector<std::string> out(texts.size());
    if (texts.empty()) return out;
    if (jobs <= 1 || texts.size() == 1) {
        for (std::size_t i = 0; i < texts.size(); ++i) out[i] = translate(backend, texts[i], src, dst);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto worker = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= texts.size()) return;
            try {
                out[i] = translate(backend, texts[i], src, dst);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned n = std::min<std::size_t>(jobs, texts.size());
    pool.reserve(n);
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

// --- mock -------------------------------------------------------------------

void MockNoiseConfig::validate() const {
    for (double p : {dropout_prob, swap_prob, duplicate_prob})
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("mock noise probabilities must lie in [0, 1]");
}

std::string mock_translate(const std::string& text, const std::string& src,
                           const std::string& dst, std::uint64_t seed,
                           const MockNoiseConfig& cfg) {
    cfg.validate();

    std::uint64_t h = fnv1a64(text);
    h = hash_combine(h, fnv1a64(src));
    h = hash_combine(h, fnv1a64(dst));
    h = hash_combine(h, seed);
    std::mt19937_64 gen(h);

    std::vector<std::string> tokens;
    {
        std::size_t i = 0;
        while (i < text.size()) {
            while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
            std::size_t start = i;
            while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
            if (i > start) tokens.push_back(text.substr(start, i - start));
        }
    }
    if (tokens.empty()) return text;

    std::vector<std::string> out;
    out.reserve(tokens.size() + 2);
    bool mutated = false;
    std::size_t i = 0;
    while (i < tokens.size()) {
        const bool last = (i + 1 == tokens.size());
        const bool can_drop = !(out.empty() && last);  // >= 1 token must survive
        const double u_drop = uniform01(gen);
        if (u_drop < cfg.dropout_prob && can_drop) {
            mutated = true;
            ++i;
            continue;
        }
        if (!last) {
            const double u_swap = uniform01(gen);
            if (u_swap < cfg.swap_prob) {
                out.push_back(tokens[i + 1]);
                out.push_back(tokens[i]);
                mutated = true;
                i += 2;
                continue;
            }
        }
        const double u_dup = uniform01(gen);
        out.push_back(tokens[i]);
        if (u_dup < cfg.duplicate_prob) {
            out.push_back(tokens[i]);
            mutated = true;
        }
        ++i;
    }

    if (!mutated) return text;
    std::string joined;
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (k) joined.push_back(' ');
        joined += out[k];
    }
    return joined;
}

MockBackend::MockBackend(std::uint64_t seed, MockNoiseConfig cfg,
                         std::set<std::pair<std::string, std::string>> pairs)
    : seed_(seed), cfg_(cfg), pairs_(std::move(pairs)) {
    cfg_.validate();
}

bool MockBackend::supports(const std::string& src, const std::string& dst) const {
    if (pairs_.empty()) return true;
    if (src == dst) return true;
    return pairs_.count({src, dst}) > 0;
}

std::string MockBackend::translate_raw(const std::string& text, const std::string& src,
                                       const std::string& dst) {
    if (src == dst) return text;
    return mock_translate(text, src, dst, seed_, cfg_);
}

// --- fixtures ----------------------------------------------------------------

namespace {

std::string fixture_key(const std::string& src, const std::string& dst, const std::string& text) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(text)));
    return src + "|" + dst + "|" + buf;
}

}  // namespace

void FixtureBackend::record(const std::string& src, const std::string& dst,
                            const std::string& text, const std::string& translation) {
    table_[fixture_key(src, dst, text)] = translation;
    pairs_.insert({src, dst});
}

bool FixtureBackend::supports(const std::string& src, const std::string& dst) const {
    return src == dst || pairs_.count({src, dst}) > 0;
}

std::string FixtureBackend::translate_raw(const std::string& text, const std::string& src,
                                          const std::string& dst) {
    if (src == dst) return text;
    auto it = table_.find(fixture_key(src, dst, text));
    if (it == table_.end())
        throw TranslationError(TranslationErrorKind::transport,
                               "fixture backend has no recording for this text (" + src + "->" + dst + ")");
    return it->second;
}

// --- cache -------------------------------------------------------------------

std::string TranslationCache::key(const std::string& src, const std::string& dst,
                                  std::uint64_t digest, const std::string& backend) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
    return src + "|" + dst + "|" + buf + "|" + backend;
}

TranslationCache::TranslationCache(std::string path) : path_(std::move(path)) {
    if (!path_.empty()) load();
}

void TranslationCache::load() {
    std::ifstream in(path_, std::ios::binary);
    if (!in) return;  // nothing cached yet
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json rec = json::parse(line);
            CacheEntry e;
            e.source_lang = rec.at("src").get<std::string>();
            e.target_lang = rec.at("dst").get<std::string>();
            e.text_digest = rec.at("digest").get<std::uint64_t>();
            e.source_text = rec.at("source_text").get<std::string>();
            e.translated_text = rec.at("translated_text").get<std::string>();
            e.backend_name = rec.at("backend").get<std::string>();
            e.timestamp = rec.value("timestamp", std::int64_t{0});
            entries_.emplace(key(e.source_lang, e.target_lang, e.text_digest, e.backend_name),
                             std::move(e));
        } catch (const json::exception&) {
            ++corrupt_;
            std::cerr << "warning: skipping corrupt cache line " << line_no << " in " << path_
                      << "\n";
        }
    }
}

std::optional<CacheEntry> TranslationCache::get(const std::string& src, const std::string& dst,
                                                std::uint64_t text_digest,
                                                const std::string& backend) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(key(src, dst, text_digest, backend));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void TranslationCache::put(const CacheEntry& entry) {
    std::unique_lock lock(mutex_);
    auto [it, inserted] = entries_.emplace(
        key(entry.source_lang, entry.target_lang, entry.text_digest, entry.backend_name), entry);
    if (!inserted) return;  // duplicate key: no-op
    if (path_.empty()) return;
    json rec = {{"src", entry.source_lang},
                {"dst", entry.target_lang},
                {"digest", entry.text_digest},
                {"source_text", entry.source_text},
                {"translated_text", entry.translated_text},
                {"backend", entry.backend_name},
                {"timestamp", entry.timestamp}};
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    out << rec.dump() << '\n';
    out.flush();
}

std::size_t TranslationCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

std::string CachedBackend::translate_raw(const std::string& text, const std::string& src,
                                         const std::string& dst) {
    const std::uint64_t digest = TranslationCache::digest(text);
    if (auto hit = cache_.get(src, dst, digest, inner_.name())) {
        hits_.fetch_add(1);
        return hit->translated_text;
    }
    std::string out = inner_.translate_raw(text, src, dst);
    misses_.fetch_add(1);
    CacheEntry entry{src,
                     dst,
                     digest,
                     text,
                     out,
                     inner_.name(),
                     std::chrono::duration_cast<std::chrono::seconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count()};
    cache_.put(entry);
    return out;
}

}  // namespace xlstance
