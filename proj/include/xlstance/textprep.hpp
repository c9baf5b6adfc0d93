#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace xlstance {

// Applied in fixed order: URL -> mention -> hash -> lowercase, then
// whitespace collapse. clean() is idempotent under any policy.
struct CleaningPolicy {
    bool strip_urls = true;
    bool strip_mentions = true;
    bool strip_hash_symbol = true;  // drops '#', keeps the tag word
    bool lowercase = true;
};

// Never returns an empty string: a cleaned-to-nothing input becomes "<empty>".
std::string clean(std::string_view text, const CleaningPolicy& policy = {});

// Whitespace split, then leading/trailing punctuation detached as separate
// tokens. Intra-word apostrophes are preserved; bytes >= 0x80 are treated
// as letters, so the tokenizer is script-agnostic.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
public:
    static constexpr std::uint32_t kPad = 0;
    static constexpr std::uint32_t kUnk = 1;
    static constexpr std::uint32_t kBos = 2;
    static constexpr std::uint32_t kEos = 3;

    // Tokens below min_frequency map to <unk>. Order: frequency desc,
    // then token asc, truncated so the total (reserved included) never
    // exceeds max_size. Build only from training-split text.
    static Vocabulary build(const std::vector<std::vector<std::string>>& documents,
                            std::size_t min_frequency = 2, std::size_t max_size = 30000);

    std::uint32_t id(std::string_view token) const;          // kUnk if absent
    const std::string& token(std::uint32_t id) const;        // throws std::out_of_range
    std::size_t size() const { return id_to_token_.size(); }

    // Plain text, one token per line, line number = id.
    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

private:
    Vocabulary();
    std::map<std::string, std::uint32_t, std::less<>> token_to_id_;
    std::vector<std::string> id_to_token_;
};

std::vector<std::uint32_t> numericalize(const std::vector<std::string>& tokens,
                                        const Vocabulary& vocab);

}  // namespace xlstance
