#include "xlstance/textprep.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

#include "xlstance/common.hpp"

namespace xlstance {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::vector<std::string_view> chunks(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (i > start) out.push_back(text.substr(start, i - start));
    }
    return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
    return true;
}

bool is_url(std::string_view chunk) {
    return starts_with_ci(chunk, "http://") || starts_with_ci(chunk, "https://") ||
           starts_with_ci(chunk, "www.");
}

bool is_mention(std::string_view chunk) { return !chunk.empty() && chunk[0] == '@'; }

}  // namespace

std::string clean(std::string_view text, const CleaningPolicy& policy) {
    std::string out;
    out.reserve(text.size());
    for (std::string_view chunk : chunks(text)) {
        if (policy.strip_urls && is_url(chunk)) continue;
        if (policy.strip_mentions && is_mention(chunk)) continue;
        std::string word;
        word.reserve(chunk.size());
        for (char c : chunk) {
            if (policy.strip_hash_symbol && c == '#') continue;
            word.push_back(policy.lowercase ? static_cast<char>(std::tolower(static_cast<unsigned char>(c)))
                                            : c);
        }
        if (word.empty()) continue;
        if (!out.empty()) out.push_back(' ');
        out += word;
    }
    if (out.empty()) return "<empty>";
    return out;
}

namespace {

// ASCII punctuation only; multibyte UTF-8 sequences count as word bytes.
bool is_punct(char c) {
    unsigned char u = static_cast<unsigned char>(c);
    return u < 0x80 && std::ispunct(u) != 0;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    for (std::string_view chunk : chunks(text)) {
        std::size_t begin = 0, end = chunk.size();
        std::size_t lead_end = begin;
        while (lead_end < end && is_punct(chunk[lead_end])) ++lead_end;
        std::size_t trail_begin = end;
        while (trail_begin > lead_end && is_punct(chunk[trail_begin - 1])) --trail_begin;
        for (std::size_t i = begin; i < lead_end; ++i) tokens.emplace_back(1, chunk[i]);
        if (trail_begin > lead_end) tokens.emplace_back(chunk.substr(lead_end, trail_begin - lead_end));
        for (std::size_t i = trail_begin; i < end; ++i) tokens.emplace_back(1, chunk[i]);
    }
    return tokens;
}

Vocabulary::Vocabulary() {
    id_to_token_ = {"<pad>", "<unk>", "<bos>", "<eos>"};
    for (std::uint32_t i = 0; i < id_to_token_.size(); ++i) token_to_id_[id_to_token_[i]] = i;
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& documents,
                             std::size_t min_frequency, std::size_t max_size) {
    Vocabulary vocab;
    if (max_size < vocab.id_to_token_.size())
        throw std::invalid_argument("max_size must be at least 4 (the reserved tokens)");

    std::map<std::string, std::size_t> freq;
    for (const auto& doc : documents)
        for (const auto& tok : doc) ++freq[tok];

    std::vector<std::pair<std::size_t, std::string>> ranked;
    ranked.reserve(freq.size());
    for (auto& [tok, count] : freq) {
        if (count < min_frequency) continue;
        if (vocab.token_to_id_.count(tok)) continue;  // collides with a reserved token
        ranked.emplace_back(count, tok);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });

    const std::size_t budget = max_size - vocab.id_to_token_.size();
    if (ranked.size() > budget) ranked.resize(budget);
    for (auto& [count, tok] : ranked) {
        vocab.token_to_id_[tok] = static_cast<std::uint32_t>(vocab.id_to_token_.size());
        vocab.id_to_token_.push_back(tok);
    }
    return vocab;
}

std::uint32_t Vocabulary::id(std::string_view token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(std::uint32_t id) const {
    if (id >= id_to_token_.size())
        throw std::out_of_range("vocabulary id " + std::to_string(id) + " out of range");
    return id_to_token_[id];
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    for (const auto& tok : id_to_token_) out << tok << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    Vocabulary vocab;
    std::string line;
    std::uint32_t id = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (id < 4) {
            if (line != vocab.id_to_token_[id])
                throw ParseError("'" + path + "': reserved token mismatch at line " +
                                 std::to_string(id + 1));
        } else {
            if (vocab.token_to_id_.count(line))
                throw ParseError("'" + path + "': duplicate token '" + line + "'");
            vocab.token_to_id_[line] = id;
            vocab.id_to_token_.push_back(line);
        }
        ++id;
    }
    if (id < 4) throw ParseError("'" + path + "': vocabulary file truncated");
    return vocab;
}

std::vector<std::uint32_t> numericalize(const std::vector<std::string>& tokens,
                                        const Vocabulary& vocab) {
    std::vector<std::uint32_t> ids;
    ids.reserve(tokens.size());
    for (const auto& tok : tokens) ids.push_back(vocab.id(tok));
    return ids;
}

}  // namespace xlstance
