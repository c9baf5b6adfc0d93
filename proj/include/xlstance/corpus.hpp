#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "xlstance/common.hpp"

namespace xlstance {

enum class StanceLabel { favor, against, none };

inline constexpr std::array<StanceLabel, 3> kAllStances = {
    StanceLabel::favor, StanceLabel::against, StanceLabel::none};

// Accepts FAVOR / IN-FAVOR / AGAINST / NONE, case-insensitive.
// Any other token throws ParseError.
StanceLabel parse_stance(std::string_view token);
std::string_view to_string(StanceLabel label);
std::size_t stance_index(StanceLabel label);  // FAVOR=0, AGAINST=1, NONE=2

struct TranslationHop {
    std::string src;
    std::string dst;
    bool operator==(const TranslationHop&) const = default;
};

// One labeled text sample. provenance is empty iff the text is original
// (never translated); augmentation appends one hop per translation.
struct StanceExample {
    std::string id;
    std::string target;
    std::string text;
    StanceLabel stance = StanceLabel::none;
    std::string language;
    std::vector<TranslationHop> provenance;

    bool operator==(const StanceExample&) const = default;
};

// Ordered, immutable-after-construction collection with unique ids.
class Corpus {
public:
    explicit Corpus(std::string domain_id) : domain_id_(std::move(domain_id)) {}

    // Throws on duplicate id or on text empty after whitespace trimming.
    void add(StanceExample example);

    const std::string& domain_id() const { return domain_id_; }
    std::size_t size() const { return examples_.size(); }
    bool empty() const { return examples_.empty(); }
    const StanceExample& operator[](std::size_t i) const { return examples_[i]; }
    const std::vector<StanceExample>& examples() const { return examples_; }

    auto begin() const { return examples_.begin(); }
    auto end() const { return examples_.end(); }

private:
    std::string domain_id_;
    std::vector<StanceExample> examples_;
    std::unordered_set<std::string> ids_;
};

// SemEval tab-separated layout: header line, then ID<TAB>Target<TAB>Tweet<TAB>Stance.
// Extra columns are ignored; fewer than four is an error naming the line.
// Texts are stored raw; cleaning happens later in textprep.
Corpus parse_semeval(const std::string& path, const std::string& language);

// Inverse of parse_semeval. Refuses fields containing tab or newline,
// since the layout defines no escaping.
void write_semeval(const Corpus& corpus, const std::string& path);

enum class CountKey { stance, target, stance_target };

// Counts sum to corpus size. For stance, all three labels are always
// present (absent ones as 0); for stance_target the key is
// "<target>\t<stance>" with zeros for absent stances of present targets.
std::map<std::string, std::size_t> class_counts(const Corpus& corpus, CountKey by);

// Per-stance counts indexed by stance_index().
std::array<std::size_t, 3> stance_counts(const Corpus& corpus);

enum class StratifyBy { stance, target };

// Deterministic (train, test) partition; train gets floor(fraction * N)
// examples. Stratified mode keeps each stratum's proportion within one
// example and requires every stratum to have at least two members.
std::pair<Corpus, Corpus> split(const Corpus& corpus, double train_fraction,
                                std::uint64_t seed,
                                std::optional<StratifyBy> stratify = std::nullopt);

// Union of the inputs; ids re-namespaced as "<domain_id>/<id>" so the
// uniqueness invariant survives id collisions across sources.
Corpus merge(const std::vector<Corpus>& corpora);

// Line-delimited interchange format (docs/formats.md): one header record,
// then one example record per line.
void save_jsonl(const Corpus& corpus, const std::string& path);
Corpus load_jsonl(const std::string& path);

std::string trim(std::string_view s);

}  // namespace xlstance
