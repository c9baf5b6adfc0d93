#include "xlstance/synthetic.hpp"

#include <stdexcept>

namespace xlstance {

namespace {

constexpr std::array<const char*, 3> kEndMarker = {"goodend", "badend", "nullend"};
constexpr std::array<const char*, 3> kMidMarker = {"goodmid", "badmid", "nullmid"};

}  // namespace

void SyntheticTaskConfig::validate() const {
    if (examples == 0) throw std::invalid_argument("synthetic: examples must be positive");
    if (filler_vocab == 0) throw std::invalid_argument("synthetic: filler_vocab must be positive");
    if (len_min == 0 || len_max < len_min) {
        throw std::invalid_argument("synthetic: need 0 < len_min <= len_max");
    }
    if (!(mid_marker_prob >= 0.0 && mid_marker_prob <= 1.0)) {
        throw std::invalid_argument("synthetic: mid_marker_prob must lie in [0, 1]");
    }
}

Corpus make_synthetic_corpus(const SyntheticTaskConfig& cfg) {
    cfg.validate();
    Corpus corpus(cfg.domain_id);
    for (std::size_t i = 0; i < cfg.examples; ++i) {
        const std::size_t cls = i % 3;
        std::mt19937_64 gen(hash_combine(cfg.seed, i));
        const std::size_t len =
            cfg.len_min + uniform_below(gen, cfg.len_max - cfg.len_min + 1);

        std::vector<std::string> tokens;
        tokens.reserve(len + 2);
        for (std::size_t t = 0; t < len; ++t) {
            tokens.push_back("w" + std::to_string(uniform_below(gen, cfg.filler_vocab)));
        }
        if (uniform01(gen) < cfg.mid_marker_prob) {
            const std::size_t at = uniform_below(gen, tokens.size() + 1);
            tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(at), kMidMarker[cls]);
        }
        tokens.push_back(kEndMarker[cls]);

        std::string text;
        for (std::size_t t = 0; t < tokens.size(); ++t) {
            if (t) text.push_back(' ');
            text += tokens[t];
        }

        StanceExample ex;
        ex.id = "syn-" + std::to_string(i);
        ex.target = cfg.target;
        ex.text = std::move(text);
        ex.stance = kAllStances[cls];
        ex.language = cfg.language;
        corpus.add(std::move(ex));
    }
    return corpus;
}

Corpus perturb_corpus(const Corpus& corpus, TranslationBackend& backend,
                      const std::string& pivot, const std::string& base,
                      const std::string& new_domain) {
    Corpus out(new_domain);
    for (const StanceExample& src : corpus) {
        StanceExample ex = src;
        ex.text = round_trip(backend, src.text, pivot, base);
        ex.provenance.push_back({base, pivot});
        ex.provenance.push_back({pivot, base});
        out.add(std::move(ex));
    }
    return out;
}

}  // namespace xlstance
