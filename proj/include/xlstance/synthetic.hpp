#pragma once

#include <cstdint>
#include <string>

#include "xlstance/corpus.hpp"
#include "xlstance/translation.hpp"

namespace xlstance {

// Seeded three-class stance corpus for end-to-end trend checks. Each text is
// filler tokens plus two class signals: a marker that always sits in final
// position (an easy shortcut that token dropout and adjacent swaps displace)
// and, usually, a second marker at a random interior position. A model
// trained only on clean text can lean on the final token; surviving noisy
// copies requires the position-invariant interior signal.
struct SyntheticTaskConfig {
    std::size_t examples = 600;
    std::uint64_t seed = 1;
    std::size_t filler_vocab = 40;
    std::size_t len_min = 6;   // filler tokens per text, before markers
    std::size_t len_max = 12;
    double mid_marker_prob = 0.9;
    std::string language = "en";
    std::string domain_id = "synthetic";
    std::string target = "synthetic-topic";

    void validate() const;
};

Corpus make_synthetic_corpus(const SyntheticTaskConfig& cfg);

// Round-trips every text through the pivot language, keeping labels and ids.
// With a noise-mock backend this manufactures a shifted test domain of the
// same underlying distribution.
Corpus perturb_corpus(const Corpus& corpus, TranslationBackend& backend,
                      const std::string& pivot, const std::string& base,
                      const std::string& new_domain);

}  // namespace xlstance
