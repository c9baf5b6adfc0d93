#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xlstance/corpus.hpp"
#include "xlstance/translation.hpp"

namespace xlstance {

enum class AugmentationMode { dg, dr };

// Intermediate-language presets. The african-family set mirrors the best
// reported pivot combination; mixed-family spans several families.
std::vector<std::string> intermediate_preset(const std::string& name);

struct AugmentationPlan {
    AugmentationMode mode = AugmentationMode::dr;
    std::string base_language = "en";
    // DG: (logical name or path, language) per source corpus.
    std::vector<std::pair<std::string, std::string>> sources;
    // DR: ordered pivot languages; n_R = intermediates.size().
    std::vector<std::string> intermediates;
    std::uint64_t seed = 0;

    std::size_t n_r() const { return intermediates.size(); }
    std::size_t n_g() const { return sources.size(); }

    // Degradation sets in past this degree of randomization.
    static constexpr std::size_t kDegradationThreshold = 16;
    bool degradation_flagged() const {
        return mode == AugmentationMode::dr && n_r() >= kDegradationThreshold;
    }

    // Hard errors throw; soft issues (the n_R >= 16 flag) come back as
    // warning strings.
    std::vector<std::string> validate() const;
};

// Translates a whole corpus src_lang -> dst_lang under new_domain,
// appending one provenance hop per example.
Corpus translate_corpus(const Corpus& corpus, const std::string& src_lang,
                        const std::string& dst_lang, const std::string& new_domain,
                        TranslationBackend& backend, unsigned jobs = 1);

// Translates every non-base source corpus into the base language and
// merges the lot. Labels and targets are copied unchanged; translated
// examples carry a single provenance hop.
Corpus build_dg(const AugmentationPlan& plan, const std::vector<Corpus>& sources,
                TranslationBackend& backend, unsigned jobs = 1);

// Original corpus plus one round-trip copy per intermediate language:
// |result| = (n_R + 1) * N. Augmented examples keep their stance and
// target and record the [base->pivot, pivot->base] hops.
Corpus build_dr(const AugmentationPlan& plan, const Corpus& source,
                TranslationBackend& backend, unsigned jobs = 1);

}  // namespace xlstance
