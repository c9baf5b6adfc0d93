#include "xlstance/augmentation.hpp"

#include <iostream>
#include <set>
#include <stdexcept>

namespace xlstance {

std::vector<std::string> intermediate_preset(const std::string& name) {
    if (name == "african-family") return {"zu", "xh", "sn", "af"};
    if (name == "mixed-family") return {"de", "ru", "ja", "sw"};
    throw std::invalid_argument("unknown intermediate preset '" + name +
                                "' (expected african-family or mixed-family)");
}

std::vector<std::string> AugmentationPlan::validate() const {
    std::vector<std::string> warnings;
    if (base_language.empty()) throw std::invalid_argument("plan base_language must be set");
    if (mode == AugmentationMode::dg) {
        if (sources.size() < 2) throw std::invalid_argument("DG requires >= 2 sources");
    } else {
        if (intermediates.empty())
            throw std::invalid_argument("n_R >= 1 required for DR (intermediates is empty)");
        std::set<std::string> seen;
        for (const auto& lang : intermediates) {
            if (lang.empty()) throw std::invalid_argument("intermediate language tag must be non-empty");
            if (!seen.insert(lang).second)
                throw std::invalid_argument("duplicate intermediate language '" + lang + "'");
        }
        if (degradation_flagged())
            warnings.push_back("n_R = " + std::to_string(n_r()) +
                               " is at or beyond the degradation threshold (" +
                               std::to_string(kDegradationThreshold) +
                               "); expect performance to drop");
    }
    return warnings;
}

namespace {

void emit_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

}  // namespace

Corpus translate_corpus(const Corpus& corpus, const std::string& src_lang,
                        const std::string& dst_lang, const std::string& new_domain,
                        TranslationBackend& backend, unsigned jobs) {
    std::vector<std::string> texts;
    texts.reserve(corpus.size());
    for (const auto& ex : corpus) texts.push_back(ex.text);
    std::vector<std::string> translated = translate_many(backend, texts, src_lang, dst_lang, jobs);

    Corpus out(new_domain);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        StanceExample ex = corpus[i];
        ex.text = std::move(translated[i]);
        ex.language = dst_lang;
        ex.provenance.push_back({src_lang, dst_lang});
        out.add(std::move(ex));
    }
    return out;
}

Corpus build_dg(const AugmentationPlan& plan, const std::vector<Corpus>& sources,
                TranslationBackend& backend, unsigned jobs) {
    if (plan.mode != AugmentationMode::dg)
        throw std::invalid_argument("build_dg called with a non-DG plan");
    emit_warnings(plan.validate());
    if (sources.size() != plan.sources.size())
        throw std::invalid_argument("plan lists " + std::to_string(plan.sources.size()) +
                                    " sources but " + std::to_string(sources.size()) +
                                    " corpora were supplied");
    for (const auto& [ref, lang] : plan.sources)
        if (lang != plan.base_language && !backend.supports(lang, plan.base_language))
            throw TranslationError(TranslationErrorKind::unsupported_pair,
                                   "pair " + lang + "->" + plan.base_language + " unsupported");

    std::vector<Corpus> parts;
    parts.reserve(sources.size());
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const std::string& lang = plan.sources[i].second;
        if (lang == plan.base_language) {
            parts.push_back(sources[i]);
        } else {
            parts.push_back(translate_corpus(sources[i], lang, plan.base_language,
                                             sources[i].domain_id(), backend, jobs));
        }
    }
    return merge(parts);
}

Corpus build_dr(const AugmentationPlan& plan, const Corpus& source,
                TranslationBackend& backend, unsigned jobs) {
    if (plan.mode != AugmentationMode::dr)
        throw std::invalid_argument("build_dr called with a non-DR plan");
    emit_warnings(plan.validate());
    for (const auto& pivot : plan.intermediates) {
        if (!backend.supports(plan.base_language, pivot) ||
            !backend.supports(pivot, plan.base_language))
            throw TranslationError(TranslationErrorKind::unsupported_pair,
                                   "pivot '" + pivot + "' lacks a supported pair with '" +
                                       plan.base_language + "'");
    }

    std::vector<Corpus> parts;
    parts.reserve(plan.intermediates.size() + 1);
    parts.push_back(source);
    for (const auto& pivot : plan.intermediates) {
        Corpus there = translate_corpus(source, plan.base_language, pivot,
                                        source.domain_id() + ":rt-" + pivot, backend, jobs);
        parts.push_back(translate_corpus(there, pivot, plan.base_language,
                                         source.domain_id() + ":rt-" + pivot, backend, jobs));
    }
    return merge(parts);
}

}  // namespace xlstance
