#include "xlstance/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace xlstance {

namespace fs = std::filesystem;

namespace {

constexpr std::array<double Metrics::*, 6> kMetricFields = {
    &Metrics::f1_macro_fa_ag, &Metrics::f1_macro_3class, &Metrics::accuracy,
    &Metrics::favor_f1,       &Metrics::against_f1,      &Metrics::none_f1,
};
constexpr std::array<const char*, 6> kMetricNames = {
    "f1_macro_fa_ag", "f1_macro_3class", "accuracy", "favor_f1", "against_f1", "none_f1",
};

json num_or_null(double v) { return std::isnan(v) ? json() : json(v); }

double nan_if_null(const json& v) {
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

}  // namespace

double per_class_f1(const std::vector<StanceLabel>& gold, const std::vector<StanceLabel>& pred,
                    StanceLabel cls) {
    if (gold.size() != pred.size()) throw std::invalid_argument("gold/pred length mismatch");
    if (gold.empty()) throw std::invalid_argument("metrics need at least one prediction");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (pred[i] == cls && gold[i] == cls) ++tp;
        if (pred[i] == cls && gold[i] != cls) ++fp;
        if (pred[i] != cls && gold[i] == cls) ++fn;
    }
    // tp = 0 forces precision or recall (and so F1) to 0 under the
    // zero-denominator-is-zero convention.
    if (tp == 0) return 0.0;
    const double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double r = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return 2.0 * p * r / (p + r);
}

double accuracy(const std::vector<StanceLabel>& gold, const std::vector<StanceLabel>& pred) {
    if (gold.size() != pred.size()) throw std::invalid_argument("gold/pred length mismatch");
    if (gold.empty()) throw std::invalid_argument("metrics need at least one prediction");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] == pred[i]) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(gold.size());
}

Metrics compute_metrics(const std::vector<StanceLabel>& gold,
                        const std::vector<StanceLabel>& pred) {
    Metrics m;
    m.favor_f1 = per_class_f1(gold, pred, StanceLabel::favor);
    m.against_f1 = per_class_f1(gold, pred, StanceLabel::against);
    m.none_f1 = per_class_f1(gold, pred, StanceLabel::none);
    m.f1_macro_fa_ag = (m.favor_f1 + m.against_f1) / 2.0;
    m.f1_macro_3class = (m.favor_f1 + m.against_f1 + m.none_f1) / 3.0;
    m.accuracy = accuracy(gold, pred);
    return m;
}

json Metrics::to_json() const {
    json j;
    for (std::size_t i = 0; i < kMetricFields.size(); ++i) {
        j[kMetricNames[i]] = num_or_null(this->*kMetricFields[i]);
    }
    return j;
}

Metrics Metrics::from_json(const json& j, const std::string& context) {
    StrictObject o(j, context);
    Metrics m;
    for (std::size_t i = 0; i < kMetricFields.size(); ++i) {
        m.*kMetricFields[i] = nan_if_null(o.at(kMetricNames[i]));
    }
    o.finish();
    return m;
}

std::vector<std::pair<Corpus, Corpus>> kfold(const Corpus& corpus, std::size_t k,
                                             std::uint64_t seed, bool stratify_by_stance) {
    if (k < 2) throw std::invalid_argument("kfold requires k >= 2");
    if (corpus.size() < k) throw std::invalid_argument("kfold requires at least k examples");

    std::vector<std::size_t> fold_of(corpus.size());
    std::mt19937_64 gen(seed);
    if (stratify_by_stance) {
        // One fold cycle running across the (shuffled) strata keeps both
        // the overall and per-stance fold sizes within one example.
        std::size_t next = 0;
        for (StanceLabel s : kAllStances) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < corpus.size(); ++i) {
                if (corpus[i].stance == s) members.push_back(i);
            }
            fisher_yates(members, gen);
            for (std::size_t m : members) fold_of[m] = next++ % k;
        }
    } else {
        std::vector<std::size_t> idx(corpus.size());
        std::iota(idx.begin(), idx.end(), 0);
        fisher_yates(idx, gen);
        for (std::size_t j = 0; j < idx.size(); ++j) fold_of[idx[j]] = j % k;
    }

    std::vector<std::pair<Corpus, Corpus>> folds;
    folds.reserve(k);
    for (std::size_t f = 0; f < k; ++f) {
        Corpus train(corpus.domain_id());
        Corpus test(corpus.domain_id());
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            (fold_of[i] == f ? test : train).add(corpus[i]);
        }
        folds.emplace_back(std::move(train), std::move(test));
    }
    return folds;
}

const char* to_string(ExperimentRole role) {
    switch (role) {
        case ExperimentRole::dlb: return "dlb";
        case ExperimentRole::dub: return "dub";
        case ExperimentRole::dr_sweep: return "dr_sweep";
        case ExperimentRole::da: return "da";
    }
    return "dlb";
}

ExperimentRole parse_role(const std::string& text) {
    if (text == "dlb") return ExperimentRole::dlb;
    if (text == "dub") return ExperimentRole::dub;
    if (text == "dr_sweep") return ExperimentRole::dr_sweep;
    if (text == "da") return ExperimentRole::da;
    throw ConfigError("unknown experiment role '" + text +
                      "' (expected dlb, dub, dr_sweep or da)");
}

json CorpusRef::to_json() const { return json{{"path", path}, {"language", language}}; }

CorpusRef CorpusRef::from_json(const json& j, const std::string& context) {
    StrictObject o(j, context);
    CorpusRef ref;
    ref.path = o.require<std::string>("path");
    ref.language = o.get_or<std::string>("language", "en");
    o.finish();
    return ref;
}

json to_json(const CleaningPolicy& policy) {
    return json{{"strip_urls", policy.strip_urls},
                {"strip_mentions", policy.strip_mentions},
                {"strip_hash_symbol", policy.strip_hash_symbol},
                {"lowercase", policy.lowercase}};
}

CleaningPolicy cleaning_from_json(const json& j) {
    StrictObject o(j, "cleaning");
    CleaningPolicy p;
    p.strip_urls = o.get_or("strip_urls", p.strip_urls);
    p.strip_mentions = o.get_or("strip_mentions", p.strip_mentions);
    p.strip_hash_symbol = o.get_or("strip_hash_symbol", p.strip_hash_symbol);
    p.lowercase = o.get_or("lowercase", p.lowercase);
    o.finish();
    return p;
}

json to_json(const ModelConfig& cfg) {
    // vocab_size and init_seed are resolved per run, not configuration
    return json{{"embedding_dim", cfg.embedding_dim},
                {"hidden_dim", cfg.hidden_dim},
                {"head_hidden_dim", cfg.head_hidden_dim},
                {"classes", cfg.classes},
                {"dropout", cfg.dropout}};
}

ModelConfig model_config_from_json(const json& j) {
    StrictObject o(j, "model");
    ModelConfig cfg;
    cfg.embedding_dim = o.get_or("embedding_dim", cfg.embedding_dim);
    cfg.hidden_dim = o.get_or("hidden_dim", cfg.hidden_dim);
    cfg.head_hidden_dim = o.get_or("head_hidden_dim", cfg.head_hidden_dim);
    cfg.classes = o.get_or("classes", cfg.classes);
    cfg.dropout = o.get_or("dropout", cfg.dropout);
    o.finish();
    return cfg;
}

json to_json(const LmTrainConfig& cfg) {
    return json{{"epochs", cfg.epochs},
                {"batch_size", cfg.batch_size},
                {"lr", cfg.lr},
                {"momentum", cfg.momentum},
                {"clip_norm", cfg.clip_norm},
                {"holdout_fraction", cfg.holdout_fraction},
                {"dropout_enabled", cfg.dropout_enabled}};
}

LmTrainConfig lm_config_from_json(const json& j) {
    StrictObject o(j, "lm");
    LmTrainConfig cfg;
    cfg.epochs = o.get_or("epochs", cfg.epochs);
    cfg.batch_size = o.get_or("batch_size", cfg.batch_size);
    cfg.lr = o.get_or("lr", cfg.lr);
    cfg.momentum = o.get_or("momentum", cfg.momentum);
    cfg.clip_norm = o.get_or("clip_norm", cfg.clip_norm);
    cfg.holdout_fraction = o.get_or("holdout_fraction", cfg.holdout_fraction);
    cfg.dropout_enabled = o.get_or("dropout_enabled", cfg.dropout_enabled);
    o.finish();
    return cfg;
}

json to_json(const ClassifierTrainConfig& cfg) {
    return json{{"epochs_per_stage", cfg.schedule.epochs_per_stage},
                {"batch_size", cfg.batch_size},
                {"head_lr", cfg.head_lr},
                {"encoder_lr", cfg.encoder_lr},
                {"momentum", cfg.momentum},
                {"clip_norm", cfg.clip_norm},
                {"dropout_enabled", cfg.dropout_enabled},
                {"sep_point", cfg.sep_point == SepPoint::encoder_latent ? "encoder_latent"
                                                                        : "head_hidden"}};
}

ClassifierTrainConfig train_config_from_json(const json& j) {
    StrictObject o(j, "train");
    ClassifierTrainConfig cfg;
    if (const json* stages = o.find("epochs_per_stage")) {
        if (!stages->is_array() || stages->size() != 4) {
            throw ConfigError("train: epochs_per_stage must be an array of 4 counts");
        }
        for (std::size_t i = 0; i < 4; ++i) {
            cfg.schedule.epochs_per_stage[i] = stages->at(i).get<std::size_t>();
        }
    }
    cfg.batch_size = o.get_or("batch_size", cfg.batch_size);
    cfg.head_lr = o.get_or("head_lr", cfg.head_lr);
    cfg.encoder_lr = o.get_or("encoder_lr", cfg.encoder_lr);
    cfg.momentum = o.get_or("momentum", cfg.momentum);
    cfg.clip_norm = o.get_or("clip_norm", cfg.clip_norm);
    cfg.dropout_enabled = o.get_or("dropout_enabled", cfg.dropout_enabled);
    const std::string point = o.get_or<std::string>("sep_point", "encoder_latent");
    if (point == "encoder_latent") {
        cfg.sep_point = SepPoint::encoder_latent;
    } else if (point == "head_hidden") {
        cfg.sep_point = SepPoint::head_hidden;
    } else {
        throw ConfigError("train: sep_point must be encoder_latent or head_hidden");
    }
    o.finish();
    return cfg;
}

json to_json(const SeparabilityConfig& cfg) {
    json counts;
    if (cfg.target_class_counts) counts = json(*cfg.target_class_counts);
    return json{{"epsilon", cfg.epsilon},
                {"alpha", cfg.alpha},
                {"balancing_source", cfg.balancing_source == BalancingSource::target_counts
                                         ? "target_counts"
                                         : "batch_counts"},
                {"normalize_numerator", cfg.normalize_numerator},
                {"target_class_counts", counts}};
}

SeparabilityConfig objective_from_json(const json& j) {
    StrictObject o(j, "objective");
    SeparabilityConfig cfg;
    cfg.epsilon = o.get_or("epsilon", cfg.epsilon);
    cfg.alpha = o.get_or("alpha", cfg.alpha);
    const std::string src = o.get_or<std::string>("balancing_source", "target_counts");
    if (src == "target_counts") {
        cfg.balancing_source = BalancingSource::target_counts;
    } else if (src == "batch_counts") {
        cfg.balancing_source = BalancingSource::batch_counts;
    } else {
        throw ConfigError("objective: balancing_source must be target_counts or batch_counts");
    }
    cfg.normalize_numerator = o.get_or("normalize_numerator", cfg.normalize_numerator);
    if (const json* counts = o.find("target_class_counts")) {
        if (!counts->is_null()) {
            if (!counts->is_array() || counts->size() != 3) {
                throw ConfigError("objective: target_class_counts must be 3 counts or null");
            }
            std::array<std::size_t, 3> c{};
            for (std::size_t i = 0; i < 3; ++i) c[i] = counts->at(i).get<std::size_t>();
            cfg.target_class_counts = c;
        }
    }
    o.finish();
    return cfg;
}

void ExperimentSpec::validate() const {
    if (name.empty()) throw ConfigError("experiment: name must be non-empty");
    if (seeds.empty()) throw ConfigError("experiment: seeds must be non-empty");
    if (base_language.empty()) throw ConfigError("experiment: base_language must be set");
    if (jobs == 0) throw ConfigError("experiment: jobs must be >= 1");
    if (!(target_train_fraction > 0.0 && target_train_fraction < 1.0)) {
        throw ConfigError("experiment: target_train_fraction must lie in (0,1)");
    }
    if (!(source_train_fraction > 0.0 && source_train_fraction <= 1.0)) {
        throw ConfigError("experiment: source_train_fraction must lie in (0,1]");
    }
    {
        std::set<std::string> seen;
        for (const auto& lang : intermediates) {
            if (!seen.insert(lang).second) {
                throw ConfigError("experiment: duplicate intermediate language '" + lang + "'");
            }
        }
    }
    switch (role) {
        case ExperimentRole::dub: {
            const CorpusRef& ref = target ? *target : source;
            if (ref.path.empty()) throw ConfigError("dub: a corpus (target or source) is required");
            if (ref.language != base_language) {
                throw ConfigError(
                    "dub: the in-domain corpus must already be in the base language; the "
                    "upper bound never sees translated data");
            }
            if (!target && source_train_fraction >= 1.0) {
                throw ConfigError("dub on the source corpus needs source_train_fraction < 1");
            }
            if (!intermediates.empty()) throw ConfigError("dub does not take intermediates");
            break;
        }
        case ExperimentRole::dlb:
        case ExperimentRole::dr_sweep: {
            if (source.path.empty()) throw ConfigError("experiment: source corpus is required");
            if (role == ExperimentRole::dlb && !intermediates.empty()) {
                throw ConfigError("dlb does not take intermediates");
            }
            if (!target && source_train_fraction >= 1.0) {
                throw ConfigError(
                    "experiment defines no test set: give a target corpus or hold out part of "
                    "the source (source_train_fraction < 1)");
            }
            break;
        }
        case ExperimentRole::da: {
            if (source.path.empty()) throw ConfigError("da: source corpus is required");
            if (!target) throw ConfigError("da: a labeled target corpus is required");
            if (kfolds == 1) throw ConfigError("da: kfolds must be 0 (fixed split) or >= 2");
            break;
        }
    }
    ModelConfig probe = model;
    probe.vocab_size = 5;  // resolved per run; validate the rest
    probe.validate();
    objective.validate();
}

json ExperimentSpec::to_json() const {
    json j{{"name", name},
           {"role", std::string(xlstance::to_string(role))},
           {"source", source.to_json()},
           {"target", target ? target->to_json() : json()},
           {"target_train_fraction", target_train_fraction},
           {"kfolds", kfolds},
           {"source_train_fraction", source_train_fraction},
           {"intermediates", intermediates},
           {"base_language", base_language},
           {"cleaning", xlstance::to_json(cleaning)},
           {"vocab_min_frequency", vocab_min_frequency},
           {"vocab_max_size", vocab_max_size},
           {"model", xlstance::to_json(model)},
           {"lm", xlstance::to_json(lm)},
           {"train", xlstance::to_json(train)},
           {"objective", xlstance::to_json(objective)},
           {"seeds", seeds},
           {"data_seed", data_seed},
           {"jobs", jobs}};
    return j;
}

ExperimentSpec ExperimentSpec::from_json(const json& j) {
    StrictObject o(j, "experiment");
    ExperimentSpec spec;
    spec.name = o.get_or<std::string>("name", spec.name);
    spec.role = parse_role(o.get_or<std::string>("role", "dlb"));
    if (const json* src = o.find("source")) {
        spec.source = CorpusRef::from_json(*src, "source");
    }
    if (const json* tgt = o.find("target")) {
        if (!tgt->is_null()) spec.target = CorpusRef::from_json(*tgt, "target");
    }
    spec.target_train_fraction = o.get_or("target_train_fraction", spec.target_train_fraction);
    spec.kfolds = o.get_or("kfolds", spec.kfolds);
    spec.source_train_fraction = o.get_or("source_train_fraction", spec.source_train_fraction);
    spec.intermediates = o.get_or("intermediates", spec.intermediates);
    spec.base_language = o.get_or("base_language", spec.base_language);
    if (const json* c = o.find("cleaning")) spec.cleaning = cleaning_from_json(*c);
    spec.vocab_min_frequency = o.get_or("vocab_min_frequency", spec.vocab_min_frequency);
    spec.vocab_max_size = o.get_or("vocab_max_size", spec.vocab_max_size);
    if (const json* m = o.find("model")) spec.model = model_config_from_json(*m);
    if (const json* l = o.find("lm")) spec.lm = lm_config_from_json(*l);
    if (const json* t = o.find("train")) spec.train = train_config_from_json(*t);
    if (const json* ob = o.find("objective")) spec.objective = objective_from_json(*ob);
    spec.seeds = o.get_or("seeds", spec.seeds);
    spec.data_seed = o.get_or("data_seed", spec.data_seed);
    spec.jobs = o.get_or("jobs", spec.jobs);
    o.finish();
    return spec;
}

namespace {

Corpus load_corpus_ref(const CorpusRef& ref) {
    if (ref.path.ends_with(".jsonl")) return load_jsonl(ref.path);
    return parse_semeval(ref.path, ref.language);
}

std::string file_digest_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read corpus file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(buf.str())));
    return hex;
}

// Stratify by stance when every present stance has >= 2 members,
// otherwise fall back to a plain split.
std::pair<Corpus, Corpus> split_auto(const Corpus& corpus, double fraction,
                                     std::uint64_t seed) {
    bool can_stratify = corpus.size() >= 2;
    for (std::size_t c : stance_counts(corpus)) {
        if (c == 1) can_stratify = false;
    }
    if (can_stratify) return split(corpus, fraction, seed, StratifyBy::stance);
    return split(corpus, fraction, seed, std::nullopt);
}

void assert_disjoint_ids(const Corpus& train, const Corpus& test) {
    std::set<std::string> ids;
    for (const auto& ex : train) ids.insert(ex.id);
    for (const auto& ex : test) {
        if (ids.count(ex.id)) {
            throw std::logic_error("split leaked example '" + ex.id + "' into both halves");
        }
    }
}

struct FoldData {
    Corpus train;
    std::vector<std::pair<std::string, Corpus>> tests;

    FoldData(Corpus t, std::vector<std::pair<std::string, Corpus>> ts)
        : train(std::move(t)), tests(std::move(ts)) {}
};

struct Prepared {
    std::vector<FoldData> folds;
    json digests = json::object();
};

Prepared prepare_data(const ExperimentSpec& spec, TranslationBackend& backend) {
    Prepared prep;
    auto load_base = [&](const CorpusRef& ref) {
        prep.digests[ref.path] = file_digest_hex(ref.path);
        Corpus c = load_corpus_ref(ref);
        if (ref.language != spec.base_language) {
            // the pipeline operates in the base language, so foreign
            // corpora come in through the translation backend
            c = translate_corpus(c, ref.language, spec.base_language,
                                 c.domain_id() + "-" + spec.base_language, backend, spec.jobs);
        }
        return c;
    };

    if (spec.role == ExperimentRole::dub) {
        const CorpusRef& ref = spec.target ? *spec.target : spec.source;
        const double fraction =
            spec.target ? spec.target_train_fraction : spec.source_train_fraction;
        const char* block = spec.target ? "target-test" : "source-test";
        Corpus corpus = load_base(ref);
        auto [train, test] = split_auto(corpus, fraction, spec.data_seed);
        assert_disjoint_ids(train, test);
        std::vector<std::pair<std::string, Corpus>> tests;
        tests.emplace_back(block, std::move(test));
        prep.folds.emplace_back(std::move(train), std::move(tests));
        return prep;
    }

    Corpus source = load_base(spec.source);
    std::optional<Corpus> src_test;
    Corpus src_train = source;
    if (spec.source_train_fraction < 1.0) {
        auto [a, b] = split_auto(source, spec.source_train_fraction, spec.data_seed);
        assert_disjoint_ids(a, b);
        src_train = std::move(a);
        src_test = std::move(b);
    }

    std::optional<Corpus> target;
    if (spec.target) target = load_base(*spec.target);

    auto base_tests = [&](Corpus target_test) {
        std::vector<std::pair<std::string, Corpus>> tests;
        if (src_test) tests.emplace_back("source-test", *src_test);
        tests.emplace_back("target-test", std::move(target_test));
        return tests;
    };

    switch (spec.role) {
        case ExperimentRole::dlb:
        case ExperimentRole::dr_sweep: {
            Corpus train = src_train;
            if (spec.role == ExperimentRole::dr_sweep && !spec.intermediates.empty()) {
                AugmentationPlan plan;
                plan.mode = AugmentationMode::dr;
                plan.base_language = spec.base_language;
                plan.intermediates = spec.intermediates;
                plan.seed = spec.data_seed;
                train = build_dr(plan, src_train, backend, spec.jobs);
            }
            std::vector<std::pair<std::string, Corpus>> tests;
            if (src_test) tests.emplace_back("source-test", *src_test);
            if (target) {
                auto [tgt_train, tgt_test] =
                    split_auto(*target, spec.target_train_fraction, spec.data_seed);
                assert_disjoint_ids(tgt_train, tgt_test);
                tests.emplace_back("target-test", std::move(tgt_test));
            }
            prep.folds.emplace_back(std::move(train), std::move(tests));
            break;
        }
        case ExperimentRole::da: {
            if (spec.kfolds > 0) {
                for (auto& [tgt_train, tgt_test] :
                     kfold(*target, spec.kfolds, spec.data_seed, true)) {
                    assert_disjoint_ids(tgt_train, tgt_test);
                    Corpus train = merge({src_train, tgt_train});
                    prep.folds.emplace_back(std::move(train), base_tests(std::move(tgt_test)));
                }
            } else {
                auto [tgt_train, tgt_test] =
                    split_auto(*target, spec.target_train_fraction, spec.data_seed);
                assert_disjoint_ids(tgt_train, tgt_test);
                Corpus train = merge({src_train, tgt_train});
                prep.folds.emplace_back(std::move(train), base_tests(std::move(tgt_test)));
            }
            break;
        }
        case ExperimentRole::dub:
            break;  // handled above
    }
    return prep;
}

std::string domain_tag(const StanceExample& ex, const Corpus& corpus) {
    const auto pos = ex.id.find('/');
    return pos == std::string::npos ? corpus.domain_id() : ex.id.substr(0, pos);
}

std::vector<std::vector<std::uint32_t>> to_sequences(const Corpus& corpus,
                                                     const CleaningPolicy& policy,
                                                     const Vocabulary& vocab) {
    std::vector<std::vector<std::uint32_t>> seqs;
    seqs.reserve(corpus.size());
    for (const auto& ex : corpus) {
        const std::vector<std::string> tokens = tokenize(clean(ex.text, policy));
        std::vector<std::uint32_t> ids;
        ids.reserve(tokens.size() + 2);
        ids.push_back(Vocabulary::kBos);
        for (const std::uint32_t id : numericalize(tokens, vocab)) ids.push_back(id);
        ids.push_back(Vocabulary::kEos);
        seqs.push_back(std::move(ids));
    }
    return seqs;
}

Metrics evaluate_on(const StanceModel& model, const Corpus& test, const CleaningPolicy& policy,
                    const Vocabulary& vocab) {
    const auto seqs = to_sequences(test, policy, vocab);
    const std::vector<std::size_t> pred_idx = model.predict(seqs);
    std::vector<StanceLabel> gold, pred;
    gold.reserve(test.size());
    pred.reserve(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        gold.push_back(test[i].stance);
        pred.push_back(kAllStances[pred_idx[i]]);
    }
    return compute_metrics(gold, pred);
}

Metrics mean_metrics(const std::vector<Metrics>& xs) {
    Metrics out;
    for (auto field : kMetricFields) {
        double sum = 0.0;
        for (const Metrics& m : xs) sum += m.*field;
        out.*field = sum / static_cast<double>(xs.size());
    }
    return out;
}

SeedRun run_seed(const ExperimentSpec& spec, const Prepared& prep, std::uint64_t seed) {
    SeedRun run;
    run.seed = seed;
    std::map<std::string, std::vector<Metrics>> collected;
    for (const FoldData& fold : prep.folds) {
        std::vector<std::vector<std::string>> docs;
        docs.reserve(fold.train.size());
        for (const auto& ex : fold.train) docs.push_back(tokenize(clean(ex.text, spec.cleaning)));
        const Vocabulary vocab =
            Vocabulary::build(docs, spec.vocab_min_frequency, spec.vocab_max_size);

        ModelConfig mc = spec.model;
        mc.vocab_size = vocab.size();
        mc.init_seed = seed;
        StanceModel model(mc);

        const auto train_seqs = to_sequences(fold.train, spec.cleaning, vocab);
        if (spec.lm.epochs > 0 && train_seqs.size() >= 2) {
            LmTrainConfig lm = spec.lm;
            lm.seed = seed;
            model.finetune_lm(train_seqs, lm);
        }

        ClassifierDataset data;
        data.sequences = train_seqs;
        data.labels.reserve(fold.train.size());
        data.domains.reserve(fold.train.size());
        for (const auto& ex : fold.train) {
            data.labels.push_back(stance_index(ex.stance));
            data.domains.push_back(domain_tag(ex, fold.train));
        }
        ClassifierTrainConfig tc = spec.train;
        tc.seed = seed;
        model.train_classifier(data, tc, spec.objective);

        for (const auto& [block, test] : fold.tests) {
            collected[block].push_back(evaluate_on(model, test, spec.cleaning, vocab));
        }
    }
    for (const auto& [block, xs] : collected) run.by_test[block] = mean_metrics(xs);
    return run;
}

json ids_of(const Corpus& corpus) {
    json out = json::array();
    for (const auto& ex : corpus) out.push_back(ex.id);
    return out;
}

}  // namespace

EvalReport run_experiment(const ExperimentSpec& spec, TranslationBackend& backend) {
    spec.validate();
    const Prepared prep = prepare_data(spec, backend);
    if (prep.folds.empty() || prep.folds.front().tests.empty()) {
        throw ConfigError("experiment '" + spec.name + "' produced no test set");
    }

    EvalReport report;
    report.experiment = spec.name;
    report.role = spec.role;
    for (const auto& [block, test] : prep.folds.front().tests) report.test_names.push_back(block);

    json failures = json::array();
    std::string last_error;
    for (const std::uint64_t seed : spec.seeds) {
        try {
            report.runs.push_back(run_seed(spec, prep, seed));
        } catch (const std::exception& e) {
            last_error = e.what();
            failures.push_back(json{{"seed", seed}, {"error", last_error}});
        }
    }
    if (report.runs.empty()) {
        throw std::runtime_error("experiment '" + spec.name + "': every seed failed; last: " +
                                 last_error);
    }

    for (const std::string& block : report.test_names) {
        std::vector<Metrics> xs;
        for (const SeedRun& run : report.runs) {
            auto it = run.by_test.find(block);
            if (it != run.by_test.end()) xs.push_back(it->second);
        }
        const Metrics mean = mean_metrics(xs);
        Metrics sd;
        for (auto field : kMetricFields) {
            double sq = 0.0;
            for (const Metrics& m : xs) {
                const double d = m.*field - mean.*field;
                sq += d * d;
            }
            sd.*field = std::sqrt(sq / static_cast<double>(xs.size()));
        }
        report.mean[block] = mean;
        report.stddev[block] = sd;
    }

    json folds = json::array();
    for (const FoldData& fold : prep.folds) {
        json test_ids = json::object();
        for (const auto& [block, test] : fold.tests) test_ids[block] = ids_of(test);
        folds.push_back(json{{"train_ids", ids_of(fold.train)}, {"test_ids", test_ids}});
    }
    report.manifest = json{{"tool_version", version_string()},
                           {"backend", std::string(backend.name())},
                           {"spec", spec.to_json()},
                           {"corpus_digests", prep.digests},
                           {"folds", folds}};
    if (!failures.empty()) report.manifest["failed_seeds"] = failures;
    return report;
}

json EvalReport::to_json() const {
    json runs_json = json::array();
    for (const SeedRun& run : runs) {
        json by_test = json::object();
        for (const auto& [block, m] : run.by_test) by_test[block] = m.to_json();
        runs_json.push_back(json{{"seed", run.seed}, {"metrics", by_test}});
    }
    json mean_json = json::object(), sd_json = json::object();
    for (const auto& [block, m] : mean) mean_json[block] = m.to_json();
    for (const auto& [block, m] : stddev) sd_json[block] = m.to_json();
    return json{{"experiment", experiment}, {"role", std::string(xlstance::to_string(role))},
                {"test_names", test_names}, {"runs", runs_json},
                {"mean", mean_json},        {"stddev", sd_json},
                {"manifest", manifest}};
}

EvalReport EvalReport::from_json(const json& j) {
    StrictObject o(j, "report");
    EvalReport report;
    report.experiment = o.require<std::string>("experiment");
    report.role = parse_role(o.require<std::string>("role"));
    report.test_names = o.require<std::vector<std::string>>("test_names");
    for (const json& rj : o.at("runs")) {
        StrictObject ro(rj, "run");
        SeedRun run;
        run.seed = ro.require<std::uint64_t>("seed");
        const json& by_test = ro.at("metrics");
        for (auto it = by_test.begin(); it != by_test.end(); ++it) {
            run.by_test[it.key()] = Metrics::from_json(it.value(), "metrics." + it.key());
        }
        ro.finish();
        report.runs.push_back(std::move(run));
    }
    const json& mj = o.at("mean");
    for (auto it = mj.begin(); it != mj.end(); ++it) {
        report.mean[it.key()] = Metrics::from_json(it.value(), "mean." + it.key());
    }
    const json& sj = o.at("stddev");
    for (auto it = sj.begin(); it != sj.end(); ++it) {
        report.stddev[it.key()] = Metrics::from_json(it.value(), "stddev." + it.key());
    }
    report.manifest = o.at("manifest");
    o.finish();
    return report;
}

void write_report(const EvalReport& report, const std::string& directory) {
    fs::create_directories(directory);
    {
        std::ofstream out(fs::path(directory) / "report.json");
        if (!out) throw std::runtime_error("cannot write report under " + directory);
        out << report.to_json().dump(2) << "\n";
    }
    {
        std::ofstream out(fs::path(directory) / "manifest.json");
        if (!out) throw std::runtime_error("cannot write manifest under " + directory);
        out << report.manifest.dump(2) << "\n";
    }
}

EvalReport replay_from_manifest(const std::string& manifest_path, TranslationBackend& backend) {
    const json manifest = load_json_file(manifest_path);
    if (!manifest.is_object() || !manifest.contains("spec")) {
        throw ConfigError(manifest_path + ": not a run manifest (missing 'spec')");
    }
    const ExperimentSpec spec = ExperimentSpec::from_json(manifest.at("spec"));
    if (manifest.contains("corpus_digests")) {
        const json& digests = manifest.at("corpus_digests");
        for (auto it = digests.begin(); it != digests.end(); ++it) {
            const std::string current = file_digest_hex(it.key());
            if (current != it.value().get<std::string>()) {
                throw ConfigError("corpus file changed since the manifest was written: " +
                                  it.key());
            }
        }
    }
    return run_experiment(spec, backend);
}

namespace {

std::string fmt_metric(double v) {
    if (std::isnan(v)) return "/";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

void block_cells(std::vector<std::string>& row, const EvalReport& report,
                 const std::string& block) {
    const auto it = report.mean.find(block);
    if (it == report.mean.end()) {
        row.insert(row.end(), {"-", "-", "-", "-"});
        return;
    }
    const Metrics& m = it->second;
    row.push_back(fmt_metric(m.f1_macro_fa_ag));
    row.push_back(fmt_metric(m.accuracy));
    row.push_back(fmt_metric(m.favor_f1));
    row.push_back(fmt_metric(m.against_f1));
}

}  // namespace

std::string render_table(const std::vector<EvalReport>& reports, TableLayout layout) {
    if (reports.empty()) throw std::invalid_argument("no reports to render");
    const std::vector<std::string> blocks =
        layout == TableLayout::table1 ? std::vector<std::string>{"source-test", "target-test"}
                                      : std::vector<std::string>{"target-test"};
    const std::array<const char*, 4> metric_cols = {"F1-score", "Accuracy", "FAVOR-F1-score",
                                                    "AGAINST-F1-score"};

    std::vector<std::vector<std::string>> rows;
    {
        std::vector<std::string> group{""};
        std::vector<std::string> head{"Trained On"};
        for (const std::string& block : blocks) {
            for (std::size_t i = 0; i < metric_cols.size(); ++i) {
                group.push_back(i == 0 ? "Tested on " + block : "");
                head.emplace_back(metric_cols[i]);
            }
        }
        rows.push_back(std::move(group));
        rows.push_back(std::move(head));
    }
    for (const EvalReport& report : reports) {
        std::vector<std::string> row{report.experiment};
        for (const std::string& block : blocks) block_cells(row, report, block);
        rows.push_back(std::move(row));
    }

    std::vector<std::size_t> widths(rows[0].size(), 0);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
    }
    std::ostringstream out;
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out << row[c] << std::string(widths[c] - row[c].size(), ' ');
            out << (c + 1 < row.size() ? "  " : "");
        }
        out << "\n";
    }
    return out.str();
}

void emit_table(const std::vector<EvalReport>& reports, TableLayout layout,
                const std::string& path) {
    const std::string text = render_table(reports, layout);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write table file: " + path);
    out << text;
}

}  // namespace xlstance
