#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xlstance/augmentation.hpp"
#include "xlstance/corpus.hpp"
#include "xlstance/jsonutil.hpp"
#include "xlstance/model.hpp"
#include "xlstance/objectives.hpp"
#include "xlstance/textprep.hpp"
#include "xlstance/translation.hpp"

namespace xlstance {

// One metric block. A quiet NaN marks a value as unavailable; tables
// render it as "/".
struct Metrics {
    double f1_macro_fa_ag = std::numeric_limits<double>::quiet_NaN();
    double f1_macro_3class = std::numeric_limits<double>::quiet_NaN();
    double accuracy = std::numeric_limits<double>::quiet_NaN();
    double favor_f1 = std::numeric_limits<double>::quiet_NaN();
    double against_f1 = std::numeric_limits<double>::quiet_NaN();
    double none_f1 = std::numeric_limits<double>::quiet_NaN();

    json to_json() const;
    static Metrics from_json(const json& j, const std::string& context);
};

// F1 = 2PR/(P+R) with zero-denominator precision/recall/F1 defined as 0.
double per_class_f1(const std::vector<StanceLabel>& gold, const std::vector<StanceLabel>& pred,
                    StanceLabel cls);
double accuracy(const std::vector<StanceLabel>& gold, const std::vector<StanceLabel>& pred);
Metrics compute_metrics(const std::vector<StanceLabel>& gold,
                        const std::vector<StanceLabel>& pred);

// k disjoint test folds covering the corpus exactly once; element i is
// (everything but fold i, fold i). Stratification keeps per-stance fold
// sizes within one example of each other.
std::vector<std::pair<Corpus, Corpus>> kfold(const Corpus& corpus, std::size_t k,
                                             std::uint64_t seed, bool stratify_by_stance);

enum class ExperimentRole { dlb, dub, dr_sweep, da };
const char* to_string(ExperimentRole role);
ExperimentRole parse_role(const std::string& text);

struct CorpusRef {
    std::string path;
    std::string language = "en";

    json to_json() const;
    static CorpusRef from_json(const json& j, const std::string& context);
};

json to_json(const CleaningPolicy& policy);
CleaningPolicy cleaning_from_json(const json& j);
json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const json& j);
json to_json(const LmTrainConfig& cfg);
LmTrainConfig lm_config_from_json(const json& j);
json to_json(const ClassifierTrainConfig& cfg);
ClassifierTrainConfig train_config_from_json(const json& j);
json to_json(const SeparabilityConfig& cfg);
SeparabilityConfig objective_from_json(const json& j);

// A full experiment recipe. Corpora whose language differs from
// base_language are translated to it on load (the pipeline operates in
// the base language); role dub refuses non-base corpora so the upper
// bound never sees translated data.
struct ExperimentSpec {
    std::string name = "experiment";
    ExperimentRole role = ExperimentRole::dlb;
    CorpusRef source;
    std::optional<CorpusRef> target;
    double target_train_fraction = 0.7;
    std::size_t kfolds = 0;  // da only: > 0 replaces the fixed target split
    // < 1 holds out a source test block ("tested on the source language")
    double source_train_fraction = 1.0;
    std::vector<std::string> intermediates;  // dr_sweep pivots; n_R = size
    std::string base_language = "en";

    CleaningPolicy cleaning;
    std::size_t vocab_min_frequency = 2;
    std::size_t vocab_max_size = 30000;
    ModelConfig model;
    LmTrainConfig lm;
    ClassifierTrainConfig train;
    SeparabilityConfig objective;

    std::vector<std::uint64_t> seeds{101, 102, 103, 104, 105};
    std::uint64_t data_seed = 7;
    unsigned jobs = 1;

    void validate() const;
    json to_json() const;
    static ExperimentSpec from_json(const json& j);
};

struct SeedRun {
    std::uint64_t seed = 0;
    std::map<std::string, Metrics> by_test;  // test block name -> metrics
};

struct EvalReport {
    std::string experiment;
    ExperimentRole role = ExperimentRole::dlb;
    std::vector<std::string> test_names;  // block order
    std::vector<SeedRun> runs;
    std::map<std::string, Metrics> mean;
    std::map<std::string, Metrics> stddev;  // population stddev across seeds
    json manifest;  // everything needed to replay: spec, digests, id sets

    json to_json() const;
    static EvalReport from_json(const json& j);
};

// Runs the full per-seed pipeline (load/translate -> split -> augment ->
// textprep -> LM fine-tune -> staged classifier training -> evaluate)
// and aggregates across seeds. A failing seed is recorded in the
// manifest and skipped; if no seed completes the error is rethrown.
EvalReport run_experiment(const ExperimentSpec& spec, TranslationBackend& backend);

// report.json and manifest.json under the directory (created if needed).
void write_report(const EvalReport& report, const std::string& directory);

// Re-runs the experiment stored in a manifest after re-verifying the
// corpus digests. With the mock backend the resulting report payload is
// byte-identical to the original.
EvalReport replay_from_manifest(const std::string& manifest_path, TranslationBackend& backend);

enum class TableLayout { table1, table2 };

// Plain-text table, one row per report. table1 shows a source-language
// block next to the target block; table2 is the target block alone.
// NaN metrics render "/", absent blocks "-".
std::string render_table(const std::vector<EvalReport>& reports, TableLayout layout);
void emit_table(const std::vector<EvalReport>& reports, TableLayout layout,
                const std::string& path);

}  // namespace xlstance
