#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "testutil.hpp"
#include "xlstance/common.hpp"
#include "xlstance/evalharness.hpp"
#include "xlstance/synthetic.hpp"
#include "xlstance/translation.hpp"

using namespace xlstance;
using testutil::read_file;
using testutil::TempDir;
using testutil::write_file;

namespace {

namespace oracle {

struct Tally {
    std::size_t tp = 0, fp = 0, fn = 0;
};

double f1(const std::vector<StanceLabel>& gold, const std::vector<StanceLabel>& pred,
          StanceLabel cls) {
    Tally t;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (pred[i] == cls && gold[i] == cls) ++t.tp;
        if (pred[i] == cls && gold[i] != cls) ++t.fp;
        if (pred[i] != cls && gold[i] == cls) ++t.fn;
    }
    if (t.tp == 0) return 0.0;
    const double p = static_cast<double>(t.tp) / static_cast<double>(t.tp + t.fp);
    const double r = static_cast<double>(t.tp) / static_cast<double>(t.tp + t.fn);
    return 2.0 * p * r / (p + r);
}

}  // namespace oracle

// Forwards to the mock while counting engine calls; used to observe
// load-time translation of non-base corpora.
struct SpyBackend : TranslationBackend {
    MockBackend inner;
    std::size_t calls = 0;
    std::string label = "spy";

    explicit SpyBackend(std::uint64_t seed) : inner(seed) {}
    const std::string& name() const override { return label; }
    bool supports(const std::string& src, const std::string& dst) const override {
        return inner.supports(src, dst);
    }
    std::string translate_raw(const std::string& text, const std::string& src,
                              const std::string& dst) override {
        ++calls;
        return inner.translate_raw(text, src, dst);
    }
};

Corpus tiny_labeled_corpus(std::size_t n, std::uint64_t seed) {
    SyntheticTaskConfig sc;
    sc.examples = n;
    sc.seed = seed;
    return make_synthetic_corpus(sc);
}

// Small, fast recipe shared by the end-to-end harness tests.
ExperimentSpec small_spec(const std::string& source_path) {
    ExperimentSpec spec;
    spec.name = "small";
    spec.source = {source_path, "en"};
    spec.source_train_fraction = 0.8;
    spec.vocab_min_frequency = 1;
    spec.model.embedding_dim = 8;
    spec.model.hidden_dim = 8;
    spec.model.head_hidden_dim = 8;
    spec.model.dropout = 0.0;
    spec.lm.epochs = 1;
    spec.lm.batch_size = 8;
    spec.lm.lr = 0.1;
    spec.train.schedule.epochs_per_stage = {1, 0, 0, 1};
    spec.train.batch_size = 8;
    spec.train.dropout_enabled = false;
    spec.objective.alpha = 0.25;
    spec.seeds = {9};
    return spec;
}

std::vector<std::string> corpus_ids(const Corpus& c) {
    std::vector<std::string> out;
    for (const auto& ex : c.examples()) out.push_back(ex.id);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST_CASE("the worked metric example") {
    using enum StanceLabel;
    const std::vector<StanceLabel> gold{favor, favor, against, none};
    const std::vector<StanceLabel> pred{favor, against, against, none};

    CHECK(per_class_f1(gold, pred, favor) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(per_class_f1(gold, pred, against) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(per_class_f1(gold, pred, none) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(accuracy(gold, pred) == doctest::Approx(0.75).epsilon(1e-12));

    const Metrics m = compute_metrics(gold, pred);
    CHECK(m.f1_macro_fa_ag == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(m.f1_macro_3class == doctest::Approx(7.0 / 9.0).epsilon(1e-12));
    CHECK(m.accuracy == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("metrics match the scalar oracle on random predictions") {
    std::mt19937_64 rng(321);
    const std::array<StanceLabel, 3> labels{StanceLabel::favor, StanceLabel::against,
                                            StanceLabel::none};
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + uniform_below(rng, 30);
        std::vector<StanceLabel> gold, pred;
        for (std::size_t i = 0; i < n; ++i) {
            gold.push_back(labels[uniform_below(rng, 3)]);
            pred.push_back(labels[uniform_below(rng, 3)]);
        }
        std::size_t hits = 0;
        for (std::size_t i = 0; i < n; ++i) hits += gold[i] == pred[i] ? 1 : 0;

        const Metrics m = compute_metrics(gold, pred);
        for (StanceLabel cls : labels) {
            CHECK(std::abs(per_class_f1(gold, pred, cls) - oracle::f1(gold, pred, cls)) <
                  1e-12);
        }
        CHECK(std::abs(m.favor_f1 - oracle::f1(gold, pred, StanceLabel::favor)) < 1e-12);
        CHECK(std::abs(m.against_f1 - oracle::f1(gold, pred, StanceLabel::against)) < 1e-12);
        CHECK(std::abs(m.none_f1 - oracle::f1(gold, pred, StanceLabel::none)) < 1e-12);
        CHECK(std::abs(m.f1_macro_fa_ag - (m.favor_f1 + m.against_f1) / 2.0) < 1e-12);
        CHECK(std::abs(m.f1_macro_3class - (m.favor_f1 + m.against_f1 + m.none_f1) / 3.0) <
              1e-12);
        CHECK(std::abs(m.accuracy - static_cast<double>(hits) / static_cast<double>(n)) <
              1e-12);
    }
}

TEST_CASE("metric edge cases") {
    using enum StanceLabel;
    CHECK_THROWS_AS(compute_metrics({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(compute_metrics({favor}, {favor, none}), std::invalid_argument);
    // a class never predicted and never gold scores 0, not NaN
    const Metrics m = compute_metrics({favor, favor}, {favor, favor});
    CHECK(m.against_f1 == 0.0);
    CHECK(m.none_f1 == 0.0);
    CHECK(m.favor_f1 == 1.0);
}

TEST_CASE("metrics json uses null for unavailable values") {
    Metrics m;
    m.accuracy = 0.5;
    const json j = m.to_json();
    CHECK(j.at("accuracy") == 0.5);
    CHECK(j.at("favor_f1").is_null());
    const Metrics back = Metrics::from_json(j, "test");
    CHECK(back.accuracy == 0.5);
    CHECK(std::isnan(back.favor_f1));

    json bad = j;
    bad["extra"] = 1;
    CHECK_THROWS_WITH_AS(Metrics::from_json(bad, "test"),
                         doctest::Contains("extra"), ConfigError);
}

TEST_CASE("kfold partitions the corpus") {
    const Corpus corpus = tiny_labeled_corpus(23, 3);
    for (bool stratify : {false, true}) {
        CAPTURE(stratify);
        const auto folds = kfold(corpus, 5, 11, stratify);
        REQUIRE(folds.size() == 5);
        std::set<std::string> seen;
        for (const auto& [train, test] : folds) {
            CHECK(train.size() + test.size() == corpus.size());
            CHECK(test.size() >= 23 / 5);
            CHECK(test.size() <= 23 / 5 + 1);
            std::set<std::string> train_ids;
            for (const auto& ex : train.examples()) train_ids.insert(ex.id);
            for (const auto& ex : test.examples()) {
                CHECK(train_ids.count(ex.id) == 0);
                CHECK(seen.insert(ex.id).second);
            }
        }
        CHECK(seen.size() == corpus.size());
    }
}

TEST_CASE("stratified kfold balances each stance") {
    const Corpus corpus = tiny_labeled_corpus(23, 4);
    const auto folds = kfold(corpus, 4, 2, true);
    std::map<StanceLabel, std::size_t> totals;
    for (const auto& ex : corpus.examples()) ++totals[ex.stance];
    for (const auto& [train, test] : folds) {
        std::map<StanceLabel, std::size_t> in_fold;
        for (const auto& ex : test.examples()) ++in_fold[ex.stance];
        for (const auto& [stance, total] : totals) {
            const double ideal = static_cast<double>(total) / 4.0;
            CHECK(std::abs(static_cast<double>(in_fold[stance]) - ideal) <= 1.0);
        }
    }
}

TEST_CASE("kfold is seed-deterministic and validates its arguments") {
    const Corpus corpus = tiny_labeled_corpus(12, 5);
    const auto a = kfold(corpus, 3, 7, true);
    const auto b = kfold(corpus, 3, 7, true);
    for (std::size_t i = 0; i < 3; ++i) CHECK(corpus_ids(a[i].second) == corpus_ids(b[i].second));
    const auto c = kfold(corpus, 3, 8, true);
    bool any_differ = false;
    for (std::size_t i = 0; i < 3; ++i) {
        if (corpus_ids(a[i].second) != corpus_ids(c[i].second)) any_differ = true;
    }
    CHECK(any_differ);
    CHECK_THROWS_AS(kfold(corpus, 1, 7, false), std::invalid_argument);
    CHECK_THROWS_AS(kfold(corpus, 13, 7, false), std::invalid_argument);
}

TEST_CASE("experiment roles parse and print") {
    CHECK(parse_role("dlb") == ExperimentRole::dlb);
    CHECK(parse_role("dub") == ExperimentRole::dub);
    CHECK(parse_role("dr_sweep") == ExperimentRole::dr_sweep);
    CHECK(parse_role("da") == ExperimentRole::da);
    CHECK(std::string(to_string(ExperimentRole::dr_sweep)) == "dr_sweep");
    CHECK_THROWS_AS(parse_role("upper"), ConfigError);
}

TEST_CASE("experiment spec round-trips through json") {
    ExperimentSpec spec;
    spec.name = "zulu-dr";
    spec.role = ExperimentRole::dr_sweep;
    spec.source = {"data/eng.jsonl", "en"};
    spec.target = CorpusRef{"data/zulu.jsonl", "zu"};
    spec.target_train_fraction = 0.3;
    spec.source_train_fraction = 0.9;
    spec.intermediates = {"zu", "xh"};
    spec.vocab_min_frequency = 1;
    spec.vocab_max_size = 500;
    spec.model.embedding_dim = 12;
    spec.lm.epochs = 2;
    spec.train.sep_point = SepPoint::head_hidden;
    spec.objective.alpha = 0.5;
    spec.objective.target_class_counts = {{4, 5, 6}};
    spec.seeds = {1, 2};
    spec.data_seed = 99;

    const json j = spec.to_json();
    const ExperimentSpec back = ExperimentSpec::from_json(j);
    CHECK(back.to_json() == j);
    CHECK(back.name == "zulu-dr");
    CHECK(back.role == ExperimentRole::dr_sweep);
    CHECK(back.target.has_value());
    CHECK(back.target->language == "zu");
    CHECK(back.intermediates == std::vector<std::string>{"zu", "xh"});
    CHECK(back.train.sep_point == SepPoint::head_hidden);
    CHECK(back.objective.target_class_counts ==
          std::optional<std::array<std::size_t, 3>>{{{4, 5, 6}}});

    SUBCASE("unknown keys are named in the error") {
        json bad = j;
        bad["n_r"] = 3;
        CHECK_THROWS_WITH_AS(ExperimentSpec::from_json(bad), doctest::Contains("n_r"),
                             ConfigError);
    }
    SUBCASE("nested unknown keys are rejected too") {
        json bad = j;
        bad["model"]["layers"] = 4;
        CHECK_THROWS_AS(ExperimentSpec::from_json(bad), ConfigError);
    }
}

TEST_CASE("experiment validation enforces the role contracts") {
    ExperimentSpec spec;
    spec.source = {"s.jsonl", "en"};
    spec.model.embedding_dim = 8;

    SUBCASE("dlb needs some test block") {
        spec.role = ExperimentRole::dlb;
        spec.source_train_fraction = 1.0;
        spec.target.reset();
        CHECK_THROWS_AS(spec.validate(), ConfigError);
        spec.source_train_fraction = 0.8;
        CHECK_NOTHROW(spec.validate());
    }
    SUBCASE("dlb and dub take no intermediates") {
        spec.role = ExperimentRole::dlb;
        spec.source_train_fraction = 0.8;
        spec.intermediates = {"zu"};
        CHECK_THROWS_AS(spec.validate(), ConfigError);
    }
    SUBCASE("dub never sees translated data") {
        spec.role = ExperimentRole::dub;
        spec.target = CorpusRef{"t.jsonl", "zu"};
        CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("translated"), ConfigError);
        spec.target->language = "en";
        CHECK_NOTHROW(spec.validate());
    }
    SUBCASE("dub without a target needs a source holdout") {
        spec.role = ExperimentRole::dub;
        spec.target.reset();
        spec.source_train_fraction = 1.0;
        CHECK_THROWS_AS(spec.validate(), ConfigError);
        spec.source_train_fraction = 0.7;
        CHECK_NOTHROW(spec.validate());
    }
    SUBCASE("da needs a target and a sane fold count") {
        spec.role = ExperimentRole::da;
        spec.target.reset();
        CHECK_THROWS_AS(spec.validate(), ConfigError);
        spec.target = CorpusRef{"t.jsonl", "en"};
        spec.kfolds = 1;
        CHECK_THROWS_AS(spec.validate(), ConfigError);
        spec.kfolds = 0;
        CHECK_NOTHROW(spec.validate());
        spec.kfolds = 3;
        CHECK_NOTHROW(spec.validate());
    }
    SUBCASE("duplicate intermediates are rejected") {
        spec.role = ExperimentRole::dr_sweep;
        spec.source_train_fraction = 0.8;
        spec.intermediates = {"zu", "zu"};
        CHECK_THROWS_AS(spec.validate(), ConfigError);
    }
    SUBCASE("fractions must stay in range") {
        spec.role = ExperimentRole::da;
        spec.target = CorpusRef{"t.jsonl", "en"};
        spec.target_train_fraction = 1.0;
        CHECK_THROWS_AS(spec.validate(), ConfigError);
        spec.target_train_fraction = 0.0;
        CHECK_THROWS_AS(spec.validate(), ConfigError);
    }
}

TEST_CASE("non-base corpora are translated at load") {
    TempDir tmp;
    Corpus source = tiny_labeled_corpus(12, 6);
    save_jsonl(source, tmp.file("source.jsonl"));

    ExperimentSpec spec = small_spec(tmp.file("source.jsonl"));
    spec.source.language = "it";
    spec.lm.epochs = 0;
    SpyBackend spy(5);
    const EvalReport report = run_experiment(spec, spy);
    CHECK(spy.calls == source.size());
    CHECK(report.test_names == std::vector<std::string>{"source-test"});

    SpyBackend idle(5);
    ExperimentSpec base_spec = small_spec(tmp.file("source.jsonl"));
    base_spec.lm.epochs = 0;
    run_experiment(base_spec, idle);
    CHECK(idle.calls == 0);
}

TEST_CASE("dr_sweep with no intermediates reproduces the dlb pipeline") {
    TempDir tmp;
    Corpus source = tiny_labeled_corpus(60, 7);
    MockBackend mock(31);
    Corpus target = perturb_corpus(source, mock, "zu", "en", "rt");
    save_jsonl(source, tmp.file("source.jsonl"));
    save_jsonl(target, tmp.file("target.jsonl"));

    ExperimentSpec dlb = small_spec(tmp.file("source.jsonl"));
    dlb.role = ExperimentRole::dlb;
    dlb.target = CorpusRef{tmp.file("target.jsonl"), "en"};

    ExperimentSpec sweep = dlb;
    sweep.name = "sweep0";
    sweep.role = ExperimentRole::dr_sweep;
    sweep.intermediates = {};

    MockBackend b1(31), b2(31);
    const EvalReport ra = run_experiment(dlb, b1);
    const EvalReport rb = run_experiment(sweep, b2);
    REQUIRE(ra.runs.size() == 1);
    REQUIRE(rb.runs.size() == 1);
    for (const std::string& block : ra.test_names) {
        CAPTURE(block);
        CHECK(ra.runs[0].by_test.at(block).to_json() == rb.runs[0].by_test.at(block).to_json());
    }
}

TEST_CASE("experiments run end to end and aggregate seeds") {
    TempDir tmp;
    Corpus source = tiny_labeled_corpus(60, 8);
    MockBackend mock(33);
    Corpus target = perturb_corpus(source, mock, "zu", "en", "rt");
    save_jsonl(source, tmp.file("source.jsonl"));
    save_jsonl(target, tmp.file("target.jsonl"));

    ExperimentSpec spec = small_spec(tmp.file("source.jsonl"));
    spec.name = "dr-tiny";
    spec.role = ExperimentRole::dr_sweep;
    spec.intermediates = {"zu"};
    spec.target = CorpusRef{tmp.file("target.jsonl"), "en"};
    spec.seeds = {9, 10};

    MockBackend backend(33);
    const EvalReport report = run_experiment(spec, backend);
    CHECK(report.experiment == "dr-tiny");
    CHECK(report.role == ExperimentRole::dr_sweep);
    CHECK(report.test_names == std::vector<std::string>{"source-test", "target-test"});
    REQUIRE(report.runs.size() == 2);
    CHECK(report.runs[0].seed == 9);
    CHECK(report.runs[1].seed == 10);

    for (const std::string& block : report.test_names) {
        const double a = report.runs[0].by_test.at(block).accuracy;
        const double b = report.runs[1].by_test.at(block).accuracy;
        CHECK(report.mean.at(block).accuracy == doctest::Approx((a + b) / 2.0).epsilon(1e-12));
        const double mu = (a + b) / 2.0;
        const double var = ((a - mu) * (a - mu) + (b - mu) * (b - mu)) / 2.0;
        CHECK(report.stddev.at(block).accuracy ==
              doctest::Approx(std::sqrt(var)).epsilon(1e-9));
    }

    SUBCASE("the manifest keeps train and test ids disjoint") {
        REQUIRE(report.manifest.contains("folds"));
        for (const auto& fold : report.manifest.at("folds")) {
            std::set<std::string> train(fold.at("train_ids").begin(),
                                        fold.at("train_ids").end());
            CHECK_FALSE(train.empty());
            for (const auto& [block, ids] : fold.at("test_ids").items()) {
                CHECK_FALSE(ids.empty());
                for (const auto& id : ids) {
                    CHECK(train.count(id.get<std::string>()) == 0);
                }
            }
        }
    }
    SUBCASE("the report json round-trips") {
        const json j = report.to_json();
        const EvalReport back = EvalReport::from_json(j);
        CHECK(back.to_json() == j);
    }
}

TEST_CASE("reports replay byte-identically from their manifests") {
    TempDir tmp;
    Corpus source = tiny_labeled_corpus(40, 9);
    save_jsonl(source, tmp.file("source.jsonl"));

    ExperimentSpec spec = small_spec(tmp.file("source.jsonl"));
    MockBackend b1(17);
    const EvalReport original = run_experiment(spec, b1);
    write_report(original, tmp.file("out"));

    const std::string payload = read_file(tmp.file("out/report.json"));
    CHECK(payload == original.to_json().dump(2) + "\n");

    MockBackend b2(17);
    const EvalReport replayed = replay_from_manifest(tmp.file("out/manifest.json"), b2);
    CHECK(replayed.to_json().dump(2) == original.to_json().dump(2));

    SUBCASE("a changed corpus file is refused") {
        Corpus other = tiny_labeled_corpus(40, 10);
        save_jsonl(other, tmp.file("source.jsonl"));
        MockBackend b3(17);
        CHECK_THROWS_WITH_AS(replay_from_manifest(tmp.file("out/manifest.json"), b3),
                             doctest::Contains("source.jsonl"), ConfigError);
    }
}

TEST_CASE("da uses a fixed target split or k folds") {
    TempDir tmp;
    Corpus source = tiny_labeled_corpus(30, 11);
    MockBackend mock(12);
    Corpus target = perturb_corpus(tiny_labeled_corpus(24, 12), mock, "xh", "en", "rt");
    save_jsonl(source, tmp.file("source.jsonl"));
    save_jsonl(target, tmp.file("target.jsonl"));

    ExperimentSpec spec = small_spec(tmp.file("source.jsonl"));
    spec.name = "da";
    spec.role = ExperimentRole::da;
    spec.source_train_fraction = 1.0;
    spec.target = CorpusRef{tmp.file("target.jsonl"), "en"};
    spec.target_train_fraction = 0.5;

    MockBackend backend(3);
    const EvalReport fixed = run_experiment(spec, backend);
    CHECK(fixed.test_names == std::vector<std::string>{"target-test"});
    CHECK(fixed.manifest.at("folds").size() == 1);

    spec.kfolds = 3;
    MockBackend b2(3);
    const EvalReport folded = run_experiment(spec, b2);
    CHECK(folded.manifest.at("folds").size() == 3);
    std::set<std::string> covered;
    for (const auto& fold : folded.manifest.at("folds")) {
        for (const auto& id : fold.at("test_ids").at("target-test")) {
            CHECK(covered.insert(id.get<std::string>()).second);
        }
    }
    CHECK(covered.size() == target.size());
}

TEST_CASE("dub trains and tests inside the target domain") {
    TempDir tmp;
    Corpus target = tiny_labeled_corpus(30, 13);
    save_jsonl(target, tmp.file("target.jsonl"));

    ExperimentSpec spec = small_spec(tmp.file("target.jsonl"));
    spec.name = "dub";
    spec.role = ExperimentRole::dub;
    spec.source = {tmp.file("target.jsonl"), "en"};
    spec.target = CorpusRef{tmp.file("target.jsonl"), "en"};
    spec.source_train_fraction = 1.0;
    spec.target_train_fraction = 0.7;

    MockBackend backend(3);
    const EvalReport report = run_experiment(spec, backend);
    CHECK(report.test_names == std::vector<std::string>{"target-test"});
    const auto& fold = report.manifest.at("folds").at(0);
    CHECK(fold.at("train_ids").size() + fold.at("test_ids").at("target-test").size() ==
          target.size());
}

TEST_CASE("an experiment whose every seed fails rethrows the error") {
    TempDir tmp;
    Corpus source = tiny_labeled_corpus(20, 14);
    save_jsonl(source, tmp.file("source.jsonl"));

    ExperimentSpec spec = small_spec(tmp.file("source.jsonl"));
    spec.model.classes = 2;  // stance NONE is out of range for the head
    MockBackend backend(3);
    CHECK_THROWS(run_experiment(spec, backend));
}

TEST_CASE("tables render NaN as a slash and absent blocks as dashes") {
    EvalReport a;
    a.experiment = "eng-only";
    a.role = ExperimentRole::dlb;
    a.test_names = {"source-test", "target-test"};
    Metrics src;
    src.f1_macro_fa_ag = 0.75;
    src.accuracy = 0.8125;
    src.favor_f1 = 0.7;
    src.against_f1 = 0.8;
    Metrics tgt;
    tgt.f1_macro_fa_ag = 0.4906;
    tgt.accuracy = 0.55;
    tgt.favor_f1 = std::numeric_limits<double>::quiet_NaN();
    tgt.against_f1 = 0.6;
    a.mean = {{"source-test", src}, {"target-test", tgt}};

    EvalReport b;
    b.experiment = "zulu-only";
    b.role = ExperimentRole::dub;
    b.test_names = {"target-test"};
    Metrics only;
    only.f1_macro_fa_ag = 0.5493;
    only.accuracy = 0.6;
    only.favor_f1 = 0.5;
    only.against_f1 = 0.59;
    b.mean = {{"target-test", only}};

    const std::string table1 = render_table({a, b}, TableLayout::table1);
    CHECK(table1.find("Tested on source-test") != std::string::npos);
    CHECK(table1.find("Tested on target-test") != std::string::npos);
    CHECK(table1.find("Trained On") != std::string::npos);
    CHECK(table1.find("F1-score") != std::string::npos);
    CHECK(table1.find("FAVOR-F1-score") != std::string::npos);
    CHECK(table1.find("AGAINST-F1-score") != std::string::npos);
    CHECK(table1.find("eng-only") != std::string::npos);
    CHECK(table1.find("0.7500") != std::string::npos);
    CHECK(table1.find("0.4906") != std::string::npos);
    CHECK(table1.find("/") != std::string::npos);
    CHECK(table1.find("-") != std::string::npos);

    const std::string table2 = render_table({a, b}, TableLayout::table2);
    CHECK(table2.find("Tested on target-test") != std::string::npos);
    CHECK(table2.find("Tested on source-test") == std::string::npos);
    CHECK(table2.find("0.5493") != std::string::npos);

    SUBCASE("every line is padded to aligned columns") {
        std::size_t pos = 0;
        std::vector<std::string> lines;
        while (pos < table1.size()) {
            const std::size_t nl = table1.find('\n', pos);
            lines.push_back(table1.substr(pos, nl - pos));
            pos = nl + 1;
        }
        REQUIRE(lines.size() >= 4);
        CHECK(lines[1].size() == lines[2].size());
    }
}
