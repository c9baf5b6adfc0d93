#include <CLI11.hpp>

#include <cstdlib>
#include <fcntl.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <utility>

#include "xlstance/augmentation.hpp"
#include "xlstance/evalharness.hpp"
#include "xlstance/jsonutil.hpp"
#include "xlstance/model.hpp"
#include "xlstance/synthetic.hpp"
#include "xlstance/textprep.hpp"
#include "xlstance/translation.hpp"

namespace fs = std::filesystem;
using namespace xlstance;

namespace {

// Guards an output directory against concurrent runs. The lock file is
// created exclusively and removed on scope exit; a stale file from a
// crashed run must be removed by hand, which the error message says.
class DirLock {
public:
    explicit DirLock(const fs::path& dir) : path_(dir / ".lock") {
        fs::create_directories(dir);
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0) {
            throw std::runtime_error("output directory is locked by another run: " +
                                     path_.string() + " (remove the file if no run is active)");
        }
    }
    ~DirLock() {
        if (fd_ >= 0) {
            ::close(fd_);
            std::error_code ec;
            fs::remove(path_, ec);
        }
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    fs::path path_;
    int fd_ = -1;
};

struct CliOverrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string backend;
    std::string out;
    std::optional<unsigned> jobs;
};

MockNoiseConfig noise_from_json(const json& j) {
    StrictObject o(j, "mock.noise");
    MockNoiseConfig cfg;
    cfg.dropout_prob = o.get_or("dropout_prob", cfg.dropout_prob);
    cfg.swap_prob = o.get_or("swap_prob", cfg.swap_prob);
    cfg.duplicate_prob = o.get_or("duplicate_prob", cfg.duplicate_prob);
    o.finish();
    cfg.validate();
    return cfg;
}

struct BackendBundle {
    std::unique_ptr<TranslationBackend> engine;
    std::unique_ptr<TranslationCache> cache;
    std::unique_ptr<CachedBackend> cached;

    TranslationBackend& active() { return cached ? *cached : *engine; }
};

BackendBundle make_backend(const std::string& choice, const json& config) {
    BackendBundle b;
    std::string cache_path;
    if (config.contains("cache_path")) cache_path = config.at("cache_path").get<std::string>();

    if (choice == "mock" || choice == "cached") {
        std::uint64_t seed = 0;
        MockNoiseConfig noise;
        if (config.contains("mock")) {
            StrictObject m(config.at("mock"), "mock");
            seed = m.get_or<std::uint64_t>("seed", seed);
            if (const json* n = m.find("noise")) noise = noise_from_json(*n);
            m.finish();
        }
        b.engine = std::make_unique<MockBackend>(seed, noise);
        if (choice == "cached" && cache_path.empty()) {
            throw ConfigError("backend 'cached' requires cache_path in the config");
        }
    } else if (choice == "live") {
        HttpBackendConfig http;
        std::string key_env = "XLSTANCE_MT_API_KEY";
        if (config.contains("live")) {
            StrictObject l(config.at("live"), "live");
            http.endpoint = l.get_or<std::string>("endpoint", http.endpoint);
            http.path = l.get_or<std::string>("path", http.path);
            key_env = l.get_or<std::string>("api_key_env", key_env);
            http.attempts = l.get_or("attempts", http.attempts);
            http.backoff_initial_ms = l.get_or("backoff_initial_ms", http.backoff_initial_ms);
            http.timeout_s = l.get_or("timeout_s", http.timeout_s);
            l.finish();
        }
        if (http.endpoint.empty()) {
            throw ConfigError("backend 'live' requires live.endpoint in the config");
        }
        const char* key = std::getenv(key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw ConfigError("backend 'live' needs credentials: set " + key_env +
                              " (or pick --backend mock for offline runs)");
        }
        http.api_key = key;
        b.engine = std::make_unique<HttpBackend>(http);
    } else {
        throw ConfigError("unknown backend '" + choice + "' (expected mock, cached or live)");
    }

    if (!cache_path.empty()) {
        fs::path p(cache_path);
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        b.cache = std::make_unique<TranslationCache>(cache_path);
        b.cached = std::make_unique<CachedBackend>(*b.engine, *b.cache);
    }
    return b;
}

struct RunContext {
    json config;          // resolved: overrides already applied
    fs::path out_dir;
    std::string backend_choice;
    std::optional<std::uint64_t> seed_override;
    unsigned jobs = 1;
};

RunContext make_context(const CliOverrides& cli, const char* command) {
    if (cli.config_path.empty()) throw ConfigError("--config is required");
    json config = load_json_file(cli.config_path);
    if (!config.is_object()) throw ConfigError(cli.config_path + ": config must be an object");

    {
        StrictObject top(config, "config");
        for (const char* key : {"backend", "mock", "cache_path", "live", "out_dir", "jobs",
                                "seed", "build", "train", "eval", "reproduce"}) {
            top.find(key);
        }
        top.finish();
    }

    RunContext ctx;
    if (!cli.backend.empty()) config["backend"] = cli.backend;
    if (!cli.out.empty()) config["out_dir"] = cli.out;
    if (cli.jobs) config["jobs"] = *cli.jobs;
    if (cli.seed) config["seed"] = *cli.seed;

    ctx.backend_choice = config.value("backend", std::string("mock"));
    if (!config.contains("out_dir")) {
        throw ConfigError("out_dir must be set in the config or via --out");
    }
    ctx.out_dir = fs::path(config.at("out_dir").get<std::string>());
    ctx.jobs = config.value("jobs", 1u);
    if (ctx.jobs == 0) throw ConfigError("jobs must be >= 1");
    if (config.contains("seed")) ctx.seed_override = config.at("seed").get<std::uint64_t>();
    if (!config.contains(command)) {
        throw ConfigError(std::string("config has no '") + command + "' section");
    }
    ctx.config = std::move(config);
    return ctx;
}

void write_resolved_config(const RunContext& ctx) {
    std::ofstream out(ctx.out_dir / "resolved_config.json");
    if (!out) throw std::runtime_error("cannot write resolved config under " + ctx.out_dir.string());
    out << ctx.config.dump(2) << "\n";
}

Corpus load_ref(const json& j, const std::string& context) {
    const CorpusRef ref = CorpusRef::from_json(j, context);
    if (ref.path.ends_with(".jsonl")) return load_jsonl(ref.path);
    return parse_semeval(ref.path, ref.language);
}

int cmd_build(RunContext& ctx, TranslationBackend& backend) {
    StrictObject o(ctx.config.at("build"), "build");
    AugmentationPlan plan;
    const std::string mode = o.require<std::string>("mode");
    if (mode == "dr") {
        plan.mode = AugmentationMode::dr;
    } else if (mode == "dg") {
        plan.mode = AugmentationMode::dg;
    } else {
        throw ConfigError("build: mode must be dr or dg");
    }
    plan.base_language = o.get_or<std::string>("base_language", plan.base_language);
    plan.seed = o.require<std::uint64_t>("seed");
    const std::string output = o.require<std::string>("output");

    Corpus result("pending");
    if (plan.mode == AugmentationMode::dr) {
        Corpus source = load_ref(o.at("corpus"), "build.corpus");
        if (const json* preset = o.find("preset")) {
            plan.intermediates = intermediate_preset(preset->get<std::string>());
        } else {
            plan.intermediates = o.require<std::vector<std::string>>("intermediates");
        }
        o.finish();
        for (const std::string& w : plan.validate()) std::cerr << "warning: " << w << "\n";
        result = build_dr(plan, source, backend, ctx.jobs);
    } else {
        const json& refs = o.at("sources");
        if (!refs.is_array() || refs.size() < 2) {
            throw ConfigError("build: dg needs at least 2 sources");
        }
        std::vector<Corpus> sources;
        for (const json& rj : refs) {
            const CorpusRef ref = CorpusRef::from_json(rj, "build.sources[]");
            plan.sources.emplace_back(ref.path, ref.language);
            sources.push_back(load_ref(rj, "build.sources[]"));
        }
        o.finish();
        for (const std::string& w : plan.validate()) std::cerr << "warning: " << w << "\n";
        result = build_dg(plan, sources, backend, ctx.jobs);
    }

    const fs::path out_path = ctx.out_dir / output;
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    save_jsonl(result, out_path.string());
    write_resolved_config(ctx);
    std::cout << "wrote " << result.size() << " examples to " << out_path.string() << "\n";
    return 0;
}

int cmd_train(RunContext& ctx, TranslationBackend& backend) {
    StrictObject o(ctx.config.at("train"), "train");
    const std::string base_language = o.get_or<std::string>("base_language", "en");
    CorpusRef ref = CorpusRef::from_json(o.at("corpus"), "train.corpus");

    CleaningPolicy cleaning;
    if (const json* c = o.find("cleaning")) cleaning = cleaning_from_json(*c);
    const std::size_t min_freq = o.get_or<std::size_t>("vocab_min_frequency", 2);
    const std::size_t max_vocab = o.get_or<std::size_t>("vocab_max_size", 30000);
    ModelConfig mc;
    if (const json* m = o.find("model")) mc = model_config_from_json(*m);
    LmTrainConfig lm;
    if (const json* l = o.find("lm")) lm = lm_config_from_json(*l);
    ClassifierTrainConfig tc;
    if (const json* t = o.find("classifier")) tc = train_config_from_json(*t);
    SeparabilityConfig objective;
    if (const json* ob = o.find("objective")) objective = objective_from_json(*ob);
    std::uint64_t seed = o.get_or<std::uint64_t>("seed", 101);
    if (ctx.seed_override) seed = *ctx.seed_override;
    const std::string checkpoint = o.get_or<std::string>("checkpoint", "model.xlsm");
    const std::string vocab_file = o.get_or<std::string>("vocab_file", "vocab.txt");
    o.finish();
    objective.validate();

    Corpus corpus = load_ref(ctx.config.at("train").at("corpus"), "train.corpus");
    if (ref.language != base_language) {
        corpus = translate_corpus(corpus, ref.language, base_language,
                                  corpus.domain_id() + "-" + base_language, backend, ctx.jobs);
    }

    std::vector<std::vector<std::string>> docs;
    docs.reserve(corpus.size());
    for (const auto& ex : corpus) docs.push_back(tokenize(clean(ex.text, cleaning)));
    const Vocabulary vocab = Vocabulary::build(docs, min_freq, max_vocab);

    std::vector<std::vector<std::uint32_t>> seqs;
    seqs.reserve(docs.size());
    for (const auto& doc : docs) {
        std::vector<std::uint32_t> ids{Vocabulary::kBos};
        for (std::uint32_t id : numericalize(doc, vocab)) ids.push_back(id);
        ids.push_back(Vocabulary::kEos);
        seqs.push_back(std::move(ids));
    }

    mc.vocab_size = vocab.size();
    mc.init_seed = seed;
    StanceModel model(mc);
    if (lm.epochs > 0 && seqs.size() >= 2) {
        lm.seed = seed;
        const LmStats stats = model.finetune_lm(seqs, lm);
        std::cout << "lm holdout loss " << stats.holdout_loss_before << " -> "
                  << stats.holdout_loss_after << "\n";
    }

    ClassifierDataset data;
    data.sequences = seqs;
    for (const auto& ex : corpus) {
        data.labels.push_back(stance_index(ex.stance));
        data.domains.push_back(corpus.domain_id());
    }
    tc.seed = seed;
    const TrainLog log = model.train_classifier(data, tc, objective);

    model.save((ctx.out_dir / checkpoint).string());
    vocab.save((ctx.out_dir / vocab_file).string());
    write_resolved_config(ctx);
    std::cout << "trained " << log.epochs << " epochs (" << log.batches
              << " batches), final epoch loss " << log.final_epoch_loss << "\n";
    std::cout << "checkpoint: " << (ctx.out_dir / checkpoint).string() << "\n";
    return 0;
}

std::vector<EvalReport> run_experiments(RunContext& ctx, TranslationBackend& backend,
                                        const json& list) {
    if (!list.is_array() || list.empty()) {
        throw ConfigError("experiments must be a non-empty array");
    }
    std::vector<EvalReport> reports;
    for (const json& sj : list) {
        ExperimentSpec spec = ExperimentSpec::from_json(sj);
        if (ctx.seed_override) spec.seeds = {*ctx.seed_override};
        spec.jobs = ctx.jobs;
        EvalReport report = run_experiment(spec, backend);
        write_report(report, (ctx.out_dir / spec.name).string());
        const auto it = report.mean.find("target-test");
        std::cout << spec.name << ": ";
        if (it != report.mean.end()) {
            std::cout << "target-test F1 " << it->second.f1_macro_fa_ag;
        } else {
            std::cout << "source-test F1 " << report.mean.at("source-test").f1_macro_fa_ag;
        }
        std::cout << "\n";
        reports.push_back(std::move(report));
    }
    return reports;
}

int cmd_eval(RunContext& ctx, TranslationBackend& backend) {
    StrictObject o(ctx.config.at("eval"), "eval");
    const json experiments = o.at("experiments");
    o.finish();
    run_experiments(ctx, backend, experiments);
    write_resolved_config(ctx);
    return 0;
}

int cmd_reproduce(RunContext& ctx, TranslationBackend& backend) {
    StrictObject o(ctx.config.at("reproduce"), "reproduce");
    const json experiments = o.at("experiments");
    const json tables = o.at("tables");
    o.finish();
    if (!tables.is_array() || tables.empty()) {
        throw ConfigError("reproduce: tables must be a non-empty array");
    }

    const std::vector<EvalReport> reports = run_experiments(ctx, backend, experiments);
    for (const json& tj : tables) {
        StrictObject to(tj, "reproduce.tables[]");
        const std::string layout_name = to.require<std::string>("layout");
        TableLayout layout;
        if (layout_name == "table1") {
            layout = TableLayout::table1;
        } else if (layout_name == "table2") {
            layout = TableLayout::table2;
        } else {
            throw ConfigError("reproduce: layout must be table1 or table2");
        }
        const auto rows = to.require<std::vector<std::string>>("rows");
        const std::string file = to.require<std::string>("file");
        to.finish();

        std::vector<EvalReport> selected;
        for (const std::string& name : rows) {
            auto it = std::find_if(reports.begin(), reports.end(),
                                   [&](const EvalReport& r) { return r.experiment == name; });
            if (it == reports.end()) {
                throw ConfigError("reproduce: table row '" + name +
                                  "' matches no experiment in this config");
            }
            selected.push_back(*it);
        }
        emit_table(selected, layout, (ctx.out_dir / file).string());
        std::cout << "\n" << render_table(selected, layout);
    }
    write_resolved_config(ctx);
    return 0;
}

int dispatch(const CliOverrides& cli, const char* command) {
    RunContext ctx = make_context(cli, command);
    DirLock lock(ctx.out_dir);
    BackendBundle backend = make_backend(ctx.backend_choice, ctx.config);
    if (std::string(command) == "build") return cmd_build(ctx, backend.active());
    if (std::string(command) == "train") return cmd_train(ctx, backend.active());
    if (std::string(command) == "eval") return cmd_eval(ctx, backend.active());
    return cmd_reproduce(ctx, backend.active());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cross-lingual stance detection pipeline"};
    app.require_subcommand(1);

    CliOverrides cli;
    const char* chosen = nullptr;
    const std::pair<const char*, const char*> subcommands[] = {
        {"build", "construct an augmented corpus (domain randomization or generalization)"},
        {"train", "pretrain the language model and fit a stance classifier"},
        {"eval", "run experiments and write per-experiment reports"},
        {"reproduce", "run experiments and render result tables"},
    };
    for (const auto& [name, blurb] : subcommands) {
        CLI::App* sub = app.add_subcommand(name, blurb);
        sub->add_option("--config", cli.config_path, "config file (json)")->required();
        sub->add_option("--seed", cli.seed, "override the configured seed(s)");
        sub->add_option("--backend", cli.backend, "mock|cached|live");
        sub->add_option("--out", cli.out, "override the output directory");
        sub->add_option("--jobs", cli.jobs, "parallel translation calls");
        sub->callback([name, &chosen] { chosen = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        return dispatch(cli, chosen);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
