#include "xlstance/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace xlstance {

using nlohmann::json;

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

StanceLabel parse_stance(std::string_view token) {
    std::string up;
    up.reserve(token.size());
    for (char c : token) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    if (up == "FAVOR" || up == "IN-FAVOR") return StanceLabel::favor;
    if (up == "AGAINST") return StanceLabel::against;
    if (up == "NONE") return StanceLabel::none;
    throw ParseError("unknown stance label '" + std::string(token) + "'");
}

std::string_view to_string(StanceLabel label) {
    switch (label) {
        case StanceLabel::favor: return "FAVOR";
        case StanceLabel::against: return "AGAINST";
        case StanceLabel::none: return "NONE";
    }
    throw std::logic_error("invalid StanceLabel");
}

std::size_t stance_index(StanceLabel label) {
    return static_cast<std::size_t>(label);
}

void Corpus::add(StanceExample example) {
    if (trim(example.text).empty())
        throw std::invalid_argument("example '" + example.id + "' has empty text");
    if (!ids_.insert(example.id).second)
        throw std::invalid_argument("duplicate example id '" + example.id + "' in corpus '" +
                                    domain_id_ + "'");
    examples_.push_back(std::move(example));
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

Corpus parse_semeval(const std::string& path, const std::string& language) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");

    const std::string stem = std::filesystem::path(path).stem().string();
    Corpus corpus(language + "-" + stem);

    std::string line;
    std::size_t line_no = 0;
    if (std::getline(in, line)) {
        ++line_no;  // header, skipped
    }
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() < 4)
            throw ParseError("line " + std::to_string(line_no) + ": expected at least 4 tab-separated columns, got " +
                             std::to_string(fields.size()));
        StanceExample ex;
        ex.id = trim(fields[0]);
        ex.target = trim(fields[1]);
        ex.text = fields[2];
        try {
            ex.stance = parse_stance(trim(fields[3]));
        } catch (const ParseError&) {
            throw ParseError("unknown stance label '" + trim(fields[3]) + "' at line " +
                             std::to_string(line_no));
        }
        ex.language = language;
        try {
            corpus.add(std::move(ex));
        } catch (const std::invalid_argument& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return corpus;
}

void write_semeval(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    out << "ID\tTarget\tTweet\tStance\n";
    for (const auto& ex : corpus) {
        for (const std::string* f : {&ex.id, &ex.target, &ex.text}) {
            if (f->find('\t') != std::string::npos || f->find('\n') != std::string::npos)
                throw std::invalid_argument("example '" + ex.id +
                                            "' contains a tab or newline; the layout has no escaping");
        }
        out << ex.id << '\t' << ex.target << '\t' << ex.text << '\t' << to_string(ex.stance) << '\n';
    }
}

std::map<std::string, std::size_t> class_counts(const Corpus& corpus, CountKey by) {
    std::map<std::string, std::size_t> counts;
    if (by == CountKey::stance) {
        for (StanceLabel s : kAllStances) counts[std::string(to_string(s))] = 0;
        for (const auto& ex : corpus) ++counts[std::string(to_string(ex.stance))];
        return counts;
    }
    if (by == CountKey::target) {
        for (const auto& ex : corpus) ++counts[ex.target];
        return counts;
    }
    // stance_target: zero-fill all stances of every present target
    for (const auto& ex : corpus)
        for (StanceLabel s : kAllStances)
            counts.emplace(ex.target + "\t" + std::string(to_string(s)), 0);
    for (const auto& ex : corpus)
        ++counts[ex.target + "\t" + std::string(to_string(ex.stance))];
    return counts;
}

std::array<std::size_t, 3> stance_counts(const Corpus& corpus) {
    std::array<std::size_t, 3> counts{0, 0, 0};
    for (const auto& ex : corpus) ++counts[stance_index(ex.stance)];
    return counts;
}

namespace {

std::string stratum_key(const StanceExample& ex, StratifyBy by) {
    return by == StratifyBy::stance ? std::string(to_string(ex.stance)) : ex.target;
}

}  // namespace

std::pair<Corpus, Corpus> split(const Corpus& corpus, double train_fraction,
                                std::uint64_t seed, std::optional<StratifyBy> stratify) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("train_fraction must lie strictly between 0 and 1");
    const std::size_t n = corpus.size();
    if (n < 2) throw std::invalid_argument("split requires at least 2 examples");

    std::mt19937_64 gen(seed);
    std::vector<bool> in_train(n, false);
    const std::size_t train_n = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));

    if (!stratify) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        fisher_yates(idx, gen);
        for (std::size_t i = 0; i < train_n; ++i) in_train[idx[i]] = true;
    } else {
        std::map<std::string, std::vector<std::size_t>> strata;
        for (std::size_t i = 0; i < n; ++i)
            strata[stratum_key(corpus[i], *stratify)].push_back(i);
        for (const auto& [key, members] : strata)
            if (members.size() < 2)
                throw std::invalid_argument("stratum '" + key + "' has fewer than 2 examples");

        // floor per stratum, then hand out the remainder by largest
        // fractional part so the overall train size matches the floor rule
        std::vector<std::pair<double, std::string>> remainders;
        std::size_t allotted = 0;
        std::map<std::string, std::size_t> take;
        for (const auto& [key, members] : strata) {
            double exact = train_fraction * static_cast<double>(members.size());
            std::size_t base = static_cast<std::size_t>(std::floor(exact));
            take[key] = base;
            allotted += base;
            remainders.emplace_back(exact - static_cast<double>(base), key);
        }
        std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (std::size_t i = 0; allotted < train_n && i < remainders.size(); ++i, ++allotted)
            ++take[remainders[i].second];

        for (auto& [key, members] : strata) {
            fisher_yates(members, gen);
            for (std::size_t i = 0; i < take[key] && i < members.size(); ++i)
                in_train[members[i]] = true;
        }
    }

    Corpus train(corpus.domain_id() + "-train");
    Corpus test(corpus.domain_id() + "-test");
    for (std::size_t i = 0; i < n; ++i)
        (in_train[i] ? train : test).add(corpus[i]);
    return {std::move(train), std::move(test)};
}

Corpus merge(const std::vector<Corpus>& corpora) {
    if (corpora.empty()) throw std::invalid_argument("merge requires at least one corpus");
    std::string domain;
    for (const auto& c : corpora) {
        if (!domain.empty()) domain += "+";
        domain += c.domain_id();
    }
    Corpus out(domain);
    for (const auto& c : corpora)
        for (const auto& ex : c) {
            StanceExample copy = ex;
            copy.id = c.domain_id() + "/" + ex.id;
            out.add(std::move(copy));
        }
    return out;
}

namespace {

json hops_to_json(const std::vector<TranslationHop>& hops) {
    json arr = json::array();
    for (const auto& h : hops) arr.push_back({{"src", h.src}, {"dst", h.dst}});
    return arr;
}

std::vector<TranslationHop> hops_from_json(const json& arr) {
    std::vector<TranslationHop> hops;
    for (const auto& h : arr) hops.push_back({h.at("src").get<std::string>(), h.at("dst").get<std::string>()});
    return hops;
}

}  // namespace

void save_jsonl(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    json header = {{"format", "xlstance-corpus"}, {"version", 1}, {"domain_id", corpus.domain_id()}};
    out << header.dump() << '\n';
    for (const auto& ex : corpus) {
        json rec = {{"id", ex.id},
                    {"target", ex.target},
                    {"text", ex.text},
                    {"stance", std::string(to_string(ex.stance))},
                    {"language", ex.language},
                    {"provenance", hops_to_json(ex.provenance)}};
        out << rec.dump() << '\n';
    }
}

Corpus load_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError("'" + path + "' is empty");
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw ParseError("'" + path + "': bad header line: " + e.what());
    }
    if (header.value("format", "") != "xlstance-corpus")
        throw ParseError("'" + path + "' is not an xlstance corpus file");
    Corpus corpus(header.at("domain_id").get<std::string>());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json rec = json::parse(line);
            StanceExample ex;
            ex.id = rec.at("id").get<std::string>();
            ex.target = rec.at("target").get<std::string>();
            ex.text = rec.at("text").get<std::string>();
            ex.stance = parse_stance(rec.at("stance").get<std::string>());
            ex.language = rec.at("language").get<std::string>();
            ex.provenance = hops_from_json(rec.at("provenance"));
            corpus.add(std::move(ex));
        } catch (const json::exception& e) {
            throw ParseError("'" + path + "' line " + std::to_string(line_no) + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw ParseError("'" + path + "' line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return corpus;
}

}  // namespace xlstance
