#include <doctest.h>

#include "testutil.hpp"
#include "xlstance/textprep.hpp"

using namespace xlstance;

TEST_CASE("clean applies the documented pipeline") {
    CHECK(clean("@user1 #SemST Hello") == "semst hello");
    CHECK(clean("Wind   farms\tNOW") == "wind farms now");
    CHECK(clean("see https://example.com/x?y=1 now") == "see now");
    CHECK(clean("http://a.b only") == "only");
    CHECK(clean("@a @b") == "<empty>");
    CHECK(clean("") == "<empty>");
}

TEST_CASE("clean respects policy switches") {
    CleaningPolicy keep_case;
    keep_case.lowercase = false;
    CHECK(clean("Hello WORLD", keep_case) == "Hello WORLD");

    CleaningPolicy keep_hash;
    keep_hash.strip_hash_symbol = false;
    CHECK(clean("#SemST", keep_hash) == "#semst");

    CleaningPolicy keep_mentions;
    keep_mentions.strip_mentions = false;
    CHECK(clean("@User hi", keep_mentions) == "@user hi");
}

TEST_CASE("clean is idempotent") {
    const char* samples[] = {
        "@user1 #SemST Hello", "plain text", "https://x.org", "MiXeD CaSe #Tag @m",
        "  spaced   out  ",
    };
    for (const char* s : samples) {
        const std::string once = clean(s);
        CHECK(clean(once) == once);
    }
}

TEST_CASE("tokenize detaches punctuation but keeps intra-word apostrophes") {
    const std::vector<std::string> expect = {"don't", "stop", ",", "now"};
    CHECK(tokenize("don't stop, now") == expect);
    CHECK(tokenize("end.") == std::vector<std::string>{"end", "."});
    CHECK(tokenize("(a)") == std::vector<std::string>{"(", "a", ")"});
    CHECK(tokenize("") == std::vector<std::string>{});
    // bytes >= 0x80 count as letters, so non-ascii words stay whole
    CHECK(tokenize("umhlaba omuhle") == std::vector<std::string>{"umhlaba", "omuhle"});
}

TEST_CASE("vocabulary reserves special ids and orders by frequency") {
    const std::vector<std::vector<std::string>> docs = {
        {"cat", "sat", "cat"}, {"cat", "dog", "sat"}, {"dog"}};
    const Vocabulary v = Vocabulary::build(docs, 2);
    CHECK(v.size() == 7);  // 4 reserved + cat, sat, dog
    CHECK(v.token(Vocabulary::kPad) == "<pad>");
    CHECK(v.token(Vocabulary::kUnk) == "<unk>");
    CHECK(v.token(Vocabulary::kBos) == "<bos>");
    CHECK(v.token(Vocabulary::kEos) == "<eos>");
    CHECK(v.id("cat") == 4);  // most frequent first
    CHECK(v.id("dog") == 5);  // ties break by token order
    CHECK(v.id("sat") == 6);
    CHECK(v.id("absent") == Vocabulary::kUnk);
}

TEST_CASE("vocabulary honors min_frequency and max_size") {
    const std::vector<std::vector<std::string>> docs = {
        {"a", "a", "a", "b", "b", "c", "c", "d"}};
    const Vocabulary rare_cut = Vocabulary::build(docs, 2);
    CHECK(rare_cut.id("d") == Vocabulary::kUnk);
    CHECK(rare_cut.size() == 7);

    const Vocabulary tiny = Vocabulary::build(docs, 1, 6);
    CHECK(tiny.size() == 6);
    CHECK(tiny.id("a") == 4);
    CHECK(tiny.id("b") == 5);
    CHECK(tiny.id("c") == Vocabulary::kUnk);  // truncated away
}

TEST_CASE("numericalize maps unknowns to <unk>") {
    const std::vector<std::vector<std::string>> docs = {{"cat", "cat", "sat", "sat"}};
    const Vocabulary v = Vocabulary::build(docs, 2);
    const std::vector<std::uint32_t> ids = numericalize({"cat", "mat", "sat"}, v);
    CHECK(ids == std::vector<std::uint32_t>{4, Vocabulary::kUnk, 5});
}

TEST_CASE("vocabulary survives a save/load round trip") {
    testutil::TempDir tmp;
    const std::vector<std::vector<std::string>> docs = {
        {"one", "two", "two", "three", "three", "three", "one"}};
    const Vocabulary v = Vocabulary::build(docs, 1);
    v.save(tmp.file("vocab.txt"));
    const Vocabulary w = Vocabulary::load(tmp.file("vocab.txt"));
    CHECK(w.size() == v.size());
    for (std::uint32_t id = 0; id < v.size(); ++id) CHECK(w.token(id) == v.token(id));
    CHECK(w.id("three") == v.id("three"));
}
