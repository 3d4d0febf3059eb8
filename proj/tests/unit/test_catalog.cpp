#include <doctest.h>

#include <random>
#include <sstream>

#include "medloc/catalog.hpp"
#include "medloc/error.hpp"
#include "medloc/text.hpp"
#include "../support/oracles.hpp"

using namespace medloc;

namespace {

Catalog three() {
    return Catalog({{"m1", "Paracetamol", "500 mg", "20"}, {"m2", "Parafon", "250 mg", "30"}, {"m3", "Ibuprofen", "400 mg", "20"}});
}

std::vector<std::string> names(const std::vector<Medicine>& ms) {
    std::vector<std::string> out;
    for (const auto& m : ms) out.push_back(m.name);
    return out;
}

}  // namespace

TEST_CASE("casefold") {
    CHECK(text::casefold("PARA") == "para");
    CHECK(text::casefold("Ácido") == "ácido");
    CHECK(text::casefold("ΣΟΦΙΑ") == "σοφια");
    CHECK(text::casefold("АСПИРИН") == "аспирин");
    CHECK(text::starts_with_folded("Ben-u-ron", "ben"));
    CHECK(text::starts_with_folded("Ben-u-ron", "BEN-U"));
    CHECK_FALSE(text::starts_with_folded("Paracetamol", "cetamol"));
    // no accent folding
    CHECK_FALSE(text::starts_with_folded("Ácido", "acido"));
}

TEST_CASE("autocomplete examples") {
    const auto c = three();
    CHECK(names(c.autocomplete("para", 10)) == std::vector<std::string>{"Paracetamol", "Parafon"});
    CHECK(c.autocomplete("zzz", 10).empty());
    CHECK(names(c.autocomplete("", 2)) == std::vector<std::string>{"Ibuprofen", "Paracetamol"});
    CHECK(names(c.autocomplete("PARA", 1)) == std::vector<std::string>{"Paracetamol"});
    CHECK_THROWS_AS(c.autocomplete("p", 0), ValidationError);
}

TEST_CASE("autocomplete ties on name break by id") {
    Catalog c({{"m9", "Paracetamol", "1000 mg", ""}, {"m2", "Paracetamol", "500 mg", ""}});
    const auto r = c.autocomplete("par", 5);
    REQUIRE(r.size() == 2);
    CHECK(r[0].id == "m2");
    CHECK(r[1].id == "m9");
}

TEST_CASE("autocomplete matches a brute-force oracle on random catalogs") {
    std::mt19937 rng(11);
    const std::string alphabet = "abcAB";
    auto word = [&](int len) {
        std::string s;
        for (int i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
        return s;
    };
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Medicine> meds;
        const int n = static_cast<int>(rng() % 40);
        for (int i = 0; i < n; ++i) meds.push_back({"id" + std::to_string(i), word(1 + rng() % 6), "", ""});
        Catalog c(meds);
        for (int q = 0; q < 10; ++q) {
            const auto prefix = word(static_cast<int>(rng() % 3));
            const std::size_t limit = 1 + rng() % 12;
            const auto got = c.autocomplete(prefix, limit);
            const auto want = oracle::brute_autocomplete(meds, prefix, limit);
            CHECK(got == want);
            // prefix property: results for k are a prefix of results for k+1
            const auto more = c.autocomplete(prefix, limit + 1);
            CHECK(std::equal(got.begin(), got.end(), more.begin()));
            for (const auto& m : got) CHECK(text::starts_with_folded(m.name, prefix));
        }
    }
}

TEST_CASE("load_catalog") {
    SUBCASE("empty file") {
        std::istringstream in("");
        CHECK(load_catalog(in).size() == 0);
    }
    SUBCASE("three records with comments") {
        std::istringstream in("# id|name|dosage|package\nm1|Paracetamol|500 mg|20 tablets\n\nm2|Parafon|250 mg|30\nm3|Ibuprofen|400 mg|20\n");
        const auto c = load_catalog(in);
        CHECK(c.size() == 3);
        REQUIRE(c.find("m2") != nullptr);
        CHECK(c.find("m2")->dosage == "250 mg");
    }
    SUBCASE("duplicate id names the line") {
        std::istringstream in("m1|A|1|1\nm2|B|1|1\nm3|C|1|1\nm4|D|1|1\nm5|E|1|1\nm6|F|1|1\nm1|G|1|1\n");
        try {
            load_catalog(in, "meds.txt");
            FAIL("expected a parse error");
        } catch (const ParseError& e) {
            CHECK(e.line() == 7);
            CHECK(std::string(e.what()).find("meds.txt:7") != std::string::npos);
        }
    }
    SUBCASE("wrong field count") {
        std::istringstream in("m1|A|1\n");
        CHECK_THROWS_AS(load_catalog(in), ParseError);
    }
}
