#include "catch_amalgamated.hpp"

#include "sembench/errors.hpp"
#include "sembench/model_spec.hpp"
#include "test_support.hpp"

#include <fstream>
#include <random>
#include <sstream>

using namespace sembench;

namespace {

std::string read(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("toy model parses with markers fixed", "[modelspec]") {
    const ModelSpec spec = parse_model(testing::kToyModel);
    REQUIRE(spec.latents == std::vector<std::string>{"DCK", "ECK"});
    REQUIRE(spec.observed ==
            std::vector<std::string>{"danish_citizen_tests", "danske_talemaader", "cnn_dm", "squad"});
    REQUIRE(spec.loadings.size() == 4);
    CHECK(spec.loadings[0].fixed == 1.0);
    CHECK_FALSE(spec.loadings[1].fixed.has_value());
    CHECK(spec.loadings[2].fixed == 1.0);
    CHECK_FALSE(spec.loadings[3].fixed.has_value());
    REQUIRE(spec.covariances.size() == 1);
    CHECK(spec.covariances[0] == Covariance{"DCK", "ECK", std::nullopt});
}

TEST_CASE("explicit fixed value and marker", "[modelspec]") {
    const ModelSpec spec = parse_model("A =~ x + 0.7*y");
    REQUIRE(spec.loadings.size() == 2);
    CHECK(spec.loadings[0].fixed == 1.0);
    CHECK(spec.loadings[1].fixed == 0.7);
}

TEST_CASE("explicit prefix on the first indicator replaces the marker", "[modelspec]") {
    const ModelSpec spec = parse_model("A =~ 0.5*x + y\nB =~ NA*u + v\nB ~~ 1*B");
    CHECK(spec.loadings[0].fixed == 0.5);
    CHECK_FALSE(spec.loadings[1].fixed.has_value());
    CHECK_FALSE(spec.loadings[2].fixed.has_value());
    CHECK_FALSE(spec.loadings[3].fixed.has_value());
    CHECK(validate_identification(spec).status != IdentificationStatus::UnderIdentified);
}

TEST_CASE("comments, blank lines and whitespace are ignored", "[modelspec]") {
    const ModelSpec a = parse_model(testing::kToyModel);
    const ModelSpec b = parse_model(
        "# toy model\n\n   DCK=~danish_citizen_tests+danske_talemaader   # Danish\r\n"
        "\tECK =~  cnn_dm +squad\n# done\nDCK~~ECK");
    CHECK(a == b);
}

TEST_CASE("empty model is rejected", "[modelspec]") {
    CHECK_THROWS_AS(parse_model(""), ParseError);
    CHECK_THROWS_AS(parse_model("# only a comment\n\n   \n"), ParseError);
}

TEST_CASE("syntax errors carry line and column", "[modelspec]") {
    try {
        parse_model("A =~ x + y\nB =~ u + 3v\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.column() == 10);
    }
    try {
        parse_model("A =~ x\nthis line has no operator\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.column() == 1);
    }
    CHECK_THROWS_AS(parse_model("A =~ x + "), ParseError);
    CHECK_THROWS_AS(parse_model("A =~ x + + y"), ParseError);
    CHECK_THROWS_AS(parse_model("=~ x"), ParseError);
    CHECK_THROWS_AS(parse_model("A =~ abc*x"), ParseError);
    CHECK_THROWS_AS(parse_model("A =~ x ~ y"), ParseError);
    CHECK_THROWS_AS(parse_model("A =~ *x"), ParseError);
}

TEST_CASE("duplicates and latent/observed clashes are rejected", "[modelspec]") {
    CHECK_THROWS_AS(parse_model("A =~ x + y + x"), ParseError);
    CHECK_THROWS_AS(parse_model("A =~ x + y\nA =~ y"), ParseError);
    CHECK_THROWS_AS(parse_model("A =~ x + y\nB =~ A + z"), ParseError);
    CHECK_THROWS_AS(parse_model("A =~ x + y\nB =~ u + v\nA ~~ B\nB ~~ A"), ParseError);
    CHECK_THROWS_AS(parse_model("A =~ x + y\nB =~ u + v\nB ~ A\nB ~ A"), ParseError);
    CHECK_THROWS_AS(parse_model("A =~ x + y\nA ~ A"), ParseError);
}

TEST_CASE("regressions and variances are represented", "[modelspec]") {
    const ModelSpec spec = parse_model("A =~ x1 + x2\nB =~ y1 + y2\nB ~ 0.3*A + w\nx1 ~~ 0.2*x1\nw ~~ x2");
    REQUIRE(spec.regressions.size() == 2);
    CHECK(spec.regressions[0] == Regression{"B", "A", 0.3});
    CHECK(spec.regressions[1] == Regression{"B", "w", std::nullopt});
    CHECK(spec.observed == std::vector<std::string>{"x1", "x2", "y1", "y2", "w"});
    REQUIRE(spec.covariances.size() == 2);
    CHECK(spec.covariances[0].is_variance());
    CHECK(spec.covariances[0].fixed == 0.2);
}

TEST_CASE("std.lv frees markers and fixes latent variances", "[modelspec]") {
    const ModelSpec spec = parse_model(testing::kToyModel, Identification::StdLv);
    for (const auto& l : spec.loadings) CHECK_FALSE(l.fixed.has_value());
    REQUIRE(spec.covariances.size() == 3);
    CHECK(spec.covariances[1] == Covariance{"DCK", "DCK", 1.0});
    CHECK(spec.covariances[2] == Covariance{"ECK", "ECK", 1.0});
    const auto report = validate_identification(spec);
    CHECK(report.free_parameters == 9);
    CHECK(report.degrees_of_freedom == 1);
}

TEST_CASE("identification counting", "[modelspec]") {
    SECTION("toy model") {
        const auto report = validate_identification(parse_model(testing::kToyModel));
        CHECK(report.moments == 10);
        CHECK(report.free_parameters == 9);
        CHECK(report.degrees_of_freedom == 1);
        CHECK(report.status == IdentificationStatus::OverIdentified);
        CHECK(report.warnings.empty());
    }
    SECTION("single indicator") {
        const auto report = validate_identification(parse_model("A =~ x"));
        CHECK(report.moments == 1);
        CHECK(report.free_parameters == 2);
        CHECK(report.degrees_of_freedom == -1);
        CHECK(report.status == IdentificationStatus::UnderIdentified);
        CHECK_FALSE(report.warnings.empty());
    }
    SECTION("latent without a scale") {
        const auto report = validate_identification(parse_model("A =~ NA*x + y + z\nx ~~ 0.5*x"));
        CHECK(report.degrees_of_freedom == 0);
        CHECK(report.status == IdentificationStatus::UnderIdentified);
    }
    SECTION("just identified") {
        const auto report = validate_identification(parse_model("A =~ x + y + z"));
        CHECK(report.degrees_of_freedom == 0);
        CHECK(report.status == IdentificationStatus::JustIdentified);
    }
    SECTION("alignment transfer model") {
        const ModelSpec spec = parse_model(read(testing::data_path("fig1_alignment_transfer.model")));
        CHECK(spec.latents.size() == 6);
        CHECK(spec.observed.size() == 8);
        const auto report = validate_identification(spec);
        // 36 moments; 10 free loadings + 8 residuals + 6 latent variances + 3 covariances
        CHECK(report.moments == 36);
        CHECK(report.free_parameters == 27);
        CHECK(report.degrees_of_freedom == 9);
        CHECK(report.status == IdentificationStatus::OverIdentified);
        auto mentions = [&](const std::string& needle) {
            for (const auto& w : report.warnings) {
                if (w.find(needle) != std::string::npos && w.find("single indicator") != std::string::npos) {
                    return true;
                }
            }
            return false;
        };
        CHECK(mentions("HHH_eng"));
        CHECK(mentions("HHH_dan"));
        CHECK_FALSE(mentions("G_eng"));
    }
}

TEST_CASE("moment count is p(p+1)/2", "[modelspec][property]") {
    for (int p = 1; p <= 12; ++p) {
        std::string text = "F =~ ";
        for (int i = 0; i < p; ++i) text += (i ? " + v" : "v") + std::to_string(i);
        CHECK(validate_identification(parse_model(text)).moments == p * (p + 1) / 2);
    }
}

namespace {

// Random model source over a small vocabulary.
std::string random_model(std::mt19937& rng) {
    auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<unsigned>(n)); };
    const double values[] = {0.5, 1.0, -0.25, 2.0, 0.1};
    auto prefix = [&]() -> std::string {
        switch (pick(5)) {
            case 0: return std::to_string(values[pick(5)]) + "*";
            case 1: return "NA*";
            default: return "";
        }
    };
    const int q = 1 + pick(3);
    std::string text;
    for (int l = 0; l < q; ++l) {
        const int k = 1 + pick(4);
        std::vector<int> used;
        text += "L" + std::to_string(l) + " =~ ";
        for (int i = 0; i < k; ++i) {
            int v = pick(8);
            while (std::find(used.begin(), used.end(), v) != used.end()) v = (v + 1) % 8;
            used.push_back(v);
            text += (i ? " + " : "") + prefix() + "x" + std::to_string(v);
        }
        text += "\n";
        if (pick(3) == 0) text += "# a comment\n\n";
    }
    if (q > 1 && pick(2)) text += "L1 ~ " + prefix() + "L0\n";
    if (q > 1 && pick(2)) text += "L0 ~~ " + prefix() + "L" + std::to_string(q - 1) + "\n";
    if (pick(2)) text += "x0 ~~ " + prefix() + "x0\n";
    if (pick(2)) text += "z ~ x1\n";
    return text;
}

}  // namespace

TEST_CASE("parse -> print -> parse round-trips", "[modelspec][property]") {
    std::mt19937 rng(12345);
    int parsed = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const std::string text = random_model(rng);
        for (auto mode : {Identification::Marker, Identification::StdLv}) {
            ModelSpec spec;
            try {
                spec = parse_model(text, mode);
            } catch (const ParseError&) {
                continue;  // e.g. a regression duplicated by the generator
            }
            ++parsed;
            const std::string printed = to_model_text(spec);
            INFO(text << "---\n" << printed);
            CHECK(parse_model(printed, mode) == spec);
            CHECK(to_model_text(parse_model(printed, mode)) == printed);
        }
    }
    CHECK(parsed > 800);
}

TEST_CASE("marker choice is the first listed indicator", "[modelspec][property]") {
    const ModelSpec a = parse_model("F =~ b + a + c");
    const ModelSpec b = parse_model("F =~ c + b + a");
    CHECK(a.loadings.front().indicator == "b");
    CHECK(a.loadings.front().fixed == 1.0);
    CHECK(b.loadings.front().indicator == "c");
    CHECK(b.loadings.front().fixed == 1.0);
    CHECK(parse_model("F =~ b + a + c") == a);
}

TEST_CASE("parameter labels and canonical order", "[modelspec]") {
    const auto params = enumerate_parameters(parse_model(testing::kToyModel));
    std::vector<std::string> free_labels;
    for (const auto& p : params) {
        if (p.is_free()) free_labels.push_back(p.label());
    }
    CHECK(free_labels == std::vector<std::string>{"DCK=~danske_talemaader", "ECK=~squad", "DCK~~ECK",
                                                  "danish_citizen_tests~~danish_citizen_tests",
                                                  "danske_talemaader~~danske_talemaader", "cnn_dm~~cnn_dm",
                                                  "squad~~squad", "DCK~~DCK", "ECK~~ECK"});
}
