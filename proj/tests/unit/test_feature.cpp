#include <doctest.h>

#include "core/diag.hpp"
#include "core/feature.hpp"
#include "support/testutil.hpp"

using namespace featkit;

TEST_CASE("settlingTime parses to its three stages") {
    auto f = parse_feature(test::model_text("settling_time.fia"));
    CHECK(f.name == "settlingTime");
    CHECK(f.formals == std::vector<std::string>{"Vr", "E"});
    CHECK(f.locals == std::vector<std::string>{"st"});
    REQUIRE(f.stages.size() == 3);

    // Stage 1: guard v >= Vr+E, no event, no capture.
    CHECK(f.stages[0].events.empty());
    REQUIRE(f.stages[0].guard.conjuncts.size() == 1);
    CHECK(f.stages[0].guard.conjuncts[0].rel == Rel::Ge);
    REQUIRE(f.stages[0].delay_to_next.has_value());
    CHECK(f.stages[0].delay_to_next->lower == 0.0);
    CHECK_FALSE(f.stages[0].delay_to_next->upper.has_value());

    // Stage 2: event on entering `open`, guard v <= Vr+E, capture st = $time.
    REQUIRE(f.stages[1].events.size() == 1);
    REQUIRE(f.stages[1].events[0].predicate.conjuncts.size() == 1);
    CHECK(f.stages[1].events[0].predicate.conjuncts[0].state_label == "open");
    REQUIRE(f.stages[1].captures.size() == 1);
    CHECK(f.stages[1].captures[0].first == "st");
    CHECK(f.stages[1].captures[0].second.kind == CaptureExpr::Kind::NowTime);

    // Stage 3: same event and guard, no capture, final stage.
    REQUIRE(f.stages[2].events.size() == 1);
    CHECK(f.stages[2].captures.empty());
    CHECK_FALSE(f.stages[2].delay_to_next.has_value());

    // compute = st
    CHECK(f.compute.is_single_variable());
    CHECK(f.compute.terms[0].name == "st");
}

TEST_CASE("minimal one-stage feature") {
    auto f = parse_feature(
        "feature f();\nbegin\n  var f0;\n  @+(x>=2), f0=$time |-> f = f0;\nend");
    CHECK(f.formals.empty());
    CHECK(f.stages.size() == 1);
    CHECK(f.compute.terms[0].name == "f0");
}

TEST_CASE("rejections carry clear diagnostics") {
    CHECK_THROWS_WITH_AS(
        parse_feature("feature f();\nbegin\nvar a;\n(x>=1) ##[2:1] (x>=2), a=$time |-> f = a;\nend"),
        doctest::Contains("empty delay window"), Error);
    CHECK_THROWS_WITH_AS(
        parse_feature("feature f();\nbegin\nvar a;\n(x>=1) ##[$:2] (x>=2), a=$time |-> f = a;\nend"),
        doctest::Contains("lower bound"), Error);
    CHECK_THROWS_WITH_AS(
        parse_feature("feature f();\nbegin\nvar a;\n@-(x>=1), a=$time |-> f = a;\nend"),
        doctest::Contains("falling"), Error);
    CHECK_THROWS_WITH_AS(
        parse_feature("feature f();\nbegin\nvar a;\n(x>=1), b=$time |-> f = a;\nend"),
        doctest::Contains("undeclared local"), Error);
    // compute must not touch model variables.
    CHECK_THROWS_WITH_AS(
        parse_feature("feature f();\nbegin\nvar a;\n(x>=1), a=$time |-> f = a + x;\nend"),
        doctest::Contains("locals and formals"), Error);
    // assignment target must be the feature name.
    CHECK_THROWS_WITH_AS(
        parse_feature("feature f();\nbegin\nvar a;\n(x>=1), a=$time |-> g = a;\nend"),
        doctest::Contains("feature name"), Error);
}

TEST_CASE("binding folds formals into thresholds") {
    auto f = parse_feature(test::model_text("settling_time.fia"));
    auto bf = bind_feature_params(f, {{"Vr", 12.0}, {"E", 0.5}});
    // All guard thresholds fold to 12.5.
    for (const auto& st : bf.stages) {
        for (const auto& p : st.guard.conjuncts) {
            if (p.is_state()) continue;
            CHECK(p.rhs.terms.empty());
            CHECK(p.rhs.constant == 12.5);
        }
    }
}

TEST_CASE("binding a feature with no formals is the identity") {
    auto f = parse_feature(
        "feature f();\nbegin\n  var f0;\n  @+(x>=2), f0=$time |-> f = f0;\nend");
    auto bf = bind_feature_params(f, {});
    CHECK(bf.stages == f.stages);
    CHECK(bf.compute == f.compute);
}

TEST_CASE("binding reports a missing formal by name") {
    auto f = parse_feature(test::model_text("settling_time.fia"));
    CHECK_THROWS_WITH_AS(bind_feature_params(f, {{"Vr", 12.0}}), doctest::Contains("E"), Error);
    CHECK_THROWS_WITH_AS(bind_feature_params(f, {{"Vr", 12.0}, {"E", 0.5}, {"Z", 1.0}}),
                         doctest::Contains("Z"), Error);
}

TEST_CASE("stage count equals one plus the delay separators") {
    auto one = parse_feature("feature f();\nbegin\nvar a;\n(x>=1), a=$time |-> f = a;\nend");
    CHECK(one.stages.size() == 1);
    auto two = parse_feature(
        "feature f();\nbegin\nvar a;\n(x>=1) ##[0:$] (x>=2), a=$time |-> f = a;\nend");
    CHECK(two.stages.size() == 2);
    auto three = parse_feature(test::model_text("settling_time.fia"));
    CHECK(three.stages.size() == 3);
}

TEST_CASE("binding commutes with textual substitution") {
    std::string templ =
        "feature f(TH);\nbegin\n  var a;\n  (x>=TH) ##[0:$] @+(y>=2*TH), a=$time |-> f = a;\nend";
    auto bound = bind_feature_params(parse_feature(templ), {{"TH", 3.0}});

    std::string substituted =
        "feature f();\nbegin\n  var a;\n  (x>=3) ##[0:$] @+(y>=2*3), a=$time |-> f = a;\nend";
    auto direct = parse_feature(substituted);
    CHECK(bound.stages == direct.stages);
    CHECK(bound.compute == direct.compute);
}

TEST_CASE("feature print round-trips") {
    for (const char* name : {"settling_time.fia", "crossing.fia", "rise.fia"}) {
        auto f = parse_feature(test::model_text(name));
        auto again = parse_feature(print_feature(f));
        CHECK(again == f);
    }
}
