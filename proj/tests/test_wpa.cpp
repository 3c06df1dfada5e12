#include "gwm/wpa.hpp"

#include "gwm/contraction.hpp"
#include "gwm/rng.hpp"
#include "support/tensor_network.hpp"

#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

using namespace gwm;
using testsupport::rel_err;

namespace {

Picture from_mask(int rows, int cols, std::uint32_t mask) {
    Picture p(rows, cols);
    for (int c = 0; c < rows * cols; ++c)
        p.at(c / cols, c % cols) = (mask >> c) & 1 ? 'b' : 'a';
    return p;
}

Wpa random_automaton(std::uint64_t seed, int states, int rule_count) {
    Rng rng(seed);
    Wpa a;
    for (int q = 0; q < states; ++q) a.states.push_back("q" + std::to_string(q));
    a.alphabet = {'a', 'b'};
    std::set<std::tuple<char, int, int, int, int>> seen;
    while (static_cast<int>(a.rules.size()) < rule_count) {
        const char label = rng.next_u64() & 1 ? 'b' : 'a';
        const int w = static_cast<int>(rng.uniform_index(states));
        const int n = static_cast<int>(rng.uniform_index(states));
        const int e = static_cast<int>(rng.uniform_index(states));
        const int s = static_cast<int>(rng.uniform_index(states));
        if (!seen.insert({label, w, n, e, s}).second) continue;
        a.rules.push_back({label, w, n, e, s, rng.normal(0.0, 1.0)});
    }
    for (Side side : kSides) {
        auto& accept = a.accept_set(side);
        for (int q = 0; q < states; ++q)
            if (rng.next_u64() & 1) accept.push_back(q);
        if (accept.empty()) accept.push_back(static_cast<int>(rng.uniform_index(states)));
    }
    a.validate();
    return a;
}

}  // namespace

TEST_CASE("bars-and-stripes automaton has the expected rule set") {
    const Wpa a = bars_stripes_automaton();
    CHECK(a.states.size() == 6);
    CHECK(a.accept_set(Side::West) == std::vector<int>{a.state_index("q0")});
    CHECK(a.accept_set(Side::North) == std::vector<int>{a.state_index("q0")});
    CHECK(a.accept_set(Side::East) == std::vector<int>{a.state_index("qf")});
    CHECK(a.accept_set(Side::South) == std::vector<int>{a.state_index("qf")});

    // hand expansion of the horizontal white-label family: 2*3*2*2 rules
    const int q0 = a.state_index("q0"), qar = a.state_index("qa_right"),
              qbr = a.state_index("qb_right"), qf = a.state_index("qf");
    std::set<std::tuple<char, int, int, int, int>> horizontal_a;
    for (int w : {q0, qar})
        for (int n : {q0, qar, qbr})
            for (int e : {qf, qar})
                for (int s : {qf, qar}) horizontal_a.insert({'a', w, n, e, s});
    CHECK(horizontal_a.size() == 24);

    std::set<std::tuple<char, int, int, int, int>> all;
    for (const auto& r : a.rules) {
        CHECK(r.weight == 1.0);
        all.insert({r.label, r.west, r.north, r.east, r.south});
    }
    for (const auto& rule : horizontal_a) CHECK(all.count(rule) == 1);
    // four 24-rule families overlapping in one rule per label
    CHECK(a.rules.size() == 94);
}

TEST_CASE("bars-and-stripes values on small pictures") {
    const Wpa a = bars_stripes_automaton();
    CHECK(evaluate_bruteforce(a, Picture::from_rows({"aa", "aa"})) == 2.0);
    CHECK(evaluate_bruteforce(a, Picture::from_rows({"aa", "bb"})) == 1.0);
    CHECK(evaluate_bruteforce(a, Picture::from_rows({"aa", "ab"})) == 0.0);
    CHECK(evaluate_bruteforce(a, Picture::from_rows({"bbb", "bbb", "bbb"})) == 2.0);
    CHECK(evaluate_bruteforce(a, Picture::from_rows({"ab", "ab"})) == 1.0);
}

TEST_CASE("single-cell pictures have exactly one accepting run") {
    // Both stripe directions collapse to the same rule on one cell, so a
    // constant picture scores 1 here; two cells are needed for the value 2.
    const Wpa a = bars_stripes_automaton();
    CHECK(evaluate_bruteforce(a, Picture::from_rows({"a"})) == 1.0);
    CHECK(evaluate_bruteforce(a, Picture::from_rows({"b"})) == 1.0);
    CHECK(evaluate_bruteforce(a, Picture::from_rows({"aa"})) == 2.0);
    CHECK(evaluate_bruteforce(a, Picture::from_rows({"a", "a"})) == 2.0);
}

TEST_CASE("3x3 sweep: values lie in {0,1,2} and transposition is a symmetry") {
    const Wpa a = bars_stripes_automaton();
    int positives = 0;
    for (std::uint32_t mask = 0; mask < 512; ++mask) {
        const Picture p = from_mask(3, 3, mask);
        const double v = evaluate_bruteforce(a, p);
        CHECK((v == 0.0 || v == 1.0 || v == 2.0));
        if (v > 0.0) ++positives;
        CHECK(evaluate_bruteforce(a, transpose(p)) == v);
    }
    CHECK(positives == 2 * 8 - 2);  // 2^3 + 2^3 - 2
}

TEST_CASE("scaling every rule weight scales values by c^(cells)") {
    Wpa a = bars_stripes_automaton();
    const Picture p = Picture::from_rows({"aa", "bb"});
    const double base = evaluate_bruteforce(a, p);
    const double c = 1.5;
    for (auto& r : a.rules) r.weight *= c;
    CHECK(evaluate_bruteforce(a, p) == doctest::Approx(std::pow(c, 4) * base).epsilon(1e-12));
}

TEST_CASE("enumeration guard and alphabet errors") {
    const Wpa a = bars_stripes_automaton();
    CHECK_THROWS_WITH_AS(evaluate_bruteforce(a, Picture(5, 6)),
                         doctest::Contains("25-cell"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(evaluate_bruteforce(a, Picture::from_rows({"ax"})),
                         doctest::Contains("symbol 'x'"), std::invalid_argument);
}

TEST_CASE("compiled model reproduces the automaton exhaustively on 3x3 grids") {
    const Wpa a = bars_stripes_automaton();
    const GwmModel m = compile_to_gwm(a);
    CHECK(m.dim == 6);
    for (std::uint32_t mask = 0; mask < 512; ++mask) {
        const Picture p = from_mask(3, 3, mask);
        const double want = evaluate_bruteforce(a, p);
        CHECK(rel_err(evaluate(m, p), want) < 1e-10);
    }
}

TEST_CASE("compiler matches brute force on random automata") {
    Rng rng(999);
    for (int round = 0; round < 6; ++round) {
        const int states = 2 + static_cast<int>(rng.uniform_index(2));
        const Wpa a = random_automaton(5000 + round, states, 14);
        const GwmModel m = compile_to_gwm(a);
        for (int rows = 1; rows <= 3; ++rows)
            for (int cols = 1; cols <= 3; ++cols)
                for (int trial = 0; trial < 3; ++trial) {
                    const Picture p = testsupport::random_picture(rows, cols, rng);
                    const double want = evaluate_bruteforce(a, p);
                    const double got = evaluate(m, p);
                    if (want == 0.0)
                        CHECK(std::abs(got) < 1e-10);
                    else
                        CHECK(rel_err(got, want) < 1e-10);
                }
    }
}

TEST_CASE("single-state automata multiply label weights") {
    Wpa a;
    a.states = {"q"};
    a.alphabet = {'a', 'b'};
    a.rules.push_back({'a', 0, 0, 0, 0, 2.0});
    a.rules.push_back({'b', 0, 0, 0, 0, 3.0});
    for (Side s : kSides) a.accept_set(s) = {0};
    a.validate();

    const Picture p = Picture::from_rows({"ab", "ba"});
    CHECK(evaluate_bruteforce(a, p) == doctest::Approx(36.0));
    const GwmModel m = compile_to_gwm(a);
    CHECK(evaluate(m, p) == doctest::Approx(36.0));
}

TEST_CASE("an empty west acceptance set forces the zero function") {
    Wpa a = bars_stripes_automaton();
    a.accept_set(Side::West).clear();
    const GwmModel m = compile_to_gwm(a);
    Rng rng(31337);
    for (int round = 0; round < 5; ++round) {
        const Picture p = testsupport::random_picture(2, 3, rng);
        CHECK(evaluate_bruteforce(a, p) == 0.0);
        CHECK(std::abs(evaluate(m, p)) == 0.0);
    }
}

TEST_CASE("automaton files round-trip") {
    const Wpa a = bars_stripes_automaton();
    std::stringstream buf;
    save_wpa(a, buf);
    const Wpa loaded = load_wpa(buf);
    CHECK(loaded.states == a.states);
    CHECK(loaded.alphabet == a.alphabet);
    CHECK(loaded.rules == a.rules);
    for (Side s : kSides) CHECK(loaded.accept_set(s) == a.accept_set(s));

    std::stringstream bad(R"({"states": ["q0"], "alphabet": ["a"]})");
    CHECK_THROWS_AS(load_wpa(bad), std::runtime_error);
    std::stringstream unknown(
        R"({"states": ["q0"], "alphabet": ["a"], "accept_west": ["nope"],
            "accept_north": [], "accept_east": [], "accept_south": [], "rules": []})");
    CHECK_THROWS_WITH_AS(load_wpa(unknown), doctest::Contains("unknown state"),
                         std::runtime_error);
}

TEST_CASE("duplicate rules are rejected") {
    Wpa a;
    a.states = {"q"};
    a.alphabet = {'a'};
    a.rules.push_back({'a', 0, 0, 0, 0, 1.0});
    a.rules.push_back({'a', 0, 0, 0, 0, 2.0});
    for (Side s : kSides) a.accept_set(s) = {0};
    CHECK_THROWS_WITH_AS(a.validate(), doctest::Contains("duplicate rule"), std::invalid_argument);
}
