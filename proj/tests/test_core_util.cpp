#include "xaudit/csv.hpp"
#include "xaudit/errors.hpp"
#include "xaudit/rng.hpp"

#include "support/test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace xaudit;

TEST_CASE("mix64 is order-sensitive and stable") {
    CHECK(mix64({1, 2}) != mix64({2, 1}));
    CHECK(mix64({42}) != 42);
    CHECK(mix64({7, 8, 9}) == mix64({7, 8, 9}));
    CHECK(mix64({0}) != mix64({0, 0}));
}

TEST_CASE("rng streams are deterministic per seed") {
    Rng a(123), b(123), c(124);
    for (int i = 0; i < 100; ++i) {
        const double va = a.normal();
        CHECK(va == b.normal());
        (void)c.normal();
    }
    Rng d(123), e(124);
    bool all_equal = true;
    for (int i = 0; i < 16; ++i) {
        if (d.next_u64() != e.next_u64()) all_equal = false;
    }
    CHECK_FALSE(all_equal);
}

TEST_CASE("rng normal moments are sane") {
    Rng rng(7);
    const int n = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sum_sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sum_sq / n - 1.0) < 0.02);
}

TEST_CASE("uniform_int covers the range without bias spikes") {
    Rng rng(99);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) ++counts[rng.uniform_int(7)];
    for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("csv parses quoted fields and embedded separators") {
    const auto table = parse_csv("a,b,c\n1,\"two, half\",3\n\"say \"\"hi\"\"\",5,6\n");
    REQUIRE(table.header.size() == 3);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0][1] == "two, half");
    CHECK(table.rows[1][0] == "say \"hi\"");
    CHECK(table.column_index("b") == 1);
    CHECK(table.column_index("missing") == -1);
}

TEST_CASE("csv handles crlf and trailing newline-free input") {
    const auto table = parse_csv("x,y\r\n1,2\r\n3,4");
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[1][1] == "4");
}

TEST_CASE("csv rejects ragged rows and unterminated quotes") {
    CHECK_THROWS_AS(parse_csv("a,b\n1,2,3\n"), InputError);
    CHECK_THROWS_AS(parse_csv("a,b\n\"oops,2\n"), InputError);
}

TEST_CASE("csv write/parse round-trip preserves doubles exactly") {
    const double values[] = {0.1, -3.25e-7, 1.0 / 3.0, 12345.678901234567};
    std::vector<std::vector<std::string>> rows;
    for (double v : values) rows.push_back({format_double(v)});
    const std::string text = csv_to_string({"v"}, rows);
    const auto parsed = parse_csv(text);
    for (std::size_t i = 0; i < parsed.rows.size(); ++i) {
        CHECK(std::stod(parsed.rows[i][0]) == values[i]);
    }
}
