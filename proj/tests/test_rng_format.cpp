#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include <twingp/format.hpp>
#include <twingp/parallel.hpp>
#include <twingp/rng.hpp>

using namespace twingp;

TEST_CASE("rng is deterministic given a seed") {
    Rng a(42), b(42), c(43);
    std::vector<double> va, vb;
    for (int i = 0; i < 100; ++i) {
        va.push_back(a.normal());
        vb.push_back(b.normal());
    }
    CHECK(va == vb);
    CHECK(c.normal() != va[0]);
}

TEST_CASE("rng uniform stays in range and log_uniform in the box") {
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double lu = rng.log_uniform(1e-3, 10.0);
        CHECK(lu >= 1e-3);
        CHECK(lu <= 10.0);
    }
}

TEST_CASE("rng normal has the requested moments") {
    // Matches the sampling contract used for measurement noise: the empirical
    // mean stays within 3*sigma/sqrt(N) and the standard deviation within 2%.
    const int n = 20000;
    const double sigma = 0.015;
    Rng rng(2024);
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = rng.normal(0.0, sigma);
        sum += v;
        sumsq += v * v;
    }
    const double mean = sum / n;
    const double stddev = std::sqrt(sumsq / n - mean * mean);
    CHECK(std::abs(mean) <= 3.0 * sigma / std::sqrt(double(n)));
    CHECK(std::abs(stddev - sigma) <= 0.02 * sigma);
}

TEST_CASE("mix_seed separates streams and is stable") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 100; ++i) seen.insert(mix_seed(1234, i));
    CHECK(seen.size() == 100);
    CHECK(mix_seed(1234, 5) == mix_seed(1234, 5));
    CHECK(mix_seed(1234, 5) != mix_seed(1235, 5));
}

TEST_CASE("format_double round-trips exactly") {
    const std::vector<double> values = {0.0,   -0.0,        1.0,       0.1,
                                        1e300, -2.5e-308,   3.14159,   1.0 / 3.0,
                                        1e-3,  123456789.5, 0.30000000000000004};
    for (const double v : values) {
        const std::string s = format_double(v);
        std::istringstream in(s);
        double back = 0.0;
        in >> back;
        CHECK(back == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(2.0) == "2");
}

TEST_CASE("csv assembly") {
    CsvTable t;
    t.header = {"a", "b"};
    t.rows.push_back({"1", "2"});
    t.rows.push_back({"3", "4"});
    CHECK(t.to_string() == "a,b\n1,2\n3,4\n");
}

TEST_CASE("parallel_for fills every slot once regardless of job count") {
    for (const unsigned jobs : {1u, 2u, 5u}) {
        std::vector<int> hits(257, 0);
        parallel_for(hits.size(), jobs, [&](std::size_t i) { hits[i] += int(i); });
        for (std::size_t i = 0; i < hits.size(); ++i) CHECK(hits[i] == int(i));
    }
}

TEST_CASE("parallel_for propagates exceptions") {
    CHECK_THROWS_AS(parallel_for(8, 3,
                                 [](std::size_t i) {
                                     if (i == 5) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
}
