#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <unistd.h>

#include "costgate/common.hpp"
#include "costgate/dataset.hpp"

using namespace costgate;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("costgate_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name, const std::string& content) const {
        const auto p = path / name;
        std::ofstream out(p);
        out << content;
        return p.string();
    }
    std::string name(const std::string& n) const { return (path / n).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

}  // namespace

TEST_CASE("load_dataset normalizes 0/1 labels and defaults costs") {
    TempDir tmp;
    const auto features = tmp.file("x.csv", "1.0,2.0\n3.0,4.0\n5.0,6.0\n");
    const auto labels = tmp.file("y.txt", "0\n1\n1\n");
    const Dataset ds = load_dataset(features, LabelSource::from_file(labels));
    CHECK(ds.n == 3);
    CHECK(ds.k == 2);
    CHECK(ds.labels == std::vector<double>{-1.0, 1.0, 1.0});
    CHECK(ds.costs == std::vector<double>{1.0, 1.0});
}

TEST_CASE("load_dataset reads cost files and rejects mismatches") {
    TempDir tmp;
    const auto features = tmp.file("x.csv", "1,2,3\n4,5,6\n");
    const auto labels = tmp.file("y.txt", "1\n-1\n");
    const auto costs3 = tmp.file("c3.txt", "1\n5\n20\n");
    const Dataset ds = load_dataset(features, LabelSource::from_file(labels), costs3);
    CHECK(ds.costs == std::vector<double>{1.0, 5.0, 20.0});

    const auto costs2 = tmp.file("c2.txt", "1\n5\n");
    CHECK_THROWS_AS(load_dataset(features, LabelSource::from_file(labels), costs2), Error);

    const auto negative = tmp.file("cn.txt", "1\n-5\n20\n");
    CHECK_THROWS_AS(load_dataset(features, LabelSource::from_file(labels), negative), Error);
}

TEST_CASE("load_dataset validates labels and features") {
    TempDir tmp;
    const auto features = tmp.file("x.csv", "1,2\n3,4\n");
    const auto bad_labels = tmp.file("y.txt", "2\n-1\n");
    CHECK_THROWS_AS(load_dataset(features, LabelSource::from_file(bad_labels)), Error);

    const auto inf_features = tmp.file("xi.csv", "1,inf\n3,4\n");
    const auto labels = tmp.file("yl.txt", "1\n0\n");
    CHECK_THROWS_AS(load_dataset(inf_features, LabelSource::from_file(labels)), Error);
}

TEST_CASE("load_dataset accepts a header row and a trailing label column") {
    TempDir tmp;
    const auto features = tmp.file("x.csv", "f1,f2,label\n1,2,1\n3,4,0\n");
    const Dataset ds = load_dataset(features, LabelSource::last_column());
    CHECK(ds.n == 2);
    CHECK(ds.k == 2);
    CHECK(ds.labels == std::vector<double>{1.0, -1.0});
}

TEST_CASE("load_scores parses, validates length and finiteness") {
    TempDir tmp;
    const auto features = tmp.file("x.csv", "1,2\n3,4\n");
    const auto labels = tmp.file("y.txt", "1\n0\n");
    const Dataset ds = load_dataset(features, LabelSource::from_file(labels));

    const auto ok = tmp.file("s.txt", "1.5\n-0.3\n");
    const ScoreTable t = load_scores(ok, ds);
    CHECK(t.values == std::vector<double>{1.5, -0.3});

    const auto extra = tmp.file("s3.txt", "1\n2\n3\n");
    CHECK_THROWS_AS(load_scores(extra, ds), Error);

    const auto inf = tmp.file("si.txt", "inf\n0\n");
    CHECK_THROWS_AS(load_scores(inf, ds), Error);
}

TEST_CASE("dataset save/load round-trips bit-exactly") {
    TempDir tmp;
    Rng rng(3);
    Dataset ds;
    ds.n = 17;
    ds.k = 3;
    for (std::size_t i = 0; i < ds.n * ds.k; ++i)
        ds.features.push_back(rng.uniform(-5.0, 5.0));
    for (std::size_t i = 0; i < ds.n; ++i)
        ds.labels.push_back(rng.uniform() < 0.5 ? -1.0 : 1.0);
    ds.costs = {0.25, 1.0, 1e-3};
    ds.validate();

    save_dataset(ds, tmp.name("x.csv"), tmp.name("c.txt"));
    const Dataset back =
        load_dataset(tmp.name("x.csv"), LabelSource::last_column(), tmp.name("c.txt"));
    CHECK(back.features == ds.features);
    CHECK(back.labels == ds.labels);
    CHECK(back.costs == ds.costs);
}

TEST_CASE("synthetic-2 layout") {
    const Dataset ds = gen_synthetic2();
    CHECK(ds.n == 70);
    CHECK(ds.k == 2);
    CHECK(ds.costs == std::vector<double>{1.0, 1.0});

    // cluster 3 = rows 40..54, centered near (-1,-1)
    double cx = 0.0, cy = 0.0;
    for (std::size_t i = 40; i < 55; ++i) {
        cx += ds.at(i, 0);
        cy += ds.at(i, 1);
        CHECK(ds.labels[i] == 1.0);
    }
    cx /= 15.0;
    cy /= 15.0;
    CHECK(std::fabs(cx + 1.0) < 0.05);
    CHECK(std::fabs(cy + 1.0) < 0.05);

    const Dataset again = gen_synthetic2();
    CHECK(again.features == ds.features);
    CHECK(again.labels == ds.labels);
}

TEST_CASE("synthetic-1 size, flip fraction, determinism") {
    const Synthetic1 s = gen_synthetic1_detail(17);
    CHECK(s.data.n == 1000);
    CHECK(s.data.k == 2);
    int flips = 0;
    for (std::size_t i = 0; i < s.data.n; ++i)
        flips += s.data.labels[i] != s.labels_before_flip[i] ? 1 : 0;
    // binomial(1000, 0.01): mean 10, sd ~3.15
    CHECK(flips >= 1);
    CHECK(flips <= 25);

    const Dataset again = gen_synthetic1(17);
    CHECK(again.features == s.data.features);
    CHECK(again.labels == s.data.labels);
}

TEST_CASE("split sizes, partition, determinism") {
    Rng rng(5);
    Dataset ds;
    ds.n = 10;
    ds.k = 1;
    for (std::size_t i = 0; i < ds.n; ++i) {
        ds.features.push_back(static_cast<double>(i));
        ds.labels.push_back(i % 2 == 0 ? 1.0 : -1.0);
    }
    ds.costs = {1.0};

    const Splits sp = split(ds, {0.6, 0.2, 0.2, 7});
    CHECK(sp.train.n == 6);
    CHECK(sp.validation.n == 2);
    CHECK(sp.test.n == 2);

    std::set<std::size_t> all;
    for (auto r : sp.train_rows) all.insert(r);
    for (auto r : sp.validation_rows) all.insert(r);
    for (auto r : sp.test_rows) all.insert(r);
    CHECK(all.size() == 10);

    const Splits sp2 = split(ds, {0.6, 0.2, 0.2, 7});
    CHECK(sp2.train_rows == sp.train_rows);
    CHECK(sp2.test_rows == sp.test_rows);

    CHECK_THROWS_AS(split(ds, {1.0, 0.0, 0.0, 7}, /*require_nonempty=*/true), Error);
}

TEST_CASE("split partitions are disjoint and exhaustive for random shapes") {
    Rng rng(99);
    for (int t = 0; t < 40; ++t) {
        const std::size_t n = 3 + static_cast<std::size_t>(rng.uniform_int(0, 60));
        Dataset ds;
        ds.n = n;
        ds.k = 1;
        for (std::size_t i = 0; i < n; ++i) {
            ds.features.push_back(rng.uniform(-1.0, 1.0));
            ds.labels.push_back(rng.uniform() < 0.5 ? -1.0 : 1.0);
        }
        ds.costs = {1.0};
        double a = rng.uniform(0.1, 0.8);
        double b = rng.uniform(0.05, 0.9 - a);
        const Splits sp = split(ds, {a, b, 1.0 - a - b, rng.next_u64()});
        CHECK(sp.train.n + sp.validation.n + sp.test.n == n);
        std::set<std::size_t> all;
        for (auto r : sp.train_rows) all.insert(r);
        for (auto r : sp.validation_rows) all.insert(r);
        for (auto r : sp.test_rows) all.insert(r);
        CHECK(all.size() == n);
        CHECK(*all.rbegin() == n - 1);
    }
}
