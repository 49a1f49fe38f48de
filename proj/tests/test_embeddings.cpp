#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "czsl/checkpoint.hpp"
#include "czsl/embeddings.hpp"

using namespace czsl;

namespace {
std::string write_tmp(const std::string& name, const std::string& content) {
    const std::string path = "emb_test_" + name;
    std::ofstream os(path);
    os << content;
    return path;
}
}  // namespace

TEST_SUITE("embeddings") {

TEST_CASE("basic header and rows") {
    const auto p = write_tmp("ok.txt", "2 3\ncat 1 0 0\ndog 0 1 0\n");
    const auto t = load_embeddings(p);
    CHECK(t.dim == 3);
    CHECK(t.vectors.size() == 2);
    CHECK(t.get("cat")[0] == doctest::Approx(1.0));
    std::remove(p.c_str());
}

TEST_CASE("wide vectors accepted") {
    std::string content = "1 300\ntok";
    for (int i = 0; i < 300; ++i) content += " 0.5";
    const auto p = write_tmp("wide.txt", content + "\n");
    const auto t = load_embeddings(p);
    CHECK(t.dim == 300);
    CHECK(t.get("tok").size() == 300);
    std::remove(p.c_str());
}

TEST_CASE("short row reports line number") {
    const auto p = write_tmp("short.txt", "2 3\ncat 1 0 0\ndog 0 1\n");
    try {
        load_embeddings(p);
        FAIL("expected InputError");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("3") != std::string::npos);
    }
    std::remove(p.c_str());
}

TEST_CASE("duplicate token rejected") {
    const auto p = write_tmp("dup.txt", "2 2\ncat 1 0\ncat 0 1\n");
    CHECK_THROWS_AS(load_embeddings(p), InputError);
    std::remove(p.c_str());
}

TEST_CASE("cosine values") {
    CHECK(cosine({1, 2, 3}, {1, 2, 3}) == doctest::Approx(1.0));
    CHECK(cosine({1, 0}, {0, 1}) == doctest::Approx(0.0));
    CHECK(cosine({1, 1}, {1, 0}) == doctest::Approx(0.7071).epsilon(1e-4));
    CHECK(cosine({1, 1}, {1, 0}) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("cosine is scale invariant and rejects zero norm") {
    CHECK(cosine({2, 2}, {5, 0}) == doctest::Approx(cosine({1, 1}, {1, 0})));
    CHECK_THROWS(cosine({0, 0}, {1, 0}));
}

TEST_CASE("save/load round trip") {
    EmbeddingTable t;
    t.dim = 2;
    t.vectors["b"] = {0.123456789, -1.0};
    t.vectors["a"] = {2.0, 3.0};
    const std::string p = "emb_test_rt.txt";
    save_embeddings(p, t);
    const auto back = load_embeddings(p);
    CHECK(back.dim == 2);
    CHECK(back.get("b")[0] == doctest::Approx(0.123456789).epsilon(1e-9));
    CHECK(back.get("a")[1] == doctest::Approx(3.0));
    std::remove(p.c_str());
}

}  // TEST_SUITE
