#include <doctest.h>

#include "obslab/error.hpp"
#include "obslab/rng.hpp"
#include "obslab/vocab.hpp"

using namespace obslab;

TEST_CASE("byte tokenizer round-trips arbitrary bytes") {
    const std::string text = "hi\n\xff\x00 ok";
    const std::string raw(text.data(), 8);
    const auto ids = tokenize(raw);
    CHECK(ids.size() == 8);
    for (int id : ids) {
        CHECK(id >= 0);
        CHECK(id < kByteTokens);
    }
    CHECK(detokenize(ids) == raw);
}

TEST_CASE("special ids render as markers and invalid ids raise") {
    CHECK(detokenize({kBosId, int('a'), kEosId}) == "<bos>a<eos>");
    CHECK(token_repr(int('a')) == "a");
    CHECK(token_repr(kBosId) == "<bos>");
    CHECK(token_repr(kEosId) == "<eos>");
    CHECK(token_repr(7) == "\\x07");
    CHECK_THROWS_AS(detokenize({258}), Error);
    CHECK_THROWS_AS(detokenize({-1}), Error);
}

TEST_CASE("vocabulary embeds rows and validates ids") {
    Tensor table = Tensor::from({4, 2}, {0, 0, 1, 0, 0, 1, 1, 1});
    Vocabulary v(table, 2, 3);
    CHECK(v.token_count() == 4);
    CHECK(v.embed_dim() == 2);
    CHECK(v.embed_one(1).values == std::vector<double>{1, 0});
    Tensor two = v.embed({0, 3});
    CHECK(two.rows() == 2);
    CHECK(two.values == std::vector<double>{0, 0, 1, 1});
    CHECK_THROWS_AS(v.embed_one(4), Error);
    CHECK_THROWS_AS(v.embed_one(-1), Error);
}

TEST_CASE("combination is the probability-weighted row mix") {
    Tensor table = Tensor::from({3, 2}, {1, 0, 0, 1, 2, 2});
    Vocabulary v(table, 0, 1);
    Tensor mix = v.combination(Tensor::vec({0.5, 0.5, 0.0}));
    CHECK(mix.values == std::vector<double>{0.5, 0.5});
    Tensor point = v.combination(Tensor::vec({0.0, 0.0, 1.0}));
    CHECK(point.values == std::vector<double>{2, 2});
    CHECK_THROWS_AS(v.combination(Tensor::vec({0.5, 0.5})), Error);  // wrong length
}

TEST_CASE("nearest token minimizes euclidean distance with low-id ties") {
    Tensor table = Tensor::from({3, 2}, {0, 0, 4, 0, 4, 0});
    Vocabulary v(table, 0, 1);
    CHECK(v.nearest_token(Tensor::vec({0.1, 0.0})) == 0);
    CHECK(v.nearest_token(Tensor::vec({3.9, 0.0})) == 1);  // rows 1 and 2 tie
    CHECK(v.nearest_token(Tensor::vec({2.0 + 1e-9, 0.0})) == 1);
}

TEST_CASE("embedding round-trip through nearest neighbour on random tables") {
    Rng rng(9);
    Tensor table = Tensor::zeros({20, 6});
    for (double& x : table.values) x = rng.normal();
    Vocabulary v(table, 0, 1);
    for (int id = 0; id < 20; ++id) CHECK(v.nearest_token(v.embed_one(id)) == id);
}
