#include <doctest.h>

#include <cmath>
#include <algorithm>

#include "obslab/dynsys.hpp"
#include "obslab/error.hpp"
#include "obslab/rng.hpp"

using namespace obslab;

namespace {

TinyLm small_model(std::uint64_t seed = 1) {
    LmConfig cfg;
    cfg.embed_dim = 8;
    cfg.context = 5;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.ff_dim = 12;
    cfg.vocab = kVocabSize;
    TinyLm m(cfg);
    m.init_random(seed);
    return m;
}

}  // namespace

TEST_CASE("verbalizers: greedy ties, sampling, and the linear map") {
    CHECK(verbalize_max(Tensor::vec({0.0, 2.0, 2.0})) == 1);
    CHECK(verbalize_max(Tensor::vec({3.0, 2.0, 1.0})) == 0);

    // A point-mass distribution always samples its peak.
    Rng rng(1);
    Tensor peaked = Tensor::vec({0.0, 50.0, 0.0});
    for (int i = 0; i < 20; ++i) CHECK(verbalize_sample(peaked, rng) == 1);
    // Samples follow the softmax law roughly.
    Tensor even = Tensor::vec({1.0, 1.0});
    int ones = 0;
    for (int i = 0; i < 2000; ++i) ones += verbalize_sample(even, rng);
    CHECK(ones > 800);
    CHECK(ones < 1200);

    Tensor table = Tensor::from({3, 2}, {1, 0, 0, 1, 1, 1});
    Vocabulary v(table, 0, 1);
    Tensor lin = verbalize_linear(Tensor::vec({1.0, 2.0, 3.0}), v);
    CHECK(lin.values == std::vector<double>{4.0, 5.0});
}

TEST_CASE("initial state pads the window with bos on the left") {
    const TinyLm model = small_model();
    const Vocabulary vocab = model.vocabulary();
    const std::vector<int> prompt = tokenize("ab");
    ExtendedState st = make_initial(prompt, Plain{}, vocab, 5);
    CHECK(st.window_ids == std::vector<int>{kBosId, kBosId, kBosId, int('a'), int('b')});
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(bitwise_equal(st.window[i], vocab.embed_one(st.window_ids[i])));
    CHECK(bitwise_equal(st.x0, vocab.embed_one(kBosId)));

    CHECK_THROWS_AS(make_initial(tokenize("toolong"), Plain{}, vocab, 5), Error);
}

TEST_CASE("initial x0 follows the prompt family") {
    const TinyLm model = small_model();
    const Vocabulary vocab = model.vocabulary();
    ExtendedState verbal = make_initial({}, VerbalPrompt{int('z')}, vocab, 5);
    CHECK(bitwise_equal(verbal.x0, vocab.embed_one(int('z'))));

    Tensor s = Tensor::vec({1, 2, 3, 4, 5, 6, 7, 8});
    ExtendedState nonverbal = make_initial({}, NonVerbalPrompt{s}, vocab, 5);
    CHECK(bitwise_equal(nonverbal.x0, s));

    ExtendedState fading = make_initial({}, FadingOnce{3}, vocab, 5);
    CHECK(bitwise_equal(fading.x0, vocab.embed_one(kBosId)));
}

TEST_CASE("spec validation rejects out-of-range controls") {
    const TinyLm model = small_model();
    const Vocabulary vocab = model.vocabulary();
    CHECK_THROWS_AS(validate_spec(VerbalPrompt{-1}, vocab), Error);
    CHECK_THROWS_AS(validate_spec(VerbalPrompt{kVocabSize}, vocab), Error);
    CHECK_THROWS_AS(validate_spec(NonVerbalPrompt{Tensor::vec({1.0})}, vocab), Error);
    CHECK_THROWS_AS(validate_spec(NonVerbalPrompt{Tensor::vec({std::nan(""), 0, 0, 0, 0, 0, 0, 0})},
                                  vocab),
                    Error);
    CHECK_THROWS_AS(validate_spec(FadingOnce{0}, vocab), Error);
    CHECK_THROWS_AS(validate_spec(FadingInfinite{1, 1.5}, vocab), Error);
    CHECK_NOTHROW(validate_spec(FadingInfinite{1, 1.0}, vocab));
}

TEST_CASE("one step shifts the window and appends the emitted token") {
    const TinyLm model = small_model();
    const Vocabulary vocab = model.vocabulary();
    ExtendedState st = make_initial(tokenize("ab"), Plain{}, vocab, 5);
    const StepResult r = step(st, Plain{}, model, vocab);
    CHECK(r.u == verbalize_max(r.y));
    CHECK(r.next.window_ids ==
          std::vector<int>{kBosId, kBosId, int('a'), int('b'), r.u});
    CHECK(bitwise_equal(r.next.window[4], vocab.embed_one(r.u)));
    // Plain keeps x0 fixed.
    CHECK(bitwise_equal(r.next.x0, st.x0));
    // The logits are the model's own on [x0 ; window].
    const std::size_t dim = st.x0.numel();
    Tensor stacked = Tensor::zeros({st.window.size() + 1, dim});
    std::copy(st.x0.values.begin(), st.x0.values.end(), stacked.values.begin());
    for (std::size_t i = 0; i < st.window.size(); ++i)
        std::copy(st.window[i].values.begin(), st.window[i].values.end(),
                  stacked.values.begin() + (i + 1) * dim);
    CHECK(bitwise_equal(r.y, model.logits_last(stacked, 0)));
}

TEST_CASE("constant-x0 families never move the hidden slot") {
    const TinyLm model = small_model();
    const Vocabulary vocab = model.vocabulary();
    Tensor s = Tensor::vec({0.5, -1, 2, 0, 1, -0.5, 0.25, 3});
    for (PromptSpec spec :
         {PromptSpec{Plain{}}, PromptSpec{VerbalPrompt{int('q')}}, PromptSpec{NonVerbalPrompt{s}}}) {
        ExtendedState st = make_initial(tokenize("hi"), spec, vocab, 5);
        const Tensor x0 = st.x0;
        for (int t = 0; t < 4; ++t) {
            const StepResult r = step(st, spec, model, vocab);
            CHECK(bitwise_equal(r.next.x0, x0));
            st = r.next;
        }
    }
}

TEST_CASE("fading-once overwrites x0 with the top-m summary") {
    const TinyLm model = small_model();
    const Vocabulary vocab = model.vocabulary();
    const FadingOnce spec{3};
    ExtendedState st = make_initial(tokenize("hi"), spec, vocab, 5);
    const StepResult r = step(st, spec, model, vocab);
    const Tensor expect = vocab.combination(topm_softmax(r.y, 3));
    CHECK(bitwise_equal(r.next.x0, expect));
}

TEST_CASE("fading-infinite blends and its lambda extremes collapse") {
    const TinyLm model = small_model();
    const Vocabulary vocab = model.vocabulary();
    const std::vector<int> prompt = tokenize("ab");

    // lambda = 1 reduces to the one-step overwrite, trajectory for trajectory.
    const Trajectory once = rollout(prompt, FadingOnce{2}, 6, model, vocab);
    const Trajectory lam1 = rollout(prompt, FadingInfinite{2, 1.0}, 6, model, vocab);
    REQUIRE(once.mental.size() == lam1.mental.size());
    for (std::size_t t = 0; t < once.mental.size(); ++t) {
        CHECK(bitwise_equal(once.mental[t], lam1.mental[t]));
        CHECK(once.verbal[t] == lam1.verbal[t]);
    }

    // lambda = 0 never updates x0, so it reduces to the plain loop.
    const Trajectory plain = rollout(prompt, Plain{}, 6, model, vocab);
    const Trajectory lam0 = rollout(prompt, FadingInfinite{2, 0.0}, 6, model, vocab);
    for (std::size_t t = 0; t < plain.mental.size(); ++t) {
        CHECK(bitwise_equal(plain.mental[t], lam0.mental[t]));
        CHECK(plain.verbal[t] == lam0.verbal[t]);
    }

    // Interior lambda is the stated convex blend after one step.
    const FadingInfinite mid{2, 0.25};
    ExtendedState st = make_initial(prompt, mid, vocab, 5);
    const Tensor prev = st.x0;
    const StepResult r = step(st, mid, model, vocab);
    const Tensor summary = vocab.combination(topm_softmax(r.y, 2));
    for (std::size_t j = 0; j < 8; ++j)
        CHECK(r.next.x0.values[j] == 0.75 * prev.values[j] + 0.25 * summary.values[j]);
}

TEST_CASE("verbal-token x0 equals a nonverbal x0 at the same embedding") {
    const TinyLm model = small_model();
    const Vocabulary vocab = model.vocabulary();
    const Trajectory a = rollout(tokenize("ok"), VerbalPrompt{int('x')}, 5, model, vocab);
    const Trajectory b =
        rollout(tokenize("ok"), NonVerbalPrompt{vocab.embed_one(int('x'))}, 5, model, vocab);
    for (std::size_t t = 0; t < a.mental.size(); ++t) {
        CHECK(bitwise_equal(a.mental[t], b.mental[t]));
        CHECK(a.verbal[t] == b.verbal[t]);
    }
}

TEST_CASE("rollouts are deterministic and mental matches verbal") {
    const TinyLm model = small_model();
    const Vocabulary vocab = model.vocabulary();
    const Trajectory a = rollout(tokenize("abc"), FadingOnce{2}, 8, model, vocab);
    const Trajectory b = rollout(tokenize("abc"), FadingOnce{2}, 8, model, vocab);
    REQUIRE(a.verbal.size() == 8);
    for (std::size_t t = 0; t < 8; ++t) {
        CHECK(a.verbal[t] == b.verbal[t]);
        CHECK(bitwise_equal(a.mental[t], b.mental[t]));
        CHECK(a.verbal[t] == verbalize_max(a.mental[t]));
    }
    CHECK_THROWS_AS(rollout(tokenize("abc"), Plain{}, 0, model, vocab), Error);
}

TEST_CASE("eos termination pads the tail and flags the step") {
    // Force eos: a model whose unembedding hugely favors eos from any input.
    LmConfig cfg;
    cfg.embed_dim = 8;
    cfg.context = 4;
    cfg.layers = 1;
    cfg.heads = 1;
    cfg.ff_dim = 8;
    TinyLm model(cfg);
    model.init_random(2);
    // Constant eos unembedding row + layer-norm offset: the eos logit becomes
    // 5 * embed_dim regardless of input, so eos fires on the first step.
    Tensor& unembed = model.param("unembed");
    for (std::size_t j = 0; j < unembed.cols(); ++j) unembed.at(kEosId, j) = 5.0;
    Tensor& lnb = model.param("ln_f.bias");
    for (std::size_t j = 0; j < lnb.numel(); ++j) lnb.values[j] = 1.0;

    const Vocabulary vocab = model.vocabulary();
    const Trajectory t = rollout(tokenize("a"), Plain{}, 6, model, vocab);
    REQUIRE(t.verbal.size() == 6);
    if (t.terminated) {
        CHECK(t.eos_step >= 1);
        CHECK(t.eos_step < 6);
        for (std::size_t k = t.eos_step; k < 6; ++k) {
            CHECK(t.verbal[k] == kEosId);
            CHECK(bitwise_equal(t.mental[k], t.mental[t.eos_step - 1]));
        }
    } else {
        // Construction failed to force eos early; it must then fire exactly at
        // the horizon or not at all, and the tail stays untouched.
        CHECK((t.eos_step == 0 || t.eos_step == 6));
    }
    CHECK(t.verbal[0] == kEosId);  // the doctored model emits eos immediately
}
