#include <doctest.h>

#include <set>

#include "obslab/error.hpp"
#include "obslab/observability.hpp"

using namespace obslab;

namespace {

Trajectory make_traj(std::vector<int> verbal, std::vector<Tensor> mental) {
    Trajectory t;
    t.verbal = std::move(verbal);
    t.mental = std::move(mental);
    return t;
}

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

TEST_CASE("hand-built grouping oracle for the Q and R curves") {
    const Tensor m0 = Tensor::vec({0.0, 0.0});
    const Tensor m1 = Tensor::vec({1.0, 0.0});
    const Tensor m3 = Tensor::vec({0.0, 2.0});
    std::vector<Trajectory> trajs{
        make_traj({10, 20}, {m0, m0}),
        make_traj({10, 30}, {m1, m1}),
        make_traj({10, 20}, {m0, m0}),
        make_traj({40, 50}, {m3, m3}),
    };
    const ObservabilityReport rep = analyze_trajectories(trajs, 0.0);
    REQUIRE(rep.q.size() == 2);

    // Prefix length 1: group {10} holds controls 0,1,2 with two distinct
    // mental trajectories; group {40} is a singleton.
    CHECK(rep.q[0] == 2);
    CHECK(rep.r[0] == 3);
    // Prefix length 2 splits {10}: {10,20} keeps the duplicated pair.
    CHECK(rep.q[1] == 1);
    CHECK(rep.r[1] == 2);

    CHECK_FALSE(rep.bijective);
    REQUIRE(rep.counterexample.has_value());
    CHECK(rep.counterexample->first == 0);
    CHECK(rep.counterexample->second == 2);
    CHECK(rep.terminated_fraction == 0.0);
}

TEST_CASE("each prefix level partitions the controls") {
    const Tensor m0 = Tensor::vec({0.0});
    std::vector<Trajectory> trajs{
        make_traj({1, 1}, {m0, m0}),         make_traj({1, 2}, {m0, m0}),
        make_traj({2, 1}, {m0, m0}),         make_traj({2, 2}, {m0, m0}),
        make_traj({1, 1}, {m0, m0}),
    };
    const ObservabilityReport rep = analyze_trajectories(trajs, 0.0);
    for (const auto& level : rep.classes) {
        std::set<std::size_t> seen;
        for (const PrefixClass& pc : level)
            for (std::size_t ctl : pc.controls) CHECK(seen.insert(ctl).second);
        CHECK(seen.size() == trajs.size());
    }
}

TEST_CASE("tolerance merges nearby mental trajectories") {
    const Tensor a = Tensor::vec({0.0});
    const Tensor b = Tensor::vec({0.5});
    std::vector<Trajectory> trajs{make_traj({7}, {a}), make_traj({7}, {b})};
    CHECK(analyze_trajectories(trajs, 0.0).q[0] == 2);
    CHECK(analyze_trajectories(trajs, 0.1).q[0] == 2);
    CHECK(analyze_trajectories(trajs, 0.5).q[0] == 1);  // distance must exceed tol
    CHECK(analyze_trajectories(trajs, 1.0).q[0] == 1);
    CHECK(analyze_trajectories(trajs, 0.0).bijective);
}

TEST_CASE("indistinguishable set filters by verbal prefix") {
    const Tensor m0 = Tensor::vec({0.0});
    const Tensor m1 = Tensor::vec({9.0});
    ReachableSet rs;
    rs.tau = 2;
    rs.entries = {make_traj({3, 4}, {m0, m0}), make_traj({3, 5}, {m1, m1}),
                  make_traj({6, 4}, {m0, m0})};
    const IndistinguishableSet at3 = indistinguishable_set({3}, rs);
    CHECK(at3.controls == std::vector<std::size_t>{0, 1});
    CHECK(at3.distinct_mentals == 2);
    const IndistinguishableSet at34 = indistinguishable_set({3, 4}, rs);
    CHECK(at34.controls == std::vector<std::size_t>{0});
    CHECK(indistinguishable_set({9}, rs).controls.empty());
    CHECK_THROWS_AS(indistinguishable_set({1, 2, 3}, rs), Error);  // longer than tau
}

TEST_CASE("trajectory distance is the max logit gap over steps") {
    const Trajectory a = make_traj({1, 2}, {Tensor::vec({0.0, 1.0}), Tensor::vec({2.0, 2.0})});
    const Trajectory b = make_traj({1, 2}, {Tensor::vec({0.5, 1.0}), Tensor::vec({2.0, -1.0})});
    CHECK(trajectory_distance(a, b) == 3.0);
    CHECK(trajectory_distance(a, a) == 0.0);
    const Trajectory shorter = make_traj({1}, {Tensor::vec({0.0, 1.0})});
    CHECK_THROWS_AS(trajectory_distance(a, shorter), Error);
}

TEST_CASE("domain helpers: sizes, labels, duplicates") {
    VerbalSet vs;
    vs.ids = {5, 6, 7};
    CHECK(domain_size(vs) == 3);
    CHECK(domain_type_name(ControlDomain{vs}) == std::string("verbal"));
    CHECK_NOTHROW(validate_domain(vs));
    vs.ids.push_back(5);
    CHECK_THROWS_AS(validate_domain(ControlDomain{vs}), Error);

    MemorySet ms;
    ms.m_values = {1, 2, 2};
    CHECK_THROWS_AS(validate_domain(ControlDomain{ms}), Error);
    ms.m_values = {};
    CHECK_THROWS_AS(validate_domain(ControlDomain{ms}), Error);

    MemorySet ok;
    ok.m_values = {1, 4};
    ok.infinite = true;
    ok.lambda = 0.5;
    const PromptSpec spec = domain_spec(ok, 1);
    CHECK(std::holds_alternative<FadingInfinite>(spec));
    CHECK(std::get<FadingInfinite>(spec).m == 4);
    CHECK(domain_label(ok, 1) == "m=4");
}

TEST_CASE("nonverbal domain construction is seeded and well-formed") {
    const TinyLm model = small_model();
    const Vocabulary vocab = model.vocabulary();
    const NonVerbalSet a = nonverbal_domain(vocab, 6, 10, 42);
    const NonVerbalSet b = nonverbal_domain(vocab, 6, 10, 42);
    const NonVerbalSet c = nonverbal_domain(vocab, 6, 10, 43);
    REQUIRE(a.vectors.size() == 6);
    bool same = true, differs = false;
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(a.vectors[i].numel() == vocab.embed_dim());
        same = same && bitwise_equal(a.vectors[i], b.vectors[i]);
        differs = differs || !bitwise_equal(a.vectors[i], c.vectors[i]);
    }
    CHECK(same);
    CHECK(differs);
    CHECK_THROWS_AS(nonverbal_domain(vocab, 3, kVocabSize + 1, 1), Error);
}

TEST_CASE("reachable sets match one-by-one rollouts and ignore worker count") {
    const TinyLm model = small_model();
    const Vocabulary vocab = model.vocabulary();
    VerbalSet domain;
    domain.ids = {int('a'), int('b'), int('c'), kBosId, 200};
    const std::vector<int> prompt = tokenize("go");

    const ReachableSet rs1 = reachable_set(prompt, 6, domain, model, vocab, 1);
    const ReachableSet rs4 = reachable_set(prompt, 6, domain, model, vocab, 4);
    REQUIRE(rs1.entries.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        const Trajectory solo = rollout(prompt, VerbalPrompt{domain.ids[i]}, 6, model, vocab);
        CHECK(solo.verbal == rs1.entries[i].verbal);
        for (std::size_t t = 0; t < 6; ++t) {
            CHECK(bitwise_equal(solo.mental[t], rs1.entries[i].mental[t]));
            CHECK(bitwise_equal(rs1.entries[i].mental[t], rs4.entries[i].mental[t]));
        }
    }
}

TEST_CASE("q and r curves on a live model obey the lattice bounds") {
    const TinyLm model = small_model(3);
    const Vocabulary vocab = model.vocabulary();
    MemorySet domain;
    for (std::size_t m = 1; m <= 8; ++m) domain.m_values.push_back(m);
    const ReachableSet rs = reachable_set(tokenize("t"), 8, domain, model, vocab);
    const ObservabilityReport rep = q_r_curves(rs, 0.0);
    REQUIRE(rep.q.size() == 8);
    for (std::size_t k = 0; k < 8; ++k) {
        CHECK(rep.q[k] >= 1);
        CHECK(rep.q[k] <= rep.r[k]);
        CHECK(rep.r[k] <= 8);
        if (k > 0) {
            CHECK(rep.q[k] <= rep.q[k - 1]);
            CHECK(rep.r[k] <= rep.r[k - 1]);
        }
    }
    const BijectivityResult bij = bijective_check(rs, 0.0);
    CHECK(bij.bijective == rep.bijective);
    // Pairwise-distinct mental trajectories force Q = R at every prefix level.
    bool all_eq = true;
    for (std::size_t k = 0; k < 8; ++k) all_eq = all_eq && (rep.q[k] == rep.r[k]);
    if (rep.bijective) CHECK(all_eq);
}

TEST_CASE("window reconstruction pins exactly the observed suffix") {
    const WindowReconstruction early = reconstruct_suffix({5, 6}, 4);
    CHECK(early.slots == std::vector<int>{-1, -1, 5, 6});
    CHECK_FALSE(early.full_state);

    const WindowReconstruction exact = reconstruct_suffix({1, 2, 3, 4}, 4);
    CHECK(exact.slots == std::vector<int>{1, 2, 3, 4});
    CHECK(exact.full_state);

    const WindowReconstruction over = reconstruct_suffix({1, 2, 3, 4, 5, 6}, 4);
    CHECK(over.slots == std::vector<int>{3, 4, 5, 6});
    CHECK(over.full_state);

    const WindowReconstruction none = reconstruct_suffix({}, 3);
    CHECK(none.slots == std::vector<int>{-1, -1, -1});
    CHECK_FALSE(none.full_state);
}

TEST_CASE("meaning equivalence is reflexive, symmetric, and discriminating") {
    const TinyLm model = small_model();
    const Vocabulary vocab = model.vocabulary();
    const std::vector<int> x = tokenize("abcde");
    const std::vector<int> y = tokenize("abcdf");
    CHECK(meaning_equal(x, x, model, vocab, 4, 0.0));
    CHECK(meaning_equal(y, y, model, vocab, 4, 0.0));
    const bool xy = meaning_equal(x, y, model, vocab, 4, 0.0);
    const bool yx = meaning_equal(y, x, model, vocab, 4, 0.0);
    CHECK(xy == yx);
    CHECK_FALSE(xy);  // random init separates distinct windows
    // A huge tolerance accepts everything.
    CHECK(meaning_equal(x, y, model, vocab, 4, 1e6));
}
