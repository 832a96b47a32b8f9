#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "obslab/dynsys.hpp"
#include "obslab/lm.hpp"
#include "obslab/tensor.hpp"
#include "obslab/vocab.hpp"

namespace obslab {

// The hidden control values swept per model family: token ids (verbal),
// raw vectors (non-verbal), or memory depths m (fading models).
struct VerbalSet {
    std::vector<int> ids;
};
struct NonVerbalSet {
    std::vector<Tensor> vectors;
};
struct MemorySet {
    std::vector<std::size_t> m_values;
    bool infinite = false;  // false: one-step fading; true: exponential average
    double lambda = 0.5;
};
using ControlDomain = std::variant<VerbalSet, NonVerbalSet, MemorySet>;

std::size_t domain_size(const ControlDomain& domain);
// Elements must be distinct and the set nonempty.
void validate_domain(const ControlDomain& domain);
PromptSpec domain_spec(const ControlDomain& domain, std::size_t index);
std::string domain_label(const ControlDomain& domain, std::size_t index);
const char* domain_type_name(const ControlDomain& domain);

// Random embedding-space controls: each element is the mean of l token
// embeddings sampled without replacement.
NonVerbalSet nonverbal_domain(const Vocabulary& vocab, std::size_t size, std::size_t l,
                              std::uint64_t seed);

// One trajectory per control value, all from the same prompt and model.
struct ReachableSet {
    std::vector<int> prompt;
    std::size_t tau = 0;
    std::vector<Trajectory> entries;  // entries[i] belongs to domain element i
};

// workers = 0 picks a hardware-based default; rollouts are pure, so the
// parallel fill is deterministic.
ReachableSet reachable_set(const std::vector<int>& prompt, std::size_t tau,
                           const ControlDomain& domain, const TinyLm& model,
                           const Vocabulary& vocab, std::size_t workers = 0);
ReachableSet reachable_set_soft(const Tensor& prompt_rows, std::size_t tau,
                                const ControlDomain& domain, const TinyLm& model,
                                const Vocabulary& vocab, std::size_t workers = 0);

// Chebyshev distance between mental sequences: max over steps of the max
// absolute logit difference. Sequences must have equal length.
double trajectory_distance(const Trajectory& a, const Trajectory& b);

struct IndistinguishableSet {
    std::vector<std::size_t> controls;  // domain indices whose verbal prefix matches
    std::size_t distinct_mentals = 0;   // mental trajectories at distance > tol
};

// All trajectories in rs whose verbal prefix equals u.
IndistinguishableSet indistinguishable_set(const std::vector<int>& u, const ReachableSet& rs,
                                           double tol = 0.0);

struct PrefixClass {
    std::vector<int> prefix;
    std::vector<std::size_t> controls;
    std::size_t distinct_mentals = 0;
};

struct ObservabilityReport {
    std::size_t domain_size = 0;
    std::size_t tau = 0;
    double tol = 0.0;
    std::vector<std::size_t> q;  // q[k] = Q(k+1)
    std::vector<std::size_t> r;  // r[k] = R(k+1)
    std::vector<std::vector<PrefixClass>> classes;  // classes[k] for prefix length k+1
    bool bijective = false;
    std::optional<std::pair<std::size_t, std::size_t>> counterexample;
    double terminated_fraction = 0.0;
};

// For each prefix length, group trajectories by verbal prefix; Q is the
// largest count of distinct mental trajectories within one group, R the
// largest group size in control values.
ObservabilityReport analyze_trajectories(const std::vector<Trajectory>& trajectories, double tol);
ObservabilityReport q_r_curves(const ReachableSet& rs, double tol = 0.0);

struct BijectivityResult {
    bool bijective = false;
    std::optional<std::pair<std::size_t, std::size_t>> counterexample;
};

// True iff every pair of control values yields mentally distinct trajectories.
BijectivityResult bijective_check(const ReachableSet& rs, double tol = 0.0);

// The window suffix forced by an observed verbal sequence: the newest
// min(t, c) slots are the most recent outputs; -1 marks unknown slots.
struct WindowReconstruction {
    std::vector<int> slots;  // length c
    bool full_state = false;  // t >= c: the whole window is pinned down
};

WindowReconstruction reconstruct_suffix(const std::vector<int>& u, std::size_t context);

// True iff prompt-free rollouts from x and x_alt produce logit sequences
// within tol at every step up to the horizon.
bool meaning_equal(const std::vector<int>& x, const std::vector<int>& x_alt, const TinyLm& model,
                   const Vocabulary& vocab, std::size_t horizon, double tol = 0.0);

}  // namespace obslab
