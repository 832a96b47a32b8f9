#include "obslab/observability.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <thread>

#include "obslab/error.hpp"
#include "obslab/rng.hpp"

namespace obslab {

std::size_t domain_size(const ControlDomain& domain) {
    struct Size {
        std::size_t operator()(const VerbalSet& d) const { return d.ids.size(); }
        std::size_t operator()(const NonVerbalSet& d) const { return d.vectors.size(); }
        std::size_t operator()(const MemorySet& d) const { return d.m_values.size(); }
    };
    return std::visit(Size{}, domain);
}

void validate_domain(const ControlDomain& domain) {
    if (domain_size(domain) == 0) raise(ErrorCode::invalid_input, "control domain must be nonempty");
    if (const auto* v = std::get_if<VerbalSet>(&domain)) {
        for (std::size_t i = 0; i < v->ids.size(); ++i)
            for (std::size_t j = i + 1; j < v->ids.size(); ++j)
                if (v->ids[i] == v->ids[j])
                    raise(ErrorCode::invalid_input, "duplicate control value in verbal domain");
    } else if (const auto* nv = std::get_if<NonVerbalSet>(&domain)) {
        for (std::size_t i = 0; i < nv->vectors.size(); ++i)
            for (std::size_t j = i + 1; j < nv->vectors.size(); ++j)
                if (nv->vectors[i].bitwise_equal(nv->vectors[j]))
                    raise(ErrorCode::invalid_input, "duplicate control value in nonverbal domain");
    } else if (const auto* ms = std::get_if<MemorySet>(&domain)) {
        for (std::size_t i = 0; i < ms->m_values.size(); ++i)
            for (std::size_t j = i + 1; j < ms->m_values.size(); ++j)
                if (ms->m_values[i] == ms->m_values[j])
                    raise(ErrorCode::invalid_input, "duplicate control value in memory domain");
    }
}

PromptSpec domain_spec(const ControlDomain& domain, std::size_t index) {
    if (index >= domain_size(domain)) raise(ErrorCode::invalid_input, "domain index out of range");
    struct Spec {
        std::size_t index;
        PromptSpec operator()(const VerbalSet& d) const { return VerbalPrompt{d.ids[index]}; }
        PromptSpec operator()(const NonVerbalSet& d) const { return NonVerbalPrompt{d.vectors[index]}; }
        PromptSpec operator()(const MemorySet& d) const {
            if (d.infinite) return FadingInfinite{d.m_values[index], d.lambda};
            return FadingOnce{d.m_values[index]};
        }
    };
    return std::visit(Spec{index}, domain);
}

std::string domain_label(const ControlDomain& domain, std::size_t index) {
    if (index >= domain_size(domain)) raise(ErrorCode::invalid_input, "domain index out of range");
    struct Label {
        std::size_t index;
        std::string operator()(const VerbalSet& d) const { return "s=" + token_repr(d.ids[index]); }
        std::string operator()(const NonVerbalSet&) const { return "v" + std::to_string(index); }
        std::string operator()(const MemorySet& d) const {
            return "m=" + std::to_string(d.m_values[index]);
        }
    };
    return std::visit(Label{index}, domain);
}

const char* domain_type_name(const ControlDomain& domain) {
    struct Name {
        const char* operator()(const VerbalSet&) const { return "verbal"; }
        const char* operator()(const NonVerbalSet&) const { return "nonverbal"; }
        const char* operator()(const MemorySet& d) const {
            return d.infinite ? "fading_infinite" : "fading_once";
        }
    };
    return std::visit(Name{}, domain);
}

NonVerbalSet nonverbal_domain(const Vocabulary& vocab, std::size_t size, std::size_t l,
                              std::uint64_t seed) {
    if (size == 0 || l == 0)
        raise(ErrorCode::invalid_parameter, "nonverbal domain: size and l must be positive");
    if (l > vocab.token_count())
        raise(ErrorCode::invalid_parameter, "nonverbal domain: l exceeds the vocabulary");
    Rng rng(seed);
    NonVerbalSet out;
    out.vectors.reserve(size);
    for (std::size_t i = 0; i < size; ++i) {
        const std::vector<std::size_t> picks = rng.sample_without_replacement(vocab.token_count(), l);
        Tensor mean = Tensor::zeros({vocab.embed_dim()});
        for (std::size_t t : picks) {
            const Tensor e = vocab.embed_one(static_cast<int>(t));
            for (std::size_t j = 0; j < mean.numel(); ++j) mean.values[j] += e.values[j];
        }
        for (double& x : mean.values) x /= static_cast<double>(l);
        out.vectors.push_back(std::move(mean));
    }
    return out;
}

namespace {

ReachableSet fill_reachable(std::vector<int> prompt, std::size_t tau, const ControlDomain& domain,
                            const TinyLm& model, const Vocabulary& vocab, std::size_t workers,
                            const Tensor* soft_rows) {
    validate_domain(domain);
    if (tau < 1) raise(ErrorCode::invalid_parameter, "reachable set: horizon must be >= 1");
    const std::size_t n = domain_size(domain);

    ReachableSet rs;
    rs.prompt = std::move(prompt);
    rs.tau = tau;
    rs.entries.resize(n);

    auto run_one = [&](std::size_t i) {
        const PromptSpec spec = domain_spec(domain, i);
        rs.entries[i] = soft_rows ? rollout_soft(*soft_rows, spec, tau, model, vocab)
                                  : rollout(rs.prompt, spec, tau, model, vocab);
    };

    if (workers == 0) {
        const unsigned hw = std::thread::hardware_concurrency();
        workers = hw ? std::min<std::size_t>(hw, 8) : 1;
    }
    workers = std::min(workers, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) run_one(i);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < n; i += workers) run_one(i);
            });
        for (std::thread& t : pool) t.join();
    }
    return rs;
}

}  // namespace

ReachableSet reachable_set(const std::vector<int>& prompt, std::size_t tau,
                           const ControlDomain& domain, const TinyLm& model,
                           const Vocabulary& vocab, std::size_t workers) {
    return fill_reachable(prompt, tau, domain, model, vocab, workers, nullptr);
}

ReachableSet reachable_set_soft(const Tensor& prompt_rows, std::size_t tau,
                                const ControlDomain& domain, const TinyLm& model,
                                const Vocabulary& vocab, std::size_t workers) {
    return fill_reachable({}, tau, domain, model, vocab, workers, &prompt_rows);
}

double trajectory_distance(const Trajectory& a, const Trajectory& b) {
    if (a.mental.size() != b.mental.size())
        raise(ErrorCode::invalid_input, "trajectory distance: length mismatch");
    double d = 0.0;
    for (std::size_t t = 0; t < a.mental.size(); ++t) d = std::max(d, max_abs_diff(a.mental[t], b.mental[t]));
    return d;
}

namespace {

// Greedy representative clustering in index order; exact partition when tol=0.
std::size_t count_distinct(const std::vector<Trajectory>& trajectories,
                           const std::vector<std::size_t>& members, double tol) {
    std::vector<std::size_t> reps;
    for (std::size_t i : members) {
        bool found = false;
        for (std::size_t r : reps) {
            if (trajectory_distance(trajectories[i], trajectories[r]) <= tol) {
                found = true;
                break;
            }
        }
        if (!found) reps.push_back(i);
    }
    return reps.size();
}

}  // namespace

IndistinguishableSet indistinguishable_set(const std::vector<int>& u, const ReachableSet& rs,
                                           double tol) {
    if (u.size() > rs.tau)
        raise(ErrorCode::invalid_input, "indistinguishable set: observation longer than the horizon");
    IndistinguishableSet out;
    for (std::size_t i = 0; i < rs.entries.size(); ++i) {
        const std::vector<int>& verbal = rs.entries[i].verbal;
        if (std::equal(u.begin(), u.end(), verbal.begin())) out.controls.push_back(i);
    }
    out.distinct_mentals = count_distinct(rs.entries, out.controls, tol);
    return out;
}

ObservabilityReport analyze_trajectories(const std::vector<Trajectory>& trajectories, double tol) {
    if (trajectories.empty()) raise(ErrorCode::invalid_input, "analysis over an empty trajectory set");
    const std::size_t tau = trajectories.front().mental.size();
    for (const Trajectory& t : trajectories)
        if (t.mental.size() != tau || t.verbal.size() != tau)
            raise(ErrorCode::invalid_input, "analysis requires equal-length trajectories");

    ObservabilityReport rep;
    rep.domain_size = trajectories.size();
    rep.tau = tau;
    rep.tol = tol;
    std::size_t terminated = 0;
    for (const Trajectory& t : trajectories) terminated += t.terminated ? 1 : 0;
    rep.terminated_fraction = static_cast<double>(terminated) / static_cast<double>(trajectories.size());

    for (std::size_t len = 1; len <= tau; ++len) {
        std::map<std::vector<int>, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < trajectories.size(); ++i) {
            std::vector<int> prefix(trajectories[i].verbal.begin(),
                                    trajectories[i].verbal.begin() + static_cast<std::ptrdiff_t>(len));
            groups[std::move(prefix)].push_back(i);
        }
        std::size_t q = 0, r = 0;
        std::vector<PrefixClass> classes;
        classes.reserve(groups.size());
        for (const auto& [prefix, members] : groups) {
            PrefixClass pc;
            pc.prefix = prefix;
            pc.controls = members;
            pc.distinct_mentals = count_distinct(trajectories, members, tol);
            q = std::max(q, pc.distinct_mentals);
            r = std::max(r, pc.controls.size());
            classes.push_back(std::move(pc));
        }
        rep.q.push_back(q);
        rep.r.push_back(r);
        rep.classes.push_back(std::move(classes));
    }

    rep.bijective = true;
    for (std::size_t i = 0; i < trajectories.size() && rep.bijective; ++i)
        for (std::size_t j = i + 1; j < trajectories.size(); ++j)
            if (trajectory_distance(trajectories[i], trajectories[j]) <= tol) {
                rep.bijective = false;
                rep.counterexample = {i, j};
                break;
            }
    return rep;
}

ObservabilityReport q_r_curves(const ReachableSet& rs, double tol) {
    return analyze_trajectories(rs.entries, tol);
}

BijectivityResult bijective_check(const ReachableSet& rs, double tol) {
    BijectivityResult res;
    res.bijective = true;
    for (std::size_t i = 0; i < rs.entries.size(); ++i)
        for (std::size_t j = i + 1; j < rs.entries.size(); ++j)
            if (trajectory_distance(rs.entries[i], rs.entries[j]) <= tol) {
                res.bijective = false;
                res.counterexample = {i, j};
                return res;
            }
    return res;
}

WindowReconstruction reconstruct_suffix(const std::vector<int>& u, std::size_t context) {
    if (context == 0) raise(ErrorCode::invalid_parameter, "reconstruction: context must be positive");
    WindowReconstruction rec;
    rec.slots.assign(context, -1);
    const std::size_t filled = std::min(u.size(), context);
    for (std::size_t k = 0; k < filled; ++k)
        rec.slots[context - 1 - k] = u[u.size() - 1 - k];
    rec.full_state = u.size() >= context;
    return rec;
}

bool meaning_equal(const std::vector<int>& x, const std::vector<int>& x_alt, const TinyLm& model,
                   const Vocabulary& vocab, std::size_t horizon, double tol) {
    const Trajectory a = rollout(x, Plain{}, horizon, model, vocab);
    const Trajectory b = rollout(x_alt, Plain{}, horizon, model, vocab);
    return trajectory_distance(a, b) <= tol;
}

}  // namespace obslab
