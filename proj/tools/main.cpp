// Batch experiment driver: train the tiny model, run observability sweeps,
// optimize prompts, craft trojan vectors, and emit CSV/JSON reports.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "obslab/checkpoint.hpp"
#include "obslab/corpus.hpp"
#include "obslab/dynsys.hpp"
#include "obslab/error.hpp"
#include "obslab/hash.hpp"
#include "obslab/lm.hpp"
#include "obslab/mpp.hpp"
#include "obslab/observability.hpp"
#include "obslab/report.hpp"
#include "obslab/rng.hpp"
#include "obslab/trojan.hpp"
#include "obslab/unobservable.hpp"

using nlohmann::json;
using namespace obslab;

namespace {

std::size_t workers_from_env() {
    const char* v = std::getenv("OBSLAB_WORKERS");
    if (!v || !*v) return 0;  // automatic
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end == v || n < 0) raise(ErrorCode::invalid_parameter, "OBSLAB_WORKERS must be a non-negative integer");
    return static_cast<std::size_t>(n);
}

json load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) raise(ErrorCode::io, "config: cannot open " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        raise(ErrorCode::configuration, std::string("config: ") + e.what());
    }
    if (!j.is_object()) raise(ErrorCode::configuration, "config: top level must be an object");
    return j;
}

// Flags win over the config file: the config is applied before CLI11 writes
// any passed flag into the bound variables.
template <typename T>
void overlay(const json& cfg, const char* key, T& value) {
    if (cfg.contains(key)) value = cfg.at(key).get<T>();
}

std::optional<std::string> find_config_arg(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
        if (a.rfind("--config=", 0) == 0) return a.substr(9);
    }
    return std::nullopt;
}

TinyLm load_model(const std::string& checkpoint) {
    if (checkpoint.empty()) raise(ErrorCode::invalid_parameter, "a --checkpoint path is required");
    std::ifstream probe(checkpoint, std::ios::binary);
    if (!probe) raise(ErrorCode::io, "cannot open checkpoint " + checkpoint);
    probe.close();
    return load_checkpoint(checkpoint);
}

void write_json(const std::string& path, const json& j) {
    std::ofstream os(path, std::ios::binary);
    if (!os) raise(ErrorCode::io, "cannot open " + path + " for writing");
    os << j.dump(2) << "\n";
}

json model_config_json(const TinyLm& model) {
    const LmConfig& c = model.config();
    return json{{"embed_dim", c.embed_dim}, {"context", c.context},   {"layers", c.layers},
                {"heads", c.heads},         {"ff_dim", c.ff_dim},     {"vocab", c.vocab},
                {"ln_eps", c.ln_eps},       {"checksum", hex64(model.checksum())}};
}

std::string printable_prompt(const std::vector<int>& ids) {
    std::string out;
    for (int id : ids) out += token_repr(id);
    return out;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string corpus_path;
    std::size_t synthetic_bytes = 0;
    std::string out = "model.ckpt";
    std::size_t steps = 2000;
    std::size_t batch = 16;
    double lr = 1e-3;
    double weight_decay = 0.01;
    std::uint64_t init_seed = 0;
    std::uint64_t train_seed = 7;
    std::uint64_t corpus_seed = 11;
    std::size_t embed_dim = 32, context = 16, layers = 2, heads = 2, ff_dim = 64;
    std::size_t log_every = 100;
};

int cmd_train(const TrainArgs& a) {
    std::string text;
    if (!a.corpus_path.empty()) {
        std::ifstream is(a.corpus_path, std::ios::binary);
        if (!is) raise(ErrorCode::io, "cannot open corpus " + a.corpus_path);
        std::ostringstream ss;
        ss << is.rdbuf();
        text = ss.str();
        if (text.empty()) raise(ErrorCode::data, "corpus file is empty: " + a.corpus_path);
    } else if (a.synthetic_bytes > 0) {
        text = synthetic_corpus(a.synthetic_bytes, a.corpus_seed);
    } else {
        raise(ErrorCode::invalid_parameter, "either --corpus or --synthetic is required");
    }

    LmConfig cfg;
    cfg.embed_dim = a.embed_dim;
    cfg.context = a.context;
    cfg.layers = a.layers;
    cfg.heads = a.heads;
    cfg.ff_dim = a.ff_dim;
    TinyLm model(cfg);
    model.init_random(a.init_seed);

    TrainConfig tc;
    tc.steps = a.steps;
    tc.batch = a.batch;
    tc.lr = a.lr;
    tc.weight_decay = a.weight_decay;
    tc.seed = a.train_seed;
    tc.log_every = a.log_every;
    const TrainStats stats = train_lm(model, tokenize(text), tc);

    save_checkpoint(model, a.out);
    std::printf("trained %zu steps on %zu bytes; final loss %.4f nats\n", a.steps, text.size(),
                stats.final_loss);
    std::printf("checkpoint %s  checksum %s\n", a.out.c_str(), hex64(model.checksum()).c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepArgs {
    std::string checkpoint;
    std::string out_csv = "sweep.csv";
    std::string out_report;
    std::vector<std::string> types{"verbal", "nonverbal", "fading_once", "fading_infinite"};
    std::string prompts_file;
    std::vector<std::string> prompts_inline;
    std::size_t num_prompts = 20;
    std::size_t tau = 32;
    std::size_t verbal_domain = 64;
    std::size_t nonverbal_domain = 20;
    std::size_t nonverbal_l = 10;
    std::size_t omega_max = 20;
    double lambda = 0.5;
    double tol = 0.0;
    std::uint64_t seed = 0;
};

std::vector<std::vector<int>> sweep_prompts(const SweepArgs& a, std::size_t context) {
    std::vector<std::vector<int>> prompts;
    if (!a.prompts_file.empty()) {
        std::ifstream is(a.prompts_file);
        if (!is) raise(ErrorCode::io, "cannot open prompts file " + a.prompts_file);
        std::string line;
        while (std::getline(is, line)) prompts.push_back(tokenize(line));
    } else if (!a.prompts_inline.empty()) {
        for (const std::string& p : a.prompts_inline) prompts.push_back(tokenize(p));
    } else {
        // Deterministic default: windows cut from the synthetic corpus.
        const std::string text = synthetic_corpus(4096, a.seed + 101);
        Rng rng(a.seed + 202);
        for (std::size_t i = 0; i < a.num_prompts; ++i) {
            const std::size_t len = 1 + static_cast<std::size_t>(rng.below(context));
            const std::size_t start = static_cast<std::size_t>(rng.below(text.size() - len));
            prompts.push_back(tokenize(std::string_view(text).substr(start, len)));
        }
    }
    if (prompts.empty()) raise(ErrorCode::invalid_parameter, "no prompts to sweep");
    return prompts;
}

ControlDomain sweep_domain(const std::string& type, const SweepArgs& a, const Vocabulary& vocab) {
    if (type == "verbal") {
        Rng rng(a.seed + 303);
        const auto picks = rng.sample_without_replacement(vocab.token_count(), a.verbal_domain);
        VerbalSet d;
        for (std::size_t t : picks) d.ids.push_back(static_cast<int>(t));
        return d;
    }
    if (type == "nonverbal")
        return nonverbal_domain(vocab, a.nonverbal_domain, a.nonverbal_l, a.seed + 404);
    if (type == "fading_once" || type == "fading_infinite") {
        MemorySet d;
        for (std::size_t m = 1; m <= a.omega_max; ++m) d.m_values.push_back(m);
        d.infinite = (type == "fading_infinite");
        d.lambda = a.lambda;
        return d;
    }
    raise(ErrorCode::invalid_parameter, "unknown model type '" + type + "'");
}

int cmd_sweep(const SweepArgs& a) {
    const TinyLm model = load_model(a.checkpoint);
    const Vocabulary vocab = model.vocabulary();
    const std::size_t workers = workers_from_env();
    const std::vector<std::vector<int>> prompts = sweep_prompts(a, model.config().context);

    std::ostringstream canon;
    canon << "sweep;tau=" << a.tau << ";verbal=" << a.verbal_domain
          << ";nonverbal=" << a.nonverbal_domain << ";l=" << a.nonverbal_l
          << ";omega=" << a.omega_max << ";lambda=" << a.lambda << ";tol=" << a.tol
          << ";seed=" << a.seed << ";prompts=" << prompts.size() << ";model=" << hex64(model.checksum());
    for (const std::string& t : a.types) canon << ";" << t;
    const std::uint64_t cfg_hash = config_hash(canon.str());

    std::vector<SweepRow> rows;
    json report;
    report["tool_version"] = tool_version();
    report["config_hash"] = hex64(cfg_hash);
    report["seed"] = a.seed;
    report["tolerance"] = a.tol;
    report["tau"] = a.tau;
    report["lambda"] = a.lambda;
    report["model"] = model_config_json(model);
    report["prompts"] = json::array();
    report["skipped"] = json::array();
    report["results"] = json::array();

    for (std::size_t pi = 0; pi < prompts.size(); ++pi) {
        char pid[16];
        std::snprintf(pid, sizeof(pid), "p%02zu", pi);
        report["prompts"].push_back({{"id", pid}, {"text", printable_prompt(prompts[pi])}});
        if (prompts[pi].size() > model.config().context) {
            std::fprintf(stderr, "warning: prompt %s longer than the window, skipped\n", pid);
            report["skipped"].push_back({{"id", pid}, {"reason", "prompt longer than window"}});
            continue;
        }
        for (const std::string& type : a.types) {
            const ControlDomain domain = sweep_domain(type, a, vocab);
            const ReachableSet rs = reachable_set(prompts[pi], a.tau, domain, model, vocab, workers);
            const ObservabilityReport rep = q_r_curves(rs, a.tol);

            for (std::size_t k = 0; k < rep.q.size(); ++k)
                rows.push_back(SweepRow{pid, type, k + 1, rep.q[k], rep.r[k], rep.domain_size,
                                        rep.bijective, rep.terminated_fraction});

            json cell;
            cell["prompt_id"] = pid;
            cell["model_type"] = type;
            cell["domain_size"] = rep.domain_size;
            cell["q"] = rep.q;
            cell["r"] = rep.r;
            cell["bijective"] = rep.bijective;
            if (rep.counterexample)
                cell["counterexample"] = {rep.counterexample->first, rep.counterexample->second};
            cell["terminated_fraction"] = rep.terminated_fraction;
            json class_counts = json::array();
            for (const auto& level : rep.classes) class_counts.push_back(level.size());
            cell["class_counts"] = class_counts;
            json final_classes = json::array();
            for (const PrefixClass& pc : rep.classes.back()) {
                final_classes.push_back({{"prefix", printable_prompt(pc.prefix)},
                                         {"controls", pc.controls},
                                         {"distinct_mentals", pc.distinct_mentals}});
            }
            cell["final_classes"] = final_classes;
            report["results"].push_back(std::move(cell));
        }
    }

    std::vector<std::string> metadata{
        std::string("tool_version ") + tool_version(),
        "config_hash " + hex64(cfg_hash),
        "seed " + std::to_string(a.seed),
        "tolerance " + std::to_string(a.tol),
    };
    write_sweep_csv(a.out_csv, metadata, rows);
    std::printf("wrote %zu rows to %s\n", rows.size(), a.out_csv.c_str());
    if (!a.out_report.empty()) {
        write_json(a.out_report, report);
        std::printf("wrote report to %s\n", a.out_report.c_str());
    }
    return 0;
}

// ---------------------------------------------------------------------------
// mpp
// ---------------------------------------------------------------------------

struct MppArgs {
    std::string checkpoint;
    std::string out_report = "mpp.json";
    std::size_t domain_size = 100;
    std::size_t n = 1;
    std::size_t tau = 1;
    std::size_t epochs = 10;
    std::size_t batch_pairs = 10;
    double lr = 1e-2;
    bool no_reparam = false;
    std::size_t hidden = 512;
    std::uint64_t seed = 0;
    std::size_t eval_tau = 32;
};

int cmd_mpp(const MppArgs& a) {
    if (a.domain_size < 2) raise(ErrorCode::invalid_parameter, "--domain-size must be >= 2");
    const TinyLm model = load_model(a.checkpoint);
    const Vocabulary vocab = model.vocabulary();
    const std::size_t workers = workers_from_env();

    Rng rng(a.seed + 505);
    VerbalSet domain;
    for (std::size_t t : rng.sample_without_replacement(vocab.token_count(), a.domain_size))
        domain.ids.push_back(static_cast<int>(t));

    MppConfig cfg;
    cfg.n = a.n;
    cfg.tau = a.tau;
    cfg.epochs = a.epochs;
    cfg.batch_pairs = a.batch_pairs;
    cfg.lr = a.lr;
    cfg.reparam = !a.no_reparam;
    cfg.hidden = a.hidden;
    cfg.seed = a.seed;
    const MppResult res = optimize_mpp(model, domain, cfg);

    json report;
    report["tool_version"] = tool_version();
    std::ostringstream canon;
    canon << "mpp;n=" << a.n << ";tau=" << a.tau << ";epochs=" << a.epochs << ";batch=" << a.batch_pairs
          << ";lr=" << a.lr << ";reparam=" << (cfg.reparam ? 1 : 0) << ";hidden=" << a.hidden
          << ";seed=" << a.seed << ";domain=" << a.domain_size << ";model=" << hex64(model.checksum());
    report["config_hash"] = hex64(config_hash(canon.str()));
    report["seed"] = a.seed;
    report["tolerance"] = 0.0;
    report["model"] = model_config_json(model);
    report["domain_ids"] = domain.ids;
    report["hyper"] = {{"n", a.n},        {"tau", a.tau},           {"epochs", a.epochs},
                       {"batch_pairs", a.batch_pairs}, {"lr", a.lr}, {"reparam", cfg.reparam},
                       {"hidden", a.hidden},           {"init_token", cfg.init_token}};
    report["initial_loss"] = res.initial_loss;
    report["final_loss"] = res.final_loss;
    report["loss_curve"] = res.loss_curve;
    report["aborted"] = res.aborted;
    report["steps_run"] = res.steps_run;
    report["prompt"] = res.prompt.values;

    const ReachableSet rs_opt = reachable_set_soft(res.prompt, a.eval_tau, domain, model, vocab, workers);
    const ObservabilityReport rep_opt = q_r_curves(rs_opt, 0.0);
    report["optimized"] = {{"q", rep_opt.q}, {"r", rep_opt.r}};

    json baselines = json::array();
    std::size_t q1_opt = rep_opt.q.front();
    bool dominates = true;
    for (const std::vector<int>& base : handcrafted_baselines()) {
        const ReachableSet rs_b = reachable_set(base, a.eval_tau, domain, model, vocab, workers);
        const ObservabilityReport rep_b = q_r_curves(rs_b, 0.0);
        baselines.push_back({{"prompt", printable_prompt(base)}, {"q", rep_b.q}, {"r", rep_b.r}});
        if (q1_opt > rep_b.q.front()) dominates = false;
    }
    report["baselines"] = baselines;
    report["q1_optimized"] = q1_opt;
    report["dominates_baselines"] = dominates;

    write_json(a.out_report, report);
    std::printf("loss %.6f -> %.6f; Q_1 optimized %zu; dominates baselines: %s\n", res.initial_loss,
                res.final_loss, q1_opt, dominates ? "yes" : "no");
    std::printf("wrote report to %s\n", a.out_report.c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// trojan
// ---------------------------------------------------------------------------

struct TrojanArgs {
    std::string checkpoint;
    std::string out_report = "trojan.json";
    std::string out_vector;
    std::string user_prompt = "the hidden state";
    std::string target = "ok. ";
    std::size_t agreement = 8;
    std::size_t epochs = 1000;
    double lr = 5e-2;
    std::vector<std::uint64_t> seeds{0};
    std::size_t eval_every = 25;
    bool evaluate_only = false;
    std::string vector_path;
    bool auto_setup = false;
};

int cmd_trojan(const TrojanArgs& a) {
    const TinyLm model = load_model(a.checkpoint);
    const Vocabulary vocab = model.vocabulary();

    std::vector<int> prompt_ids = tokenize(a.user_prompt);
    std::vector<int> target_ids = tokenize(a.target);
    if (target_ids.empty()) raise(ErrorCode::invalid_parameter, "--target must be nonempty");

    json report;
    report["tool_version"] = tool_version();

    if (a.auto_setup) {
        // Candidate prompts are windows cut from the deterministic text the
        // models are trained on; the selector keeps the one the attack fits best.
        const std::string text = synthetic_corpus(4096, 777);
        Rng pool_rng(778);
        std::vector<std::vector<int>> pool;
        for (int i = 0; i < 64; ++i) {
            const std::size_t len = 4 + pool_rng.below(9);
            const std::size_t start = pool_rng.below(text.size() - len);
            pool.push_back(tokenize(text.substr(start, len)));
        }
        const TrojanSetup setup =
            select_trojan_setup(pool, a.agreement, target_ids.size(), model, vocab);
        prompt_ids = setup.user_prompt;
        target_ids = setup.target;
        report["auto_setup"] = {{"min_agreement_margin", setup.min_agreement_margin},
                                {"flip_gap", setup.flip_gap}};
        std::printf("auto setup: prompt \"%s\", target \"%s\"\n",
                    printable_prompt(prompt_ids).c_str(), printable_prompt(target_ids).c_str());
    }

    std::ostringstream canon;
    canon << "trojan;agreement=" << a.agreement << ";epochs=" << a.epochs << ";lr=" << a.lr
          << ";prompt=" << printable_prompt(prompt_ids) << ";target=" << printable_prompt(target_ids)
          << ";model=" << hex64(model.checksum());
    report["config_hash"] = hex64(config_hash(canon.str()));
    report["tolerance"] = 0.0;
    report["model"] = model_config_json(model);
    report["user_prompt"] = printable_prompt(prompt_ids);
    report["target"] = printable_prompt(target_ids);
    report["agreement"] = a.agreement;

    if (a.evaluate_only) {
        if (a.vector_path.empty())
            raise(ErrorCode::invalid_parameter, "--evaluate-only requires --vector");
        const Tensor cand = load_trojan_vector(a.vector_path);
        const TrojanEval ev = evaluate_trojan(prompt_ids, vocab.embed_one(kBosId), cand, a.agreement,
                                              target_ids, model, vocab);
        report["evaluation"] = {{"agreement_len", ev.agreement_len},
                                {"match_count", ev.match_count},
                                {"success", ev.success}};
        write_json(a.out_report, report);
        std::printf("agreement %zu, target matches %zu/%zu, success: %s\n", ev.agreement_len,
                    ev.match_count, target_ids.size(), ev.success ? "yes" : "no");
        return 0;
    }

    json runs = json::array();
    std::size_t successes = 0;
    std::optional<TrojanResult> best;
    std::optional<TrojanSpec> best_spec;
    for (std::uint64_t seed : a.seeds) {
        TrojanSpec spec;
        spec.user_prompt = prompt_ids;
        spec.target = target_ids;
        spec.agreement = a.agreement;
        spec.epochs = a.epochs;
        spec.lr = a.lr;
        spec.seed = seed;
        spec.eval_every = a.eval_every;
        const TrojanResult r = craft_trojan(spec, model, vocab);
        if (model.checksum() != r.model_checksum)
            raise(ErrorCode::contract_violation, "model weights changed during crafting");
        if (r.eval.success) ++successes;
        const bool better = !best || (r.eval.success && !best->eval.success) ||
                            (r.eval.success == best->eval.success &&
                             r.eval.match_count > best->eval.match_count);
        if (better) {
            best = r;
            best_spec = spec;
        }
        runs.push_back({{"seed", seed},
                        {"epochs_run", r.epochs_run},
                        {"final_loss", r.loss_curve.empty() ? 0.0 : r.loss_curve.back()},
                        {"aborted", r.aborted},
                        {"agreement_len", r.eval.agreement_len},
                        {"match_count", r.eval.match_count},
                        {"success", r.eval.success}});
        std::printf("seed %llu: epochs %zu, agreement %zu, matches %zu/%zu, success: %s\n",
                    static_cast<unsigned long long>(seed), r.epochs_run, r.eval.agreement_len,
                    r.eval.match_count, target_ids.size(), r.eval.success ? "yes" : "no");
    }
    report["seeds"] = a.seeds;
    report["runs"] = runs;
    report["successes"] = successes;
    report["model_checksum_unchanged"] = true;

    if (!a.out_vector.empty() && best) save_trojan_vector(*best, *best_spec, a.out_vector);
    write_json(a.out_report, report);
    std::printf("%zu/%zu seeds succeeded; report %s\n", successes, a.seeds.size(),
                a.out_report.c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// theorem-demos
// ---------------------------------------------------------------------------

struct DemoArgs {
    std::string checkpoint;
    std::size_t rollouts = 100;
    std::size_t tau = 64;
    std::size_t initial_conditions = 1000;
    std::uint64_t seed = 0;
};

int cmd_theorem_demos(const DemoArgs& a) {
    TinyLm model = [&] {
        if (!a.checkpoint.empty()) return load_model(a.checkpoint);
        TinyLm m{LmConfig{}};
        m.init_random(0);
        return m;
    }();
    const Vocabulary vocab = model.vocabulary();
    const std::size_t c = model.config().context;

    bool all_pass = true;
    auto line = [&](const char* name, bool pass) {
        std::printf("%-44s %s\n", name, pass ? "pass" : "FAIL");
        all_pass = all_pass && pass;
    };

    // Window suffix reconstruction from outputs alone, checked against the
    // simulator's actual window at every step.
    {
        Rng rng(a.seed + 606);
        bool suffix_ok = true, full_ok = true;
        for (std::size_t i = 0; i < a.rollouts && (suffix_ok || full_ok); ++i) {
            const std::size_t len = 1 + static_cast<std::size_t>(rng.below(c));
            std::vector<int> prompt;
            for (std::size_t k = 0; k < len; ++k)
                prompt.push_back(static_cast<int>(rng.below(kByteTokens)));
            ExtendedState st = make_initial(prompt, Plain{}, vocab, c);
            std::vector<int> outputs;
            for (std::size_t t = 1; t <= a.tau; ++t) {
                const StepResult r = step(st, Plain{}, model, vocab);
                outputs.push_back(r.u);
                const WindowReconstruction rec = reconstruct_suffix(outputs, c);
                const std::size_t known = std::min<std::size_t>(t, c);
                for (std::size_t k = 0; k < known; ++k)
                    if (rec.slots[c - 1 - k] != r.next.window_ids[c - 1 - k]) suffix_ok = false;
                if (rec.full_state != (t >= c)) full_ok = false;
                if (rec.full_state && rec.slots != r.next.window_ids) full_ok = false;
                st = r.next;
            }
        }
        line("window suffix reconstruction exact", suffix_ok);
        line("full window recovered from step c on", full_ok);
    }

    // Unobservable construction: one output sequence, many states.
    {
        const UnobservableSystem sys = construct_unobservable_system(6, 8, 20, a.seed + 707);
        line("contraction certificate < 1", sys.certificate < 1.0);
        Rng rng(a.seed + 808);
        std::vector<Trajectory> trajs;
        trajs.reserve(a.initial_conditions);
        for (std::size_t i = 0; i < a.initial_conditions; ++i)
            trajs.push_back(unobservable_rollout(sys, random_state(sys, 1.0, rng), 16));
        bool outputs_identical = true;
        for (const Trajectory& t : trajs)
            for (int u : t.verbal)
                if (u != sys.constant_token) outputs_identical = false;
        line("all output sequences identical", outputs_identical);
        const ObservabilityReport rep = analyze_trajectories(trajs, 0.0);
        line("state trajectories pairwise distinct", rep.bijective);
        line("indistinguishable count equals set size",
             rep.q.back() == a.initial_conditions && rep.r.back() == a.initial_conditions);
    }

    std::printf("%s\n", all_pass ? "all demos passed" : "SOME DEMOS FAILED");
    return all_pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// rollout (debug pretty-printer)
// ---------------------------------------------------------------------------

struct RolloutArgs {
    std::string checkpoint;
    std::string prompt;
    std::string spec = "plain";
    std::size_t tau = 16;
    std::size_t top_m = 5;
    double lambda = 0.5;
    int verbal_s = kBosId;
};

int cmd_rollout(const RolloutArgs& a) {
    const TinyLm model = load_model(a.checkpoint);
    const Vocabulary vocab = model.vocabulary();

    PromptSpec spec = Plain{};
    if (a.spec == "plain")
        spec = Plain{};
    else if (a.spec == "verbal")
        spec = VerbalPrompt{a.verbal_s};
    else if (a.spec == "fading_once")
        spec = FadingOnce{a.top_m};
    else if (a.spec == "fading_infinite")
        spec = FadingInfinite{a.top_m, a.lambda};
    else
        raise(ErrorCode::invalid_parameter, "unknown spec '" + a.spec + "'");

    const Trajectory traj = rollout(tokenize(a.prompt), spec, a.tau, model, vocab);
    std::printf("prompt: %s\nspec: %s  tau: %zu\n", a.prompt.c_str(), prompt_spec_name(spec), a.tau);
    for (std::size_t t = 0; t < traj.verbal.size(); ++t) {
        const Tensor& y = traj.mental[t];
        const std::size_t top = argmax_index(y);
        std::printf("step %2zu  token %-8s logit %+8.3f\n", t + 1,
                    token_repr(traj.verbal[t]).c_str(), y.values[top]);
    }
    std::printf("output: %s\n", printable_prompt(traj.verbal).c_str());
    if (traj.terminated) std::printf("terminated at step %zu\n", traj.eos_step);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Observability laboratory for tiny autoregressive models"};
    app.require_subcommand(1);

    json cfg;
    if (const auto path = find_config_arg(argc, argv)) {
        try {
            cfg = load_config_file(*path);
        } catch (const Error& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return 2;
        }
    }
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file; command-line flags win");

    TrainArgs train_args;
    overlay(cfg, "corpus", train_args.corpus_path);
    overlay(cfg, "synthetic", train_args.synthetic_bytes);
    overlay(cfg, "out", train_args.out);
    overlay(cfg, "steps", train_args.steps);
    overlay(cfg, "batch", train_args.batch);
    overlay(cfg, "lr", train_args.lr);
    overlay(cfg, "weight_decay", train_args.weight_decay);
    overlay(cfg, "init_seed", train_args.init_seed);
    overlay(cfg, "train_seed", train_args.train_seed);
    overlay(cfg, "corpus_seed", train_args.corpus_seed);
    overlay(cfg, "embed_dim", train_args.embed_dim);
    overlay(cfg, "context", train_args.context);
    overlay(cfg, "layers", train_args.layers);
    overlay(cfg, "heads", train_args.heads);
    overlay(cfg, "ff_dim", train_args.ff_dim);
    auto* train_cmd = app.add_subcommand("train", "Train the tiny model and write a checkpoint");
    train_cmd->add_option("--corpus", train_args.corpus_path, "UTF-8/byte corpus file");
    train_cmd->add_option("--synthetic", train_args.synthetic_bytes,
                          "generate a synthetic corpus of at least this many bytes");
    train_cmd->add_option("--out", train_args.out, "checkpoint output path");
    train_cmd->add_option("--steps", train_args.steps, "optimizer steps");
    train_cmd->add_option("--batch", train_args.batch, "windows per step");
    train_cmd->add_option("--lr", train_args.lr, "peak learning rate");
    train_cmd->add_option("--weight-decay", train_args.weight_decay, "decoupled weight decay");
    train_cmd->add_option("--init-seed", train_args.init_seed, "weight init seed");
    train_cmd->add_option("--train-seed", train_args.train_seed, "window sampling seed");
    train_cmd->add_option("--corpus-seed", train_args.corpus_seed, "synthetic corpus seed");
    train_cmd->add_option("--embed-dim", train_args.embed_dim, "slot width V");
    train_cmd->add_option("--context", train_args.context, "window length c");
    train_cmd->add_option("--layers", train_args.layers, "transformer blocks");
    train_cmd->add_option("--heads", train_args.heads, "attention heads");
    train_cmd->add_option("--ff-dim", train_args.ff_dim, "feed-forward width");
    train_cmd->add_option("--log-every", train_args.log_every, "progress cadence (0 = silent)");

    SweepArgs sweep_args;
    overlay(cfg, "checkpoint", sweep_args.checkpoint);
    overlay(cfg, "out_csv", sweep_args.out_csv);
    overlay(cfg, "out_report", sweep_args.out_report);
    overlay(cfg, "types", sweep_args.types);
    overlay(cfg, "prompts_file", sweep_args.prompts_file);
    overlay(cfg, "num_prompts", sweep_args.num_prompts);
    overlay(cfg, "tau", sweep_args.tau);
    overlay(cfg, "verbal_domain", sweep_args.verbal_domain);
    overlay(cfg, "nonverbal_domain", sweep_args.nonverbal_domain);
    overlay(cfg, "nonverbal_l", sweep_args.nonverbal_l);
    overlay(cfg, "omega_max", sweep_args.omega_max);
    overlay(cfg, "lambda", sweep_args.lambda);
    overlay(cfg, "tol", sweep_args.tol);
    overlay(cfg, "seed", sweep_args.seed);
    auto* sweep_cmd = app.add_subcommand("sweep", "Observability sweep over prompts and model types");
    sweep_cmd->add_option("--checkpoint", sweep_args.checkpoint, "trained model checkpoint");
    sweep_cmd->add_option("--out-csv", sweep_args.out_csv, "CSV output path");
    sweep_cmd->add_option("--out-report", sweep_args.out_report, "JSON report path");
    sweep_cmd->add_option("--types", sweep_args.types,
                          "model families: verbal nonverbal fading_once fading_infinite");
    sweep_cmd->add_option("--prompts-file", sweep_args.prompts_file, "one prompt per line");
    sweep_cmd->add_option("--prompt", sweep_args.prompts_inline, "inline prompt (repeatable)");
    sweep_cmd->add_option("--num-prompts", sweep_args.num_prompts, "sampled prompts when none given");
    sweep_cmd->add_option("--tau", sweep_args.tau, "rollout horizon");
    sweep_cmd->add_option("--verbal-domain", sweep_args.verbal_domain, "verbal control count");
    sweep_cmd->add_option("--nonverbal-domain", sweep_args.nonverbal_domain, "nonverbal control count");
    sweep_cmd->add_option("--nonverbal-l", sweep_args.nonverbal_l, "tokens averaged per control");
    sweep_cmd->add_option("--omega-max", sweep_args.omega_max, "memory domain is 1..omega_max");
    sweep_cmd->add_option("--lambda", sweep_args.lambda, "fading average rate");
    sweep_cmd->add_option("--tol", sweep_args.tol, "mental-trajectory distance tolerance");
    sweep_cmd->add_option("--seed", sweep_args.seed, "sweep seed");

    MppArgs mpp_args;
    overlay(cfg, "checkpoint", mpp_args.checkpoint);
    overlay(cfg, "mpp_out_report", mpp_args.out_report);
    overlay(cfg, "domain_size", mpp_args.domain_size);
    overlay(cfg, "n", mpp_args.n);
    overlay(cfg, "mpp_tau", mpp_args.tau);
    overlay(cfg, "epochs", mpp_args.epochs);
    overlay(cfg, "batch_pairs", mpp_args.batch_pairs);
    overlay(cfg, "mpp_lr", mpp_args.lr);
    overlay(cfg, "hidden", mpp_args.hidden);
    overlay(cfg, "mpp_seed", mpp_args.seed);
    overlay(cfg, "eval_tau", mpp_args.eval_tau);
    auto* mpp_cmd = app.add_subcommand("mpp", "Optimize a maximally distinguishing soft prompt");
    mpp_cmd->add_option("--checkpoint", mpp_args.checkpoint, "trained model checkpoint");
    mpp_cmd->add_option("--out-report", mpp_args.out_report, "JSON report path");
    mpp_cmd->add_option("--domain-size", mpp_args.domain_size, "verbal control count (>= 2)");
    mpp_cmd->add_option("--n", mpp_args.n, "continuous prompt rows");
    mpp_cmd->add_option("--tau", mpp_args.tau, "objective look-ahead steps");
    mpp_cmd->add_option("--epochs", mpp_args.epochs, "optimization epochs");
    mpp_cmd->add_option("--batch-pairs", mpp_args.batch_pairs, "sampled control pairs per step");
    mpp_cmd->add_option("--lr", mpp_args.lr, "learning rate");
    mpp_cmd->add_flag("--no-reparam", mpp_args.no_reparam, "optimize raw prompt vectors directly");
    mpp_cmd->add_option("--hidden", mpp_args.hidden, "bottleneck width");
    mpp_cmd->add_option("--seed", mpp_args.seed, "optimizer seed");
    mpp_cmd->add_option("--eval-tau", mpp_args.eval_tau, "horizon for the final Q/R evaluation");

    TrojanArgs trojan_args;
    overlay(cfg, "checkpoint", trojan_args.checkpoint);
    overlay(cfg, "trojan_out_report", trojan_args.out_report);
    overlay(cfg, "out_vector", trojan_args.out_vector);
    overlay(cfg, "user_prompt", trojan_args.user_prompt);
    overlay(cfg, "target", trojan_args.target);
    overlay(cfg, "agreement", trojan_args.agreement);
    overlay(cfg, "trojan_epochs", trojan_args.epochs);
    overlay(cfg, "trojan_lr", trojan_args.lr);
    overlay(cfg, "trojan_seeds", trojan_args.seeds);
    auto* trojan_cmd = app.add_subcommand("trojan", "Craft or evaluate hidden trojan vectors");
    trojan_cmd->add_option("--checkpoint", trojan_args.checkpoint, "trained model checkpoint");
    trojan_cmd->add_option("--out-report", trojan_args.out_report, "JSON report path");
    trojan_cmd->add_option("--out-vector", trojan_args.out_vector, "save the best crafted vector");
    trojan_cmd->add_option("--prompt", trojan_args.user_prompt, "visible user prompt");
    trojan_cmd->add_option("--target", trojan_args.target, "tokens to force after agreement");
    trojan_cmd->add_option("--agreement", trojan_args.agreement, "steps of required benign agreement");
    trojan_cmd->add_option("--epochs", trojan_args.epochs, "optimization epochs per seed");
    trojan_cmd->add_option("--lr", trojan_args.lr, "learning rate");
    trojan_cmd->add_flag("--auto-setup", trojan_args.auto_setup,
                         "pick the prompt and payload the attack fits best");
    trojan_cmd->add_option("--seed", trojan_args.seeds, "crafting seed (repeatable)");
    trojan_cmd->add_option("--eval-every", trojan_args.eval_every, "early-stop check cadence");
    trojan_cmd->add_flag("--evaluate-only", trojan_args.evaluate_only, "skip crafting");
    trojan_cmd->add_option("--vector", trojan_args.vector_path, "candidate vector for --evaluate-only");

    DemoArgs demo_args;
    overlay(cfg, "checkpoint", demo_args.checkpoint);
    overlay(cfg, "rollouts", demo_args.rollouts);
    overlay(cfg, "demo_tau", demo_args.tau);
    overlay(cfg, "initial_conditions", demo_args.initial_conditions);
    overlay(cfg, "demo_seed", demo_args.seed);
    auto* demo_cmd = app.add_subcommand("theorem-demos", "Reconstruction and unobservability demos");
    demo_cmd->add_option("--checkpoint", demo_args.checkpoint, "model (fresh seed-0 init if omitted)");
    demo_cmd->add_option("--rollouts", demo_args.rollouts, "reconstruction rollout count");
    demo_cmd->add_option("--tau", demo_args.tau, "reconstruction horizon");
    demo_cmd->add_option("--initial-conditions", demo_args.initial_conditions,
                         "states for the unobservable demo");
    demo_cmd->add_option("--seed", demo_args.seed, "demo seed");

    RolloutArgs rollout_args;
    overlay(cfg, "checkpoint", rollout_args.checkpoint);
    auto* rollout_cmd = app.add_subcommand("rollout", "Pretty-print one closed-loop rollout");
    rollout_cmd->add_option("--checkpoint", rollout_args.checkpoint, "trained model checkpoint");
    rollout_cmd->add_option("--prompt", rollout_args.prompt, "prompt text");
    rollout_cmd->add_option("--spec", rollout_args.spec,
                            "plain | verbal | fading_once | fading_infinite");
    rollout_cmd->add_option("--tau", rollout_args.tau, "steps");
    rollout_cmd->add_option("--top-m", rollout_args.top_m, "memory summary width");
    rollout_cmd->add_option("--lambda", rollout_args.lambda, "fading average rate");
    rollout_cmd->add_option("--verbal-s", rollout_args.verbal_s, "verbal hidden token id");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(train_args);
        if (sweep_cmd->parsed()) return cmd_sweep(sweep_args);
        if (mpp_cmd->parsed()) return cmd_mpp(mpp_args);
        if (trojan_cmd->parsed()) return cmd_trojan(trojan_args);
        if (demo_cmd->parsed()) return cmd_theorem_demos(demo_args);
        if (rollout_cmd->parsed()) return cmd_rollout(rollout_args);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        switch (e.code()) {
            case ErrorCode::invalid_parameter:
            case ErrorCode::invalid_input:
            case ErrorCode::invalid_token:
            case ErrorCode::configuration:
            case ErrorCode::prompt_overflow:
            case ErrorCode::data:
            case ErrorCode::checkpoint_format:
            case ErrorCode::io:
                return 2;
            default:
                return 1;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
