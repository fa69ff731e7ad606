// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 when all pass).

#include "motiondiff/cli.hpp"
#include "motiondiff/conditioning.hpp"
#include "motiondiff/denoiser.hpp"
#include "motiondiff/diffusion.hpp"
#include "motiondiff/metrics.hpp"
#include "motiondiff/npy.hpp"
#include "motiondiff/synth.hpp"
#include "motiondiff/training.hpp"

#include "gradcheck.hpp"
#include "metric_fixtures.hpp"
#include "support.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace motiondiff;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_command(args, out, err);
    if (code != 0) std::cerr << "  cli " << args.front() << " failed: " << err.str();
    return code;
}

// ---- 1 --------------------------------------------------------------------

Outcome schedule_suite() {
    const auto t0 = Clock::now();
    const int T = 1000;
    const auto sched = build_schedule(T);
    const auto ab = oracle::alpha_bars(T, 0.05L, 20.0L);
    const int n = 10000;
    const double x0 = 1.5;
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> x(n, x0);
    double worst = 0.0;
    int step = 0;
    for (int t : {T / 4, T / 2, T - 1}) {
        // Iterate single-step noisings x_s = sqrt(1 - beta_s) x_{s-1} + sqrt(beta_s) eps.
        for (; step <= t; ++step) {
            const double b = sched.beta[step];
            for (auto& v : x) v = std::sqrt(1.0 - b) * v + std::sqrt(b) * normal(rng);
        }
        double mean = 0, m2 = 0;
        for (double v : x) mean += v;
        mean /= n;
        for (double v : x) m2 += (v - mean) * (v - mean);
        const double var = m2 / (n - 1);
        const auto marg = oracle::forward_marginal(x0, ab[t]);
        const double se_mean = std::sqrt(marg.variance / n);
        const double se_var = marg.variance * std::sqrt(2.0 / (n - 1));
        worst = std::max({worst, std::abs(mean - marg.mean) / se_mean, std::abs(var - marg.variance) / se_var});
    }
    const double tail = sched.alpha_bar[T - 1];
    const double secs = seconds_since(t0);
    return {worst <= 3.0 && tail < 1e-3 && secs < 60.0,
            fmt("worst deviation %.2f SE (<= 3), alpha_bar[T-1] = %.3g (< 1e-3), %.1f s", worst, tail, secs)};
}

// ---- 2 --------------------------------------------------------------------

DenoiserConfig small_config(int d_mot, int d_txt, int d_aud) {
    DenoiserConfig c;
    c.n_blocks = 2;
    c.d_hidden = 32;
    c.n_heads = 4;
    c.conv_kernel = 5;
    c.d_mot = d_mot;
    c.d_txt = d_txt;
    c.d_aud = d_aud;
    c.ffn_mult = 2;
    return c;
}

double max_abs(const PredictionBundle& a, const PredictionBundle& b) {
    return std::max({(a.m0_hat.data() - b.m0_hat.data()).cwiseAbs().maxCoeff(),
                     (a.au_logits - b.au_logits).cwiseAbs().maxCoeff(),
                     (a.intensity_logits - b.intensity_logits).cwiseAbs().maxCoeff(),
                     (a.pose_hat.data() - b.pose_hat.data()).cwiseAbs().maxCoeff()});
}

Outcome zero_gate_identity() {
    const auto cfg = small_config(8, 16, 4);
    const auto params = init_params(cfg, 31);
    std::mt19937_64 rng(32);
    double worst = 0.0;
    int cases = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const MotionSequence x(testing::random_matrix(7, cfg.d_mot, rng));
        const MotionSequence key(testing::random_matrix(1, cfg.d_mot, rng));
        const int t = static_cast<int>(rng() % 1000);
        for (Task task : {Task::emotion_talk, Task::motion_control}) {
            const Eigen::Index k = task == Task::emotion_talk ? 1 : 1 + static_cast<Eigen::Index>(rng() % 9);
            const InstructionRep a{task, testing::random_matrix(k, cfg.d_txt, rng)};
            const InstructionRep b{task, testing::random_matrix(k, cfg.d_txt, rng, 5.0)};
            const auto pa = denoise(x, t, a, key, task, params, cfg);
            const auto pb = denoise(x, t, b, key, task, params, cfg);
            const auto none = denoise(x, t, std::nullopt, key, task, params, cfg);
            worst = std::max({worst, max_abs(pa, pb), max_abs(pa, none)});
            ++cases;
        }
    }
    return {worst == 0.0, fmt("max-abs difference under rep perturbation %.3g over %d cases (== 0)", worst, cases)};
}

// ---- 3 --------------------------------------------------------------------

Outcome branch_routing() {
    testing::TempDir dir("acc3");
    SynthOptions so;
    so.clips_per_emotion = 4;
    so.heldout_per_emotion = 0;
    so.motion_clips_per_kind = 4;
    so.n_persons = 2;
    so.frames = 8;
    so.d_mot = 8;
    so.d_aud = 4;
    so.seed = 3;
    const auto corpus = synth_corpus(so, dir.path());
    const auto cfg = small_config(8, 32, 4);
    auto audio = std::make_shared<NpyAudioFeatureProvider>(dir.path(), 4);
    ClipStore clips(dir.path(), audio);
    HashTextEmbedder text(cfg.d_txt);
    TrainContext ctx{cfg, build_schedule(1000), {}, {}, corpus.train, &clips, &text};
    ctx.optimizer.peak_lr = 3e-3;
    ctx.optimizer.warmup_steps = 20;
    TrainOptions opts;
    opts.steps = 300;
    opts.batch_size = 8;
    opts.seed = 4;
    const auto params = train(init_params(cfg, 5), ctx, opts).state.params;

    std::mt19937_64 rng(6);
    // Emotion branch: mean-preserving perturbation of every token row.
    double emo_worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        auto emb = text.embed(corpus.train[trial % 16].instruction);
        const MotionSequence x(testing::random_matrix(8, 8, rng));
        const MotionSequence key(testing::random_matrix(1, 8, rng));
        const auto base = denoise(x, 300, encode_instruction(emb, Task::emotion_talk, params), key,
                                  Task::emotion_talk, params, cfg);
        Matrix delta = testing::random_matrix(emb.tokens.rows(), emb.tokens.cols(), rng);
        delta.rowwise() -= delta.colwise().mean();
        emb.tokens += delta;
        const auto after = denoise(x, 300, encode_instruction(emb, Task::emotion_talk, params), key,
                                   Task::emotion_talk, params, cfg);
        emo_worst = std::max(emo_worst, max_abs(base, after));
    }

    // Motion branch: reorder the instruction's words and re-embed.
    const auto table = motion_instruction_table();
    std::vector<std::string> phrases;
    for (const auto& [kind, list] : table) phrases.insert(phrases.end(), list.begin(), list.end());
    int sensitive = 0, cases = 0;
    while (cases < 50) {
        auto words = HashTextEmbedder::tokenize(phrases[rng() % phrases.size()]);
        if (std::set<std::string>(words.begin(), words.end()).size() < 2) continue;
        auto perm = words;
        while (perm == words) std::shuffle(perm.begin(), perm.end(), rng);
        std::string a, b;
        for (const auto& w : words) a += w + " ";
        for (const auto& w : perm) b += w + " ";
        const MotionSequence x(testing::random_matrix(8, 8, rng));
        const MotionSequence key(testing::random_matrix(1, 8, rng));
        const int t = static_cast<int>(rng() % 1000);
        const auto pa = denoise(x, t, encode_instruction(a, Task::motion_control, text, params), key,
                                Task::motion_control, params, cfg);
        const auto pb = denoise(x, t, encode_instruction(b, Task::motion_control, text, params), key,
                                Task::motion_control, params, cfg);
        if ((pa.m0_hat.data() - pb.m0_hat.data()).cwiseAbs().maxCoeff() > 1e-3) ++sensitive;
        ++cases;
    }
    const double frac = static_cast<double>(sensitive) / cases;
    return {emo_worst == 0.0 && frac >= 0.9,
            fmt("emotion branch max-abs %.3g (== 0); motion permutations changing output > 1e-3: %d/%d (>= 90%%)",
                emo_worst, sensitive, cases)};
}

// ---- 4 --------------------------------------------------------------------

Outcome gradient_check() {
    const auto t0 = Clock::now();
    DenoiserConfig cfg;
    cfg.n_blocks = 2;
    cfg.d_hidden = 16;
    cfg.n_heads = 2;
    cfg.conv_kernel = 3;
    cfg.d_mot = 16;
    cfg.d_txt = 16;
    cfg.d_aud = 8;
    cfg.d_pose = 6;
    cfg.ffn_mult = 2;
    auto params = init_params(cfg, 41);
    testing::randomize_gates(params, 42);
    const auto probe = testing::make_probe(cfg, 4, 43);
    const auto errors = testing::gradient_check(params, cfg, probe, 4);
    double worst = 0.0;
    std::string worst_name;
    bool gates = false, adapters = false;
    for (const auto& [name, e] : errors) {
        gates |= is_gate_param(name);
        adapters |= name.rfind("adapter.", 0) == 0;
        if (e.relative > worst) {
            worst = e.relative;
            worst_name = name;
        }
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-4 && gates && adapters && secs < 120.0,
            fmt("%zu groups (gates and adapters included), worst relative error %.2e at %s (< 1e-4), %.1f s",
                errors.size(), worst, worst_name.c_str(), secs)};
}

// ---- 5 --------------------------------------------------------------------

Outcome overfit() {
    const auto t0 = Clock::now();
    testing::TempDir dir("acc5");
    SynthOptions so;
    so.clips_per_emotion = 2;
    so.heldout_per_emotion = 0;
    so.n_persons = 2;
    so.seed = 2;
    const auto corpus = synth_corpus(so, dir.path());
    DenoiserConfig cfg = small_config(16, 64, 8);
    cfg.d_hidden = 64;
    auto audio = std::make_shared<NpyAudioFeatureProvider>(dir.path(), 8);
    ClipStore clips(dir.path(), audio);
    HashTextEmbedder text(cfg.d_txt);
    TrainContext ctx{cfg, build_schedule(1000), {}, {}, corpus.train, &clips, &text};
    ctx.optimizer.peak_lr = 3e-3;
    ctx.optimizer.warmup_steps = 100;
    TrainOptions opts;
    opts.steps = 2000;
    opts.batch_size = 8;
    opts.seed = 3;
    const auto res = train(init_params(cfg, 5), ctx, opts);
    const auto loss = evaluate_loss(res.state.params, ctx, corpus.train, 1, 64);
    const double secs = seconds_since(t0);
    return {corpus.train.size() == 8 && loss.total <= 1e-2 && secs < 600.0,
            fmt("%zu clips, 2000 steps: total loss %.3g (mse %.3g, pose %.3g) (<= 1e-2), %.0f s", corpus.train.size(),
                loss.total, loss.mse, loss.pose, secs)};
}

// ---- 6 --------------------------------------------------------------------

// Training recipe for the closed-loop run.
const std::vector<std::string> kClosedLoopConfig = {
    "model.n_blocks=2",        "model.d_hidden=64",    "model.n_heads=4",      "model.conv_kernel=5",
    "model.d_mot=16",          "model.d_txt=512",      "model.d_aud=8",        "model.ffn_mult=4",
    "optim.peak_lr=2e-3",      "optim.warmup_steps=200", "train.steps=8000",   "train.batch_size=8",
    "train.log_every=100",     "sample.ddim_steps=50", "init_seed=5",          "seed=3"};

std::vector<std::string> with_sets(std::vector<std::string> args, const std::vector<std::string>& sets) {
    for (const auto& s : sets) {
        args.push_back("--set");
        args.push_back(s);
    }
    return args;
}

Outcome closed_loop() {
    const auto t0 = Clock::now();
    testing::TempDir dir("acc6");
    const auto data = dir / "data", run = dir / "run", gen = dir / "gen", eval = dir / "eval";
    if (run_cli(with_sets({"synth-data", "--out", data.string()}, {"seed=1"})) != 0) return {false, "synth-data failed"};
    if (run_cli(with_sets({"train", "--data", data.string(), "--out", run.string()}, kClosedLoopConfig)) != 0)
        return {false, "train failed"};
    if (run_cli(with_sets({"sample", "--checkpoint", (run / "checkpoint.bin").string(), "--manifest",
                           (data / "heldout.jsonl").string(), "--out", gen.string()},
                          kClosedLoopConfig)) != 0)
        return {false, "sample failed"};
    if (run_cli({"evaluate", "--generated", (gen / "generated.jsonl").string(), "--reference",
                 (data / "heldout.jsonl").string(), "--oracle", (data / "oracle.json").string(), "--out",
                 eval.string()}) != 0)
        return {false, "evaluate failed"};
    std::ifstream in(eval / "report.json");
    const auto j = nlohmann::json::parse(in);
    const double f1 = j.at("AU_F1").at("value").get<double>();
    const double emo = j.at("AU_Emo").at("value").get<double>();
    const int n = j.at("AU_F1").at("n_samples").get<int>();
    const double secs = seconds_since(t0);
    return {n == 160 && f1 >= 0.8 && emo >= 1.6 && secs < 1800.0,
            fmt("%d held-out clips: AU_F1 %.4f (>= 0.8), AU_Emo %.4f (>= 1.6), %.0f s", n, f1, emo, secs)};
}

// ---- 7 --------------------------------------------------------------------

Outcome metric_equivalence() {
    std::mt19937_64 rng(7);
    HashFrameEmbedder provider(6, 16);
    double worst = 0.0;
    int mismatched_presence = 0;
    for (int i = 0; i < 100; ++i) {
        const auto f = testing::random_fixture(rng, 6);
        const auto report = evaluate_run(f.samples, &provider, {}, TypicalAUTable::builtin());
        const auto expect = testing::oracle_report(f, provider);
        auto cmp = [&](const char* key, const std::optional<double>& want) {
            const auto& got = report.metrics.at(key).value;
            if (got.has_value() != want.has_value()) ++mismatched_presence;
            else if (got) worst = std::max(worst, std::abs(*got - *want));
        };
        cmp("AU_F1", expect.au_f1);
        cmp("AU_Emo", expect.au_emo);
        cmp("CLIP_S", expect.clip_s);
    }
    // Worked single-sample cases.
    auto bits = [](std::initializer_list<int> on) {
        std::vector<int> b(41, 0);
        for (int i : on) b[i] = 1;
        return AUVector::from_bits(b);
    };
    const double f1_case = au_f1(std::vector<AUVector>{bits({0, 2})}, std::vector<AUVector>{bits({0, 1})});
    const auto& reg = AuRegistry::builtin();
    const std::vector<std::string> one_typical{"jaw_drop", "lips_part"};
    const double emo_case = au_emo(std::vector<AUVector>{reg.from_names(one_typical)},
                                   std::vector<Emotion>{Emotion::happy}, TypicalAUTable::builtin());
    const bool worked = f1_case == 0.5 && emo_case == 0.5;
    return {worst <= 1e-9 && mismatched_presence == 0 && worked,
            fmt("100 fixtures: worst difference %.2e (<= 1e-9); worked cases F1 %.3g (0.5), AU_Emo %.3g (0.5)", worst,
                f1_case, emo_case)};
}

// ---- 8 --------------------------------------------------------------------

Outcome anti_leakage() {
    testing::TempDir dir("acc8");
    SynthOptions so;
    so.clips_per_emotion = 6;
    so.heldout_per_emotion = 0;
    so.n_persons = 3;
    so.frames = 6;
    so.d_mot = 8;
    so.d_aud = 4;
    so.seed = 8;
    const auto corpus = synth_corpus(so, dir.path());
    auto audio = std::make_shared<NpyAudioFeatureProvider>(dir.path(), 4);
    ClipStore clips(dir.path(), audio);
    std::map<std::string, const ManifestEntry*> by_id;
    for (const auto& e : corpus.train) by_id[e.id] = &e;
    std::mt19937_64 rng(9);
    int leaks = 0;
    for (int draw = 0; draw < 10000; ++draw) {
        const auto& e = corpus.train[draw % corpus.train.size()];
        const auto k = select_keyframe(e, corpus.train, clips, rng);
        if (by_id.at(k.donor_id)->emotion == e.emotion) ++leaks;
    }
    return {leaks == 0, fmt("same-emotion donors in 10000 draws: %d (== 0)", leaks)};
}

// ---- 9 --------------------------------------------------------------------

Outcome lr_schedule() {
    const OptimizerConfig cfg;  // peak 1e-5, warmup 8000
    const double a = lr_at(8000, cfg), b = lr_at(32000, cfg);
    // Both branches evaluated at the boundary, and the neighbours on each side.
    const double w = cfg.warmup_steps;
    const double gap = std::max(std::abs(a - cfg.peak_lr * w / w), std::abs(a - cfg.peak_lr * std::sqrt(w / w)));
    const double sides = std::max(std::abs(lr_at(7999, cfg) - cfg.peak_lr * 7999.0 / w),
                                  std::abs(lr_at(8001, cfg) - cfg.peak_lr * std::sqrt(w / 8001.0)));
    return {a == 1e-5 && b == 5e-6 && gap <= 1e-12 && sides <= 1e-12,
            fmt("lr(8000) = %.17g, lr(32000) = %.17g, branch gap at the boundary %.2e (<= 1e-12)", a, b, gap)};
}

// ---- 10 -------------------------------------------------------------------

Outcome determinism() {
    testing::TempDir dir("acc10");
    const auto data = dir / "data";
    const std::vector<std::string> synth = {"seed=4",           "synth.clips_per_emotion=4", "synth.heldout_per_emotion=1",
                                            "synth.motion_clips_per_kind=1", "synth.n_persons=2", "synth.frames=8",
                                            "synth.d_mot=8",    "synth.d_aud=4"};
    const std::vector<std::string> model = {"model.n_blocks=2", "model.d_hidden=16", "model.n_heads=2",
                                            "model.conv_kernel=3", "model.d_mot=8", "model.d_txt=16",
                                            "model.d_aud=4",    "train.steps=30",   "train.batch_size=4",
                                            "optim.warmup_steps=5", "optim.peak_lr=1e-3", "seed=4",
                                            "sample.ddim_steps=20"};
    if (run_cli(with_sets({"synth-data", "--out", data.string()}, synth)) != 0) return {false, "synth-data failed"};
    double worst = 0.0;
    std::vector<Matrix> first;
    for (int rep = 0; rep < 2; ++rep) {
        const auto run = dir / ("run" + std::to_string(rep)), gen = dir / ("gen" + std::to_string(rep));
        if (run_cli(with_sets({"train", "--data", data.string(), "--out", run.string()}, model)) != 0)
            return {false, "train failed"};
        if (run_cli(with_sets({"sample", "--checkpoint", (run / "checkpoint.bin").string(), "--manifest",
                               (data / "heldout.jsonl").string(), "--out", gen.string()},
                              model)) != 0)
            return {false, "sample failed"};
        std::vector<Matrix> outputs;
        for (const auto& e : load_manifest(gen / "generated.jsonl")) outputs.push_back(npy::read(gen / e.motion_path));
        if (rep == 0) {
            first = outputs;
        } else {
            for (std::size_t i = 0; i < outputs.size(); ++i)
                worst = std::max(worst, (outputs[i] - first[i]).cwiseAbs().maxCoeff());
        }
    }

    // Timing: 150 DDIM steps on a [100 x 64] sequence.
    const auto cfg = small_config(64, 64, 8);
    MotionModel m{cfg, init_params(cfg, 10), build_schedule(1000)};
    std::mt19937_64 rng(11);
    testing::randomize_gates(m.params, 12);
    HashTextEmbedder text(cfg.d_txt);
    ConditioningBundle cond;
    cond.task = Task::emotion_talk;
    cond.audio = testing::random_matrix(100, 64, rng);
    cond.rep = encode_instruction("Talk with delighted emotion", Task::emotion_talk, text, m.params);
    cond.keyframe = MotionSequence(testing::random_matrix(1, 64, rng));
    const auto t0 = Clock::now();
    const auto out = generate(m, cond, 100, 150, 13);
    const double secs = seconds_since(t0);
    return {!first.empty() && worst <= 1e-6 && out.data().allFinite() && secs < 10.0,
            fmt("%zu clips across two runs: max-abs %.3g (<= 1e-6); 150-step DDIM on [100 x 64]: %.2f s (< 10)",
                first.size(), worst, secs)};
}

}  // namespace

int main(int argc, char** argv) {
    // Optional arguments select criteria by number.
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"schedule and forward process", schedule_suite},
        {"zero-gate identity", zero_gate_identity},
        {"branch-routing invariance", branch_routing},
        {"gradient check", gradient_check},
        {"overfit check", overfit},
        {"closed-loop controllability", closed_loop},
        {"metric oracle equivalence", metric_equivalence},
        {"keyframe anti-leakage", anti_leakage},
        {"learning-rate schedule", lr_schedule},
        {"determinism and DDIM runtime", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << ". " << criteria[i].first << ": " << o.detail
                  << std::endl;
    }
    return failed;
}
