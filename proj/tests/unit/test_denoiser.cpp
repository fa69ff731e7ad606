#include <doctest.h>

#include "motiondiff/conditioning.hpp"
#include "motiondiff/denoiser.hpp"
#include "motiondiff/errors.hpp"

#include "gradcheck.hpp"
#include "support.hpp"

#include <fstream>

using namespace motiondiff;

namespace {

DenoiserConfig toy() {
    DenoiserConfig c;
    c.n_blocks = 2;
    c.d_hidden = 16;
    c.n_heads = 2;
    c.conv_kernel = 3;
    c.d_mot = 8;
    c.d_txt = 12;
    c.d_aud = 5;
    c.d_pose = 3;
    return c;
}

struct Fixture {
    DenoiserConfig cfg = toy();
    ParameterSet params = init_params(cfg, 11);
    std::mt19937_64 rng{12};
    MotionSequence x{testing::random_matrix(6, 8, rng)};
    MotionSequence key{testing::random_matrix(1, 8, rng)};
};

InstructionRep random_rep(Task task, Eigen::Index k, std::mt19937_64& rng) {
    return InstructionRep{task, testing::random_matrix(k, 12, rng)};
}

double bundle_diff(const PredictionBundle& a, const PredictionBundle& b) {
    return std::max({(a.m0_hat.data() - b.m0_hat.data()).cwiseAbs().maxCoeff(),
                     (a.au_logits - b.au_logits).cwiseAbs().maxCoeff(),
                     (a.intensity_logits - b.intensity_logits).cwiseAbs().maxCoeff(),
                     (a.pose_hat.data() - b.pose_hat.data()).cwiseAbs().maxCoeff()});
}

}  // namespace

TEST_CASE("init_params: gates exactly zero, seeded and deterministic") {
    const auto cfg = toy();
    const auto a = init_params(cfg, 1);
    const auto b = init_params(cfg, 1);
    const auto c = init_params(cfg, 2);
    int gates = 0;
    for (const auto& [name, m] : a.entries())
        if (is_gate_param(name)) {
            ++gates;
            CHECK(m.cwiseAbs().maxCoeff() == 0.0);
        }
    CHECK(gates == cfg.n_blocks * 4);
    CHECK(a.fingerprint() == b.fingerprint());
    CHECK(a.fingerprint() != c.fingerprint());
    for (const auto& [name, m] : a.entries())
        if (name.find(".weight") != std::string::npos && !is_gate_param(name))
            CHECK((m - c.at(name)).cwiseAbs().maxCoeff() > 0.0);
    CHECK(a.at(gate_prefix(0, Task::emotion_talk) + ".weight").cols() == 3);
}

TEST_CASE("config validation") {
    auto cfg = toy();
    cfg.n_heads = 3;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = toy();
    cfg.d_txt = 4;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = toy();
    cfg.conv_kernel = 4;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("gated text attention: zero gate is the identity to 0 ulp") {
    Fixture f;
    const Matrix h = testing::random_matrix(6, 16, f.rng);
    for (Task task : {Task::emotion_talk, Task::motion_control}) {
        const auto rep = random_rep(task, task == Task::emotion_talk ? 1 : 4, f.rng);
        const Matrix out = gated_text_attention(h, rep, f.params, f.cfg, 1);
        CHECK((out - h).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("gated text attention: single key closed form and gate linearity") {
    Fixture f;
    auto& gw = f.params.at(gate_prefix(0, Task::emotion_talk) + ".weight");
    auto& gb = f.params.at(gate_prefix(0, Task::emotion_talk) + ".bias");
    gw << 0.3, -0.7, 0.45;
    gb << 0.05;
    const Matrix h = testing::random_matrix(5, 16, f.rng);
    const auto rep = random_rep(Task::emotion_talk, 1, f.rng);
    const Matrix out = gated_text_attention(h, rep, f.params, f.cfg, 0);

    // One key: softmax weight 1, so attention output is the value row for
    // every query, then the output projection, then the feature conv.
    const auto pre = emotion_branch_prefix(0);
    const auto v = oracle::matmul(testing::to_rows(rep.vectors), testing::to_rows(f.params.at(pre + ".v.weight")));
    oracle::Vec vrow = v[0];
    for (std::size_t i = 0; i < vrow.size(); ++i) vrow[i] += f.params.at(pre + ".v.bias")(0, i);
    auto o = oracle::matmul({vrow}, testing::to_rows(f.params.at(pre + ".o.weight")))[0];
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += f.params.at(pre + ".o.bias")(0, i);
    const auto gated = oracle::conv_features({o}, testing::to_rows(gw)[0], gb(0, 0))[0];
    oracle::Mat expect = testing::to_rows(h);
    for (auto& row : expect)
        for (std::size_t i = 0; i < row.size(); ++i) row[i] += gated[i];
    CHECK(testing::max_abs_diff(expect, out) < 1e-12);

    gw *= 2.0;
    gb *= 2.0;
    const Matrix doubled = gated_text_attention(h, rep, f.params, f.cfg, 0);
    CHECK(((doubled - h) - 2.0 * (out - h)).cwiseAbs().maxCoeff() < 1e-12);

    const InstructionRep wrong{Task::emotion_talk, Matrix::Zero(1, 7)};
    CHECK_THROWS_AS(gated_text_attention(h, wrong, f.params, f.cfg, 0), DimensionError);
}

TEST_CASE("zero gates: output equals the text-free network and ignores rep") {
    Fixture f;
    const auto free = denoise(f.x, 300, std::nullopt, f.key, Task::emotion_talk, f.params, f.cfg);
    for (int trial = 0; trial < 3; ++trial) {
        const auto rep = random_rep(Task::emotion_talk, 1, f.rng);
        const auto with = denoise(f.x, 300, rep, f.key, Task::emotion_talk, f.params, f.cfg);
        CHECK(bundle_diff(free, with) == 0.0);
    }
    const auto mrep = random_rep(Task::motion_control, 5, f.rng);
    const auto free_m = denoise(f.x, 300, std::nullopt, f.key, Task::motion_control, f.params, f.cfg);
    CHECK(bundle_diff(free_m, denoise(f.x, 300, mrep, f.key, Task::motion_control, f.params, f.cfg)) == 0.0);
}

TEST_CASE("routing: rep branch must match the task") {
    Fixture f;
    const auto rep = random_rep(Task::emotion_talk, 1, f.rng);
    CHECK_THROWS_AS(denoise(f.x, 10, rep, f.key, Task::motion_control, f.params, f.cfg), RoutingError);
}

TEST_CASE("only the branch matching the task is used") {
    Fixture f;
    testing::randomize_gates(f.params, 3);
    HashTextEmbedder emb(f.cfg.d_txt);
    const auto rep = encode_instruction("Talk with happy emotion", Task::emotion_talk, emb, f.params);
    const auto base = denoise(f.x, 200, rep, f.key, Task::emotion_talk, f.params, f.cfg);
    auto mutated = f.params;
    for (const auto& [name, m] : f.params.entries())
        if (name.find(".motion_attn") != std::string::npos || name.find(".motion_gate") != std::string::npos ||
            name.find(kMotionAdapter) == 0)
            mutated.at(name).setConstant(0.123);
    CHECK(bundle_diff(base, denoise(f.x, 200, rep, f.key, Task::emotion_talk, mutated, f.cfg)) == 0.0);
    auto mutated_emo = f.params;
    mutated_emo.at(emotion_branch_prefix(1) + ".v.weight").setConstant(0.5);
    CHECK(bundle_diff(base, denoise(f.x, 200, rep, f.key, Task::emotion_talk, mutated_emo, f.cfg)) > 1e-6);
}

TEST_CASE("emotion branch ignores non-summary token content") {
    Fixture f;
    testing::randomize_gates(f.params, 4);
    HashTextEmbedder emb(f.cfg.d_txt);
    auto text = emb.embed("Talk with happy emotion");
    const auto base = denoise(f.x, 50, encode_instruction(text, Task::emotion_talk, f.params), f.key,
                              Task::emotion_talk, f.params, f.cfg);
    // Perturb tokens while keeping their mean.
    Matrix delta = testing::random_matrix(text.tokens.rows(), text.tokens.cols(), f.rng);
    delta.rowwise() -= delta.colwise().mean();
    text.tokens += delta;
    const auto after = denoise(f.x, 50, encode_instruction(text, Task::emotion_talk, f.params), f.key,
                               Task::emotion_talk, f.params, f.cfg);
    CHECK(bundle_diff(base, after) == 0.0);
}

TEST_CASE("property: m0_hat shape equals input shape") {
    Fixture f;
    for (int l : {1, 2, 7, 64, 512}) {
        const MotionSequence x(testing::random_matrix(l, 8, f.rng));
        const auto out = denoise(x, 999, std::nullopt, f.key, Task::emotion_talk, f.params, f.cfg);
        CHECK(out.m0_hat.frames() == l);
        CHECK(out.m0_hat.dims() == 8);
        CHECK(out.pose_hat.data().rows() == l);
        CHECK(out.au_logits.cols() == 41);
        CHECK(out.intensity_logits.cols() == 3);
        CHECK(out.au_logits.allFinite());
    }
    CHECK_THROWS_AS(denoise(MotionSequence(Matrix::Zero(3, 5)), 0, std::nullopt, f.key, Task::emotion_talk,
                            f.params, f.cfg),
                    DimensionError);
}

TEST_CASE("timestep reaches the blocks") {
    Fixture f;
    const auto a = denoise(f.x, 0, std::nullopt, f.key, Task::emotion_talk, f.params, f.cfg);
    const auto b = denoise(f.x, 999, std::nullopt, f.key, Task::emotion_talk, f.params, f.cfg);
    CHECK((a.m0_hat.data() - b.m0_hat.data()).norm() > 1e-6);
}

TEST_CASE("keyframe attention is applied in every block") {
    Fixture f;
    const auto base = denoise(f.x, 100, std::nullopt, f.key, Task::emotion_talk, f.params, f.cfg);
    for (int b = 0; b < f.cfg.n_blocks; ++b) {
        auto p = f.params;
        p.at("blocks." + std::to_string(b) + ".keyframe_attn.o.weight").setZero();
        CHECK(bundle_diff(base, denoise(f.x, 100, std::nullopt, f.key, Task::emotion_talk, p, f.cfg)) > 1e-8);
    }
}

TEST_CASE("gradient check over every parameter group") {
    DenoiserConfig cfg = toy();
    cfg.n_blocks = 1;
    auto params = init_params(cfg, 21);
    testing::randomize_gates(params, 22);
    const auto probe = testing::make_probe(cfg, 4, 23);
    const auto errors = testing::gradient_check(params, cfg, probe, 3);
    for (const auto& [name, e] : errors) {
        INFO(name);
        CHECK(e.relative < 1e-4);
    }
}

TEST_CASE("checkpoint round trip is exact") {
    testing::TempDir dir;
    Checkpoint ck{toy(), {{"text_seed", "24301"}}, init_params(toy(), 9)};
    save_checkpoint(dir / "c.bin", ck);
    const auto back = load_checkpoint(dir / "c.bin");
    CHECK(back.config == ck.config);
    CHECK(back.meta == ck.meta);
    CHECK(back.params.fingerprint() == ck.params.fingerprint());
    std::ofstream(dir / "bad.bin") << "MDCKPT1\nxx";
    CHECK_THROWS(load_checkpoint(dir / "bad.bin"));
    CHECK_THROWS(load_checkpoint(dir / "missing.bin"));
}

TEST_CASE("generate: rejects branch mismatch and is seeded") {
    Fixture f;
    MotionModel model{f.cfg, f.params, build_schedule(1000)};
    ConditioningBundle c;
    c.audio = Matrix::Zero(6, 8);
    c.rep = random_rep(Task::emotion_talk, 1, f.rng);
    c.keyframe = f.key;
    c.task = Task::emotion_talk;
    const auto a = generate(model, c, 6, 5, 1);
    const auto b = generate(model, c, 6, 5, 1);
    CHECK((a.data() - b.data()).cwiseAbs().maxCoeff() == 0.0);
    c.task = Task::motion_control;
    CHECK_THROWS_AS(generate(model, c, 6, 5, 1), RoutingError);
}
