#include "motiondiff/denoiser.hpp"

#include "init_util.hpp"
#include "motiondiff/errors.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>

namespace motiondiff {

void DenoiserConfig::validate() const {
    auto positive = [](int v, const char* name) {
        if (v < 1) throw ConfigError(std::string("model.") + name + " must be positive");
    };
    positive(n_blocks, "n_blocks");
    positive(d_hidden, "d_hidden");
    positive(n_heads, "n_heads");
    positive(conv_kernel, "conv_kernel");
    positive(d_pose, "d_pose");
    positive(n_aus, "n_aus");
    positive(n_intensity, "n_intensity");
    positive(d_mot, "d_mot");
    positive(d_txt, "d_txt");
    positive(d_aud, "d_aud");
    positive(gate_kernel, "gate_kernel");
    positive(ffn_mult, "ffn_mult");
    if (d_hidden % n_heads != 0) throw ConfigError("model.d_hidden must be divisible by model.n_heads");
    if (conv_kernel % 2 == 0) throw ConfigError("model.conv_kernel must be odd");
    if (gate_kernel % 2 == 0) throw ConfigError("model.gate_kernel must be odd");
    if (d_txt <= 4) throw ConfigError("model.d_txt must exceed 4 (adapter bottleneck is d_txt - 4)");
}

namespace {

std::string block_prefix(int block) { return "blocks." + std::to_string(block) + "."; }

void add_norm(ParameterSet& p, const std::string& prefix, int width) {
    p.add(prefix + ".gamma", detail::ones(1, width));
    p.add(prefix + ".beta", detail::zeros(1, width));
}

void add_linear(ParameterSet& p, const std::string& prefix, int in, int out, std::mt19937_64& rng,
                double gain = 1.0) {
    p.add(prefix + ".weight", detail::normal_weight(in, out, rng, gain));
    p.add(prefix + ".bias", detail::zeros(1, out));
}

void add_attention(ParameterSet& p, const std::string& prefix, int d_hidden, int d_context,
                   std::mt19937_64& rng) {
    add_norm(p, prefix + ".norm", d_hidden);
    add_linear(p, prefix + ".q", d_hidden, d_hidden, rng);
    add_linear(p, prefix + ".k", d_context, d_hidden, rng);
    add_linear(p, prefix + ".v", d_context, d_hidden, rng);
    add_linear(p, prefix + ".o", d_hidden, d_hidden, rng);
}

ag::Var norm(ag::Binder& bind, const std::string& prefix, ag::Var x) {
    return ag::layer_norm(x, bind(prefix + ".gamma"), bind(prefix + ".beta"));
}

ag::Var dense(ag::Binder& bind, const std::string& prefix, ag::Var x) {
    return ag::linear(x, bind(prefix + ".weight"), bind(prefix + ".bias"));
}

// Pre-norm attention sublayer output (without the residual add). A missing
// context means self-attention over the normalised input.
ag::Var attention_sublayer(ag::Binder& bind, const std::string& prefix, ag::Var h,
                           std::optional<ag::Var> context, int heads) {
    ag::Var x = norm(bind, prefix + ".norm", h);
    ag::Var ctx = context ? *context : x;
    ag::Var q = dense(bind, prefix + ".q", x);
    ag::Var k = dense(bind, prefix + ".k", ctx);
    ag::Var v = dense(bind, prefix + ".v", ctx);
    return dense(bind, prefix + ".o", ag::attention(q, k, v, heads));
}

Matrix frame_positions(Eigen::Index frames, Eigen::Index width) {
    Matrix m(frames, width);
    for (Eigen::Index f = 0; f < frames; ++f) m.row(f) = detail::sinusoid(static_cast<double>(f), width);
    return m;
}

}  // namespace

std::string emotion_branch_prefix(int block) { return block_prefix(block) + "emotion_attn"; }
std::string motion_branch_prefix(int block) { return block_prefix(block) + "motion_attn"; }
std::string gate_prefix(int block, Task branch) {
    return block_prefix(block) + (branch == Task::emotion_talk ? "emotion_gate" : "motion_gate");
}

bool is_gate_param(const std::string& name) { return name.find("_gate.") != std::string::npos; }

ParameterSet init_params(const DenoiserConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    ParameterSet p;
    init_conditioning_params(p, cfg, rng);

    const int dh = cfg.d_hidden;
    add_linear(p, "input.proj", cfg.d_mot, dh, rng);
    add_linear(p, "time.fc1", dh, dh, rng);
    add_linear(p, "time.fc2", dh, dh, rng);
    for (int b = 0; b < cfg.n_blocks; ++b) {
        const auto pre = block_prefix(b);
        add_attention(p, pre + "self_attn", dh, dh, rng);
        add_attention(p, emotion_branch_prefix(b), dh, cfg.d_txt, rng);
        add_attention(p, motion_branch_prefix(b), dh, cfg.d_txt, rng);
        for (Task branch : {Task::emotion_talk, Task::motion_control}) {
            p.add(gate_prefix(b, branch) + ".weight", detail::zeros(1, cfg.gate_kernel));
            p.add(gate_prefix(b, branch) + ".bias", detail::zeros(1, 1));
        }
        add_attention(p, pre + "keyframe_attn", dh, cfg.d_mot, rng);
        add_norm(p, pre + "conv.norm", dh);
        add_linear(p, pre + "conv.pw1", dh, dh, rng);
        p.add(pre + "conv.dw.weight", detail::normal_weight(cfg.conv_kernel, dh, rng));
        p.add(pre + "conv.dw.bias", detail::zeros(1, dh));
        add_linear(p, pre + "conv.pw2", dh, dh, rng);
        add_norm(p, pre + "ffn.norm", dh);
        add_linear(p, pre + "ffn.fc1", dh, dh * cfg.ffn_mult, rng);
        add_linear(p, pre + "ffn.fc2", dh * cfg.ffn_mult, dh, rng);
    }
    add_norm(p, "final_norm", dh);
    add_linear(p, "output", dh, cfg.d_mot, rng);
    add_linear(p, "heads.au.fc1", dh, dh, rng);
    add_linear(p, "heads.au.fc2", dh, cfg.n_aus, rng);
    add_linear(p, "heads.intensity.fc1", dh, dh, rng);
    add_linear(p, "heads.intensity.fc2", dh, cfg.n_intensity, rng);
    add_linear(p, "heads.pose", dh, cfg.d_pose, rng);
    return p;
}

ag::Var gated_text_attention(ag::Binder& bind, const std::string& attn_prefix, const std::string& gate,
                             ag::Var h, ag::Var rep, int heads) {
    if (rep.rows() < 1) throw InputError("instruction representation is empty");
    ag::Var attended = attention_sublayer(bind, attn_prefix, h, rep, heads);
    ag::Var gated = ag::conv_along_features(attended, bind(gate + ".weight"), bind(gate + ".bias"));
    return ag::add(h, gated);
}

Matrix gated_text_attention(const Matrix& h, const InstructionRep& rep, const ParameterSet& params,
                            const DenoiserConfig& config, int block) {
    ag::Tape tape(false);
    ag::Binder bind(tape, params);
    const auto attn = rep.branch == Task::emotion_talk ? emotion_branch_prefix(block) : motion_branch_prefix(block);
    if (rep.vectors.cols() != config.d_txt)
        throw DimensionError("instruction width " + std::to_string(rep.vectors.cols()) + " != d_txt " +
                             std::to_string(config.d_txt));
    return gated_text_attention(bind, attn, gate_prefix(block, rep.branch), tape.constant(h),
                                tape.constant(rep.vectors), config.n_heads)
        .value();
}

PredictionVars denoise_graph(ag::Binder& bind, const DenoiserConfig& cfg, ag::Var m_t_a, int t,
                             std::optional<ag::Var> rep, Task rep_branch, ag::Var keyframe, Task task) {
    if (rep && rep_branch != task)
        throw RoutingError("instruction encoded for " + std::string(to_string(rep_branch)) +
                           " but task is " + std::string(to_string(task)));
    if (m_t_a.cols() != cfg.d_mot)
        throw DimensionError("noisy latent width " + std::to_string(m_t_a.cols()) + " != d_mot " +
                             std::to_string(cfg.d_mot));
    if (keyframe.rows() != 1 || keyframe.cols() != cfg.d_mot)
        throw DimensionError("keyframe must be a single frame of width d_mot");
    if (rep && rep->cols() != cfg.d_txt)
        throw DimensionError("instruction width " + std::to_string(rep->cols()) + " != d_txt " +
                             std::to_string(cfg.d_txt));
    if (rep && task == Task::emotion_talk && rep->rows() != 1)
        throw DimensionError("emotion instructions must be a single summary vector");

    ag::Tape& tape = bind.tape();
    const Eigen::Index frames = m_t_a.rows();
    const int dh = cfg.d_hidden;

    ag::Var h = dense(bind, "input.proj", m_t_a);
    h = ag::add(h, tape.constant(frame_positions(frames, dh)));
    ag::Var temb = tape.constant(detail::sinusoid(static_cast<double>(t), dh));
    temb = dense(bind, "time.fc2", ag::silu(dense(bind, "time.fc1", temb)));
    h = ag::add_row(h, temb);

    for (int b = 0; b < cfg.n_blocks; ++b) {
        const auto pre = block_prefix(b);
        h = ag::add(h, attention_sublayer(bind, pre + "self_attn", h, std::nullopt, cfg.n_heads));
        if (rep) {
            const auto attn = task == Task::emotion_talk ? emotion_branch_prefix(b) : motion_branch_prefix(b);
            h = gated_text_attention(bind, attn, gate_prefix(b, task), h, *rep, cfg.n_heads);
        }
        h = ag::add(h, attention_sublayer(bind, pre + "keyframe_attn", h, keyframe, cfg.n_heads));

        ag::Var c = dense(bind, pre + "conv.pw1", norm(bind, pre + "conv.norm", h));
        c = ag::silu(ag::depthwise_conv_rows(c, bind(pre + "conv.dw.weight"), bind(pre + "conv.dw.bias")));
        h = ag::add(h, dense(bind, pre + "conv.pw2", c));

        ag::Var f = ag::silu(dense(bind, pre + "ffn.fc1", norm(bind, pre + "ffn.norm", h)));
        h = ag::add(h, dense(bind, pre + "ffn.fc2", f));
    }

    ag::Var hf = norm(bind, "final_norm", h);
    ag::Var pooled = ag::mean_rows(hf);
    PredictionVars out;
    out.m0_hat = dense(bind, "output", hf);
    out.au_logits = dense(bind, "heads.au.fc2", ag::silu(dense(bind, "heads.au.fc1", pooled)));
    out.intensity_logits = dense(bind, "heads.intensity.fc2", ag::silu(dense(bind, "heads.intensity.fc1", pooled)));
    out.pose_hat = dense(bind, "heads.pose", hf);
    return out;
}

PredictionBundle denoise(const MotionSequence& m_t_a, int t, const std::optional<InstructionRep>& rep,
                         const MotionSequence& keyframe, Task task, const ParameterSet& params,
                         const DenoiserConfig& config) {
    ag::Tape tape(false);
    ag::Binder bind(tape, params);
    std::optional<ag::Var> rep_var;
    Task branch = task;
    if (rep) {
        rep_var = tape.constant(rep->vectors);
        branch = rep->branch;
    }
    auto vars = denoise_graph(bind, config, tape.constant(m_t_a.data()), t, rep_var, branch,
                              tape.constant(keyframe.data()), task);
    if (!vars.m0_hat.value().allFinite()) throw NumericalError("denoiser produced non-finite output");
    return PredictionBundle{MotionSequence(vars.m0_hat.value(), m_t_a.frame_rate()), vars.au_logits.value(),
                            vars.intensity_logits.value(), PoseSequence(vars.pose_hat.value())};
}

MotionSequence generate(const MotionModel& model, const ConditioningBundle& cond, Eigen::Index frames, int steps,
                        std::uint64_t seed) {
    if (cond.audio.rows() != frames || cond.audio.cols() != model.config.d_mot)
        throw DimensionError("audio features must be [frames x d_mot]");
    if (cond.rep.branch != cond.task) throw RoutingError("instruction branch does not match task");
    auto predict = [&](const MotionSequence& x_t, int t) {
        MotionSequence m_t_a(x_t.data() + cond.audio, x_t.frame_rate());
        return denoise(m_t_a, t, cond.rep, cond.keyframe, cond.task, model.params, model.config).m0_hat;
    };
    return sample(predict, frames, model.config.d_mot, steps, seed, model.schedule);
}

namespace {

constexpr char kCkptMagic[] = "MDCKPT1\n";

nlohmann::ordered_json config_to_json(const DenoiserConfig& c) {
    return {{"n_blocks", c.n_blocks}, {"d_hidden", c.d_hidden},       {"n_heads", c.n_heads},
            {"conv_kernel", c.conv_kernel}, {"d_pose", c.d_pose},     {"n_aus", c.n_aus},
            {"n_intensity", c.n_intensity}, {"d_mot", c.d_mot},       {"d_txt", c.d_txt},
            {"d_aud", c.d_aud},       {"gate_kernel", c.gate_kernel}, {"ffn_mult", c.ffn_mult}};
}

DenoiserConfig config_from_json(const nlohmann::json& j) {
    DenoiserConfig c;
    c.n_blocks = j.at("n_blocks");
    c.d_hidden = j.at("d_hidden");
    c.n_heads = j.at("n_heads");
    c.conv_kernel = j.at("conv_kernel");
    c.d_pose = j.at("d_pose");
    c.n_aus = j.at("n_aus");
    c.n_intensity = j.at("n_intensity");
    c.d_mot = j.at("d_mot");
    c.d_txt = j.at("d_txt");
    c.d_aud = j.at("d_aud");
    c.gate_kernel = j.at("gate_kernel");
    c.ffn_mult = j.at("ffn_mult");
    c.validate();
    return c;
}

void write_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    nlohmann::ordered_json header;
    header["config"] = config_to_json(ckpt.config);
    header["meta"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : ckpt.meta) header["meta"][k] = v;
    header["params"] = nlohmann::ordered_json::array();
    for (const auto& [name, m] : ckpt.params.entries())
        header["params"].push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
    const std::string text = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out.write(kCkptMagic, 8);
    write_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    std::vector<double> buf;
    for (const auto& [_, m] : ckpt.params.entries()) {
        buf.resize(static_cast<std::size_t>(m.size()));
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) buf[r * m.cols() + c] = m(r, c);
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 8));
    }
    if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCkptMagic, 8) != 0) throw ParseError(path.string() + ": not a checkpoint");
    const auto len = read_u64(in);
    if (len > (1ull << 30)) throw ParseError(path.string() + ": implausible header length");
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in) throw ParseError(path.string() + ": truncated header");

    Checkpoint ckpt;
    try {
        const auto header = nlohmann::json::parse(text);
        ckpt.config = config_from_json(header.at("config"));
        for (const auto& [k, v] : header.at("meta").items()) ckpt.meta[k] = v.get<std::string>();
        std::vector<double> buf;
        for (const auto& p : header.at("params")) {
            const auto rows = p.at("rows").get<Eigen::Index>();
            const auto cols = p.at("cols").get<Eigen::Index>();
            buf.resize(static_cast<std::size_t>(rows * cols));
            in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 8));
            if (!in) throw ParseError(path.string() + ": truncated parameter data");
            Matrix m(rows, cols);
            for (Eigen::Index r = 0; r < rows; ++r)
                for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = buf[r * cols + c];
            ckpt.params.add(p.at("name").get<std::string>(), std::move(m));
        }
    } catch (const nlohmann::json::exception& err) {
        throw ParseError(path.string() + ": bad checkpoint header: " + err.what());
    }
    return ckpt;
}

}  // namespace motiondiff
