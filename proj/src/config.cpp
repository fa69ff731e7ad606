#include "motiondiff/config.hpp"

#include "motiondiff/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace motiondiff {

const std::vector<ConfigKey>& config_schema() {
    using T = ConfigType;
    static const std::vector<ConfigKey> schema = {
        {"seed", T::integer, "0", "seed for training, sampling and annotation"},
        {"init_seed", T::integer, "1", "seed for parameter initialisation"},
        {"model.n_blocks", T::integer, "12", "denoiser blocks"},
        {"model.d_hidden", T::integer, "768", "hidden width"},
        {"model.n_heads", T::integer, "12", "attention heads"},
        {"model.conv_kernel", T::integer, "31", "depthwise time-convolution kernel"},
        {"model.d_pose", T::integer, "6", "head pose width"},
        {"model.d_mot", T::integer, "768", "motion latent width"},
        {"model.d_txt", T::integer, "768", "text embedding width"},
        {"model.d_aud", T::integer, "768", "audio feature width"},
        {"model.gate_kernel", T::integer, "3", "zero-gate kernel along the hidden axis"},
        {"model.ffn_mult", T::integer, "4", "feed-forward expansion"},
        {"schedule.T", T::integer, "1000", "diffusion steps"},
        {"schedule.beta_min", T::real, "0.05", "schedule start rate"},
        {"schedule.beta_max", T::real, "20", "schedule end rate"},
        {"loss.lambda_pose", T::real, "1", "pose loss weight"},
        {"loss.lambda_au", T::real, "0.1", "AU loss weight"},
        {"loss.lambda_inten", T::real, "0.1", "intensity loss weight"},
        {"optim.beta1", T::real, "0.9", "Adam beta1"},
        {"optim.beta2", T::real, "0.98", "Adam beta2"},
        {"optim.eps", T::real, "1e-8", "Adam epsilon"},
        {"optim.peak_lr", T::real, "1e-5", "peak learning rate"},
        {"optim.warmup_steps", T::integer, "8000", "linear warmup steps"},
        {"optim.clip_norm", T::real, "1", "global gradient-norm clip (0 disables)"},
        {"train.steps", T::integer, "2000", "optimizer steps"},
        {"train.batch_size", T::integer, "8", "clips per step"},
        {"train.log_every", T::integer, "10", "metrics.csv row interval"},
        {"train.checkpoint_every", T::integer, "0", "intermediate checkpoint interval (0: final only)"},
        {"sample.ddim_steps", T::integer, "150", "DDIM steps at inference"},
        {"text.seed", T::integer, "24301", "hash text embedder seed"},
        {"audio.rate", T::real, "50", "audio feature rate (rows per second)"},
        {"frame_rate", T::real, "25", "motion frame rate"},
        {"synth.emotions", T::string, "angry,happy,sad,surprised", "emotions of the synthetic corpus"},
        {"synth.clips_per_emotion", T::integer, "50", "training clips per emotion"},
        {"synth.heldout_per_emotion", T::integer, "40", "held-out clips per emotion"},
        {"synth.motion_clips_per_kind", T::integer, "0", "motion-control clips per trajectory kind"},
        {"synth.n_persons", T::integer, "4", "identities"},
        {"synth.frames", T::integer, "16", "frames per clip"},
        {"synth.d_mot", T::integer, "16", "latent width"},
        {"synth.d_aud", T::integer, "8", "audio feature width"},
        {"synth.d_pose", T::integer, "6", "pose width"},
        {"synth.heldout_template_stride", T::integer, "5", "every n-th template is held out"},
        {"synth.emotion_scale", T::real, "3", "norm of the emotion offsets"},
        {"synth.person_scale", T::real, "0.5", "norm of the identity offsets"},
        {"synth.audio_scale", T::real, "0.3", "audio contribution scale"},
        {"synth.noise_scale", T::real, "0.1", "smooth noise scale"},
        {"synth.motion_scale", T::real, "2", "motion trajectory amplitude"},
        {"paraphrase.mode", T::string, "off", "off, fixture or live"},
        {"paraphrase.fixtures", T::string, "", "fixture directory"},
        {"paraphrase.url", T::string, "", "chat-completion base URL for live mode"},
        {"paraphrase.model", T::string, "", "model name sent in live mode"},
        {"paraphrase.api_key_env", T::string, "OPENAI_API_KEY", "environment variable holding the API key"},
        {"eval.embed_width", T::integer, "64", "width of the stand-in frame/text embedding"},
    };
    return schema;
}

namespace {

const ConfigKey& find_key(const std::string& key) {
    const auto& schema = config_schema();
    const auto it = std::find_if(schema.begin(), schema.end(), [&](const ConfigKey& k) { return k.name == key; });
    if (it == schema.end()) throw ConfigError("unknown config key '" + key + "'");
    return *it;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

void check_type(const ConfigKey& key, const std::string& value) {
    if (key.type == ConfigType::string) return;
    const char* first = value.data();
    const char* last = value.data() + value.size();
    if (key.type == ConfigType::integer) {
        long long v = 0;
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last)
            throw ConfigError("config key '" + key.name + "' expects an integer, got '" + value + "'");
    } else {
        double v = 0;
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last)
            throw ConfigError("config key '" + key.name + "' expects a number, got '" + value + "'");
    }
}

}  // namespace

RunConfig::RunConfig() {
    for (const auto& key : config_schema()) values_[key.name] = key.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    const ConfigKey& k = find_key(key);
    const std::string v = trim(value);
    check_type(k, v);
    values_[key] = v;
}

void RunConfig::merge_text(std::string_view text, const std::string& origin) {
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
        try {
            set(trim(std::string_view(t).substr(0, eq)), t.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void RunConfig::merge_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    merge_text(buf.str(), path.string());
}

std::string RunConfig::env_name(const std::string& key) {
    std::string out(kEnvPrefix);
    for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

void RunConfig::merge_environment(char** envp) {
    if (!envp) return;
    std::map<std::string, std::string> by_env;
    for (const auto& key : config_schema()) by_env[env_name(key.name)] = key.name;
    for (char** e = envp; *e; ++e) {
        const std::string entry(*e);
        if (entry.rfind(kEnvPrefix, 0) != 0) continue;
        const auto eq = entry.find('=');
        if (eq == std::string::npos) continue;
        const std::string name = entry.substr(0, eq);
        const auto it = by_env.find(name);
        if (it == by_env.end()) throw ConfigError("unknown config variable " + name);
        set(it->second, entry.substr(eq + 1));
    }
}

const std::string& RunConfig::get(const std::string& key) const {
    find_key(key);
    return values_.at(key);
}

long long RunConfig::get_int(const std::string& key) const {
    if (find_key(key).type != ConfigType::integer) throw ConfigError("config key '" + key + "' is not an integer");
    return std::stoll(values_.at(key));
}

double RunConfig::get_real(const std::string& key) const {
    if (find_key(key).type == ConfigType::string) throw ConfigError("config key '" + key + "' is not numeric");
    return std::stod(values_.at(key));
}

std::string RunConfig::snapshot() const {
    std::ostringstream out;
    for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
    return out.str();
}

DenoiserConfig RunConfig::model() const {
    DenoiserConfig c;
    auto i = [&](const char* k) { return static_cast<int>(get_int(k)); };
    c.n_blocks = i("model.n_blocks");
    c.d_hidden = i("model.d_hidden");
    c.n_heads = i("model.n_heads");
    c.conv_kernel = i("model.conv_kernel");
    c.d_pose = i("model.d_pose");
    c.d_mot = i("model.d_mot");
    c.d_txt = i("model.d_txt");
    c.d_aud = i("model.d_aud");
    c.gate_kernel = i("model.gate_kernel");
    c.ffn_mult = i("model.ffn_mult");
    c.validate();
    return c;
}

NoiseSchedule RunConfig::schedule() const {
    return build_schedule(static_cast<int>(get_int("schedule.T")), get_real("schedule.beta_min"),
                          get_real("schedule.beta_max"));
}

LossWeights RunConfig::loss_weights() const {
    LossWeights w{get_real("loss.lambda_pose"), get_real("loss.lambda_au"), get_real("loss.lambda_inten")};
    w.validate();
    return w;
}

OptimizerConfig RunConfig::optimizer() const {
    OptimizerConfig o;
    o.beta1 = get_real("optim.beta1");
    o.beta2 = get_real("optim.beta2");
    o.eps = get_real("optim.eps");
    o.peak_lr = get_real("optim.peak_lr");
    o.warmup_steps = static_cast<int>(get_int("optim.warmup_steps"));
    o.clip_norm = get_real("optim.clip_norm");
    o.validate();
    return o;
}

SynthOptions RunConfig::synth() const {
    SynthOptions o;
    o.emotions.clear();
    std::istringstream list(get("synth.emotions"));
    std::string item;
    while (std::getline(list, item, ',')) {
        const std::string name = trim(item);
        if (name.empty()) continue;
        const auto e = try_parse_emotion(name);
        if (!e) throw ConfigError("synth.emotions: unknown emotion '" + name + "'");
        o.emotions.push_back(*e);
    }
    auto i = [&](const char* k) { return static_cast<int>(get_int(k)); };
    o.clips_per_emotion = i("synth.clips_per_emotion");
    o.heldout_per_emotion = i("synth.heldout_per_emotion");
    o.motion_clips_per_kind = i("synth.motion_clips_per_kind");
    o.n_persons = i("synth.n_persons");
    o.frames = i("synth.frames");
    o.d_mot = i("synth.d_mot");
    o.d_aud = i("synth.d_aud");
    o.d_pose = i("synth.d_pose");
    o.heldout_template_stride = i("synth.heldout_template_stride");
    o.audio_rate = get_real("audio.rate");
    o.frame_rate = get_real("frame_rate");
    o.seed = static_cast<std::uint64_t>(get_int("seed"));
    o.emotion_scale = get_real("synth.emotion_scale");
    o.person_scale = get_real("synth.person_scale");
    o.audio_scale = get_real("synth.audio_scale");
    o.noise_scale = get_real("synth.noise_scale");
    o.motion_scale = get_real("synth.motion_scale");
    o.validate();
    return o;
}

}  // namespace motiondiff
