#include "motiondiff/cli.hpp"

#include "motiondiff/config.hpp"
#include "motiondiff/errors.hpp"
#include "motiondiff/instructions.hpp"
#include "motiondiff/manifest.hpp"
#include "motiondiff/manifest_json.hpp"
#include "motiondiff/metrics.hpp"
#include "motiondiff/npy.hpp"
#include "motiondiff/paraphrase.hpp"
#include "motiondiff/synth.hpp"
#include "motiondiff/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

namespace motiondiff {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
    std::string config_file;
    std::vector<std::string> sets;
    std::optional<long long> seed;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool out_required = true) {
    cmd->add_option("--config", o.config_file, "key = value config file");
    cmd->add_option("--set", o.sets, "config override KEY=VALUE (repeatable)");
    cmd->add_option("--seed", o.seed, "shortcut for --set seed=N");
    auto* out = cmd->add_option("--out", o.out_dir, "run directory");
    if (out_required) out->required();
}

RunConfig resolve_config(const CommonOptions& o, char** envp) {
    RunConfig cfg;
    if (!o.config_file.empty()) cfg.merge_file(o.config_file);
    cfg.merge_environment(envp);
    for (const auto& kv : o.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (o.seed) cfg.set("seed", std::to_string(*o.seed));
    return cfg;
}

void prepare_run_dir(const fs::path& dir, const RunConfig& cfg) {
    fs::create_directories(dir);
    std::ofstream snap(dir / "config.txt");
    if (!snap) throw IoError("cannot write " + (dir / "config.txt").string());
    snap << cfg.snapshot();
}

std::string absolute_ref(const fs::path& base, const std::string& ref) { return resolve_ref(base, ref).string(); }

// ---- annotate -------------------------------------------------------------

struct AnnotateOptions {
    std::string manifest;
    std::string detections;
    std::string mode = "template";
};

std::map<std::string, std::vector<std::vector<int>>> load_detections(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::map<std::string, std::vector<std::vector<int>>> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            out[j.at("id").get<std::string>()] = j.at("frames").get<std::vector<std::vector<int>>>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

// Annotation inputs may lack fields that annotate fills in, so entries are
// validated only after annotation.
std::vector<ManifestEntry> read_unvalidated(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    std::vector<ManifestEntry> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        out.push_back(entry_from_json(j, line_no));
    }
    return out;
}

std::unique_ptr<ParaphraseClient> make_paraphrase_client(const RunConfig& cfg,
                                                         std::unique_ptr<ChatCompletionAdapter>& adapter,
                                                         std::unique_ptr<ParaphraseClient>& live) {
    const std::string mode = cfg.get("paraphrase.mode");
    const std::string fixtures = cfg.get("paraphrase.fixtures");
    if (mode == "fixture") {
        if (fixtures.empty()) throw ConfigError("paraphrase.fixtures is required in fixture mode");
        return std::make_unique<FixtureParaphraseClient>(fixtures);
    }
    if (mode == "live") {
        if (cfg.get("paraphrase.url").empty()) throw ConfigError("paraphrase.url is required in live mode");
        const char* key = std::getenv(cfg.get("paraphrase.api_key_env").c_str());
        adapter = std::make_unique<HttpChatCompletionAdapter>(cfg.get("paraphrase.url"), cfg.get("paraphrase.model"),
                                                              key ? key : "");
        live = std::make_unique<LlmParaphraseClient>(*adapter);
        if (fixtures.empty()) throw ConfigError("paraphrase.fixtures is required to record live responses");
        return std::make_unique<FixtureParaphraseClient>(fixtures, live.get());
    }
    throw ConfigError("paraphrase.mode must be fixture or live for --mode paraphrase, got '" + mode + "'");
}

int run_annotate(const CommonOptions& common, const AnnotateOptions& o, std::ostream& out, char** envp) {
    const RunConfig cfg = resolve_config(common, envp);
    const fs::path run(common.out_dir);
    prepare_run_dir(run, cfg);
    if (o.mode != "template" && o.mode != "paraphrase")
        throw ConfigError("--mode must be template or paraphrase, got '" + o.mode + "'");

    const fs::path manifest_path(o.manifest);
    const fs::path base = manifest_path.parent_path();
    auto entries = read_unvalidated(manifest_path);
    std::map<std::string, std::vector<std::vector<int>>> detections;
    if (!o.detections.empty()) detections = load_detections(o.detections);

    std::unique_ptr<ChatCompletionAdapter> adapter;
    std::unique_ptr<ParaphraseClient> live;
    std::unique_ptr<ParaphraseClient> client;
    if (o.mode == "paraphrase") client = make_paraphrase_client(cfg, adapter, live);

    const TemplateBank& bank = TemplateBank::builtin();
    std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.get_int("seed")));
    for (auto& e : entries) {
        const auto det = detections.find(e.id);
        if (det != detections.end()) {
            auto frames = det->second;
            if (frames.empty()) throw DataError("entry '" + e.id + "': no AU detections");
            if (frames.size() > 3) {
                std::shuffle(frames.begin(), frames.end(), rng);
                frames.resize(3);
            }
            e.au = intersect_au_bits(frames);
        }
        if (e.task == Task::emotion_talk) {
            if (!e.emotion || !e.intensity)
                throw ValidationError("entry '" + e.id + "': fields 'emotion' and 'intensity' are required");
            if (o.mode == "paraphrase") {
                if (!e.au || e.au->none())
                    throw ValidationError("entry '" + e.id + "': field 'au' needs an active unit to paraphrase");
                const auto result = paraphrase_aus(*e.au, e.id, *client, rng);
                e.instruction = result.instruction;
                e.au = result.au;
            } else if (*e.emotion == Emotion::neutral) {
                e.instruction = pseudo_neutral_instruction(rng, bank);
            } else {
                e.instruction = expand_emotion_label(*e.emotion, *e.intensity, bank, rng);
            }
        }
        e.motion_path = absolute_ref(base, e.motion_path);
        if (e.pose_path) e.pose_path = absolute_ref(base, *e.pose_path);
        if (e.audio_path) e.audio_path = absolute_ref(base, *e.audio_path);
        validate(e);
    }
    write_manifest(run / "manifest.jsonl", entries);
    out << "annotated " << entries.size() << " entries -> " << (run / "manifest.jsonl").string() << "\n";
    return kExitOk;
}

// ---- synth-data -----------------------------------------------------------

int run_synth(const CommonOptions& common, std::ostream& out, char** envp) {
    const RunConfig cfg = resolve_config(common, envp);
    const SynthOptions options = cfg.synth();
    const fs::path run(common.out_dir);
    prepare_run_dir(run, cfg);
    const auto corpus = synth_corpus(options, run);
    out << "synthetic corpus: " << corpus.train.size() << " training clips, " << corpus.heldout.size()
        << " held-out clips -> " << run.string() << "\n";
    return kExitOk;
}

// ---- train ----------------------------------------------------------------

struct TrainCliOptions {
    std::string data;
    std::string manifest;
};

int run_train(const CommonOptions& common, const TrainCliOptions& o, std::ostream& out, char** envp) {
    const RunConfig cfg = resolve_config(common, envp);
    const DenoiserConfig model = cfg.model();
    const fs::path data(o.data);
    const fs::path manifest_path = o.manifest.empty() ? data / "manifest.jsonl" : fs::path(o.manifest);
    const auto entries = load_manifest(manifest_path);
    const fs::path base = o.manifest.empty() ? data : manifest_path.parent_path();

    const fs::path run(common.out_dir);
    prepare_run_dir(run, cfg);

    auto audio = std::make_shared<NpyAudioFeatureProvider>(base, model.d_aud, cfg.get_real("audio.rate"));
    ClipStore clips(base, audio, cfg.get_real("frame_rate"));
    const auto text_seed = static_cast<std::uint64_t>(cfg.get_int("text.seed"));
    HashTextEmbedder text(model.d_txt, text_seed);

    TrainContext ctx{model, cfg.schedule(), cfg.loss_weights(), cfg.optimizer(), entries, &clips, &text};
    TrainOptions options;
    options.steps = static_cast<int>(cfg.get_int("train.steps"));
    options.batch_size = static_cast<int>(cfg.get_int("train.batch_size"));
    options.log_every = static_cast<int>(cfg.get_int("train.log_every"));
    options.checkpoint_every = static_cast<int>(cfg.get_int("train.checkpoint_every"));
    options.seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
    options.out_dir = run;

    std::map<std::string, std::string> meta = {
        {"text_seed", std::to_string(text_seed)},
        {"schedule.T", cfg.get("schedule.T")},
        {"schedule.beta_min", cfg.get("schedule.beta_min")},
        {"schedule.beta_max", cfg.get("schedule.beta_max")},
        {"audio.rate", cfg.get("audio.rate")},
        {"frame_rate", cfg.get("frame_rate")},
    };
    const auto init = init_params(model, static_cast<std::uint64_t>(cfg.get_int("init_seed")));
    const auto result = train(init, ctx, options, meta);
    char buf[160];
    std::snprintf(buf, sizeof buf, "trained %d steps; last batch loss %.6g (mse %.6g)\n", options.steps,
                  result.last.total, result.last.mse);
    out << buf << "checkpoint -> " << (run / "checkpoint.bin").string() << "\n";
    return kExitOk;
}

// ---- sample ---------------------------------------------------------------

struct SampleOptions {
    std::string checkpoint;
    std::string task;
    std::string instruction;
    std::optional<int> frames;
    std::string audio;
    std::string portrait;
    std::string appearance;
    std::string codec;
    std::string manifest;
    std::string data;
    std::optional<int> steps;
};

std::string meta_or(const Checkpoint& ckpt, const std::string& key, const std::string& fallback) {
    const auto it = ckpt.meta.find(key);
    return it == ckpt.meta.end() ? fallback : it->second;
}

struct LoadedModel {
    MotionModel model;
    double audio_rate;
    double frame_rate;
};

LoadedModel load_model(const fs::path& path) {
    Checkpoint ckpt = load_checkpoint(path);
    const RunConfig defaults;
    LoadedModel lm;
    lm.model.config = ckpt.config;
    lm.model.params = std::move(ckpt.params);
    lm.model.schedule = build_schedule(std::stoi(meta_or(ckpt, "schedule.T", defaults.get("schedule.T"))),
                                       std::stod(meta_or(ckpt, "schedule.beta_min", defaults.get("schedule.beta_min"))),
                                       std::stod(meta_or(ckpt, "schedule.beta_max", defaults.get("schedule.beta_max"))));
    lm.model.text_seed = std::stoull(meta_or(ckpt, "text_seed", defaults.get("text.seed")));
    lm.audio_rate = std::stod(meta_or(ckpt, "audio.rate", defaults.get("audio.rate")));
    lm.frame_rate = std::stod(meta_or(ckpt, "frame_rate", defaults.get("frame_rate")));
    return lm;
}

MotionSequence keyframe_from(const fs::path& portrait, const DenoiserConfig& cfg) {
    if (portrait.empty() || !fs::exists(portrait)) return MotionSequence(Matrix::Zero(1, cfg.d_mot));
    Matrix m = npy::read(portrait);
    if (m.cols() != cfg.d_mot) throw DimensionError("portrait latent width does not match d_mot");
    return MotionSequence(m.topRows(1));
}

int run_sample(const CommonOptions& common, const SampleOptions& o, std::ostream& out, char** envp) {
    RunConfig cfg = resolve_config(common, envp);
    if (o.steps) cfg.set("sample.ddim_steps", std::to_string(*o.steps));
    const int steps = static_cast<int>(cfg.get_int("sample.ddim_steps"));
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
    const LoadedModel lm = load_model(o.checkpoint);
    const MotionModel& model = lm.model;
    HashTextEmbedder text(model.config.d_txt, model.text_seed);
    const fs::path run(common.out_dir);

    if (!o.manifest.empty()) {
        if (!o.task.empty() || !o.instruction.empty() || !o.audio.empty())
            throw ValidationError("--manifest cannot be combined with --task, --instruction or --audio");
        const fs::path manifest_path(o.manifest);
        const fs::path data = o.data.empty() ? manifest_path.parent_path() : fs::path(o.data);
        auto entries = load_manifest(manifest_path);
        prepare_run_dir(run, cfg);
        fs::create_directories(run / "generated");
        NpyAudioFeatureProvider audio(data, model.config.d_aud, lm.audio_rate);
        std::optional<LinearCodec> codec;
        if (fs::exists(data / "codec.npy")) {
            codec = LinearCodec::load(data / "codec.npy");
            fs::create_directories(run / "frames");
        }
        std::vector<ManifestEntry> generated;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const ManifestEntry& e = entries[i];
            ConditioningBundle cond;
            cond.task = e.task;
            cond.audio = audio_features(e, audio, e.n_frames, model.params, lm.frame_rate);
            cond.rep = encode_instruction(e.instruction, e.task, text, model.params);
            cond.keyframe = keyframe_from(data / "persons" / (e.person_id + "_portrait.npy"), model.config);
            const MotionSequence m = generate(model, cond, e.n_frames, steps, seed + i);
            ManifestEntry g = e;
            g.motion_path = "generated/" + e.id + ".npy";
            g.pose_path.reset();
            if (g.audio_path) g.audio_path = absolute_ref(data, *g.audio_path);
            npy::write(run / g.motion_path, m.data());
            const fs::path appearance = data / "persons" / (e.person_id + "_appearance.npy");
            if (codec && fs::exists(appearance)) {
                const AppearanceLatent app{npy::read(appearance)};
                npy::write(run / "frames" / (e.id + ".npy"), codec->decode(m, app));
            }
            generated.push_back(std::move(g));
        }
        write_manifest(run / "generated.jsonl", generated);
        out << "generated " << generated.size() << " clips -> " << (run / "generated.jsonl").string() << "\n";
        return kExitOk;
    }

    if (o.task.empty()) throw ValidationError("field 'task' is required (--task)");
    if (o.instruction.empty()) throw ValidationError("field 'instruction' is required (--instruction)");
    const Task task = parse_task(o.task);
    if (task == Task::motion_control && !o.audio.empty())
        throw ValidationError("field 'audio': motion_control samples take no audio input");
    if (task == Task::emotion_talk && o.audio.empty())
        throw ValidationError("field 'audio': emotion_talk samples require --audio");

    Matrix raw_audio;
    Eigen::Index frames = 0;
    if (!o.audio.empty()) {
        raw_audio = npy::read(o.audio);
        if (raw_audio.cols() != model.config.d_aud)
            throw DimensionError("audio feature width " + std::to_string(raw_audio.cols()) + " != d_aud " +
                                 std::to_string(model.config.d_aud));
        frames = o.frames ? *o.frames
                          : std::max<Eigen::Index>(1, std::llround(static_cast<double>(raw_audio.rows()) /
                                                                    lm.audio_rate * lm.frame_rate));
    } else {
        if (!o.frames) throw ValidationError("field 'frames' is required without audio (--frames)");
        frames = *o.frames;
    }
    if (frames < 1) throw ValidationError("field 'frames' must be >= 1");
    if (raw_audio.size() == 0) {
        NpyAudioFeatureProvider silence_provider(".", model.config.d_aud, lm.audio_rate);
        raw_audio = silence_provider.silence(static_cast<double>(frames) / lm.frame_rate);
    }

    prepare_run_dir(run, cfg);
    ConditioningBundle cond;
    cond.task = task;
    cond.audio = project_audio(resample_linear(raw_audio, frames), model.params);
    cond.rep = encode_instruction(o.instruction, task, text, model.params);
    cond.keyframe = keyframe_from(o.portrait, model.config);
    const MotionSequence m = generate(model, cond, frames, steps, seed);
    npy::write(run / "motion.npy", m.data());
    if (!o.codec.empty()) {
        if (o.appearance.empty()) throw ValidationError("field 'appearance' is required with --codec");
        const LinearCodec codec = LinearCodec::load(o.codec);
        npy::write(run / "frames.npy", codec.decode(m, AppearanceLatent{npy::read(o.appearance)}));
    }
    out << "sampled " << frames << " frames -> " << (run / "motion.npy").string() << "\n";
    return kExitOk;
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateOptions {
    std::string generated;
    std::string reference;
    std::string oracle;
    std::string frames_dir;
};

int run_evaluate(const CommonOptions& common, const EvaluateOptions& o, std::ostream& out, char** envp) {
    const RunConfig cfg = resolve_config(common, envp);
    const fs::path gen_path(o.generated);
    const auto generated = load_manifest(gen_path);
    const auto reference = load_manifest(o.reference);
    std::map<std::string, const ManifestEntry*> ref_by_id;
    for (const auto& r : reference) ref_by_id[r.id] = &r;
    std::optional<OracleClassifier> oracle;
    if (!o.oracle.empty()) oracle = OracleClassifier::load(o.oracle);
    const fs::path frames_dir = o.frames_dir.empty() ? gen_path.parent_path() / "frames" : fs::path(o.frames_dir);

    std::vector<EvalSample> samples;
    Eigen::Index frame_width = 0;
    for (const auto& g : generated) {
        const auto it = ref_by_id.find(g.id);
        if (it == ref_by_id.end()) throw DataError("generated entry '" + g.id + "' has no reference entry");
        const ManifestEntry& r = *it->second;
        const MotionSequence motion(npy::read(resolve_ref(gen_path.parent_path(), g.motion_path)));
        EvalSample s;
        s.id = g.id;
        s.task = r.task;
        s.emotion = r.emotion;
        s.gt_au = r.au;
        s.pred_au = oracle ? std::optional<AUVector>(oracle->predict_au(motion)) : g.au;
        s.instruction = g.instruction;
        s.generated_ref = g.motion_path;
        s.reference_ref = r.motion_path;
        if (r.task == Task::motion_control) {
            const fs::path decoded = frames_dir / (g.id + ".npy");
            const Matrix frames = fs::exists(decoded) ? npy::read(decoded) : motion.data();
            if (frame_width && frames.cols() != frame_width) throw DimensionError("frame widths differ across samples");
            frame_width = frames.cols();
            for (Eigen::Index i = 0; i < frames.rows(); ++i) s.frames.push_back(frames.row(i));
        }
        samples.push_back(std::move(s));
    }

    std::unique_ptr<HashFrameEmbedder> provider;
    if (frame_width > 0)
        provider = std::make_unique<HashFrameEmbedder>(static_cast<int>(frame_width),
                                                       static_cast<int>(cfg.get_int("eval.embed_width")));
    const Report report = evaluate_run(samples, provider.get(), {}, TypicalAUTable::builtin());

    const fs::path run(common.out_dir);
    prepare_run_dir(run, cfg);
    std::ofstream json(run / "report.json");
    if (!json) throw IoError("cannot write " + (run / "report.json").string());
    json << report_to_json(report);
    out << report_table(report);
    return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, char** envp) {
    CLI::App app{"Instruction-driven talking-avatar motion diffusion", "motiondiff"};
    app.require_subcommand(1);

    CommonOptions annotate_common, synth_common, train_common, sample_common, eval_common;
    AnnotateOptions annotate_opts;
    TrainCliOptions train_opts;
    SampleOptions sample_opts;
    EvaluateOptions eval_opts;

    auto* annotate = app.add_subcommand("annotate", "write instructions into a manifest");
    add_common(annotate, annotate_common);
    annotate->add_option("--manifest", annotate_opts.manifest, "input manifest (JSON Lines)")->required();
    annotate->add_option("--au-detections", annotate_opts.detections, "per-frame AU detections (JSON Lines)");
    annotate->add_option("--mode", annotate_opts.mode, "template or paraphrase");

    auto* synth = app.add_subcommand("synth-data", "generate a synthetic corpus");
    add_common(synth, synth_common);

    auto* train_cmd = app.add_subcommand("train", "train the denoiser");
    add_common(train_cmd, train_common);
    train_cmd->add_option("--data", train_opts.data, "corpus directory")->required();
    train_cmd->add_option("--manifest", train_opts.manifest, "manifest (default <data>/manifest.jsonl)");

    auto* sample_cmd = app.add_subcommand("sample", "generate motion latents");
    add_common(sample_cmd, sample_common);
    sample_cmd->add_option("--checkpoint", sample_opts.checkpoint, "trained checkpoint")->required();
    sample_cmd->add_option("--task", sample_opts.task, "emotion_talk or motion_control");
    sample_cmd->add_option("--instruction", sample_opts.instruction, "instruction text");
    sample_cmd->add_option("--frames", sample_opts.frames, "frames to generate");
    sample_cmd->add_option("--audio", sample_opts.audio, "audio features (.npy)");
    sample_cmd->add_option("--portrait", sample_opts.portrait, "portrait motion latent (.npy, 1 x d_mot)");
    sample_cmd->add_option("--appearance", sample_opts.appearance, "appearance latent (.npy)");
    sample_cmd->add_option("--codec", sample_opts.codec, "codec mix (.npy) for decoded frames");
    sample_cmd->add_option("--manifest", sample_opts.manifest, "batch mode: generate every entry");
    sample_cmd->add_option("--data", sample_opts.data, "batch mode corpus directory");
    sample_cmd->add_option("--steps", sample_opts.steps, "DDIM steps (sample.ddim_steps)");

    auto* eval_cmd = app.add_subcommand("evaluate", "score generated clips");
    add_common(eval_cmd, eval_common);
    eval_cmd->add_option("--generated", eval_opts.generated, "generated manifest")->required();
    eval_cmd->add_option("--reference", eval_opts.reference, "reference manifest")->required();
    eval_cmd->add_option("--oracle", eval_opts.oracle, "oracle AU classifier (oracle.json)");
    eval_cmd->add_option("--frames-dir", eval_opts.frames_dir, "decoded frames (default <generated dir>/frames)");

    std::vector<const char*> argv;
    argv.push_back("motiondiff");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (annotate->parsed()) return run_annotate(annotate_common, annotate_opts, out, envp);
        if (synth->parsed()) return run_synth(synth_common, out, envp);
        if (train_cmd->parsed()) return run_train(train_common, train_opts, out, envp);
        if (sample_cmd->parsed()) return run_sample(sample_common, sample_opts, out, envp);
        if (eval_cmd->parsed()) return run_evaluate(eval_common, eval_opts, out, envp);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    err << "usage error: no command\n";
    return kExitUsage;
}

}  // namespace motiondiff
