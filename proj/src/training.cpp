#include "motiondiff/training.hpp"

#include "motiondiff/errors.hpp"
#include "motiondiff/npy.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace motiondiff {

void LossWeights::validate() const {
    if (!(lambda_pose >= 0.0) || !(lambda_au >= 0.0) || !(lambda_inten >= 0.0))
        throw ConfigError("loss weights must be nonnegative");
}

double combine_losses(double mse, double pose, double au, double inten, const LossWeights& w) {
    return mse + w.lambda_pose * pose + w.lambda_au * au + w.lambda_inten * inten;
}

namespace {

Matrix au_target(const AUVector& au) {
    Matrix m(1, static_cast<Eigen::Index>(AUVector::kSize));
    for (std::size_t i = 0; i < AUVector::kSize; ++i) m(0, static_cast<Eigen::Index>(i)) = au.test(i) ? 1.0 : 0.0;
    return m;
}

struct LossVars {
    ag::Var mse, pose, au, inten, total;
};

LossVars loss_graph(const PredictionVars& pred, const Matrix& m0, const Matrix& pose,
                    const std::optional<AUVector>& au, const std::optional<Intensity>& inten, const LossWeights& w) {
    ag::Tape& tape = *pred.m0_hat.tape();
    LossVars out;
    out.mse = ag::mse(pred.m0_hat, m0);
    out.pose = ag::mse(pred.pose_hat, pose);
    out.total = ag::add(out.mse, ag::scale(out.pose, w.lambda_pose));
    if (au) {
        out.au = ag::bce_with_logits(pred.au_logits, au_target(*au));
        out.total = ag::add(out.total, ag::scale(out.au, w.lambda_au));
    } else {
        out.au = tape.constant(Matrix::Zero(1, 1));
    }
    if (inten) {
        out.inten = ag::cross_entropy(pred.intensity_logits, inten->level() - 1);
        out.total = ag::add(out.total, ag::scale(out.inten, w.lambda_inten));
    } else {
        out.inten = tape.constant(Matrix::Zero(1, 1));
    }
    return out;
}

LossBreakdown breakdown_of(const LossVars& v, const LossWeights& w) {
    LossBreakdown b;
    b.mse = v.mse.value()(0, 0);
    b.pose = v.pose.value()(0, 0);
    b.au = v.au.value()(0, 0);
    b.inten = v.inten.value()(0, 0);
    b.total = combine_losses(b.mse, b.pose, b.au, b.inten, w);
    return b;
}

}  // namespace

LossBreakdown compute_losses(const PredictionBundle& pred, const MotionSequence& target_m0,
                             const PoseSequence& target_pose, const std::optional<AUVector>& target_au,
                             const std::optional<Intensity>& target_inten, const LossWeights& w) {
    w.validate();
    if (!all_finite(pred.m0_hat.data()) || !all_finite(pred.pose_hat.data()) || !pred.au_logits.allFinite() ||
        !pred.intensity_logits.allFinite())
        throw NumericalError("non-finite prediction");
    if (pred.m0_hat.frames() != target_m0.frames() || pred.m0_hat.dims() != target_m0.dims())
        throw DimensionError("predicted motion shape does not match the target");
    if (pred.pose_hat.frames() != target_pose.frames() || pred.pose_hat.dims() != target_pose.dims())
        throw DimensionError("predicted pose shape does not match the target");
    if (pred.au_logits.size() != static_cast<Eigen::Index>(AUVector::kSize))
        throw DimensionError("AU logits must have 41 entries");

    ag::Tape tape(false);
    PredictionVars vars{tape.constant(pred.m0_hat.data()), tape.constant(pred.au_logits),
                        tape.constant(pred.intensity_logits), tape.constant(pred.pose_hat.data())};
    return breakdown_of(loss_graph(vars, target_m0.data(), target_pose.data(), target_au, target_inten, w), w);
}

void OptimizerConfig::validate() const {
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
        throw ConfigError("optimizer betas must lie in (0, 1)");
    if (!(eps > 0.0)) throw ConfigError("optimizer eps must be positive");
    if (!(peak_lr > 0.0)) throw ConfigError("peak learning rate must be positive");
    if (warmup_steps < 1) throw ConfigError("warmup_steps must be >= 1");
}

double lr_at(int step, const OptimizerConfig& cfg) {
    if (step < 1) throw InputError("learning-rate step must be >= 1, got " + std::to_string(step));
    const double warm = static_cast<double>(cfg.warmup_steps);
    const double s = static_cast<double>(step);
    if (step <= cfg.warmup_steps) return cfg.peak_lr * s / warm;
    return cfg.peak_lr * std::sqrt(warm / s);
}

ClipStore::ClipStore(std::filesystem::path base_dir, std::shared_ptr<const AudioFeatureProvider> audio,
                     double frame_rate)
    : base_dir_(std::move(base_dir)), audio_(std::move(audio)), frame_rate_(frame_rate) {
    if (!audio_) throw ConfigError("ClipStore needs an audio feature provider");
}

const MotionSequence& ClipStore::motion(const ManifestEntry& entry) const {
    std::lock_guard lock(mutex_);
    auto& slot = motion_[entry.id];
    if (!slot) {
        Matrix m = npy::read(resolve_ref(base_dir_, entry.motion_path));
        if (m.rows() != entry.n_frames)
            throw DataError("entry '" + entry.id + "': motion file has " + std::to_string(m.rows()) +
                            " frames, manifest says " + std::to_string(entry.n_frames));
        slot = std::make_unique<MotionSequence>(std::move(m), frame_rate_);
    }
    return *slot;
}

const PoseSequence& ClipStore::pose(const ManifestEntry& entry) const {
    if (!entry.pose_path) throw DataError("entry '" + entry.id + "': field 'pose_path' is missing");
    std::lock_guard lock(mutex_);
    auto& slot = pose_[entry.id];
    if (!slot) {
        Matrix m = npy::read(resolve_ref(base_dir_, *entry.pose_path));
        if (m.rows() != entry.n_frames)
            throw DataError("entry '" + entry.id + "': pose file has " + std::to_string(m.rows()) + " frames");
        slot = std::make_unique<PoseSequence>(std::move(m));
    }
    return *slot;
}

const Matrix& ClipStore::aligned_audio(const ManifestEntry& entry) const {
    std::lock_guard lock(mutex_);
    auto& slot = audio_cache_[entry.id];
    if (!slot) slot = std::make_unique<Matrix>(motiondiff::aligned_audio(entry, *audio_, entry.n_frames, frame_rate_));
    return *slot;
}

std::vector<const ManifestEntry*> keyframe_donors(const ManifestEntry& entry, std::span<const ManifestEntry> manifest) {
    std::vector<const ManifestEntry*> donors;
    if (entry.task == Task::motion_control) {
        donors.push_back(&entry);
        return donors;
    }
    for (const auto& other : manifest)
        if (other.task == Task::emotion_talk && other.person_id == entry.person_id && other.emotion &&
            other.emotion != entry.emotion)
            donors.push_back(&other);
    return donors;
}

KeyframeChoice select_keyframe(const ManifestEntry& entry, std::span<const ManifestEntry> manifest,
                               const ClipStore& clips, std::mt19937_64& rng) {
    const auto donors = keyframe_donors(entry, manifest);
    if (donors.empty())
        throw DataError("no keyframe donor with a different emotion for person '" + entry.person_id + "'");
    std::uniform_int_distribution<std::size_t> pick_clip(0, donors.size() - 1);
    const ManifestEntry& donor = *donors[pick_clip(rng)];
    const MotionSequence& m = clips.motion(donor);
    std::uniform_int_distribution<Eigen::Index> pick_frame(0, m.frames() - 1);
    const Eigen::Index frame = pick_frame(rng);
    return KeyframeChoice{donor.id, frame, m.frame(frame)};
}

LossAndGrad loss_and_gradients(const ParameterSet& params, const TrainContext& ctx,
                               std::span<const ManifestEntry* const> batch, std::mt19937_64& rng,
                               const std::vector<int>* timesteps) {
    if (batch.empty()) throw InputError("empty training batch");
    if (!ctx.clips || !ctx.text) throw ConfigError("training context needs a clip store and a text provider");
    if (timesteps && timesteps->size() != batch.size()) throw InputError("one timestep per batch item required");

    ag::Tape tape(true);
    ag::Binder bind(tape, params);
    std::uniform_int_distribution<int> pick_t(0, ctx.schedule.T - 1);

    LossAndGrad out;
    std::optional<ag::Var> sum;
    LossBreakdown acc;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const ManifestEntry& entry = *batch[i];
        const int t = timesteps ? (*timesteps)[i] : pick_t(rng);
        out.timesteps.push_back(t);
        const MotionSequence& m0 = ctx.clips->motion(entry);
        const MotionSequence noise(standard_normal(m0.frames(), m0.dims(), rng()), m0.frame_rate());
        const MotionSequence m_t = forward_sample(m0, t, noise, ctx.schedule);
        const KeyframeChoice key = select_keyframe(entry, ctx.manifest, *ctx.clips, rng);

        ag::Var audio = audio_projection_graph(bind, ctx.clips->aligned_audio(entry));
        ag::Var m_t_a = ag::add(tape.constant(m_t.data()), audio);
        ag::Var rep = instruction_graph(bind, ctx.text->embed(entry.instruction), entry.task);
        const PredictionVars pred = denoise_graph(bind, ctx.config, m_t_a, t, rep, entry.task,
                                                  tape.constant(key.keyframe.data()), entry.task);

        std::optional<AUVector> au;
        std::optional<Intensity> inten;
        if (entry.task == Task::emotion_talk) {
            au = entry.au;
            inten = entry.intensity;
        }
        const LossVars lv = loss_graph(pred, m0.data(), ctx.clips->pose(entry).data(), au, inten, ctx.weights);
        const LossBreakdown b = breakdown_of(lv, ctx.weights);
        acc.mse += b.mse;
        acc.pose += b.pose;
        acc.au += b.au;
        acc.inten += b.inten;
        sum = sum ? ag::add(*sum, lv.total) : lv.total;
    }

    const double n = static_cast<double>(batch.size());
    ag::Var mean = ag::scale(*sum, 1.0 / n);
    out.loss.mse = acc.mse / n;
    out.loss.pose = acc.pose / n;
    out.loss.au = acc.au / n;
    out.loss.inten = acc.inten / n;
    out.loss.total = combine_losses(out.loss.mse, out.loss.pose, out.loss.au, out.loss.inten, ctx.weights);

    if (!std::isfinite(out.loss.total)) {
        std::ostringstream msg;
        msg << "non-finite training loss; batch:";
        for (std::size_t i = 0; i < batch.size(); ++i) msg << " " << batch[i]->id << "@t=" << out.timesteps[i];
        throw NumericalError(msg.str());
    }
    tape.backward(mean);
    out.grads = bind.gradients();
    return out;
}

double adam_update(TrainState& state, const std::map<std::string, Matrix>& grads, const OptimizerConfig& cfg,
                   double lr) {
    double sq = 0.0;
    for (const auto& [name, g] : grads) sq += g.squaredNorm();
    const double norm = std::sqrt(sq);
    if (!std::isfinite(norm)) throw NumericalError("non-finite gradient norm");
    const double factor = (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) ? cfg.clip_norm / norm : 1.0;

    AdamState& adam = state.adam;
    ++adam.step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, adam.step);
    const double bc2 = 1.0 - std::pow(cfg.beta2, adam.step);
    for (const auto& [name, p] : state.params.entries()) {
        auto mit = adam.m.find(name);
        if (mit == adam.m.end()) {
            mit = adam.m.emplace(name, Matrix::Zero(p.rows(), p.cols())).first;
            adam.v.emplace(name, Matrix::Zero(p.rows(), p.cols()));
        }
        Matrix& m = mit->second;
        Matrix& v = adam.v.at(name);
        const auto git = grads.find(name);
        if (git != grads.end()) {
            const Matrix g = git->second * factor;
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
        } else {
            m *= cfg.beta1;
            v *= cfg.beta2;
        }
        Matrix& param = state.params.at(name);
        param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps);
    }
    return norm;
}

StepReport train_step(TrainState& state, const TrainContext& ctx, std::span<const ManifestEntry* const> batch,
                      std::mt19937_64& rng) {
    LossAndGrad lg = loss_and_gradients(state.params, ctx, batch, rng);
    StepReport report;
    report.loss = lg.loss;
    report.timesteps = std::move(lg.timesteps);
    report.lr = lr_at(state.adam.step + 1, ctx.optimizer);
    report.grad_norm = adam_update(state, lg.grads, ctx.optimizer, report.lr);
    return report;
}

LossBreakdown evaluate_loss(const ParameterSet& params, const TrainContext& ctx,
                            std::span<const ManifestEntry> entries, std::uint64_t seed, int draws) {
    if (entries.empty()) throw InputError("evaluate_loss: no entries");
    std::mt19937_64 rng(seed);
    LossBreakdown acc;
    int n = 0;
    for (int d = 0; d < draws; ++d)
        for (const auto& entry : entries) {
            const ManifestEntry* one[] = {&entry};
            const auto lg = loss_and_gradients(params, ctx, one, rng);
            acc.mse += lg.loss.mse;
            acc.pose += lg.loss.pose;
            acc.au += lg.loss.au;
            acc.inten += lg.loss.inten;
            ++n;
        }
    acc.mse /= n;
    acc.pose /= n;
    acc.au /= n;
    acc.inten /= n;
    acc.total = combine_losses(acc.mse, acc.pose, acc.au, acc.inten, ctx.weights);
    return acc;
}

namespace {

void write_row(std::ostream& out, int step, const StepReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", step, r.lr, r.loss.mse, r.loss.pose,
                  r.loss.au, r.loss.inten, r.loss.total, r.grad_norm);
    out << buf;
}

}  // namespace

TrainResult train(const ParameterSet& init, const TrainContext& ctx, const TrainOptions& options,
                  const std::map<std::string, std::string>& meta,
                  const std::function<void(int, const StepReport&)>& on_step) {
    ctx.weights.validate();
    ctx.optimizer.validate();
    if (options.steps < 0) throw ConfigError("steps must be >= 0");
    if (options.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (ctx.manifest.empty()) throw DataError("training manifest is empty");

    TrainResult result;
    result.state.params = init;
    std::mt19937_64 rng(options.seed);
    std::uniform_int_distribution<std::size_t> pick(0, ctx.manifest.size() - 1);

    std::ofstream csv;
    if (!options.out_dir.empty()) {
        std::filesystem::create_directories(options.out_dir);
        csv.open(options.out_dir / "metrics.csv");
        if (!csv) throw IoError("cannot write " + (options.out_dir / "metrics.csv").string());
        csv << kMetricsHeader << "\n";
    }
    auto save = [&](const std::filesystem::path& path, int step) {
        Checkpoint ckpt{ctx.config, meta, result.state.params};
        ckpt.meta["step"] = std::to_string(step);
        save_checkpoint(path, ckpt);
    };

    std::vector<const ManifestEntry*> batch(static_cast<std::size_t>(options.batch_size));
    for (int step = 1; step <= options.steps; ++step) {
        for (auto& slot : batch) slot = &ctx.manifest[pick(rng)];
        const StepReport report = train_step(result.state, ctx, batch, rng);
        result.last = report.loss;
        if (csv.is_open() && (step % std::max(1, options.log_every) == 0 || step == options.steps))
            write_row(csv, step, report);
        if (!options.out_dir.empty() && options.checkpoint_every > 0 && step % options.checkpoint_every == 0)
            save(options.out_dir / ("checkpoint_" + std::to_string(step) + ".bin"), step);
        if (on_step) on_step(step, report);
    }
    if (!options.out_dir.empty()) save(options.out_dir / "checkpoint.bin", options.steps);
    return result;
}

}  // namespace motiondiff
