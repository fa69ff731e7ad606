#include "motiondiff/manifest.hpp"

#include "motiondiff/errors.hpp"
#include "motiondiff/manifest_json.hpp"

#include <fstream>
#include <sstream>

namespace motiondiff {

namespace {

[[noreturn]] void invalid(const std::string& id, std::string_view field, const std::string& why) {
    throw ValidationError("entry '" + id + "': field '" + std::string(field) + "' " + why);
}

template <typename T>
T field_as(const nlohmann::json& j, const char* key, const std::string& id) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        invalid(id, key, "is missing or has the wrong type");
    }
}

std::optional<std::string> optional_string(const nlohmann::json& j, const char* key,
                                           const std::string& id) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return field_as<std::string>(j, key, id);
}

}  // namespace

void validate(const ManifestEntry& e) {
    if (e.id.empty()) throw ValidationError("entry with empty 'id'");
    if (e.person_id.empty()) invalid(e.id, "person_id", "must be nonempty");
    if (e.motion_path.empty()) invalid(e.id, "motion_path", "must be nonempty");
    if (e.n_frames < 1) invalid(e.id, "n_frames", "must be >= 1");
    if (e.task == Task::emotion_talk) {
        if (!e.audio_path) invalid(e.id, "audio_path", "is required for emotion_talk");
        if (!e.emotion) invalid(e.id, "emotion", "is required for emotion_talk");
        if (!e.intensity) invalid(e.id, "intensity", "is required for emotion_talk");
        if (!e.au) invalid(e.id, "au", "is required for emotion_talk");
    } else {
        if (e.instruction.empty()) invalid(e.id, "instruction", "is required for motion_control");
        if (e.audio_path) invalid(e.id, "audio_path", "must be absent for motion_control");
    }
}

ManifestEntry entry_from_json(const nlohmann::json& j, std::size_t line_no) {
    if (!j.is_object()) throw ParseError("line " + std::to_string(line_no) + ": expected a JSON object");
    ManifestEntry e;
    if (!j.contains("id") || !j.at("id").is_string())
        throw ValidationError("line " + std::to_string(line_no) + ": field 'id' is missing");
    e.id = j.at("id").get<std::string>();
    e.person_id = field_as<std::string>(j, "person_id", e.id);
    e.task = parse_task(field_as<std::string>(j, "task", e.id));
    e.motion_path = field_as<std::string>(j, "motion_path", e.id);
    e.pose_path = optional_string(j, "pose_path", e.id);
    e.audio_path = optional_string(j, "audio_path", e.id);
    if (j.contains("instruction") && !j.at("instruction").is_null())
        e.instruction = field_as<std::string>(j, "instruction", e.id);
    if (auto name = optional_string(j, "emotion", e.id)) {
        auto emo = try_parse_emotion(*name);
        if (!emo) invalid(e.id, "emotion", "has unknown value '" + *name + "'");
        e.emotion = *emo;
    }
    if (j.contains("intensity") && !j.at("intensity").is_null()) {
        const int level = field_as<int>(j, "intensity", e.id);
        if (level < 1 || level > 3) invalid(e.id, "intensity", "must be 1, 2 or 3, got " + std::to_string(level));
        e.intensity = Intensity(level);
    }
    if (j.contains("au") && !j.at("au").is_null()) {
        const auto bits = field_as<std::vector<int>>(j, "au", e.id);
        try {
            e.au = AUVector::from_bits(bits);
        } catch (const ValidationError& err) {
            invalid(e.id, "au", err.what());
        }
    }
    e.n_frames = field_as<int>(j, "n_frames", e.id);
    return e;
}

nlohmann::ordered_json entry_to_json(const ManifestEntry& e) {
    nlohmann::ordered_json j;
    j["id"] = e.id;
    j["person_id"] = e.person_id;
    j["task"] = std::string(to_string(e.task));
    j["motion_path"] = e.motion_path;
    if (e.pose_path) j["pose_path"] = *e.pose_path;
    if (e.audio_path) j["audio_path"] = *e.audio_path;
    j["instruction"] = e.instruction;
    if (e.emotion) j["emotion"] = std::string(to_string(*e.emotion));
    if (e.intensity) j["intensity"] = e.intensity->level();
    if (e.au) j["au"] = e.au->to_bits();
    j["n_frames"] = e.n_frames;
    return j;
}

ManifestEntry parse_manifest_line(std::string_view line, std::size_t line_no) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& err) {
        throw ParseError("line " + std::to_string(line_no) + ": " + err.what());
    }
    auto entry = entry_from_json(j, line_no);
    validate(entry);
    return entry;
}

std::string to_json_line(const ManifestEntry& entry) { return entry_to_json(entry).dump(); }

std::vector<ManifestEntry> read_manifest(std::istream& in) {
    std::vector<ManifestEntry> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(parse_manifest_line(line, line_no));
    }
    return out;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    return read_manifest(in);
}

void write_manifest(std::ostream& out, std::span<const ManifestEntry> entries) {
    for (const auto& e : entries) out << to_json_line(e) << '\n';
}

void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest " + path.string());
    write_manifest(out, entries);
}

std::filesystem::path resolve_ref(const std::filesystem::path& base_dir, const std::string& ref) {
    std::filesystem::path p(ref);
    return p.is_absolute() ? p : base_dir / p;
}

}  // namespace motiondiff
