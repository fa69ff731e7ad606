#pragma once

#include "motiondiff/core.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace motiondiff {

// One clip record of a JSON Lines manifest. File references are relative to
// the manifest's directory unless absolute.
struct ManifestEntry {
    std::string id;
    std::string person_id;
    Task task = Task::emotion_talk;
    std::string motion_path;
    std::optional<std::string> pose_path;
    std::optional<std::string> audio_path;
    std::string instruction;
    std::optional<Emotion> emotion;
    std::optional<Intensity> intensity;
    std::optional<AUVector> au;
    int n_frames = 0;
};

// Throws ValidationError naming the entry id and the offending field.
void validate(const ManifestEntry& entry);

// Parses a single manifest line. Throws ParseError (with line number) on
// malformed JSON and ValidationError on invariant violations.
ManifestEntry parse_manifest_line(std::string_view line, std::size_t line_no);
std::string to_json_line(const ManifestEntry& entry);

std::vector<ManifestEntry> read_manifest(std::istream& in);
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

void write_manifest(std::ostream& out, std::span<const ManifestEntry> entries);
void write_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries);

std::filesystem::path resolve_ref(const std::filesystem::path& base_dir, const std::string& ref);

}  // namespace motiondiff
