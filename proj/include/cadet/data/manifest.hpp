#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace cadet {

/// One manifest row. `label` is 0 for real, 1 for fake; a real sample always
/// has artifact_id 0 and a fake never does.
struct SampleRecord {
    std::string path;
    int label = 0;
    std::int64_t identity_id = 0;
    std::int64_t background_id = 0;
    std::int64_t artifact_id = 0;
    std::string split = "train";

    bool fake() const { return label == 1; }
    friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct DatasetManifest {
    std::vector<SampleRecord> records;

    std::size_t size() const { return records.size(); }
    /// Row indices belonging to `split`.
    std::vector<std::int64_t> split_indices(const std::string& split) const;
    /// Checks the label/artifact invariant and id ranges; throws ParseError naming the row.
    void validate() const;

    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

inline constexpr const char* kManifestHeader = "path,label,identity_id,background_id,artifact_id,split";

void write_manifest(std::ostream& out, const DatasetManifest& manifest);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Parses a CSV manifest. Columns may appear in any order but all six must be
/// present; errors carry the 1-based line number.
DatasetManifest read_manifest(std::istream& in);
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace cadet
