#include "cadet/data/manifest.hpp"

#include "cadet/error.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace cadet {

std::vector<std::int64_t> DatasetManifest::split_indices(const std::string& split) const
{
    std::vector<std::int64_t> out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].split == split) out.push_back(static_cast<std::int64_t>(i));
    }
    return out;
}

void DatasetManifest::validate() const
{
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto line = i + 2;  // header is line 1
        if (r.label != 0 && r.label != 1) throw ParseError("label must be 0 or 1", line);
        if ((r.label == 0) != (r.artifact_id == 0)) {
            throw ParseError("real samples must have artifact_id 0 and fakes a nonzero artifact_id", line);
        }
        if (r.identity_id < 0 || r.background_id < 0 || r.artifact_id < 0) {
            throw ParseError("ids must be non-negative", line);
        }
        if (r.path.empty()) throw ParseError("empty path", line);
    }
}

void write_manifest(std::ostream& out, const DatasetManifest& manifest)
{
    out << kManifestHeader << '\n';
    for (const auto& r : manifest.records) {
        if (r.path.find_first_of(",\n\r") != std::string::npos || r.split.find_first_of(",\n\r") != std::string::npos) {
            throw UserError("manifest fields may not contain commas or newlines: " + r.path);
        }
        out << r.path << ',' << r.label << ',' << r.identity_id << ',' << r.background_id << ',' << r.artifact_id
            << ',' << r.split << '\n';
    }
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw UserError("cannot write manifest: " + path.string());
    write_manifest(out, manifest);
}

namespace {
std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::int64_t parse_int(const std::string& s, const char* column, std::size_t line)
{
    std::int64_t v = 0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw ParseError(std::string("column '") + column + "': not an integer: '" + s + "'", line);
    }
    return v;
}
}  // namespace

DatasetManifest read_manifest(std::istream& in)
{
    static constexpr std::array<const char*, 6> kColumns{"path",          "label",       "identity_id",
                                                         "background_id", "artifact_id", "split"};
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty manifest", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    std::array<std::size_t, 6> idx{};
    for (std::size_t k = 0; k < kColumns.size(); ++k) {
        const auto it = col.find(kColumns[k]);
        if (it == col.end()) throw ParseError(std::string("missing column '") + kColumns[k] + "'", 1);
        idx[k] = it->second;
    }

    DatasetManifest m;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                                 std::to_string(cells.size()),
                             line_no);
        }
        SampleRecord r;
        r.path = cells[idx[0]];
        r.label = static_cast<int>(parse_int(cells[idx[1]], "label", line_no));
        r.identity_id = parse_int(cells[idx[2]], "identity_id", line_no);
        r.background_id = parse_int(cells[idx[3]], "background_id", line_no);
        r.artifact_id = parse_int(cells[idx[4]], "artifact_id", line_no);
        r.split = cells[idx[5]];
        if (r.label != 0 && r.label != 1) throw ParseError("label must be 0 or 1", line_no);
        if ((r.label == 0) != (r.artifact_id == 0)) {
            throw ParseError("real samples must have artifact_id 0 and fakes a nonzero artifact_id", line_no);
        }
        if (r.path.empty()) throw ParseError("empty path", line_no);
        m.records.push_back(std::move(r));
    }
    return m;
}

DatasetManifest read_manifest(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw UserError("cannot open manifest: " + path.string());
    try {
        return read_manifest(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), 0);
    }
}

}  // namespace cadet
