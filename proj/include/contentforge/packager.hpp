#pragma once

#include <contentforge/byte_io.hpp>
#include <contentforge/content_model.hpp>
#include <contentforge/error.hpp>
#include <contentforge/zip.hpp>

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace contentforge {

inline const char* const default_metadata_path = "META-INF/BUNDLE.MF";

struct Placement {
    std::string archive_path;
    Bytes data;
};

struct InjectionPlan {
    Bytes template_archive;
    std::vector<Placement> placements;
    std::vector<std::pair<std::string, std::string>> metadata_updates;
    std::string metadata_path = default_metadata_path;
    bool deterministic = true;
};

enum class ArchiveMethod { stored, deflate };

struct ArchiveEntrySummary {
    std::string path;
    std::uint32_t uncompressed_size = 0;
    std::uint32_t crc32 = 0;
    ArchiveMethod method = ArchiveMethod::stored;

    bool operator==(const ArchiveEntrySummary&) const = default;
};

inline std::vector<ArchiveEntrySummary> list_entries(std::span<const std::uint8_t> archive)
{
    std::vector<ArchiveEntrySummary> out;
    for (const auto& e : zip::read(archive))
        out.push_back({e.path, e.uncompressed_size, e.crc,
                       e.method == zip::method_deflate ? ArchiveMethod::deflate : ArchiveMethod::stored});
    return out;
}

/// Decompressed payload of every file entry, CRC-checked.
inline std::map<std::string, Bytes> extract(std::span<const std::uint8_t> archive)
{
    std::map<std::string, Bytes> out;
    for (const auto& e : zip::read(archive))
        out[e.path] = zip::data(e);
    return out;
}

// --- "Key: Value" metadata manifest ------------------------------------------

/// Lines of a metadata manifest; lines that are not "Key: Value" pairs are
/// kept verbatim.
struct Metadata {
    struct Line {
        std::string key; // empty for verbatim lines
        std::string value;
    };
    std::vector<Line> lines;

    static Metadata parse(std::string_view text)
    {
        Metadata m;
        std::size_t start = 0;
        while (start < text.size()) {
            auto end = text.find('\n', start);
            if (end == std::string_view::npos)
                end = text.size();
            auto line = text.substr(start, end - start);
            if (!line.empty() && line.back() == '\r')
                line.remove_suffix(1);
            auto colon = line.find(": ");
            if (colon != std::string_view::npos && colon > 0 && line.front() != ' ')
                m.lines.push_back({std::string(line.substr(0, colon)), std::string(line.substr(colon + 2))});
            else
                m.lines.push_back({{}, std::string(line)});
            start = end + 1;
        }
        while (!m.lines.empty() && m.lines.back().key.empty() && m.lines.back().value.empty())
            m.lines.pop_back();
        return m;
    }

    std::optional<std::string> get(std::string_view key) const
    {
        for (const auto& l : lines)
            if (!l.key.empty() && l.key == key)
                return l.value;
        return std::nullopt;
    }

    void set(const std::string& key, const std::string& value)
    {
        for (auto& l : lines)
            if (l.key == key) {
                l.value = value;
                return;
            }
        lines.push_back({key, value});
    }

    std::string str() const
    {
        std::string out;
        for (const auto& l : lines)
            out += (l.key.empty() ? l.value : l.key + ": " + l.value) + "\n";
        return out;
    }
};

namespace detail {

inline void check_archive_path(const std::string& path)
{
    if (!is_safe_relative_path(path))
        throw Error(Errc::invalid_path, "archive path \"" + path + "\" must be relative, '/'-separated and free of '..'");
}

} // namespace detail

/// Injects files into a template archive and rewrites its metadata manifest.
///
/// Template entries that are not shadowed by a placement are copied with
/// their compressed payload untouched. In deterministic mode every entry is
/// stamped 1980-01-01 00:00, entries are sorted by path and new entries are
/// stored, so the output depends only on the plan.
inline Bytes inject(const InjectionPlan& plan)
{
    std::set<std::string> placed;
    for (const auto& p : plan.placements) {
        detail::check_archive_path(p.archive_path);
        if (!placed.insert(p.archive_path).second)
            throw Error(Errc::path_collision, "archive path \"" + p.archive_path + "\" is placed twice");
    }
    const bool update_metadata = !plan.metadata_updates.empty();
    if (update_metadata) {
        detail::check_archive_path(plan.metadata_path);
        if (placed.contains(plan.metadata_path))
            throw Error(Errc::path_collision, "placement \"" + plan.metadata_path + "\" collides with the metadata manifest");
    }

    auto template_entries = zip::read(plan.template_archive);
    auto stamp = plan.deterministic ? std::pair{zip::dos_time_midnight, zip::dos_date_1980} : zip::dos_now();

    std::vector<zip::Entry> out;
    std::optional<std::size_t> metadata_slot;
    Metadata metadata;
    std::set<std::string> seen;
    for (auto& e : template_entries) {
        if (placed.contains(e.path) || !seen.insert(e.path).second)
            continue;
        if (update_metadata && e.path == plan.metadata_path) {
            auto text = zip::data(e);
            metadata = Metadata::parse(to_string(text));
            metadata_slot = out.size();
        }
        out.push_back(std::move(e));
    }

    if (update_metadata) {
        for (const auto& [key, value] : plan.metadata_updates) {
            if (key.empty() || key.find(':') != std::string::npos || key.find('\n') != std::string::npos ||
                value.find('\n') != std::string::npos)
                throw Error(Errc::invalid_argument, "metadata key/value \"" + key + "\" is not a single-line pair");
            metadata.set(key, value);
        }
        auto entry = zip::make_entry(plan.metadata_path, to_bytes(metadata.str()), !plan.deterministic);
        entry.mod_time = stamp.first;
        entry.mod_date = stamp.second;
        if (metadata_slot)
            out[*metadata_slot] = std::move(entry);
        else
            out.push_back(std::move(entry));
    }

    for (const auto& p : plan.placements) {
        auto entry = zip::make_entry(p.archive_path, p.data, !plan.deterministic);
        entry.mod_time = stamp.first;
        entry.mod_date = stamp.second;
        out.push_back(std::move(entry));
    }

    if (plan.deterministic) {
        for (auto& e : out) {
            e.mod_time = zip::dos_time_midnight;
            e.mod_date = zip::dos_date_1980;
        }
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
    }
    return zip::write(out);
}

enum class InjectionFindingKind {
    malformed_archive,
    missing_placement,
    size_mismatch,
    crc_mismatch,
    missing_metadata,
    stale_key,
};

inline std::string_view to_string(InjectionFindingKind k)
{
    switch (k) {
    case InjectionFindingKind::malformed_archive: return "malformed_archive";
    case InjectionFindingKind::missing_placement: return "missing_placement";
    case InjectionFindingKind::size_mismatch: return "size_mismatch";
    case InjectionFindingKind::crc_mismatch: return "crc_mismatch";
    case InjectionFindingKind::missing_metadata: return "missing_metadata";
    case InjectionFindingKind::stale_key: return "stale_key";
    }
    return "?";
}

struct InjectionFinding {
    InjectionFindingKind kind;
    std::string path;
    std::string detail;
};

/// Checks that an archive carries every placement of a plan byte-for-byte
/// and every metadata update with its new value.
inline std::vector<InjectionFinding> verify_injection(std::span<const std::uint8_t> archive, const InjectionPlan& plan)
{
    std::vector<InjectionFinding> findings;
    std::vector<zip::Entry> entries;
    try {
        entries = zip::read(archive);
    } catch (const Error& e) {
        findings.push_back({InjectionFindingKind::malformed_archive, {}, e.what()});
        return findings;
    }
    auto find = [&](const std::string& path) -> const zip::Entry* {
        for (const auto& e : entries)
            if (e.path == path)
                return &e;
        return nullptr;
    };

    for (const auto& p : plan.placements) {
        const auto* e = find(p.archive_path);
        if (!e) {
            findings.push_back({InjectionFindingKind::missing_placement, p.archive_path, "entry absent"});
            continue;
        }
        if (e->uncompressed_size != p.data.size()) {
            findings.push_back({InjectionFindingKind::size_mismatch, p.archive_path,
                                std::to_string(e->uncompressed_size) + " bytes, expected " + std::to_string(p.data.size())});
            continue;
        }
        auto expected = zip::crc32(p.data);
        std::optional<std::uint32_t> actual;
        try {
            actual = zip::crc32(zip::decompress(*e));
        } catch (const Error&) {
        }
        if (e->crc != expected || actual != expected)
            findings.push_back({InjectionFindingKind::crc_mismatch, p.archive_path, "payload CRC differs from the planned bytes"});
    }

    if (!plan.metadata_updates.empty()) {
        const auto* e = find(plan.metadata_path);
        std::optional<Metadata> md;
        if (e) {
            try {
                md = Metadata::parse(to_string(zip::data(*e)));
            } catch (const Error& err) {
                findings.push_back({InjectionFindingKind::crc_mismatch, plan.metadata_path, err.what()});
            }
        } else {
            findings.push_back({InjectionFindingKind::missing_metadata, plan.metadata_path, "metadata manifest absent"});
        }
        if (md) {
            // Later updates of the same key win.
            std::map<std::string, std::string> final_values;
            for (const auto& [k, v] : plan.metadata_updates)
                final_values[k] = v;
            for (const auto& [k, v] : final_values) {
                auto got = md->get(k);
                if (got != v)
                    findings.push_back({InjectionFindingKind::stale_key, plan.metadata_path,
                                        "key \"" + k + "\" holds \"" + got.value_or("<absent>") + "\", expected \"" + v + "\""});
            }
        }
    }
    return findings;
}

} // namespace contentforge
