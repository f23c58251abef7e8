#pragma once

#include <contentforge/byte_io.hpp>
#include <contentforge/content_model.hpp>
#include <contentforge/error.hpp>
#include <contentforge/text_shaper.hpp>
#include <contentforge/utf8.hpp>

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace contentforge {

// Wire layouts (all integers big-endian):
//
//   index.bin   "MCIX" u16 version u32 page_count
//               { u32 page_id u32 parent_id u16 child_count string16 title
//                 u64 content_offset u32 content_length } * page_count
//   content.bin "MCCT" u16 version u32 page_count  payload...
//               page region: u16 record_count record*
//               record: u8 kind, then
//                 text:              u8 color_index u8 font_id string32 text
//                 image/audio/video: string16 asset_ref string16 caption
//                 phone/email/link:  string16 value string16 label
//   theme.bin   "MCTH" u16 version u8 flags rgb*4 u8 palette_count rgb*n
//               string16 splash_image string16 background_image
//               string16 background_music
//
// Offsets in the index are relative to the start of the content payload.

inline constexpr std::uint16_t bundle_version = 1;
inline constexpr std::size_t content_header_size = 10; // magic + version + page_count

inline constexpr std::uint8_t theme_flag_splash = 1u << 0;
inline constexpr std::uint8_t theme_flag_music = 1u << 1;
inline constexpr std::uint8_t theme_flag_background = 1u << 2;

using ContentRecord = ContentItem;
using AssetMap = std::map<std::string, Bytes>;

struct IndexEntry {
    std::uint32_t page_id = 0;
    std::uint32_t parent_id = root_parent;
    std::uint16_t child_count = 0;
    std::string title;
    std::uint64_t content_offset = 0;
    std::uint32_t content_length = 0;

    bool operator==(const IndexEntry&) const = default;
};

struct BundleIndex {
    std::uint16_t version = bundle_version;
    std::vector<IndexEntry> entries;

    const IndexEntry* find(std::uint32_t page_id) const
    {
        for (const auto& e : entries)
            if (e.page_id == page_id)
                return &e;
        return nullptr;
    }

    std::optional<std::size_t> position(std::uint32_t page_id) const
    {
        for (std::size_t i = 0; i < entries.size(); ++i)
            if (entries[i].page_id == page_id)
                return i;
        return std::nullopt;
    }

    bool operator==(const BundleIndex&) const = default;
};

struct BundleFiles {
    Bytes index_bytes;
    Bytes content_bytes;
    Bytes theme_bytes;
    Bytes font_bytes;
    AssetMap assets;

    bool operator==(const BundleFiles&) const = default;
};

// --- records ----------------------------------------------------------------

inline void encode_record(ByteWriter& w, const ContentRecord& rec)
{
    w.u8(static_cast<std::uint8_t>(rec.kind));
    if (rec.kind == ContentKind::text) {
        w.u8(rec.color_index);
        w.u8(rec.font_id);
        w.string32(rec.body);
    } else {
        w.string16(rec.body);
        w.string16(rec.caption);
    }
}

inline ContentRecord decode_record(ByteReader& r)
{
    auto tag = r.u8();
    if (tag > max_content_tag)
        throw Error(Errc::record_decode, "unknown content kind tag " + std::to_string(tag));
    auto kind = static_cast<ContentKind>(tag);
    if (kind == ContentKind::text) {
        auto color = r.u8();
        auto font = r.u8();
        return ContentItem::text(r.string32(), color, font);
    }
    auto body = r.string16();
    auto caption = r.string16();
    return {kind, std::move(body), std::move(caption), 0, 0};
}

inline Bytes encode_page_region(const std::vector<ContentRecord>& records)
{
    if (records.size() > 0xFFFF)
        throw Error(Errc::invalid_argument, "a page holds at most 65535 records");
    ByteWriter w;
    w.u16(static_cast<std::uint16_t>(records.size()));
    for (const auto& rec : records)
        encode_record(w, rec);
    return std::move(w).bytes();
}

/// Decodes one page region; the records must consume it exactly.
inline std::vector<ContentRecord> decode_page_region(std::span<const std::uint8_t> region, std::uint32_t page_id)
{
    ByteReader r(region);
    std::vector<ContentRecord> records;
    try {
        auto count = r.u16();
        records.reserve(count);
        for (std::uint16_t i = 0; i < count; ++i)
            records.push_back(decode_record(r));
    } catch (const Error& e) {
        if (e.code() == Errc::truncated)
            throw Error(Errc::region_length_mismatch,
                        "page " + std::to_string(page_id) + ": records overrun the region (" + e.what() + ")");
        throw Error(Errc::record_decode, "page " + std::to_string(page_id) + ": " + e.what());
    }
    if (!r.at_end())
        throw Error(Errc::region_length_mismatch, "page " + std::to_string(page_id) + ": " +
                                                      std::to_string(r.remaining()) + " unused bytes in region");
    return records;
}

// --- index ------------------------------------------------------------------

inline Bytes encode_index(const BundleIndex& index)
{
    ByteWriter w;
    w.raw("MCIX");
    w.u16(index.version);
    w.u32(static_cast<std::uint32_t>(index.entries.size()));
    for (const auto& e : index.entries) {
        w.u32(e.page_id);
        w.u32(e.parent_id);
        w.u16(e.child_count);
        w.string16(e.title);
        w.u64(e.content_offset);
        w.u32(e.content_length);
    }
    return std::move(w).bytes();
}

inline BundleIndex decode_index(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 4 || to_string(bytes.subspan(0, 4)) != "MCIX")
        throw Error(Errc::bad_magic, "index file does not start with MCIX");
    ByteReader r(bytes);
    r.raw(4);
    BundleIndex index;
    index.version = r.u16();
    if (index.version != bundle_version)
        throw Error(Errc::unsupported_version, "index version " + std::to_string(index.version));
    auto count = r.u32();
    // Each entry takes at least 24 bytes; reject absurd counts before reserving.
    if (count > r.remaining() / 24)
        throw Error(Errc::truncated, "index claims " + std::to_string(count) + " entries but holds " +
                                         std::to_string(r.remaining()) + " bytes");
    index.entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        IndexEntry e;
        e.page_id = r.u32();
        e.parent_id = r.u32();
        e.child_count = r.u16();
        e.title = r.string16();
        e.content_offset = r.u64();
        e.content_length = r.u32();
        index.entries.push_back(std::move(e));
    }
    if (!r.at_end())
        throw Error(Errc::invalid_index, std::to_string(r.remaining()) + " trailing bytes after index entries");

    const auto& es = index.entries;
    for (std::size_t i = 1; i < es.size(); ++i)
        if (es[i].content_offset <= es[i - 1].content_offset)
            throw Error(Errc::non_monotone_offsets, "entry " + std::to_string(i) + " offset " +
                                                        std::to_string(es[i].content_offset) + " does not exceed " +
                                                        std::to_string(es[i - 1].content_offset));
    if (!es.empty() && es.front().content_offset != 0)
        throw Error(Errc::non_contiguous_offsets, "first entry does not start at offset 0");
    for (std::size_t i = 1; i < es.size(); ++i)
        if (es[i - 1].content_offset + es[i - 1].content_length != es[i].content_offset)
            throw Error(Errc::non_contiguous_offsets, "entry " + std::to_string(i - 1) + " region does not end where entry " +
                                                          std::to_string(i) + " begins");

    // Preorder: every parent precedes its children and child counts agree.
    std::unordered_map<std::uint32_t, std::uint16_t> children_seen;
    std::vector<std::uint32_t> ancestry; // path from a root to the previous entry
    for (std::size_t i = 0; i < es.size(); ++i) {
        const auto& e = es[i];
        if (e.page_id == root_parent || children_seen.contains(e.page_id))
            throw Error(Errc::invalid_index, "entry " + std::to_string(i) + " repeats page id " + std::to_string(e.page_id));
        if (e.parent_id == root_parent) {
            ancestry.clear();
        } else {
            while (!ancestry.empty() && ancestry.back() != e.parent_id)
                ancestry.pop_back();
            if (ancestry.empty())
                throw Error(Errc::invalid_index, "entry " + std::to_string(i) + " (page " + std::to_string(e.page_id) +
                                                     ") does not follow its parent in preorder");
            ++children_seen[e.parent_id];
        }
        children_seen.emplace(e.page_id, 0);
        ancestry.push_back(e.page_id);
    }
    for (std::size_t i = 0; i < es.size(); ++i)
        if (children_seen[es[i].page_id] != es[i].child_count)
            throw Error(Errc::invalid_index, "page " + std::to_string(es[i].page_id) + " declares " +
                                                 std::to_string(es[i].child_count) + " children but has " +
                                                 std::to_string(children_seen[es[i].page_id]));
    return index;
}

// --- content ------------------------------------------------------------------

struct ContentHeader {
    std::uint16_t version = bundle_version;
    std::uint32_t page_count = 0;
};

inline ContentHeader decode_content_header(std::span<const std::uint8_t> header)
{
    if (header.size() < content_header_size || to_string(header.subspan(0, 4)) != "MCCT")
        throw Error(Errc::bad_magic, "content file does not start with MCCT");
    ByteReader r(header.subspan(4));
    ContentHeader h;
    h.version = r.u16();
    if (h.version != bundle_version)
        throw Error(Errc::unsupported_version, "content version " + std::to_string(h.version));
    h.page_count = r.u32();
    return h;
}

/// Reads one page from a source positioned at the start of the content
/// file. Only the header and the page's own region are read; everything in
/// between is skipped.
inline std::vector<ContentRecord> read_page(ByteSource& reader, const BundleIndex& index, std::uint32_t page_id)
{
    const auto* entry = index.find(page_id);
    if (!entry)
        throw Error(Errc::unknown_page, "page " + std::to_string(page_id) + " is not in the index");
    auto header = decode_content_header(read_exact(reader, content_header_size));
    if (header.page_count != index.entries.size())
        throw Error(Errc::invalid_index, "content file holds " + std::to_string(header.page_count) +
                                             " pages, index lists " + std::to_string(index.entries.size()));
    skip_exact(reader, entry->content_offset);
    Bytes region;
    try {
        region = read_exact(reader, entry->content_length);
    } catch (const Error& e) {
        throw Error(Errc::region_length_mismatch, "page " + std::to_string(page_id) + ": " + e.what());
    }
    return decode_page_region(region, page_id);
}

// --- theme ------------------------------------------------------------------

inline Bytes encode_theme(const Theme& theme)
{
    if (theme.palette.empty() || theme.palette.size() > 255)
        throw Error(Errc::invalid_theme, "palette must hold 1..255 colors");
    if (theme.splash_enabled && !theme.splash_image)
        throw Error(Errc::invalid_theme, "splash enabled without a splash image");
    std::uint8_t flags = 0;
    if (theme.splash_enabled)
        flags |= theme_flag_splash;
    if (theme.background_music)
        flags |= theme_flag_music;
    if (theme.background_image)
        flags |= theme_flag_background;
    ByteWriter w;
    w.raw("MCTH");
    w.u16(bundle_version);
    w.u8(flags);
    for (auto c : {theme.background, theme.text, theme.highlight, theme.header}) {
        w.u8(c.r);
        w.u8(c.g);
        w.u8(c.b);
    }
    w.u8(static_cast<std::uint8_t>(theme.palette.size()));
    for (auto c : theme.palette) {
        w.u8(c.r);
        w.u8(c.g);
        w.u8(c.b);
    }
    // A splash image is only carried while the splash screen is enabled.
    w.string16(theme.splash_enabled ? *theme.splash_image : std::string{});
    w.string16(theme.background_image.value_or(""));
    w.string16(theme.background_music.value_or(""));
    return std::move(w).bytes();
}

inline Theme decode_theme(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 4 || to_string(bytes.subspan(0, 4)) != "MCTH")
        throw Error(Errc::bad_magic, "theme file does not start with MCTH");
    ByteReader r(bytes);
    r.raw(4);
    auto version = r.u16();
    if (version != bundle_version)
        throw Error(Errc::unsupported_version, "theme version " + std::to_string(version));
    auto flags = r.u8();
    if (flags & ~(theme_flag_splash | theme_flag_music | theme_flag_background))
        throw Error(Errc::invalid_theme, "unknown theme flag bits");
    auto rgb = [&r] {
        Rgb c;
        c.r = r.u8();
        c.g = r.u8();
        c.b = r.u8();
        return c;
    };
    Theme t;
    t.background = rgb();
    t.text = rgb();
    t.highlight = rgb();
    t.header = rgb();
    auto count = r.u8();
    if (count == 0)
        throw Error(Errc::invalid_theme, "palette_count is 0");
    t.palette.clear();
    for (int i = 0; i < count; ++i)
        t.palette.push_back(rgb());
    auto optional_ref = [&](std::uint8_t flag, const char* what) -> std::optional<std::string> {
        auto s = r.string16();
        bool set = flags & flag;
        if (set && s.empty())
            throw Error(Errc::invalid_theme, std::string(what) + " flag set without a reference");
        if (!set && !s.empty())
            throw Error(Errc::invalid_theme, std::string(what) + " reference present with its flag clear");
        return set ? std::optional(std::move(s)) : std::nullopt;
    };
    t.splash_enabled = flags & theme_flag_splash;
    t.splash_image = optional_ref(theme_flag_splash, "splash");
    t.background_image = optional_ref(theme_flag_background, "background image");
    t.background_music = optional_ref(theme_flag_music, "background music");
    if (!r.at_end())
        throw Error(Errc::invalid_theme, "trailing bytes after theme");
    return t;
}

// --- whole bundle -------------------------------------------------------------

struct CoverageGap {
    char32_t codepoint;
    std::uint32_t page_id;
};

/// Code points in titles and text items that the atlas has no glyph for.
/// Spaces are laid out by width and never need a glyph.
inline std::vector<CoverageGap> coverage_gaps(const ProjectManifest& manifest, const GlyphAtlas& atlas)
{
    std::vector<CoverageGap> gaps;
    std::set<std::pair<std::uint32_t, char32_t>> reported;
    auto scan = [&](std::string_view s, std::uint32_t page_id) {
        for (char32_t cp : utf8::decode(s)) {
            if (cp == U' ' || atlas.covers(cp))
                continue;
            if (is_transparent_mark(cp))
                continue; // marks are dropped when absent
            if (reported.emplace(page_id, cp).second)
                gaps.push_back({cp, page_id});
        }
    };
    for (const auto& flat : flatten(manifest)) {
        scan(flat.page->title, flat.page->id);
        for (const auto& item : flat.page->items)
            if (item.kind == ContentKind::text)
                scan(item.body, flat.page->id);
    }
    return gaps;
}

inline bool has_replacement_glyph(const GlyphAtlas& atlas)
{
    const auto& g = atlas.replacement;
    return g.codepoint == replacement_codepoint && g.advance > 0 && g.bitmap.size() == g.expected_bitmap_size();
}

/// Serializes a validated manifest into the four bundle files. Output is a
/// pure function of the inputs.
inline BundleFiles encode_bundle(const ProjectManifest& manifest, const GlyphAtlas& atlas, const AssetMap& assets)
{
    if (!has_replacement_glyph(atlas)) {
        auto gaps = coverage_gaps(manifest, atlas);
        if (!gaps.empty())
            throw Error(Errc::unencodable_codepoint,
                        "code point U+" + std::to_string(static_cast<std::uint32_t>(gaps.front().codepoint)) +
                            " on page " + std::to_string(gaps.front().page_id) +
                            " has no glyph and the atlas has no replacement glyph");
    }

    auto pages = flatten(manifest);
    if (pages.size() > std::numeric_limits<std::uint32_t>::max())
        throw Error(Errc::oversize, "too many pages");

    BundleIndex index;
    ByteWriter content;
    content.raw("MCCT");
    content.u16(bundle_version);
    content.u32(static_cast<std::uint32_t>(pages.size()));

    std::uint64_t offset = 0;
    for (const auto& flat : pages) {
        auto region = encode_page_region(flat.page->items);
        if (region.size() > std::numeric_limits<std::uint32_t>::max())
            throw Error(Errc::oversize, "page " + std::to_string(flat.page->id) + " exceeds 4 GiB");
        if (flat.page->children.size() > 0xFFFF)
            throw Error(Errc::oversize, "page " + std::to_string(flat.page->id) + " has more than 65535 children");
        IndexEntry e;
        e.page_id = flat.page->id;
        e.parent_id = flat.parent_id;
        e.child_count = static_cast<std::uint16_t>(flat.page->children.size());
        e.title = flat.page->title;
        e.content_offset = offset;
        e.content_length = static_cast<std::uint32_t>(region.size());
        if (offset > std::numeric_limits<std::uint64_t>::max() - region.size())
            throw Error(Errc::offset_overflow, "content offset overflows 64 bits");
        offset += region.size();
        content.raw(region);
        index.entries.push_back(std::move(e));
    }

    BundleFiles files;
    files.index_bytes = encode_index(index);
    files.content_bytes = std::move(content).bytes();
    files.theme_bytes = encode_theme(manifest.theme);
    files.font_bytes = encode_font(atlas);
    files.assets = assets;
    return files;
}

enum class BundleFindingKind {
    bad_file,           // magic, version or structural decode failure of a whole file
    version_mismatch,
    page_count_mismatch,
    region_mismatch,
    payload_size_mismatch,
    missing_asset,
};

inline std::string_view to_string(BundleFindingKind k)
{
    switch (k) {
    case BundleFindingKind::bad_file: return "bad_file";
    case BundleFindingKind::version_mismatch: return "version_mismatch";
    case BundleFindingKind::page_count_mismatch: return "page_count_mismatch";
    case BundleFindingKind::region_mismatch: return "region_mismatch";
    case BundleFindingKind::payload_size_mismatch: return "payload_size_mismatch";
    case BundleFindingKind::missing_asset: return "missing_asset";
    }
    return "?";
}

struct BundleFinding {
    BundleFindingKind kind;
    std::string file;
    std::optional<std::uint32_t> page_id;
    std::string detail;
};

using VerificationReport = std::vector<BundleFinding>;

inline std::string describe(const BundleFinding& f)
{
    std::string s = std::string(to_string(f.kind)) + " [" + f.file + "]";
    if (f.page_id)
        s += " page=" + std::to_string(*f.page_id);
    return s + ": " + f.detail;
}

namespace detail {

inline std::optional<std::uint16_t> peek_version(std::span<const std::uint8_t> b)
{
    if (b.size() < 6)
        return std::nullopt;
    return static_cast<std::uint16_t>((b[4] << 8) | b[5]);
}

} // namespace detail

inline VerificationReport verify_bundle(const BundleFiles& files)
{
    VerificationReport report;
    std::set<std::string> referenced;

    auto versions = std::vector<std::pair<std::string, std::optional<std::uint16_t>>>{
        {"index.bin", detail::peek_version(files.index_bytes)},
        {"content.bin", detail::peek_version(files.content_bytes)},
        {"theme.bin", detail::peek_version(files.theme_bytes)},
        {"font.bin", detail::peek_version(files.font_bytes)},
    };
    for (const auto& [name, v] : versions)
        if (v && versions.front().second && *v != *versions.front().second)
            report.push_back({BundleFindingKind::version_mismatch, name, {},
                              "version " + std::to_string(*v) + " differs from index version " +
                                  std::to_string(*versions.front().second)});

    std::optional<BundleIndex> index;
    try {
        index = decode_index(files.index_bytes);
    } catch (const Error& e) {
        report.push_back({BundleFindingKind::bad_file, "index.bin", {}, e.what()});
    }

    try {
        auto theme = decode_theme(files.theme_bytes);
        for (const auto* ref : {&theme.splash_image, &theme.background_image, &theme.background_music})
            if (*ref)
                referenced.insert(**ref);
    } catch (const Error& e) {
        report.push_back({BundleFindingKind::bad_file, "theme.bin", {}, e.what()});
    }

    try {
        decode_font(files.font_bytes);
    } catch (const Error& e) {
        report.push_back({BundleFindingKind::bad_file, "font.bin", {}, e.what()});
    }

    std::span<const std::uint8_t> content(files.content_bytes);
    std::optional<ContentHeader> header;
    try {
        header = decode_content_header(content);
    } catch (const Error& e) {
        report.push_back({BundleFindingKind::bad_file, "content.bin", {}, e.what()});
    }

    if (index && header) {
        if (header->page_count != index->entries.size())
            report.push_back({BundleFindingKind::page_count_mismatch, "content.bin", {},
                              "content header lists " + std::to_string(header->page_count) + " pages, index lists " +
                                  std::to_string(index->entries.size())});
        auto payload = content.subspan(content_header_size);
        bool regions_ok = true;
        std::uint64_t total = 0;
        for (const auto& e : index->entries) {
            total += e.content_length;
            if (e.content_offset + e.content_length > payload.size()) {
                regions_ok = false;
                report.push_back({BundleFindingKind::region_mismatch, "content.bin", e.page_id,
                                  "region [" + std::to_string(e.content_offset) + ", +" +
                                      std::to_string(e.content_length) + ") extends past the payload end " +
                                      std::to_string(payload.size())});
                continue;
            }
            try {
                auto records = decode_page_region(
                    payload.subspan(static_cast<std::size_t>(e.content_offset), e.content_length), e.page_id);
                for (const auto& rec : records)
                    if (is_media(rec.kind))
                        referenced.insert(rec.body);
            } catch (const Error& err) {
                regions_ok = false;
                report.push_back({BundleFindingKind::region_mismatch, "content.bin", e.page_id, err.what()});
            }
        }
        if (regions_ok && total != payload.size())
            report.push_back({BundleFindingKind::payload_size_mismatch, "content.bin", {},
                              "index covers " + std::to_string(total) + " bytes, payload holds " +
                                  std::to_string(payload.size())});
    }

    for (const auto& ref : referenced)
        if (!files.assets.contains(ref))
            report.push_back({BundleFindingKind::missing_asset, "assets", {}, "asset \"" + ref + "\" is referenced but absent"});
    return report;
}

} // namespace contentforge
