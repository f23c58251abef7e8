#pragma once

#include <contentforge/error.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace contentforge {

/// Content item kinds. The numeric values are the wire tags and never change.
enum class ContentKind : std::uint8_t {
    text = 0,
    image = 1,
    audio = 2,
    video = 3, // also covers animations
    phone = 4,
    email = 5,
    weblink = 6,
};

inline constexpr std::uint8_t max_content_tag = 6;

inline constexpr bool is_media(ContentKind k)
{
    return k == ContentKind::image || k == ContentKind::audio || k == ContentKind::video;
}

inline constexpr bool is_contact(ContentKind k)
{
    return k == ContentKind::phone || k == ContentKind::email || k == ContentKind::weblink;
}

inline std::string_view kind_name(ContentKind k)
{
    switch (k) {
    case ContentKind::text: return "text";
    case ContentKind::image: return "image";
    case ContentKind::audio: return "audio";
    case ContentKind::video: return "video";
    case ContentKind::phone: return "phone";
    case ContentKind::email: return "email";
    case ContentKind::weblink: return "weblink";
    }
    return "?";
}

inline std::optional<ContentKind> kind_from_name(std::string_view name)
{
    for (std::uint8_t t = 0; t <= max_content_tag; ++t) {
        auto k = static_cast<ContentKind>(t);
        if (kind_name(k) == name)
            return k;
    }
    return std::nullopt;
}

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    bool operator==(const Rgb&) const = default;
};

inline std::string to_hex(Rgb c)
{
    static constexpr char digits[] = "0123456789ABCDEF";
    std::string s = "#";
    for (std::uint8_t v : {c.r, c.g, c.b}) {
        s.push_back(digits[v >> 4]);
        s.push_back(digits[v & 0xF]);
    }
    return s;
}

inline std::optional<Rgb> parse_hex_color(std::string_view s)
{
    if (s.size() != 7 || s[0] != '#')
        return std::nullopt;
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    std::uint8_t ch[3];
    for (int i = 0; i < 3; ++i) {
        int hi = nibble(s[1 + 2 * i]);
        int lo = nibble(s[2 + 2 * i]);
        if (hi < 0 || lo < 0)
            return std::nullopt;
        ch[i] = static_cast<std::uint8_t>(hi * 16 + lo);
    }
    return Rgb{ch[0], ch[1], ch[2]};
}

/// One authored content item.
///
/// The meaning of `body` and `caption` depends on the kind:
///   text            body = text payload, caption unused
///   image/audio/video body = asset_ref, caption = caption
///   phone/email/weblink body = value,  caption = label
/// color_index and font_id are only meaningful for text.
struct ContentItem {
    ContentKind kind = ContentKind::text;
    std::string body;
    std::string caption;
    std::uint8_t color_index = 0;
    std::uint8_t font_id = 0;

    static ContentItem text(std::string text, std::uint8_t color_index = 0, std::uint8_t font_id = 0)
    {
        return {ContentKind::text, std::move(text), {}, color_index, font_id};
    }

    static ContentItem media(ContentKind kind, std::string asset_ref, std::string caption = {})
    {
        return {kind, std::move(asset_ref), std::move(caption), 0, 0};
    }

    static ContentItem contact(ContentKind kind, std::string value, std::string label = {})
    {
        return {kind, std::move(value), std::move(label), 0, 0};
    }

    bool operator==(const ContentItem&) const = default;
};

struct PageNode {
    std::uint32_t id = 0;
    std::string title;
    std::vector<PageNode> children;
    std::vector<ContentItem> items;

    bool operator==(const PageNode&) const = default;
};

struct Theme {
    Rgb background{255, 255, 255};
    Rgb text{0, 0, 0};
    Rgb highlight{0, 0, 255};
    Rgb header{200, 200, 200};
    std::vector<Rgb> palette{Rgb{0, 0, 0}};
    bool splash_enabled = false;
    std::optional<std::string> splash_image;
    std::optional<std::string> background_image;
    std::optional<std::string> background_music;

    bool operator==(const Theme&) const = default;
};

struct ProjectManifest {
    std::string title;
    std::string version;
    std::vector<PageNode> roots;
    Theme theme;
    std::string font_source;
    std::string asset_dir;

    bool operator==(const ProjectManifest&) const = default;
};

/// Parent id carried by root pages. Page ids are 32-bit and 0 is legal,
/// so the all-ones value is reserved.
inline constexpr std::uint32_t root_parent = 0xFFFFFFFF;

namespace detail {

using nlohmann::json;

[[noreturn]] inline void schema_error(const std::string& where, const std::string& what)
{
    throw Error(Errc::schema_violation, where + ": " + what);
}

inline const json& require(const json& obj, const char* key, const std::string& where)
{
    auto it = obj.find(key);
    if (it == obj.end())
        schema_error(where, std::string("missing field \"") + key + "\"");
    return *it;
}

inline std::string get_string(const json& v, const std::string& where)
{
    if (!v.is_string())
        schema_error(where, "expected string");
    return v.get<std::string>();
}

inline std::string opt_string(const json& obj, const char* key, const std::string& where)
{
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null())
        return {};
    return get_string(*it, where + "." + key);
}

inline std::optional<std::string> opt_ref(const json& obj, const char* key, const std::string& where)
{
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null())
        return std::nullopt;
    return get_string(*it, where + "." + key);
}

inline std::uint64_t get_uint(const json& v, std::uint64_t max, const std::string& where)
{
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        schema_error(where, "expected non-negative integer");
    auto n = v.get<std::uint64_t>();
    if (n > max)
        schema_error(where, "value " + std::to_string(n) + " exceeds " + std::to_string(max));
    return n;
}

inline Rgb get_color(const json& v, const std::string& where)
{
    auto c = parse_hex_color(get_string(v, where));
    if (!c)
        schema_error(where, "expected \"#RRGGBB\" color");
    return *c;
}

inline ContentItem parse_item(const json& j, const std::string& where)
{
    if (!j.is_object())
        schema_error(where, "expected object");
    auto kind_str = get_string(require(j, "kind", where), where + ".kind");
    auto kind = kind_from_name(kind_str);
    if (!kind)
        schema_error(where + ".kind", "unknown content kind \"" + kind_str + "\"");
    if (*kind == ContentKind::text) {
        auto text = get_string(require(j, "text", where), where + ".text");
        std::uint8_t color = 0, font = 0;
        if (auto it = j.find("color_index"); it != j.end())
            color = static_cast<std::uint8_t>(get_uint(*it, 255, where + ".color_index"));
        if (auto it = j.find("font_id"); it != j.end())
            font = static_cast<std::uint8_t>(get_uint(*it, 255, where + ".font_id"));
        return ContentItem::text(std::move(text), color, font);
    }
    if (is_media(*kind))
        return ContentItem::media(*kind, get_string(require(j, "asset_ref", where), where + ".asset_ref"),
                                  opt_string(j, "caption", where));
    return ContentItem::contact(*kind, get_string(require(j, "value", where), where + ".value"),
                                opt_string(j, "label", where));
}

inline PageNode parse_page(const json& j, const std::string& where, std::set<std::uint32_t>& seen)
{
    if (!j.is_object())
        schema_error(where, "expected object");
    PageNode page;
    // The all-ones id is the root-parent sentinel.
    page.id = static_cast<std::uint32_t>(get_uint(require(j, "id", where), root_parent - 1, where + ".id"));
    if (!seen.insert(page.id).second)
        throw Error(Errc::duplicate_page_id, "duplicate page id " + std::to_string(page.id) + " at " + where);
    page.title = get_string(require(j, "title", where), where + ".title");
    if (auto it = j.find("items"); it != j.end()) {
        if (!it->is_array())
            schema_error(where + ".items", "expected array");
        for (std::size_t i = 0; i < it->size(); ++i)
            page.items.push_back(parse_item((*it)[i], where + ".items[" + std::to_string(i) + "]"));
    }
    if (auto it = j.find("children"); it != j.end()) {
        if (!it->is_array())
            schema_error(where + ".children", "expected array");
        for (std::size_t i = 0; i < it->size(); ++i)
            page.children.push_back(parse_page((*it)[i], where + ".children[" + std::to_string(i) + "]", seen));
    }
    return page;
}

inline Theme parse_theme(const json& j)
{
    const std::string where = "theme";
    if (!j.is_object())
        schema_error(where, "expected object");
    Theme t;
    const auto& colors = require(j, "colors", where);
    if (!colors.is_object())
        schema_error("theme.colors", "expected object");
    t.background = get_color(require(colors, "background", "theme.colors"), "theme.colors.background");
    t.text = get_color(require(colors, "text", "theme.colors"), "theme.colors.text");
    t.highlight = get_color(require(colors, "highlight", "theme.colors"), "theme.colors.highlight");
    t.header = get_color(require(colors, "header", "theme.colors"), "theme.colors.header");
    const auto& palette = require(j, "palette", where);
    if (!palette.is_array())
        schema_error("theme.palette", "expected array");
    t.palette.clear();
    for (std::size_t i = 0; i < palette.size(); ++i)
        t.palette.push_back(get_color(palette[i], "theme.palette[" + std::to_string(i) + "]"));
    if (auto it = j.find("splash_enabled"); it != j.end()) {
        if (!it->is_boolean())
            schema_error("theme.splash_enabled", "expected boolean");
        t.splash_enabled = it->get<bool>();
    }
    t.splash_image = opt_ref(j, "splash_image", where);
    t.background_image = opt_ref(j, "background_image", where);
    t.background_music = opt_ref(j, "background_music", where);
    return t;
}

inline json item_to_json(const ContentItem& item)
{
    json j;
    j["kind"] = kind_name(item.kind);
    if (item.kind == ContentKind::text) {
        j["text"] = item.body;
        j["color_index"] = item.color_index;
        j["font_id"] = item.font_id;
    } else if (is_media(item.kind)) {
        j["asset_ref"] = item.body;
        j["caption"] = item.caption;
    } else {
        j["value"] = item.body;
        j["label"] = item.caption;
    }
    return j;
}

inline json page_to_json(const PageNode& page)
{
    json j;
    j["id"] = page.id;
    j["title"] = page.title;
    j["items"] = json::array();
    for (const auto& item : page.items)
        j["items"].push_back(item_to_json(item));
    j["children"] = json::array();
    for (const auto& child : page.children)
        j["children"].push_back(page_to_json(child));
    return j;
}

inline json theme_to_json(const Theme& t)
{
    json j;
    j["colors"] = {{"background", to_hex(t.background)},
                   {"text", to_hex(t.text)},
                   {"highlight", to_hex(t.highlight)},
                   {"header", to_hex(t.header)}};
    j["palette"] = json::array();
    for (auto c : t.palette)
        j["palette"].push_back(to_hex(c));
    j["splash_enabled"] = t.splash_enabled;
    auto opt = [](const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); };
    j["splash_image"] = opt(t.splash_image);
    j["background_image"] = opt(t.background_image);
    j["background_music"] = opt(t.background_music);
    return j;
}

} // namespace detail

/// Parses a manifest JSON document. Page and item order is kept exactly as
/// written.
inline ProjectManifest parse_manifest(std::string_view text)
{
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(e.byte, e.what());
    }
    if (!doc.is_object())
        detail::schema_error("manifest", "top level must be an object");

    ProjectManifest m;
    m.title = detail::get_string(detail::require(doc, "title", "manifest"), "title");
    m.version = detail::get_string(detail::require(doc, "version", "manifest"), "version");
    m.theme = detail::parse_theme(detail::require(doc, "theme", "manifest"));
    m.font_source = detail::get_string(detail::require(doc, "font_source", "manifest"), "font_source");
    m.asset_dir = detail::get_string(detail::require(doc, "asset_dir", "manifest"), "asset_dir");
    const auto& pages = detail::require(doc, "pages", "manifest");
    if (!pages.is_array())
        detail::schema_error("pages", "expected array");
    std::set<std::uint32_t> seen;
    for (std::size_t i = 0; i < pages.size(); ++i)
        m.roots.push_back(detail::parse_page(pages[i], "pages[" + std::to_string(i) + "]", seen));
    return m;
}

inline std::string serialize_manifest(const ProjectManifest& m)
{
    nlohmann::json doc;
    doc["title"] = m.title;
    doc["version"] = m.version;
    doc["theme"] = detail::theme_to_json(m.theme);
    doc["font_source"] = m.font_source;
    doc["asset_dir"] = m.asset_dir;
    doc["pages"] = nlohmann::json::array();
    for (const auto& page : m.roots)
        doc["pages"].push_back(detail::page_to_json(page));
    return doc.dump(2) + "\n";
}

// --- validation -----------------------------------------------------------

enum class FindingKind {
    no_root_pages,
    duplicate_page_id,
    empty_text,
    empty_asset_ref,
    unsafe_asset_ref,
    missing_asset,
    palette_overflow,
    palette_size,
    splash_without_image,
    string_too_long,
};

inline std::string_view to_string(FindingKind k)
{
    switch (k) {
    case FindingKind::no_root_pages: return "no_root_pages";
    case FindingKind::duplicate_page_id: return "duplicate_page_id";
    case FindingKind::empty_text: return "empty_text";
    case FindingKind::empty_asset_ref: return "empty_asset_ref";
    case FindingKind::unsafe_asset_ref: return "unsafe_asset_ref";
    case FindingKind::missing_asset: return "missing_asset";
    case FindingKind::palette_overflow: return "palette_overflow";
    case FindingKind::palette_size: return "palette_size";
    case FindingKind::splash_without_image: return "splash_without_image";
    case FindingKind::string_too_long: return "string_too_long";
    }
    return "?";
}

/// Theme-level findings carry no page id or item index.
struct Finding {
    FindingKind kind;
    std::optional<std::uint32_t> page_id;
    std::optional<std::size_t> item_index;
    std::string detail;
};

using ValidationReport = std::vector<Finding>;

inline std::string describe(const Finding& f)
{
    std::ostringstream os;
    os << to_string(f.kind);
    if (f.page_id)
        os << " page=" << *f.page_id;
    if (f.item_index)
        os << " item=" << *f.item_index;
    if (!f.detail.empty())
        os << ": " << f.detail;
    return os.str();
}

/// True when `ref` is a relative '/'-separated path without "." or ".."
/// segments and without empty segments.
inline bool is_safe_relative_path(std::string_view ref)
{
    if (ref.empty() || ref.front() == '/' || ref.find('\\') != std::string_view::npos)
        return false;
    std::size_t start = 0;
    while (start <= ref.size()) {
        auto end = ref.find('/', start);
        if (end == std::string_view::npos)
            end = ref.size();
        auto seg = ref.substr(start, end - start);
        if (seg.empty() || seg == "." || seg == "..")
            return false;
        start = end + 1;
    }
    return true;
}

using AssetLookup = std::function<bool(const std::string&)>;

inline ValidationReport validate(const ProjectManifest& m, const AssetLookup& has_asset)
{
    ValidationReport report;
    constexpr std::size_t max16 = 0xFFFF;

    auto check_ref = [&](const std::string& ref, std::optional<std::uint32_t> page, std::optional<std::size_t> item) {
        if (ref.empty()) {
            report.push_back({FindingKind::empty_asset_ref, page, item, "asset_ref is empty"});
        } else if (!is_safe_relative_path(ref)) {
            report.push_back({FindingKind::unsafe_asset_ref, page, item, "asset_ref \"" + ref + "\" is not a safe relative path"});
        } else if (!has_asset(ref)) {
            report.push_back({FindingKind::missing_asset, page, item, "asset \"" + ref + "\" not found"});
        }
        if (ref.size() > max16)
            report.push_back({FindingKind::string_too_long, page, item, "asset_ref exceeds 65535 bytes"});
    };

    const auto& theme = m.theme;
    if (theme.palette.empty() || theme.palette.size() > 255)
        report.push_back({FindingKind::palette_size, {}, {},
                          "palette has " + std::to_string(theme.palette.size()) + " entries (1..255 allowed)"});
    if (theme.splash_enabled && !theme.splash_image)
        report.push_back({FindingKind::splash_without_image, {}, {}, "splash_enabled requires splash_image"});
    for (const auto* ref : {&theme.splash_image, &theme.background_image, &theme.background_music})
        if (*ref)
            check_ref(**ref, {}, {});

    if (m.roots.empty())
        report.push_back({FindingKind::no_root_pages, {}, {}, "manifest has no pages"});

    std::set<std::uint32_t> seen;
    std::function<void(const PageNode&)> walk = [&](const PageNode& page) {
        if (!seen.insert(page.id).second || page.id == root_parent)
            report.push_back({FindingKind::duplicate_page_id, page.id, {}, "page id " + std::to_string(page.id) + " is not unique"});
        if (page.title.size() > max16)
            report.push_back({FindingKind::string_too_long, page.id, {}, "title exceeds 65535 bytes"});
        for (std::size_t i = 0; i < page.items.size(); ++i) {
            const auto& item = page.items[i];
            if (item.kind == ContentKind::text) {
                if (item.body.empty())
                    report.push_back({FindingKind::empty_text, page.id, i, "text item is empty"});
                if (item.color_index >= theme.palette.size())
                    report.push_back({FindingKind::palette_overflow, page.id, i,
                                      "color_index " + std::to_string(item.color_index) + " >= palette size " +
                                          std::to_string(theme.palette.size())});
            } else if (is_media(item.kind)) {
                check_ref(item.body, page.id, i);
                if (item.caption.size() > max16)
                    report.push_back({FindingKind::string_too_long, page.id, i, "caption exceeds 65535 bytes"});
            } else if (item.body.size() > max16 || item.caption.size() > max16) {
                report.push_back({FindingKind::string_too_long, page.id, i, "value or label exceeds 65535 bytes"});
            }
        }
        for (const auto& child : page.children)
            walk(child);
    };
    for (const auto& root : m.roots)
        walk(root);
    return report;
}

inline ValidationReport validate(const ProjectManifest& m, const std::filesystem::path& asset_dir)
{
    return validate(m, [&](const std::string& ref) { return std::filesystem::is_regular_file(asset_dir / ref); });
}

inline ValidationReport validate(const ProjectManifest& m, const std::set<std::string>& assets)
{
    return validate(m, [&](const std::string& ref) { return assets.contains(ref); });
}

// --- tree flattening --------------------------------------------------------

struct FlatPage {
    const PageNode* page;
    std::uint32_t parent_id;
};

/// Preorder traversal, children in authored order. Roots get root_parent.
inline std::vector<FlatPage> flatten(const std::vector<PageNode>& roots)
{
    std::vector<FlatPage> out;
    std::function<void(const PageNode&, std::uint32_t)> visit = [&](const PageNode& page, std::uint32_t parent) {
        out.push_back({&page, parent});
        for (const auto& child : page.children)
            visit(child, page.id);
    };
    for (const auto& root : roots)
        visit(root, root_parent);
    return out;
}

inline std::vector<FlatPage> flatten(const ProjectManifest& m)
{
    return flatten(m.roots);
}

std::vector<FlatPage> flatten(std::vector<PageNode>&&) = delete;
std::vector<FlatPage> flatten(ProjectManifest&&) = delete;

inline std::size_t page_count(const std::vector<PageNode>& roots)
{
    std::size_t n = 0;
    for (const auto& r : roots)
        n += 1 + page_count(r.children);
    return n;
}

/// Rebuilds a page tree from a preorder list of (page without children,
/// parent id). Throws Errc::invalid_index when the list is not a preorder
/// listing of a forest.
inline std::vector<PageNode> rebuild_tree(const std::vector<std::pair<PageNode, std::uint32_t>>& entries)
{
    std::size_t pos = 0;
    std::function<std::vector<PageNode>(std::uint32_t)> build = [&](std::uint32_t parent) {
        std::vector<PageNode> level;
        while (pos < entries.size() && entries[pos].second == parent) {
            PageNode node = entries[pos].first;
            ++pos;
            node.children = build(node.id);
            level.push_back(std::move(node));
        }
        return level;
    };
    auto roots = build(root_parent);
    if (pos != entries.size())
        throw Error(Errc::invalid_index, "entry " + std::to_string(pos) + " (page " +
                                             std::to_string(entries[pos].first.id) +
                                             ") does not follow preorder parent structure");
    return roots;
}

} // namespace contentforge
