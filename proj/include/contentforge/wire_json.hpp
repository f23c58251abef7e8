#pragma once

// JSON projections of engine and bundle values used by the preview service.

#include <contentforge/bundle.hpp>
#include <contentforge/content_model.hpp>
#include <contentforge/engine.hpp>
#include <contentforge/render.hpp>
#include <contentforge/search.hpp>
#include <contentforge/text_shaper.hpp>

#include <nlohmann/json.hpp>

#include <string>

namespace contentforge::wire {

using nlohmann::json;

inline std::string base64(std::span<const std::uint8_t> data)
{
    static constexpr char table[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    for (std::size_t i = 0; i < data.size(); i += 3) {
        std::uint32_t n = static_cast<std::uint32_t>(data[i]) << 16;
        if (i + 1 < data.size())
            n |= static_cast<std::uint32_t>(data[i + 1]) << 8;
        if (i + 2 < data.size())
            n |= data[i + 2];
        out.push_back(table[(n >> 18) & 63]);
        out.push_back(table[(n >> 12) & 63]);
        out.push_back(i + 1 < data.size() ? table[(n >> 6) & 63] : '=');
        out.push_back(i + 2 < data.size() ? table[n & 63] : '=');
    }
    return out;
}

inline json to_json(const Effect& e)
{
    json j{{"type", to_string(e.type)}};
    switch (e.type) {
    case EffectType::play_audio:
    case EffectType::play_video:
    case EffectType::play_background_music: j["asset_ref"] = e.value; break;
    case EffectType::compose_message:
        j["kind"] = kind_name(e.kind.value_or(ContentKind::text));
        j["payload"] = e.value;
        break;
    case EffectType::open_link: j["url"] = e.value; break;
    case EffectType::dial_number: j["number"] = e.value; break;
    case EffectType::stop_audio: break;
    }
    return j;
}

inline json to_json(const std::vector<Effect>& effects)
{
    json j = json::array();
    for (const auto& e : effects)
        j.push_back(to_json(e));
    return j;
}

inline json to_json(const SearchMatch& m)
{
    return {{"page_id", m.page_id},
            {"item_index", m.item_index ? json(*m.item_index) : json(nullptr)},
            {"char_offset", m.char_offset},
            {"snippet", m.snippet}};
}

inline json to_json(const ContentRecord& rec)
{
    return contentforge::detail::item_to_json(rec);
}

inline json to_json(const Theme& theme)
{
    return contentforge::detail::theme_to_json(theme);
}

inline json screen_to_json(const EngineState& s)
{
    return std::visit(
        [&](const auto& screen) -> json {
            using T = std::decay_t<decltype(screen)>;
            if constexpr (std::is_same_v<T, SplashScreen>) {
                return {{"type", "Splash"}};
            } else if constexpr (std::is_same_v<T, IndexScreen>) {
                json rows = json::array();
                for (const auto& r : tree_rows(s.bundle->index, screen.expanded))
                    rows.push_back({{"page_id", r.page_id},
                                    {"title", s.bundle->index.entries[r.entry].title},
                                    {"depth", r.depth},
                                    {"has_children", r.has_children},
                                    {"expanded", r.expanded}});
                return {{"type", "Index"}, {"cursor", screen.cursor}, {"expanded", screen.expanded}, {"rows", rows}};
            } else if constexpr (std::is_same_v<T, PageScreen>) {
                json rows = json::array();
                for (const auto& r : s.page_rows)
                    rows.push_back({{"item_index", r.item_index},
                                    {"kind", kind_name(r.kind)},
                                    {"top", r.top},
                                    {"height", r.height},
                                    {"visible", row_visible(r, screen.scroll_offset, s.viewport.height)}});
                return {{"type", "Page"},
                        {"page_id", screen.page_id},
                        {"scroll_offset", screen.scroll_offset},
                        {"from_search", screen.from_search},
                        {"page_height", s.page_height},
                        {"rows", rows}};
            } else {
                json results = json::array();
                for (const auto& m : screen.results)
                    results.push_back(to_json(m));
                return {{"type", "SearchResults"}, {"query", screen.query}, {"cursor", screen.cursor}, {"results", results}};
            }
        },
        s.screen);
}

inline json to_json(const EngineState& s)
{
    auto opt = [](const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); };
    return {{"screen", screen_to_json(s)},
            {"media",
             {{"audio_index", opt(s.media.audio_index)},
              {"video_index", opt(s.media.video_index)},
              {"audio_playing", s.media.audio_playing}}},
            {"viewport", {{"width", s.viewport.width}, {"height", s.viewport.height}}}};
}

inline Event event_from_json(const json& j)
{
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
        throw Error(Errc::invalid_argument, "event must be an object with a string \"type\"");
    auto type = event_type_from_string(j["type"].get<std::string>());
    if (!type)
        throw Error(Errc::invalid_argument, "unknown event type \"" + j["type"].get<std::string>() + "\"");
    Event ev{*type, {}};
    if (*type == EventType::search_submit) {
        auto it = j.find("query");
        if (it == j.end() || !it->is_string())
            throw Error(Errc::invalid_argument, "SearchSubmit needs a string \"query\"");
        ev.query = it->get<std::string>();
    }
    return ev;
}

inline json tree_to_json(const BundleIndex& index)
{
    std::vector<std::pair<PageNode, std::uint32_t>> flat;
    for (const auto& e : index.entries)
        flat.push_back({PageNode{e.page_id, e.title, {}, {}}, e.parent_id});
    std::function<json(const PageNode&)> node = [&](const PageNode& p) {
        json children = json::array();
        for (const auto& c : p.children)
            children.push_back(node(c));
        return json{{"page_id", p.id}, {"title", p.title}, {"children", children}};
    };
    json roots = json::array();
    for (const auto& r : rebuild_tree(flat))
        roots.push_back(node(r));
    return {{"roots", roots}};
}

inline json layout_to_json(const LayoutResult& layout, const GlyphAtlas& atlas)
{
    json lines = json::array();
    for (const auto& line : layout.lines) {
        json glyphs = json::array();
        for (const auto& g : line) {
            const Glyph& glyph = contentforge::detail::select_glyph(atlas, g.glyph.codepoint, g.glyph.form);
            glyphs.push_back({{"codepoint", static_cast<std::uint32_t>(g.glyph.codepoint)},
                              {"form", static_cast<int>(g.glyph.form)},
                              {"x", g.x},
                              {"y", g.y},
                              {"w", glyph.advance},
                              {"h", atlas.line_height},
                              {"color", to_hex(g.color)}});
        }
        lines.push_back(glyphs);
    }
    return {{"lines", lines},
            {"line_widths", layout.line_widths},
            {"total_height", layout.total_height},
            {"max_line_width", layout.max_line_width}};
}

/// Layouts of every text item of a page at the given width.
inline json page_layout_to_json(const Bundle& bundle, std::uint32_t page_id, const std::vector<ContentRecord>& records,
                                int width)
{
    auto rows = layout_rows(records, bundle.atlas, width);
    json items = json::array();
    for (const auto& row : rows) {
        const auto& rec = records[row.item_index];
        if (rec.kind != ContentKind::text)
            continue;
        auto layout = shape_text(bundle.atlas, rec.body, width, text_color(bundle.theme, rec));
        auto j = layout_to_json(layout, bundle.atlas);
        j["item_index"] = row.item_index;
        j["top"] = row.top;
        items.push_back(std::move(j));
    }
    return {{"page_id", page_id}, {"width", width}, {"line_height", bundle.atlas.line_height}, {"items", items}};
}

inline json to_json(const Glyph& g)
{
    return {{"codepoint", static_cast<std::uint32_t>(g.codepoint)},
            {"form", static_cast<int>(g.form)},
            {"width", g.width},
            {"height", g.height},
            {"x_bearing", g.x_bearing},
            {"y_bearing", g.y_bearing},
            {"advance", g.advance},
            {"bitmap", base64(g.bitmap)}};
}

} // namespace contentforge::wire
