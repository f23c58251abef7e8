#pragma once

#include <contentforge/bundle.hpp>
#include <contentforge/search.hpp>
#include <contentforge/text_shaper.hpp>

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace contentforge {

// Headless runtime: a pure reducer from (state, event) to (state, effects).
// The host performs effects; the engine never waits for them.

inline constexpr int media_row_height = 16;

struct Viewport {
    int width = 240;
    int height = 320;

    bool operator==(const Viewport&) const = default;
};

struct SplashScreen {
    bool operator==(const SplashScreen&) const = default;
};

struct IndexScreen {
    std::size_t cursor = 0;
    std::set<std::uint32_t> expanded;

    bool operator==(const IndexScreen&) const = default;
};

struct PageScreen {
    std::uint32_t page_id = 0;
    int scroll_offset = 0;
    bool from_search = false;

    bool operator==(const PageScreen&) const = default;
};

struct SearchScreen {
    std::string query;
    std::vector<SearchMatch> results;
    std::size_t cursor = 0;

    bool operator==(const SearchScreen&) const = default;
};

using Screen = std::variant<SplashScreen, IndexScreen, PageScreen, SearchScreen>;

struct MediaSelection {
    std::optional<std::size_t> audio_index; // ordinal among the page's audio items
    std::optional<std::size_t> video_index;
    bool audio_playing = false;
    bool autoplay_done = false; // autoplay fires at most once per page visit

    bool operator==(const MediaSelection&) const = default;
};

/// One content row of a page in pixel space.
struct Row {
    std::size_t item_index = 0;
    ContentKind kind = ContentKind::text;
    int top = 0;
    int height = 0;

    int bottom() const { return top + height; }
    bool operator==(const Row&) const = default;
};

enum class EffectType {
    play_audio,
    stop_audio,
    play_video,
    play_background_music,
    compose_message,
    open_link,
    dial_number,
};

inline std::string_view to_string(EffectType t)
{
    switch (t) {
    case EffectType::play_audio: return "PlayAudio";
    case EffectType::stop_audio: return "StopAudio";
    case EffectType::play_video: return "PlayVideo";
    case EffectType::play_background_music: return "PlayBackgroundMusic";
    case EffectType::compose_message: return "ComposeMessage";
    case EffectType::open_link: return "OpenLink";
    case EffectType::dial_number: return "DialNumber";
    }
    return "?";
}

struct Effect {
    EffectType type;
    std::string value;                 // asset ref, message payload, url or number
    std::optional<ContentKind> kind;   // ComposeMessage only

    static Effect play_audio(std::string ref) { return {EffectType::play_audio, std::move(ref), {}}; }
    static Effect stop_audio() { return {EffectType::stop_audio, {}, {}}; }
    static Effect play_video(std::string ref) { return {EffectType::play_video, std::move(ref), {}}; }
    static Effect background_music(std::string ref) { return {EffectType::play_background_music, std::move(ref), {}}; }
    static Effect compose(ContentKind k, std::string payload) { return {EffectType::compose_message, std::move(payload), k}; }
    static Effect open_link(std::string url) { return {EffectType::open_link, std::move(url), {}}; }
    static Effect dial(std::string number) { return {EffectType::dial_number, std::move(number), {}}; }

    bool operator==(const Effect&) const = default;
};

enum class EventType {
    up,
    down,
    select,
    back,
    toggle_audio,
    toggle_video,
    share,
    search_open,
    search_submit,
    tick,
};

inline std::string_view to_string(EventType t)
{
    switch (t) {
    case EventType::up: return "Up";
    case EventType::down: return "Down";
    case EventType::select: return "Select";
    case EventType::back: return "Back";
    case EventType::toggle_audio: return "ToggleAudio";
    case EventType::toggle_video: return "ToggleVideo";
    case EventType::share: return "Share";
    case EventType::search_open: return "SearchOpen";
    case EventType::search_submit: return "SearchSubmit";
    case EventType::tick: return "Tick";
    }
    return "?";
}

inline std::optional<EventType> event_type_from_string(std::string_view s)
{
    for (int i = 0; i <= static_cast<int>(EventType::tick); ++i)
        if (to_string(static_cast<EventType>(i)) == s)
            return static_cast<EventType>(i);
    return std::nullopt;
}

struct Event {
    EventType type;
    std::string query; // SearchSubmit only
};

struct EngineState {
    Screen screen;
    MediaSelection media;
    Viewport viewport;
    Theme theme;
    std::shared_ptr<const Bundle> bundle;

    IndexScreen index_memory;                 // restored when leaving a page
    std::optional<SearchScreen> search_memory; // restored when leaving a page opened from search
    std::vector<ContentRecord> page_items;     // records of the page on screen
    std::vector<Row> page_rows;
    int page_height = 0;
};

struct Step {
    EngineState state;
    std::vector<Effect> effects;
};

// --- tree rows for the index screen -----------------------------------------

struct TreeRow {
    std::size_t entry = 0; // position in the index
    std::uint32_t page_id = 0;
    std::uint32_t parent_id = root_parent;
    int depth = 0;
    bool has_children = false;
    bool expanded = false;
};

/// Visible rows of the index tree: roots, plus children of expanded nodes
/// whose ancestors are all expanded.
inline std::vector<TreeRow> tree_rows(const BundleIndex& index, const std::set<std::uint32_t>& expanded)
{
    std::vector<TreeRow> rows;
    std::map<std::uint32_t, std::pair<bool, int>> open; // page -> (children visible, depth)
    for (std::size_t i = 0; i < index.entries.size(); ++i) {
        const auto& e = index.entries[i];
        int depth = 0;
        bool visible = e.parent_id == root_parent;
        if (!visible) {
            auto it = open.find(e.parent_id);
            if (it != open.end() && it->second.first) {
                visible = true;
                depth = it->second.second + 1;
            }
        }
        bool is_open = expanded.contains(e.page_id) && e.child_count > 0;
        open[e.page_id] = {visible && is_open, depth};
        if (visible)
            rows.push_back({i, e.page_id, e.parent_id, depth, e.child_count > 0, is_open});
    }
    return rows;
}

/// Row geometry of a page: text rows are as tall as their wrapped lines,
/// media and contact rows a fixed 16 px.
inline std::vector<Row> layout_rows(const std::vector<ContentRecord>& items, const GlyphAtlas& atlas, int width)
{
    std::vector<Row> rows;
    int top = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        int h = media_row_height;
        if (items[i].kind == ContentKind::text)
            h = shape_text(atlas, items[i].body, width, Rgb{}).total_height;
        rows.push_back({i, items[i].kind, top, h});
        top += h;
    }
    return rows;
}

inline bool row_visible(const Row& row, int scroll_offset, int viewport_height)
{
    return row.height > 0 && row.top < scroll_offset + viewport_height && row.bottom() > scroll_offset;
}

/// Rows of the current page intersecting the viewport. Empty off-page.
inline std::vector<Row> visible_rows(const EngineState& s)
{
    const auto* page = std::get_if<PageScreen>(&s.screen);
    if (!page)
        return {};
    std::vector<Row> out;
    for (const auto& row : s.page_rows)
        if (row_visible(row, page->scroll_offset, s.viewport.height))
            out.push_back(row);
    return out;
}

inline int max_scroll(const EngineState& s)
{
    return std::max(0, s.page_height - s.viewport.height);
}

namespace detail {

inline std::vector<std::size_t> items_of_kind(const std::vector<ContentRecord>& items, ContentKind kind)
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < items.size(); ++i)
        if (items[i].kind == kind)
            out.push_back(i);
    return out;
}

inline void stop_audio_if_playing(EngineState& s, std::vector<Effect>& fx)
{
    if (s.media.audio_playing) {
        fx.push_back(Effect::stop_audio());
        s.media.audio_playing = false;
    }
}

inline void leave_page(EngineState& s, std::vector<Effect>& fx)
{
    stop_audio_if_playing(s, fx);
    s.media = {};
    s.page_items.clear();
    s.page_rows.clear();
    s.page_height = 0;
}

inline void check_autoplay(EngineState& s, std::vector<Effect>& fx)
{
    const auto* page = std::get_if<PageScreen>(&s.screen);
    if (!page || !s.media.audio_index || s.media.audio_playing || s.media.autoplay_done)
        return;
    auto audio = items_of_kind(s.page_items, ContentKind::audio);
    auto item = audio.at(*s.media.audio_index);
    if (row_visible(s.page_rows.at(item), page->scroll_offset, s.viewport.height)) {
        fx.push_back(Effect::play_audio(s.page_items[item].body));
        s.media.audio_playing = true;
        s.media.autoplay_done = true;
    }
}

inline void open_page(EngineState& s, std::uint32_t page_id, bool from_search, std::vector<Effect>& fx)
{
    if (!s.bundle->index.find(page_id))
        return;
    leave_page(s, fx);
    s.page_items = s.bundle->page(page_id);
    s.page_rows = layout_rows(s.page_items, s.bundle->atlas, s.viewport.width);
    s.page_height = s.page_rows.empty() ? 0 : s.page_rows.back().bottom();
    if (!items_of_kind(s.page_items, ContentKind::audio).empty())
        s.media.audio_index = 0;
    if (!items_of_kind(s.page_items, ContentKind::video).empty())
        s.media.video_index = 0;
    s.screen = PageScreen{page_id, 0, from_search};
    check_autoplay(s, fx);
}

inline std::optional<std::size_t> focused_item(const EngineState& s)
{
    auto rows = visible_rows(s);
    if (rows.empty())
        return std::nullopt;
    return rows.front().item_index;
}

inline void run_search(EngineState& s, const std::string& query, std::vector<Effect>& fx)
{
    SearchScreen screen;
    screen.query = query;
    if (!fold(utf8::decode(query), FoldMode::simple_case).empty())
        screen.results = search_content(*s.bundle, query, FoldMode::simple_case);
    if (std::holds_alternative<PageScreen>(s.screen))
        leave_page(s, fx);
    s.screen = std::move(screen);
}

inline void handle_index(EngineState& s, IndexScreen idx, const Event& ev, std::vector<Effect>& fx)
{
    auto rows = tree_rows(s.bundle->index, idx.expanded);
    idx.cursor = std::min(idx.cursor, rows.size() - 1);
    const auto& row = rows[idx.cursor];
    switch (ev.type) {
    case EventType::up:
        if (idx.cursor > 0)
            --idx.cursor;
        break;
    case EventType::down:
        if (idx.cursor + 1 < rows.size())
            ++idx.cursor;
        break;
    case EventType::select:
        if (row.has_children && !row.expanded) {
            idx.expanded.insert(row.page_id);
        } else {
            s.index_memory = idx;
            open_page(s, row.page_id, false, fx);
            return;
        }
        break;
    case EventType::back:
        if (row.parent_id != root_parent) {
            idx.expanded.erase(row.parent_id);
            auto after = tree_rows(s.bundle->index, idx.expanded);
            for (std::size_t i = 0; i < after.size(); ++i)
                if (after[i].page_id == row.parent_id)
                    idx.cursor = i;
        }
        break;
    default:
        break;
    }
    s.screen = idx;
    s.index_memory = idx;
}

inline void handle_page(EngineState& s, PageScreen page, const Event& ev, std::vector<Effect>& fx)
{
    const int step = std::max<int>(1, s.bundle->atlas.line_height);
    auto audio = items_of_kind(s.page_items, ContentKind::audio);
    auto video = items_of_kind(s.page_items, ContentKind::video);
    switch (ev.type) {
    case EventType::up:
        page.scroll_offset = std::max(0, page.scroll_offset - step);
        s.screen = page;
        check_autoplay(s, fx);
        return;
    case EventType::down:
        page.scroll_offset = std::min(max_scroll(s), page.scroll_offset + step);
        s.screen = page;
        check_autoplay(s, fx);
        return;
    case EventType::toggle_audio: {
        const auto k = audio.size();
        if (k == 0)
            return;
        s.media.autoplay_done = true;
        if (k == 1) {
            if (s.media.audio_playing) {
                fx.push_back(Effect::stop_audio());
                s.media.audio_playing = false;
            } else {
                fx.push_back(Effect::play_audio(s.page_items[audio[0]].body));
                s.media.audio_playing = true;
            }
            return;
        }
        fx.push_back(Effect::stop_audio());
        s.media.audio_index = (s.media.audio_index.value_or(0) + 1) % k;
        fx.push_back(Effect::play_audio(s.page_items[audio[*s.media.audio_index]].body));
        s.media.audio_playing = true;
        return;
    }
    case EventType::toggle_video: {
        const auto k = video.size();
        if (k == 0)
            return;
        if (k > 1)
            s.media.video_index = (s.media.video_index.value_or(0) + 1) % k;
        fx.push_back(Effect::play_video(s.page_items[video[*s.media.video_index]].body));
        return;
    }
    case EventType::select: {
        auto focus = focused_item(s);
        if (!focus)
            return;
        const auto& item = s.page_items[*focus];
        switch (item.kind) {
        case ContentKind::phone: fx.push_back(Effect::dial(item.body)); break;
        case ContentKind::weblink: fx.push_back(Effect::open_link(item.body)); break;
        case ContentKind::email: fx.push_back(Effect::compose(ContentKind::email, item.body)); break;
        case ContentKind::video:
            s.media.video_index = static_cast<std::size_t>(std::find(video.begin(), video.end(), *focus) - video.begin());
            fx.push_back(Effect::play_video(item.body));
            break;
        case ContentKind::audio:
            if (s.media.audio_playing)
                fx.push_back(Effect::stop_audio());
            s.media.audio_index = static_cast<std::size_t>(std::find(audio.begin(), audio.end(), *focus) - audio.begin());
            fx.push_back(Effect::play_audio(item.body));
            s.media.audio_playing = true;
            s.media.autoplay_done = true;
            break;
        default:
            break;
        }
        return;
    }
    case EventType::share: {
        auto focus = focused_item(s);
        if (focus)
            fx.push_back(Effect::compose(s.page_items[*focus].kind, s.page_items[*focus].body));
        return;
    }
    case EventType::back:
        leave_page(s, fx);
        if (page.from_search && s.search_memory)
            s.screen = *s.search_memory;
        else
            s.screen = s.index_memory;
        return;
    case EventType::search_open:
        leave_page(s, fx);
        s.screen = SearchScreen{};
        return;
    case EventType::search_submit:
        run_search(s, ev.query, fx);
        return;
    case EventType::tick:
        return;
    }
}

inline void handle_search(EngineState& s, SearchScreen screen, const Event& ev, std::vector<Effect>& fx)
{
    switch (ev.type) {
    case EventType::up:
        if (screen.cursor > 0)
            --screen.cursor;
        break;
    case EventType::down:
        if (screen.cursor + 1 < screen.results.size())
            ++screen.cursor;
        break;
    case EventType::select:
        if (screen.cursor < screen.results.size()) {
            s.search_memory = screen;
            open_page(s, screen.results[screen.cursor].page_id, true, fx);
            return;
        }
        break;
    case EventType::back:
        s.search_memory.reset();
        s.screen = s.index_memory;
        return;
    case EventType::search_open:
        screen = SearchScreen{};
        break;
    case EventType::search_submit:
        run_search(s, ev.query, fx);
        return;
    default:
        break;
    }
    s.screen = std::move(screen);
}

} // namespace detail

/// Starts a session: the splash screen when the theme enables it, otherwise
/// the index with the cursor on the first root.
inline Step init(std::shared_ptr<const Bundle> bundle, Viewport viewport)
{
    if (!bundle || bundle->index.entries.empty())
        throw Error(Errc::empty_index, "bundle has no pages");
    if (viewport.width < bundle->atlas.widest_advance() || viewport.height <= 0)
        throw Error(Errc::invalid_argument, "viewport " + std::to_string(viewport.width) + "x" +
                                                std::to_string(viewport.height) + " is too small");
    Step step;
    auto& s = step.state;
    s.bundle = std::move(bundle);
    s.viewport = viewport;
    s.theme = s.bundle->theme;
    if (s.theme.splash_enabled)
        s.screen = SplashScreen{};
    else
        s.screen = IndexScreen{};
    if (s.theme.background_music)
        step.effects.push_back(Effect::background_music(*s.theme.background_music));
    return step;
}

/// Applies one event. Every event is legal in every state; events with no
/// meaning on the current screen leave the state unchanged.
inline Step handle_event(const EngineState& state, const Event& ev)
{
    Step step{state, {}};
    auto& s = step.state;
    std::visit(
        [&](const auto& screen) {
            using T = std::decay_t<decltype(screen)>;
            if constexpr (std::is_same_v<T, SplashScreen>) {
                if (ev.type == EventType::select || ev.type == EventType::tick || ev.type == EventType::back)
                    s.screen = s.index_memory;
            } else if constexpr (std::is_same_v<T, IndexScreen>) {
                if (ev.type == EventType::search_open)
                    s.screen = SearchScreen{};
                else if (ev.type == EventType::search_submit)
                    detail::run_search(s, ev.query, step.effects);
                else
                    detail::handle_index(s, screen, ev, step.effects);
            } else if constexpr (std::is_same_v<T, PageScreen>) {
                detail::handle_page(s, screen, ev, step.effects);
            } else {
                detail::handle_search(s, screen, ev, step.effects);
            }
        },
        state.screen);
    return step;
}

} // namespace contentforge
