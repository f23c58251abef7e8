#include "engine_invariants.hpp"
#include "support.hpp"

#include <contentforge/wire_json.hpp>

#include <gtest/gtest.h>

using namespace contentforge;
using cf_test::Gen;

namespace {

std::shared_ptr<const Bundle> bundle_of(std::vector<PageNode> roots, Theme theme = {}, GlyphAtlas atlas = builtin_atlas())
{
    ProjectManifest m;
    m.roots = std::move(roots);
    m.theme = std::move(theme);
    return make_bundle(encode_bundle(m, atlas, {}));
}

Event ev(EventType t) { return Event{t, {}}; }

struct Driver {
    EngineState state;
    std::vector<Effect> last;

    explicit Driver(std::shared_ptr<const Bundle> b, Viewport vp = {})
    {
        auto step = init(std::move(b), vp);
        state = step.state;
        last = step.effects;
    }

    std::vector<Effect> send(Event e)
    {
        auto step = handle_event(state, e);
        state = std::move(step.state);
        last = step.effects;
        return last;
    }
    std::vector<Effect> send(EventType t) { return send(ev(t)); }

    const PageScreen* page() const { return std::get_if<PageScreen>(&state.screen); }
    const IndexScreen* index() const { return std::get_if<IndexScreen>(&state.screen); }
};

PageNode audio_page(std::uint32_t id, int k, const std::string& prefix = "a")
{
    PageNode p{id, "audio page", {}, {}};
    for (int i = 1; i <= k; ++i)
        p.items.push_back(ContentItem::media(ContentKind::audio, prefix + std::to_string(i) + ".mid"));
    return p;
}

std::string state_json(const EngineState& s) { return wire::to_json(s).dump(); }

} // namespace

TEST(Init, IndexWithoutSplashOrMusic)
{
    Driver d(bundle_of({PageNode{4, "a", {}, {}}, PageNode{5, "b", {}, {}}}));
    ASSERT_TRUE(d.index());
    EXPECT_EQ(d.index()->cursor, 0u);
    EXPECT_TRUE(d.last.empty());
}

TEST(Init, SplashDismissedBySelectOrTick)
{
    Theme t;
    t.splash_enabled = true;
    t.splash_image = "s.png";
    for (auto e : {EventType::select, EventType::tick}) {
        Driver d(bundle_of({PageNode{1, "a", {}, {}}}, t));
        EXPECT_TRUE(std::holds_alternative<SplashScreen>(d.state.screen));
        d.send(EventType::down);
        EXPECT_TRUE(std::holds_alternative<SplashScreen>(d.state.screen));
        d.send(e);
        EXPECT_TRUE(d.index());
    }
}

TEST(Init, BackgroundMusicEffect)
{
    Theme t;
    t.background_music = "bg.mid";
    Driver d(bundle_of({PageNode{1, "a", {}, {}}}, t));
    ASSERT_EQ(d.last.size(), 1u);
    EXPECT_EQ(d.last[0], Effect::background_music("bg.mid"));
}

TEST(Init, EmptyIndexIsAnError)
{
    auto b = std::make_shared<Bundle>();
    b->atlas = builtin_atlas();
    try {
        init(b, Viewport{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::empty_index);
    }
}

TEST(Media, AutoSelectFirstThenToggleCycles)
{
    Driver d(bundle_of({audio_page(1, 2)}));
    auto fx = d.send(EventType::select);
    ASSERT_TRUE(d.page());
    EXPECT_EQ(fx, (std::vector<Effect>{Effect::play_audio("a1.mid")}));
    EXPECT_EQ(d.state.media.audio_index, 0u);
    fx = d.send(EventType::toggle_audio);
    EXPECT_EQ(fx, (std::vector<Effect>{Effect::stop_audio(), Effect::play_audio("a2.mid")}));
    fx = d.send(EventType::toggle_audio);
    EXPECT_EQ(fx, (std::vector<Effect>{Effect::stop_audio(), Effect::play_audio("a1.mid")}));
    EXPECT_EQ(d.state.media.audio_index, 0u);
}

TEST(Media, ToggleWithoutAudioIsANoOp)
{
    Driver d(bundle_of({PageNode{1, "p", {}, {ContentItem::text("hello")}}}));
    d.send(EventType::select);
    auto before = state_json(d.state);
    EXPECT_TRUE(d.send(EventType::toggle_audio).empty());
    EXPECT_EQ(state_json(d.state), before);
}

TEST(Media, AutoplayWhenIconScrollsIntoView)
{
    // Ten one-line text rows (16 px each) push the audio icon to y = 160.
    PageNode p{1, "long", {}, {}};
    for (int i = 0; i < 10; ++i)
        p.items.push_back(ContentItem::text("line"));
    p.items.push_back(ContentItem::media(ContentKind::audio, "late.mid"));
    Driver d(bundle_of({p}), Viewport{120, 64});
    EXPECT_TRUE(d.send(EventType::select).empty());
    ASSERT_TRUE(d.page());

    int plays = 0, downs = 0;
    while (d.page()->scroll_offset < max_scroll(d.state)) {
        auto fx = d.send(EventType::down);
        ++downs;
        for (const auto& e : fx)
            if (e.type == EffectType::play_audio) {
                ++plays;
                // Visible for the first time once the viewport bottom passes y = 160.
                EXPECT_EQ(d.page()->scroll_offset + 64, 160 + 16);
            }
    }
    EXPECT_EQ(plays, 1);
    EXPECT_EQ(d.page()->scroll_offset, 176 - 64);
    for (int i = 0; i < 5; ++i) {
        for (const auto& e : d.send(EventType::up))
            EXPECT_NE(e.type, EffectType::play_audio);
    }
    for (int i = 0; i < 5; ++i)
        for (const auto& e : d.send(EventType::down))
            EXPECT_NE(e.type, EffectType::play_audio);
    EXPECT_GT(downs, 0);
}

TEST(Media, RulesForOneTwoThreeAudioItems)
{
    for (int k = 1; k <= 3; ++k) {
        SCOPED_TRACE("k=" + std::to_string(k));
        Driver d(bundle_of({audio_page(1, k)}));
        auto fx = d.send(EventType::select);
        EXPECT_EQ(d.state.media.audio_index, 0u);
        EXPECT_EQ(fx, (std::vector<Effect>{Effect::play_audio("a1.mid")}));
        int autoplays = 0;
        for (int i = 0; i < 6; ++i)
            for (const auto& e : d.send(i % 2 ? EventType::up : EventType::down))
                autoplays += e.type == EffectType::play_audio;
        EXPECT_EQ(autoplays, 0);
        auto start = d.state.media.audio_index;
        for (int i = 0; i < k; ++i)
            d.send(EventType::toggle_audio);
        EXPECT_EQ(d.state.media.audio_index, start);
    }
}

TEST(Media, SingleAudioToggleStopsAndResumes)
{
    Driver d(bundle_of({audio_page(1, 1)}));
    d.send(EventType::select);
    EXPECT_TRUE(d.state.media.audio_playing);
    EXPECT_EQ(d.send(EventType::toggle_audio), (std::vector<Effect>{Effect::stop_audio()}));
    EXPECT_EQ(d.send(EventType::toggle_audio), (std::vector<Effect>{Effect::play_audio("a1.mid")}));
}

TEST(Media, LeavingThePageStopsAudioAndResetsSelection)
{
    Driver d(bundle_of({audio_page(1, 2), PageNode{2, "b", {}, {}}}));
    d.send(EventType::select);
    EXPECT_EQ(d.send(EventType::back), (std::vector<Effect>{Effect::stop_audio()}));
    EXPECT_FALSE(d.state.media.audio_index);
    EXPECT_FALSE(d.state.media.audio_playing);
}

TEST(Media, VideoToggleCycles)
{
    PageNode p{1, "v", {}, {ContentItem::media(ContentKind::video, "v1.3gp"), ContentItem::media(ContentKind::video, "v2.3gp")}};
    Driver d(bundle_of({p}));
    d.send(EventType::select);
    EXPECT_EQ(d.state.media.video_index, 0u);
    EXPECT_EQ(d.send(EventType::toggle_video), (std::vector<Effect>{Effect::play_video("v2.3gp")}));
    EXPECT_EQ(d.send(EventType::toggle_video), (std::vector<Effect>{Effect::play_video("v1.3gp")}));
}

TEST(Page, ShareAndSelectOnFocusedItem)
{
    auto make = [](ContentItem item) { return bundle_of({PageNode{1, "p", {}, {item}}}); };
    {
        Driver d(make(ContentItem::text("share me")));
        d.send(EventType::select);
        auto before = state_json(d.state);
        EXPECT_EQ(d.send(EventType::share), (std::vector<Effect>{Effect::compose(ContentKind::text, "share me")}));
        EXPECT_EQ(state_json(d.state), before);
    }
    {
        Driver d(make(ContentItem::contact(ContentKind::phone, "+123", "office")));
        d.send(EventType::select);
        EXPECT_EQ(d.send(EventType::select), (std::vector<Effect>{Effect::dial("+123")}));
        EXPECT_EQ(d.send(EventType::share), (std::vector<Effect>{Effect::compose(ContentKind::phone, "+123")}));
    }
    {
        Driver d(make(ContentItem::contact(ContentKind::weblink, "http://x.org")));
        d.send(EventType::select);
        EXPECT_EQ(d.send(EventType::select), (std::vector<Effect>{Effect::open_link("http://x.org")}));
    }
    {
        Driver d(make(ContentItem::contact(ContentKind::email, "a@b.c")));
        d.send(EventType::select);
        EXPECT_EQ(d.send(EventType::select), (std::vector<Effect>{Effect::compose(ContentKind::email, "a@b.c")}));
    }
}

TEST(Index, ExpandOpenCollapseAndRestoreCursor)
{
    PageNode child{2, "child", {}, {}};
    PageNode parent{1, "parent", {child}, {}};
    PageNode other{3, "other", {}, {}};
    Driver d(bundle_of({parent, other}));
    ASSERT_TRUE(d.index());
    d.send(EventType::select); // expand 1
    ASSERT_TRUE(d.index());
    EXPECT_TRUE(d.index()->expanded.contains(1));
    d.send(EventType::down); // cursor on child
    EXPECT_EQ(d.index()->cursor, 1u);
    d.send(EventType::select); // open leaf
    ASSERT_TRUE(d.page());
    EXPECT_EQ(d.page()->page_id, 2u);
    d.send(EventType::back);
    ASSERT_TRUE(d.index());
    EXPECT_EQ(d.index()->cursor, 1u);
    d.send(EventType::back); // collapse, cursor to parent
    ASSERT_TRUE(d.index());
    EXPECT_FALSE(d.index()->expanded.contains(1));
    EXPECT_EQ(d.index()->cursor, 0u);
    auto before = state_json(d.state);
    d.send(EventType::back); // root level: nothing left to collapse
    EXPECT_EQ(state_json(d.state), before);
    d.send(EventType::select);
    d.send(EventType::select); // second select on an expanded parent opens it
    ASSERT_TRUE(d.page());
    EXPECT_EQ(d.page()->page_id, 1u);
    d.send(EventType::back);
    d.send(EventType::down);
    d.send(EventType::down);
    d.send(EventType::down);
    EXPECT_EQ(d.index()->cursor, 2u);
    d.send(EventType::up);
    EXPECT_EQ(d.index()->cursor, 1u);
}

TEST(Search, SubmitOpenAndReturnToResults)
{
    Driver d(bundle_of({PageNode{1, "x", {}, {ContentItem::text("alpha beta")}},
                        PageNode{2, "y", {}, {ContentItem::text("beta gamma")}}}));
    d.send(Event{EventType::search_submit, "BETA"});
    auto* results = std::get_if<SearchScreen>(&d.state.screen);
    ASSERT_TRUE(results);
    ASSERT_EQ(results->results.size(), 2u);
    d.send(EventType::down);
    d.send(EventType::select);
    ASSERT_TRUE(d.page());
    EXPECT_EQ(d.page()->page_id, 2u);
    EXPECT_TRUE(d.page()->from_search);
    d.send(EventType::back);
    results = std::get_if<SearchScreen>(&d.state.screen);
    ASSERT_TRUE(results);
    EXPECT_EQ(results->cursor, 1u);
    d.send(EventType::back);
    EXPECT_TRUE(d.index());
}

TEST(VisibleRows, TwelvePixelFixture)
{
    auto atlas = builtin_atlas();
    atlas.line_height = 12;
    PageNode p{1, "p", {}, {ContentItem::text("one"), ContentItem::text("two"), ContentItem::text("six"),
                            ContentItem::media(ContentKind::audio, "a.mid")}};
    Driver d(bundle_of({p}, Theme{}, atlas), Viewport{100, 24});
    d.send(EventType::select);
    ASSERT_TRUE(d.page());
    std::vector<std::pair<int, int>> extents;
    for (const auto& r : d.state.page_rows)
        extents.push_back({r.top, r.bottom()});
    EXPECT_EQ(extents, (std::vector<std::pair<int, int>>{{0, 12}, {12, 24}, {24, 36}, {36, 52}}));
    auto vis = visible_rows(d.state);
    ASSERT_EQ(vis.size(), 2u);
    EXPECT_EQ(vis[0].item_index, 0u);
    EXPECT_EQ(vis[1].item_index, 1u);
    EXPECT_TRUE(d.last.empty()); // audio icon below the fold

    // Scrolled to the bottom, the last row is visible.
    while (d.page()->scroll_offset < max_scroll(d.state))
        d.send(EventType::down);
    EXPECT_EQ(d.page()->scroll_offset, 52 - 24);
    EXPECT_EQ(visible_rows(d.state).back().item_index, 3u);
}

TEST(VisibleRows, ShortContentIsFullyVisible)
{
    PageNode p{1, "p", {}, {ContentItem::text("a"), ContentItem::media(ContentKind::image, "i.png")}};
    Driver d(bundle_of({p}));
    d.send(EventType::select);
    EXPECT_EQ(visible_rows(d.state).size(), 2u);
    EXPECT_EQ(max_scroll(d.state), 0);
    d.send(EventType::down);
    EXPECT_EQ(d.page()->scroll_offset, 0);
}

TEST(EngineProperty, RandomEventSequencesKeepInvariants)
{
    Gen gen(4242);
    const std::vector<EventType> types = {EventType::up,           EventType::down,        EventType::select,
                                          EventType::back,         EventType::toggle_audio, EventType::toggle_video,
                                          EventType::share,        EventType::search_open, EventType::search_submit,
                                          EventType::tick};
    for (int b = 0; b < 8; ++b) {
        auto m = gen.manifest(12, 8);
        auto bundle = make_bundle(encode_bundle(m, builtin_atlas(), gen.assets_for(m)));
        Viewport vp{gen.uniform(16, 240), gen.uniform(16, 320)};
        cf_test::EngineInvariants check(bundle);
        auto step = init(bundle, vp);
        ASSERT_EQ(check.start(step), std::nullopt);
        for (int i = 0; i < 300; ++i) {
            Event e{gen.pick(types), {}};
            if (e.type == EventType::search_submit)
                e.query = gen.text(0, 3);
            step = handle_event(step.state, e);
            ASSERT_EQ(check.observe(e.type, step), std::nullopt) << "bundle " << b << " step " << i;
            ASSERT_EQ(check.check_back_reaches_root(step.state), std::nullopt) << "bundle " << b << " step " << i;
            ASSERT_EQ(check.check_toggle_cycle(step.state), std::nullopt) << "bundle " << b << " step " << i;
        }
    }
}

TEST(EngineProperty, CheckerRejectsFabricatedViolations)
{
    auto bundle = bundle_of({audio_page(1, 2)});
    cf_test::EngineInvariants check(bundle);
    auto step = init(bundle, Viewport{});
    ASSERT_EQ(check.start(step), std::nullopt);
    step = handle_event(step.state, ev(EventType::select));
    ASSERT_EQ(check.observe(EventType::select, step), std::nullopt);

    auto forged = step;
    forged.effects = {Effect::stop_audio(), Effect::play_audio("a1.mid")};
    EXPECT_EQ(check.observe(EventType::down, forged), "autoplay fired twice in one page visit");

    auto scrolled = step;
    std::get<PageScreen>(scrolled.state.screen).scroll_offset = 1000;
    scrolled.effects.clear();
    EXPECT_NE(cf_test::EngineInvariants(bundle).observe(EventType::down, scrolled), std::nullopt);

    auto stuck = step.state;
    stuck.media.audio_index = 5;
    EXPECT_NE(cf_test::EngineInvariants(bundle).check_toggle_cycle(stuck), std::nullopt);
}
