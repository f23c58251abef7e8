#include "support.hpp"

#include <contentforge/cli.hpp>
#include <contentforge/service.hpp>

#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

using namespace contentforge;
using cf_test::Gen;
using cf_test::TempDir;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::shared_ptr<const Bundle> compile_fixture(const TempDir& tmp)
{
    std::ostringstream out, err;
    if (cli::cmd_compile(cf_test::data_dir() / "fixture" / "manifest.json", tmp / "bundle", out, err) != 0)
        throw std::runtime_error(err.str());
    return open_bundle_dir(tmp / "bundle");
}

// Counts bytes handed out per reader and remembers the largest total.
struct ReadCounter {
    std::atomic<std::uint64_t> max_read{0};
    std::atomic<int> opened{0};

    struct Reader : ByteSource {
        std::unique_ptr<ByteSource> inner;
        ReadCounter* counter;
        std::uint64_t total = 0;
        std::size_t read(std::span<std::uint8_t> out) override
        {
            auto n = inner->read(out);
            total += n;
            auto prev = counter->max_read.load();
            while (total > prev && !counter->max_read.compare_exchange_weak(prev, total)) {
            }
            return n;
        }
        std::uint64_t skip(std::uint64_t n) override { return inner->skip(n); }
    };

    std::shared_ptr<const Bundle> wrap(const std::shared_ptr<const Bundle>& original)
    {
        auto b = std::make_shared<Bundle>(*original);
        auto open = original->open_content;
        b->open_content = [this, open]() -> std::unique_ptr<ByteSource> {
            ++opened;
            auto r = std::make_unique<Reader>();
            r->inner = open();
            r->counter = this;
            return r;
        };
        return b;
    }
};

class Server {
public:
    explicit Server(std::shared_ptr<const Bundle> bundle, PreviewService::Options options = {})
        : service(std::move(bundle), std::move(options))
    {
        service.mount(http);
        port = http.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { http.listen_after_bind(); });
        http.wait_until_ready();
    }
    ~Server()
    {
        http.stop();
        thread.join();
    }

    httplib::Client client() const
    {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(10, 0);
        return c;
    }

    json get(const std::string& path, int expected_status = 200)
    {
        auto c = client();
        auto res = c.Get(path);
        return check(res, expected_status, path);
    }

    json post(const std::string& path, const std::string& body, int expected_status = 200)
    {
        auto c = client();
        auto res = c.Post(path, body, "application/json");
        return check(res, expected_status, path);
    }

    PreviewService service;
    httplib::Server http;
    int port = 0;

private:
    static json check(const httplib::Result& res, int expected_status, const std::string& path)
    {
        if (!res)
            throw std::runtime_error("no response for " + path);
        EXPECT_EQ(res->status, expected_status) << path << ": " << res->body;
        return json::parse(res->body);
    }

    std::thread thread;
};

json event_body(const Event& e)
{
    json j{{"type", std::string(to_string(e.type))}};
    if (e.type == EventType::search_submit)
        j["query"] = e.query;
    return j;
}

std::string open_session(Server& s)
{
    return s.post("/api/session", "")["session_id"].get<std::string>();
}

json send(Server& s, const std::string& id, EventType t)
{
    return s.post("/api/session/" + id + "/event", event_body(Event{t, {}}).dump());
}

Event random_event(Gen& gen)
{
    static const std::vector<EventType> types = {EventType::up,           EventType::down,         EventType::select,
                                                 EventType::back,         EventType::toggle_audio, EventType::toggle_video,
                                                 EventType::share,        EventType::search_open,  EventType::search_submit,
                                                 EventType::tick};
    Event e{gen.pick(types), {}};
    if (e.type == EventType::search_submit)
        e.query = gen.chance(0.5) ? "خوب" : gen.text(1, 2);
    return e;
}

} // namespace

TEST(Base64, Rfc4648Vectors)
{
    auto enc = [](std::string_view s) { return wire::base64(to_bytes(std::string(s))); };
    EXPECT_EQ(enc(""), "");
    EXPECT_EQ(enc("f"), "Zg==");
    EXPECT_EQ(enc("fo"), "Zm8=");
    EXPECT_EQ(enc("foo"), "Zm9v");
    EXPECT_EQ(enc("foob"), "Zm9vYg==");
    EXPECT_EQ(enc("fooba"), "Zm9vYmE=");
    EXPECT_EQ(enc("foobar"), "Zm9vYmFy");
}

TEST(Service, TreeMirrorsTheIndex)
{
    TempDir tmp;
    Server s(compile_fixture(tmp));
    auto tree = s.get("/api/tree");
    ASSERT_EQ(tree["roots"].size(), 2u);
    EXPECT_EQ(tree["roots"][0]["page_id"], 10);
    EXPECT_EQ(tree["roots"][0]["children"][0]["page_id"], 11);
    EXPECT_EQ(tree["roots"][0]["children"][0]["children"].size(), 0u);
    EXPECT_EQ(tree["roots"][1]["page_id"], 12);
    EXPECT_EQ(tree["roots"][1]["title"], "Empty");
}

TEST(Service, PageThemeGlyphAndAsset)
{
    TempDir tmp;
    auto bundle = compile_fixture(tmp);
    Server s(bundle);

    auto page = s.get("/api/page/10");
    EXPECT_EQ(page["title"], "صفحه اول");
    ASSERT_EQ(page["records"].size(), 6u);
    EXPECT_EQ(page["records"][2]["asset_ref"], "snd/a1.mid");

    EXPECT_EQ(s.get("/api/theme")["colors"]["header"], "#C8DCF0");

    auto glyph = s.get("/api/font/glyph/1576/initial");
    const auto* g = bundle->atlas.find({0x0628, GlyphForm::initial});
    ASSERT_NE(g, nullptr);
    EXPECT_EQ(glyph["advance"], g->advance);
    EXPECT_EQ(glyph["bitmap"], wire::base64(g->bitmap));
    EXPECT_EQ(s.get("/api/font/glyph/1576/1"), glyph);

    auto c = s.client();
    auto res = c.Get("/api/asset/snd/a1.mid");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(res->body, "MThd-fixture-a1");
    EXPECT_EQ(res->get_header_value("Content-Type"), "audio/midi");
}

TEST(Service, SearchEndpoint)
{
    TempDir tmp;
    auto bundle = compile_fixture(tmp);
    Server s(bundle);
    auto body = s.get("/api/search?q=%D8%AE%D9%88%D8%A8"); // "خوب"
    auto expected = search_content(*bundle, "خوب");
    ASSERT_EQ(body["matches"].size(), expected.size());
    ASSERT_FALSE(expected.empty());
    EXPECT_EQ(body["matches"][0]["page_id"], expected[0].page_id);
    EXPECT_EQ(body["matches"][0]["char_offset"], expected[0].char_offset);
    EXPECT_EQ(s.get("/api/search?q=zzzz")["matches"].size(), 0u);
    s.get("/api/search?q=", 400);
}

TEST(Service, LayoutExtentsStayWithinWidth)
{
    TempDir tmp;
    Server s(compile_fixture(tmp));
    for (int width : {240, 100, 37}) {
        auto layout = s.get("/api/page/10/layout?width=" + std::to_string(width));
        EXPECT_EQ(layout["width"], width);
        ASSERT_FALSE(layout["items"].empty());
        for (const auto& item : layout["items"])
            for (const auto& line : item["lines"])
                for (const auto& g : line) {
                    EXPECT_GE(g["x"].get<int>(), 0);
                    EXPECT_LE(g["x"].get<int>() + g["w"].get<int>(), width);
                }
    }
}

TEST(Service, ErrorsCarryStatusAndBody)
{
    TempDir tmp;
    Server s(compile_fixture(tmp));
    auto missing = s.get("/api/page/9999", 404);
    EXPECT_EQ(missing["error"], "unknown_page");
    EXPECT_TRUE(missing.contains("detail"));
    s.get("/api/page/9999/layout", 404);
    s.get("/api/page/10/layout?width=abc", 400);
    s.get("/api/page/10/layout?width=3", 400);
    s.get("/api/font/glyph/1576/sideways", 400);
    s.get("/api/font/glyph/20013/isolated", 404);
    s.get("/api/asset/snd/none.mid", 404);
    s.get("/api/session/abcdef", 404);

    auto id = open_session(s);
    s.post("/api/session/" + id + "/event", "{not json", 400);
    s.post("/api/session/" + id + "/event", R"({"type": "Jump"})", 400);
    s.post("/api/session/" + id + "/event", R"({"type": "SearchSubmit"})", 400);
    s.post("/api/session/ffff/event", R"({"type": "Up"})", 404);
}

TEST(Service, TwoAudioToggleStopsThenPlaysSecond)
{
    TempDir tmp;
    Server s(compile_fixture(tmp));
    auto id = open_session(s);
    send(s, id, EventType::select); // expand page 10
    auto opened = send(s, id, EventType::select);
    ASSERT_EQ(opened["state"]["screen"]["type"], "Page");
    ASSERT_EQ(opened["state"]["screen"]["page_id"], 10);
    EXPECT_EQ(opened["state"]["media"]["audio_index"], 0);

    auto toggled = send(s, id, EventType::toggle_audio);
    auto expected = json::array({{{"type", "StopAudio"}}, {{"type", "PlayAudio"}, {"asset_ref", "snd/a2.mid"}}});
    EXPECT_EQ(toggled["effects"], expected);
    EXPECT_EQ(toggled["state"]["media"]["audio_index"], 1);
    EXPECT_EQ(s.get("/api/session/" + id)["state"], toggled["state"]);
}

TEST(Service, SessionLifecycleAndIdleExpiry)
{
    TempDir tmp;
    auto now = std::make_shared<PreviewService::Clock::time_point>(PreviewService::Clock::now());
    PreviewService::Options options;
    options.idle_timeout = std::chrono::minutes(30);
    options.now = [now] { return *now; };
    Server s(compile_fixture(tmp), options);

    auto a = open_session(s);
    auto b = open_session(s);
    EXPECT_NE(a, b);
    EXPECT_EQ(s.service.session_count(), 2u);

    *now += std::chrono::minutes(20);
    send(s, a, EventType::down);
    *now += std::chrono::minutes(20);
    EXPECT_EQ(s.service.session_count(), 1u);
    s.get("/api/session/" + b, 404);
    s.get("/api/session/" + a);

    auto c = s.client();
    auto del = c.Delete("/api/session/" + a);
    ASSERT_TRUE(del);
    EXPECT_EQ(del->status, 200);
    EXPECT_EQ(s.service.session_count(), 0u);
    del = c.Delete("/api/session/" + a);
    EXPECT_EQ(del->status, 404);
}

TEST(Service, SessionViewportFromBody)
{
    TempDir tmp;
    Server s(compile_fixture(tmp));
    auto created = s.post("/api/session", R"({"width": 176, "height": 208})");
    EXPECT_EQ(created["state"]["viewport"]["width"], 176);
    EXPECT_EQ(created["state"]["viewport"]["height"], 208);
    EXPECT_EQ(created["state"]["screen"]["type"], "Index");
}

TEST(Service, PageEndpointReadsOnlyTheRequestedRegion)
{
    TempDir tmp;
    std::vector<PageNode> roots;
    for (std::uint32_t i = 0; i < 200; ++i)
        roots.push_back(PageNode{i, "p", {}, {ContentItem::text(std::string(4000, static_cast<char>('a' + i % 26)))}});
    ProjectManifest m;
    m.roots = roots;
    auto files = encode_bundle(m, builtin_atlas(), {});
    write_bundle_dir(files, tmp / "big");
    ReadCounter counter;
    Server s(counter.wrap(open_bundle_dir(tmp / "big")));
    auto index = decode_index(files.index_bytes);
    for (std::uint32_t id : {0u, 100u, 199u}) {
        counter.max_read = 0;
        s.get("/api/page/" + std::to_string(id));
        EXPECT_LE(counter.max_read.load(), content_header_size + index.find(id)->content_length + 16) << id;
        EXPECT_GT(counter.max_read.load(), 0u);
    }
    EXPECT_LT(counter.max_read.load(), files.content_bytes.size() / 10);
}

TEST(Service, StaticDirectoryIsServed)
{
    TempDir tmp;
    fs::create_directories(tmp / "www");
    std::ofstream(tmp / "www" / "index.html") << "<html>viewer</html>";
    PreviewService::Options options;
    options.static_dir = tmp / "www";
    Server s(compile_fixture(tmp), options);
    auto c = s.client();
    auto res = c.Get("/");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->body, "<html>viewer</html>");
    EXPECT_EQ(s.get("/api/tree")["roots"].size(), 2u);
}

TEST(ServiceProperty, HttpTraceEqualsDirectEngineTrace)
{
    TempDir tmp;
    auto bundle = compile_fixture(tmp);
    Server s(bundle);
    Gen gen(4242);
    for (int script = 0; script < 5; ++script) {
        auto created = s.post("/api/session", "");
        auto id = created["session_id"].get<std::string>();
        auto step = init(bundle, Viewport{});
        ASSERT_EQ(created["state"], wire::to_json(step.state));
        ASSERT_EQ(created["effects"], wire::to_json(step.effects));
        auto state = step.state;
        for (int i = 0; i < 60; ++i) {
            auto e = random_event(gen);
            auto direct = handle_event(state, e);
            state = direct.state;
            auto remote = s.post("/api/session/" + id + "/event", event_body(e).dump());
            ASSERT_EQ(remote["state"], wire::to_json(direct.state)) << "script " << script << " step " << i;
            ASSERT_EQ(remote["effects"], wire::to_json(direct.effects)) << "script " << script << " step " << i;
        }
    }
}

TEST(ServiceProperty, ConcurrentSessionsStayIndependent)
{
    TempDir tmp;
    auto bundle = compile_fixture(tmp);
    Server s(bundle);
    constexpr int sessions = 4;
    std::vector<std::string> ids;
    for (int i = 0; i < sessions; ++i)
        ids.push_back(open_session(s));

    std::vector<std::vector<Event>> scripts(sessions);
    Gen gen(77);
    for (auto& script : scripts)
        for (int i = 0; i < 40; ++i)
            script.push_back(random_event(gen));

    std::vector<json> finals(sessions);
    std::vector<std::thread> threads;
    for (int i = 0; i < sessions; ++i)
        threads.emplace_back([&, i] {
            auto c = s.client();
            json last;
            for (const auto& e : scripts[static_cast<std::size_t>(i)]) {
                auto res = c.Post("/api/session/" + ids[static_cast<std::size_t>(i)] + "/event", event_body(e).dump(),
                                  "application/json");
                if (res && res->status == 200)
                    last = json::parse(res->body)["state"];
            }
            finals[static_cast<std::size_t>(i)] = last;
        });
    for (auto& t : threads)
        t.join();

    for (int i = 0; i < sessions; ++i) {
        auto state = init(bundle, Viewport{}).state;
        for (const auto& e : scripts[static_cast<std::size_t>(i)])
            state = handle_event(state, e).state;
        EXPECT_EQ(finals[static_cast<std::size_t>(i)], wire::to_json(state)) << "session " << i;
    }
}
