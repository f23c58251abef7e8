#pragma once

#include <contentforge/bundle.hpp>
#include <contentforge/engine.hpp>
#include <contentforge/search.hpp>
#include <contentforge/wire_json.hpp>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>

namespace contentforge {

/// HTTP preview service: read-only bundle endpoints plus live engine
/// sessions. Requests run concurrently; events of one session are applied
/// one at a time.
class PreviewService {
public:
    using Clock = std::chrono::steady_clock;

    struct Options {
        std::chrono::minutes idle_timeout{30};
        Viewport default_viewport{};
        std::optional<std::filesystem::path> static_dir;
        std::function<Clock::time_point()> now = [] { return Clock::now(); };
    };

    struct SessionRecord {
        std::string session_id;
        std::mutex mutex;
        EngineState state;
        Clock::time_point created_at;
        Clock::time_point last_event_at;
    };

    PreviewService(std::shared_ptr<const Bundle> bundle, Options options)
        : bundle_(std::move(bundle)), options_(std::move(options))
    {}

    explicit PreviewService(std::shared_ptr<const Bundle> bundle) : PreviewService(std::move(bundle), Options{}) {}

    void mount(httplib::Server& server)
    {
        using httplib::Request;
        using httplib::Response;

        server.Get("/api/tree", [this](const Request&, Response& res) { send(res, wire::tree_to_json(bundle_->index)); });
        server.Get("/api/theme", [this](const Request&, Response& res) { send(res, wire::to_json(bundle_->theme)); });

        server.Get(R"(/api/page/(\d+))", [this](const Request& req, Response& res) {
            guard(res, [&] {
                auto id = parse_page_id(req.matches[1]);
                auto records = bundle_->page(id);
                nlohmann::json items = nlohmann::json::array();
                for (const auto& r : records)
                    items.push_back(wire::to_json(r));
                send(res, {{"page_id", id}, {"title", bundle_->index.find(id)->title}, {"records", items}});
            });
        });

        server.Get(R"(/api/page/(\d+)/layout)", [this](const Request& req, Response& res) {
            guard(res, [&] {
                auto id = parse_page_id(req.matches[1]);
                int width = options_.default_viewport.width;
                if (req.has_param("width"))
                    width = parse_int(req.get_param_value("width"), "width");
                auto records = bundle_->page(id);
                send(res, wire::page_layout_to_json(*bundle_, id, records, width));
            });
        });

        server.Get(R"(/api/font/glyph/(\d+)/(\w+))", [this](const Request& req, Response& res) {
            guard(res, [&] {
                auto cp = static_cast<char32_t>(std::stoull(req.matches[1]));
                auto form = parse_form(req.matches[2]);
                const auto* g = bundle_->atlas.find({cp, form});
                if (!g)
                    throw Error(Errc::not_found, "no glyph for that code point and form");
                send(res, wire::to_json(*g));
            });
        });

        server.Get("/api/search", [this](const Request& req, Response& res) {
            guard(res, [&] {
                auto q = req.get_param_value("q");
                nlohmann::json matches = nlohmann::json::array();
                for (const auto& m : search_content(*bundle_, q))
                    matches.push_back(wire::to_json(m));
                send(res, {{"query", q}, {"matches", matches}});
            });
        });

        server.Get(R"(/api/asset/(.+))", [this](const Request& req, Response& res) {
            guard(res, [&] {
                std::string ref = req.matches[1];
                if (!is_safe_relative_path(ref))
                    throw Error(Errc::invalid_path, "unsafe asset reference");
                auto data = bundle_->load_asset ? bundle_->load_asset(ref) : std::nullopt;
                if (!data)
                    throw Error(Errc::not_found, "asset not found: " + ref);
                res.set_content(reinterpret_cast<const char*>(data->data()), data->size(), content_type(ref));
            });
        });

        server.Post("/api/session", [this](const Request& req, Response& res) {
            guard(res, [&] {
                auto viewport = options_.default_viewport;
                if (!req.body.empty()) {
                    auto body = parse_body(req.body);
                    if (body.contains("width"))
                        viewport.width = body["width"].get<int>();
                    if (body.contains("height"))
                        viewport.height = body["height"].get<int>();
                }
                auto [id, step] = create_session(viewport);
                send(res, {{"session_id", id}, {"state", wire::to_json(step.state)}, {"effects", wire::to_json(step.effects)}});
            });
        });

        server.Get(R"(/api/session/([0-9a-f]+))", [this](const Request& req, Response& res) {
            guard(res, [&] {
                auto session = find_session(req.matches[1]);
                std::lock_guard lock(session->mutex);
                send(res, {{"session_id", session->session_id}, {"state", wire::to_json(session->state)}});
            });
        });

        server.Post(R"(/api/session/([0-9a-f]+)/event)", [this](const Request& req, Response& res) {
            guard(res, [&] {
                auto ev = wire::event_from_json(parse_body(req.body));
                auto session = find_session(req.matches[1]);
                std::lock_guard lock(session->mutex);
                auto step = handle_event(session->state, ev);
                session->state = std::move(step.state);
                session->last_event_at = options_.now();
                send(res, {{"state", wire::to_json(session->state)}, {"effects", wire::to_json(step.effects)}});
            });
        });

        server.Delete(R"(/api/session/([0-9a-f]+))", [this](const Request& req, Response& res) {
            guard(res, [&] {
                std::lock_guard lock(sessions_mutex_);
                if (sessions_.erase(req.matches[1]) == 0)
                    throw Error(Errc::not_found, "no such session");
                send(res, {{"deleted", true}});
            });
        });

        if (options_.static_dir) {
            server.set_mount_point("/", options_.static_dir->string());
        } else {
            server.Get("/", [](const Request&, Response& res) {
                res.set_content("<!doctype html><title>contentforge</title><p>Preview API is running. "
                                "Start with <code>serve --static-dir</code> to host the viewer.</p>",
                                "text/html");
            });
        }
    }

    std::pair<std::string, Step> create_session(Viewport viewport)
    {
        auto step = init(bundle_, viewport);
        auto session = std::make_shared<SessionRecord>();
        session->state = step.state;
        session->created_at = session->last_event_at = options_.now();
        std::lock_guard lock(sessions_mutex_);
        purge_expired_locked();
        std::string id;
        do {
            id = new_token();
        } while (sessions_.contains(id));
        session->session_id = id;
        sessions_[id] = session;
        return {id, step};
    }

    std::size_t session_count()
    {
        std::lock_guard lock(sessions_mutex_);
        purge_expired_locked();
        return sessions_.size();
    }

private:
    static void send(httplib::Response& res, const nlohmann::json& body, int status = 200)
    {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    static void send_error(httplib::Response& res, int status, const std::string& error, const std::string& detail)
    {
        send(res, {{"error", error}, {"detail", detail}}, status);
    }

    template <class F>
    static void guard(httplib::Response& res, F&& body)
    {
        try {
            body();
        } catch (const Error& e) {
            int status = (e.code() == Errc::unknown_page || e.code() == Errc::not_found) ? 404 : 400;
            send_error(res, status, std::string(to_string(e.code())), e.what());
        } catch (const nlohmann::json::exception& e) {
            send_error(res, 400, "bad_request", e.what());
        } catch (const std::exception& e) {
            send_error(res, 400, "bad_request", e.what());
        }
    }

    static nlohmann::json parse_body(const std::string& body)
    {
        try {
            return nlohmann::json::parse(body);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(Errc::invalid_argument, std::string("malformed JSON body: ") + e.what());
        }
    }

    static int parse_int(const std::string& s, const char* what)
    {
        try {
            std::size_t used = 0;
            int v = std::stoi(s, &used);
            if (used == s.size())
                return v;
        } catch (const std::exception&) {
        }
        throw Error(Errc::invalid_argument, std::string(what) + " must be an integer");
    }

    static std::uint32_t parse_page_id(const std::string& s)
    {
        auto v = std::stoull(s);
        if (v >= root_parent)
            throw Error(Errc::unknown_page, "page id out of range");
        return static_cast<std::uint32_t>(v);
    }

    static GlyphForm parse_form(const std::string& s)
    {
        for (int f = 0; f <= 3; ++f)
            if (s == std::to_string(f) || s == to_string(static_cast<GlyphForm>(f)))
                return static_cast<GlyphForm>(f);
        throw Error(Errc::invalid_argument, "unknown glyph form \"" + s + "\"");
    }

    static std::string content_type(const std::string& ref)
    {
        static const std::map<std::string, std::string> types = {
            {".png", "image/png"},   {".jpg", "image/jpeg"}, {".jpeg", "image/jpeg"}, {".gif", "image/gif"},
            {".bmp", "image/bmp"},   {".mid", "audio/midi"}, {".midi", "audio/midi"}, {".mp3", "audio/mpeg"},
            {".wav", "audio/wav"},   {".ogg", "audio/ogg"},  {".amr", "audio/amr"},   {".mp4", "video/mp4"},
            {".3gp", "video/3gpp"},  {".webm", "video/webm"}, {".txt", "text/plain"},
        };
        auto ext = std::filesystem::path(ref).extension().string();
        for (auto& c : ext)
            c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        auto it = types.find(ext);
        return it == types.end() ? "application/octet-stream" : it->second;
    }

    static std::string new_token()
    {
        static thread_local std::mt19937_64 rng{std::random_device{}()};
        static constexpr char hex[] = "0123456789abcdef";
        std::string id;
        for (int i = 0; i < 2; ++i) {
            auto v = rng();
            for (int k = 0; k < 16; ++k)
                id.push_back(hex[(v >> (4 * k)) & 0xF]);
        }
        return id;
    }

    void purge_expired_locked()
    {
        auto now = options_.now();
        std::erase_if(sessions_, [&](const auto& kv) { return now - kv.second->last_event_at > options_.idle_timeout; });
    }

    std::shared_ptr<SessionRecord> find_session(const std::string& id)
    {
        std::lock_guard lock(sessions_mutex_);
        purge_expired_locked();
        auto it = sessions_.find(id);
        if (it == sessions_.end())
            throw Error(Errc::not_found, "no such session (expired or deleted)");
        return it->second;
    }

    std::shared_ptr<const Bundle> bundle_;
    Options options_;
    std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<SessionRecord>> sessions_;
};

} // namespace contentforge
