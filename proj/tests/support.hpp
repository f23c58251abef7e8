#pragma once

#include <contentforge/contentforge.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace cf_test {

using namespace contentforge;
namespace fs = std::filesystem;

inline fs::path data_dir() { return CONTENTFORGE_TEST_DATA; }
inline fs::path sample_dir() { return CONTENTFORGE_SAMPLE_DIR; }

class TempDir {
public:
    TempDir()
    {
        static std::mt19937_64 rng{std::random_device{}()};
        path_ = fs::temp_directory_path() / ("cf-test-" + std::to_string(rng()));
        fs::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    fs::path path_;
};

/// Seeded random generator for manifests and strings.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    std::mt19937_64& rng() { return rng_; }

    int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }

    template <class T>
    const T& pick(const std::vector<T>& v)
    {
        return v[static_cast<std::size_t>(uniform(0, static_cast<int>(v.size()) - 1))];
    }

    /// Mostly Arabic letters and marks, plus Latin text and a few code points
    /// the builtin atlas lacks.
    char32_t codepoint()
    {
        static const std::vector<char32_t> arabic = {0x0627, 0x0628, 0x062A, 0x062C, 0x062F, 0x0631, 0x0633, 0x0639,
                                                     0x0641, 0x0644, 0x0645, 0x0646, 0x0647, 0x0648, 0x064A, 0x0629,
                                                     0x0621, 0x067E, 0x0686, 0x06A9, 0x06AF, 0x06CC, 0x0698, 0x0640};
        int r = uniform(0, 99);
        if (r < 50)
            return pick(arabic);
        if (r < 55)
            return static_cast<char32_t>(uniform(0x064B, 0x0652));
        if (r < 75)
            return static_cast<char32_t>(chance(0.5) ? uniform('a', 'z') : uniform('A', 'Z'));
        if (r < 80)
            return static_cast<char32_t>(uniform('0', '9'));
        if (r < 93)
            return U' ';
        if (r < 96)
            return static_cast<char32_t>(pick(std::vector<int>{0x00E9, 0x00C9, 0x03B1, 0x0391, 0x0436, 0x0416}));
        return static_cast<char32_t>(pick(std::vector<int>{0x4E2D, 0x1F600, 0x05D0, 0x0E01}));
    }

    std::string text(int min_len, int max_len)
    {
        std::u32string s;
        int n = uniform(min_len, max_len);
        for (int i = 0; i < n; ++i)
            s.push_back(codepoint());
        return utf8::encode(s);
    }

    std::string nonblank_text(int min_len, int max_len)
    {
        auto s = text(min_len, max_len);
        if (s.find_first_not_of(' ') == std::string::npos)
            s += "x";
        return s;
    }

    std::string asset_ref()
    {
        static const std::vector<std::string> dirs = {"snd", "img", "media/v", "a"};
        static const std::vector<std::string> exts = {".mid", ".png", ".3gp", ".wav"};
        return pick(dirs) + "/f" + std::to_string(uniform(0, 40)) + pick(exts);
    }

    Rgb color()
    {
        return Rgb{static_cast<std::uint8_t>(uniform(0, 255)), static_cast<std::uint8_t>(uniform(0, 255)),
                   static_cast<std::uint8_t>(uniform(0, 255))};
    }

    Theme theme()
    {
        Theme t;
        t.background = color();
        t.text = color();
        t.highlight = color();
        t.header = color();
        t.palette.clear();
        int n = uniform(1, 6);
        for (int i = 0; i < n; ++i)
            t.palette.push_back(color());
        t.splash_enabled = chance(0.4);
        if (t.splash_enabled)
            t.splash_image = asset_ref();
        if (chance(0.4))
            t.background_image = asset_ref();
        if (chance(0.4))
            t.background_music = asset_ref();
        return t;
    }

    ContentItem item(std::size_t palette_size)
    {
        auto kind = static_cast<ContentKind>(uniform(0, 6));
        switch (kind) {
        case ContentKind::text:
            return ContentItem::text(nonblank_text(1, 60), static_cast<std::uint8_t>(uniform(0, int(palette_size) - 1)),
                                     static_cast<std::uint8_t>(uniform(0, 3)));
        case ContentKind::image:
        case ContentKind::audio:
        case ContentKind::video: return ContentItem::media(kind, asset_ref(), text(0, 12));
        case ContentKind::phone: return ContentItem::contact(kind, "+" + std::to_string(uniform(1000000, 9999999)), text(0, 8));
        case ContentKind::email: return ContentItem::contact(kind, "u" + std::to_string(uniform(0, 99)) + "@example.org", text(0, 8));
        case ContentKind::weblink: return ContentItem::contact(kind, "http://example.org/" + std::to_string(uniform(0, 99)), text(0, 8));
        }
        return ContentItem::text("x");
    }

    /// A valid manifest with up to max_pages pages and max_items items per
    /// page. Page ids are unique and random.
    ProjectManifest manifest(int max_pages = 50, int max_items = 8)
    {
        ProjectManifest m;
        m.title = text(1, 20);
        m.version = std::to_string(uniform(1, 9)) + "." + std::to_string(uniform(0, 9));
        m.theme = theme();
        m.font_source = "builtin";
        m.asset_dir = "assets";

        int pages = uniform(1, max_pages);
        std::set<std::uint32_t> ids;
        while (static_cast<int>(ids.size()) < pages)
            ids.insert(static_cast<std::uint32_t>(std::uniform_int_distribution<std::uint32_t>(0, 0xFFFFFFFE)(rng_)));
        std::vector<std::uint32_t> id_list(ids.begin(), ids.end());
        std::shuffle(id_list.begin(), id_list.end(), rng_);

        // Attach each page to a random earlier page or make it a root.
        std::vector<std::pair<PageNode, int>> nodes; // node, parent position (-1 root)
        for (int i = 0; i < pages; ++i) {
            PageNode p;
            p.id = id_list[static_cast<std::size_t>(i)];
            p.title = text(0, 24);
            int n_items = uniform(0, max_items);
            for (int k = 0; k < n_items; ++k)
                p.items.push_back(item(m.theme.palette.size()));
            int parent = (i == 0 || chance(0.25)) ? -1 : uniform(0, i - 1);
            nodes.push_back({std::move(p), parent});
        }
        std::function<PageNode(int)> build = [&](int pos) {
            PageNode node = nodes[static_cast<std::size_t>(pos)].first;
            for (int c = pos + 1; c < pages; ++c)
                if (nodes[static_cast<std::size_t>(c)].second == pos)
                    node.children.push_back(build(c));
            return node;
        };
        for (int i = 0; i < pages; ++i)
            if (nodes[static_cast<std::size_t>(i)].second == -1)
                m.roots.push_back(build(i));
        return m;
    }

    AssetMap assets_for(const ProjectManifest& m)
    {
        AssetMap assets;
        auto add = [&](const std::string& ref) {
            Bytes b(static_cast<std::size_t>(uniform(1, 64)));
            for (auto& x : b)
                x = static_cast<std::uint8_t>(uniform(0, 255));
            assets.emplace(ref, std::move(b));
        };
        for (const auto* ref : {&m.theme.splash_image, &m.theme.background_image, &m.theme.background_music})
            if (*ref)
                add(**ref);
        for (const auto& flat : flatten(m))
            for (const auto& item : flat.page->items)
                if (is_media(item.kind))
                    add(item.body);
        return assets;
    }

private:
    std::mt19937_64 rng_;
};

inline std::set<std::string> asset_names(const AssetMap& assets)
{
    std::set<std::string> names;
    for (const auto& [k, v] : assets)
        names.insert(k);
    return names;
}

/// Naive search oracle: decodes the whole content file up front, then scans
/// every folded title and text payload position by position.
inline std::vector<SearchMatch> naive_search(const BundleFiles& files, const std::string& query)
{
    auto index = decode_index(files.index_bytes);
    std::span<const std::uint8_t> payload(files.content_bytes);
    payload = payload.subspan(content_header_size);

    auto lower = [](std::u32string s) {
        for (auto& c : s)
            c = utf8::simple_lowercase(c);
        return s;
    };
    auto needle = lower(utf8::decode(query));
    std::vector<SearchMatch> out;
    auto scan = [&](const std::string& text, std::uint32_t page, std::optional<std::size_t> item) {
        auto cps = utf8::decode(text);
        auto hay = lower(cps);
        for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
            if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<std::ptrdiff_t>(i))) {
                std::size_t from = i >= snippet_context ? i - snippet_context : 0;
                std::size_t to = std::min(cps.size(), i + needle.size() + snippet_context);
                out.push_back({page, item, i, utf8::encode(cps.substr(from, to - from))});
            }
        }
    };
    for (const auto& e : index.entries) {
        scan(e.title, e.page_id, std::nullopt);
        auto records = decode_page_region(payload.subspan(e.content_offset, e.content_length), e.page_id);
        for (std::size_t i = 0; i < records.size(); ++i)
            if (records[i].kind == ContentKind::text)
                scan(records[i].body, e.page_id, i);
    }
    return out;
}

inline bool same_matches(const std::vector<SearchMatch>& a, const std::vector<SearchMatch>& b)
{
    if (a.size() != b.size())
        return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].page_id != b[i].page_id || a[i].item_index != b[i].item_index || a[i].char_offset != b[i].char_offset ||
            a[i].snippet != b[i].snippet)
            return false;
    return true;
}

/// The theme as it survives the wire: the splash image is only stored while
/// the splash screen is enabled.
inline Theme wire_theme(Theme t)
{
    if (!t.splash_enabled)
        t.splash_image.reset();
    return t;
}

/// Decodes bundle files back into a manifest-shaped tree for comparison.
inline std::vector<PageNode> decoded_tree(const BundleFiles& files)
{
    auto index = decode_index(files.index_bytes);
    auto bundle = make_bundle(files);
    std::vector<std::pair<PageNode, std::uint32_t>> flat;
    for (const auto& e : index.entries) {
        PageNode p;
        p.id = e.page_id;
        p.title = e.title;
        p.items = bundle->page(e.page_id);
        flat.push_back({std::move(p), e.parent_id});
    }
    return rebuild_tree(flat);
}

/// Extracts an archive with python's zipfile module into `dest`, after
/// zipfile's own CRC check. Returns false when python rejects the archive.
inline bool python_extract(const fs::path& archive, const fs::path& dest)
{
    std::string cmd = "python3 -c \"import sys, zipfile; z = zipfile.ZipFile(sys.argv[1]); "
                      "sys.exit(1) if z.testzip() is not None else z.extractall(sys.argv[2])\" '" +
                      archive.string() + "' '" + dest.string() + "' 2>/dev/null";
    return std::system(cmd.c_str()) == 0;
}

/// Every regular file under `root`, keyed by '/'-separated relative path.
inline std::map<std::string, Bytes> files_under(const fs::path& root)
{
    std::map<std::string, Bytes> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) {
            std::ifstream in(e.path(), std::ios::binary);
            Bytes b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            out[fs::relative(e.path(), root).generic_string()] = std::move(b);
        }
    return out;
}

} // namespace cf_test
